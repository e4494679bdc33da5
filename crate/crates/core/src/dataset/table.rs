use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::scale::RatingScale;
use crate::error::{Error, Result};

/// Dense index of a user within a [`Catalog`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UserId(pub u32);

/// Dense index of an item within a [`Catalog`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ItemId(pub u32);

impl UserId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ItemId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u#{}", self.0)
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "i#{}", self.0)
    }
}

/// Interned external ids. Shared between a full table and every fold view
/// cut from it, so indices agree across train and test.
#[derive(Debug, Default, Clone)]
pub struct Catalog {
    users: Vec<String>,
    items: Vec<String>,
    user_lookup: HashMap<String, UserId>,
    item_lookup: HashMap<String, ItemId>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern_user(&mut self, id: &str) -> UserId {
        if let Some(&u) = self.user_lookup.get(id) {
            return u;
        }
        let u = UserId(self.users.len() as u32);
        self.users.push(id.to_owned());
        self.user_lookup.insert(id.to_owned(), u);
        u
    }

    pub fn intern_item(&mut self, id: &str) -> ItemId {
        if let Some(&i) = self.item_lookup.get(id) {
            return i;
        }
        let i = ItemId(self.items.len() as u32);
        self.items.push(id.to_owned());
        self.item_lookup.insert(id.to_owned(), i);
        i
    }

    pub fn user(&self, id: &str) -> Option<UserId> {
        self.user_lookup.get(id).copied()
    }

    pub fn item(&self, id: &str) -> Option<ItemId> {
        self.item_lookup.get(id).copied()
    }

    pub fn user_name(&self, u: UserId) -> &str {
        &self.users[u.index()]
    }

    pub fn item_name(&self, i: ItemId) -> &str {
        &self.items[i.index()]
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }
}

/// Sparse user-item rating store with per-user and per-item indices.
///
/// Both indices are kept sorted by the opposite id, so profile intersections
/// are linear merges. The table is immutable once built.
#[derive(Debug, Clone)]
pub struct RatingTable {
    catalog: Arc<Catalog>,
    scale: RatingScale,
    by_user: Vec<Vec<(ItemId, f64)>>,
    by_item: Vec<Vec<(UserId, f64)>>,
    len: usize,
}

impl RatingTable {
    /// Builds a table from `(user, item, rating)` triples over an existing
    /// catalog. Rejects out-of-scale values and duplicate pairs.
    pub fn from_triples(
        catalog: Arc<Catalog>,
        scale: RatingScale,
        triples: impl IntoIterator<Item = (UserId, ItemId, f64)>,
    ) -> Result<Self> {
        let mut by_user: Vec<Vec<(ItemId, f64)>> = vec![Vec::new(); catalog.num_users()];
        let mut by_item: Vec<Vec<(UserId, f64)>> = vec![Vec::new(); catalog.num_items()];
        let mut len = 0;
        for (u, i, r) in triples {
            if u.index() >= by_user.len() || i.index() >= by_item.len() {
                return Err(Error::InvalidArgument(format!(
                    "({u}, {i}) is outside the catalog"
                )));
            }
            if !scale.contains(r) {
                return Err(Error::InvalidArgument(format!(
                    "rating {r} for ({}, {}) is outside scale {scale}",
                    catalog.user_name(u),
                    catalog.item_name(i)
                )));
            }
            by_user[u.index()].push((i, r));
            by_item[i.index()].push((u, r));
            len += 1;
        }
        for (u, row) in by_user.iter_mut().enumerate() {
            row.sort_by_key(|&(i, _)| i);
            if let Some(w) = row.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate rating for ({}, {})",
                    catalog.user_name(UserId(u as u32)),
                    catalog.item_name(w[0].0)
                )));
            }
        }
        for col in by_item.iter_mut() {
            col.sort_by_key(|&(u, _)| u);
        }
        Ok(Self {
            catalog,
            scale,
            by_user,
            by_item,
            len,
        })
    }

    pub fn catalog(&self) -> &Arc<Catalog> {
        &self.catalog
    }

    pub fn scale(&self) -> &RatingScale {
        &self.scale
    }

    /// Size of the user id space (|U|), including users with no rating in
    /// this particular view.
    pub fn num_users(&self) -> usize {
        self.by_user.len()
    }

    pub fn num_items(&self) -> usize {
        self.by_item.len()
    }

    /// |R|.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn users(&self) -> impl Iterator<Item = UserId> + '_ {
        (0..self.by_user.len() as u32).map(UserId)
    }

    pub fn items(&self) -> impl Iterator<Item = ItemId> + '_ {
        (0..self.by_item.len() as u32).map(ItemId)
    }

    /// I_u together with the ratings, sorted by item.
    pub fn profile(&self, u: UserId) -> &[(ItemId, f64)] {
        &self.by_user[u.index()]
    }

    /// U_i together with the ratings, sorted by user.
    pub fn raters(&self, i: ItemId) -> &[(UserId, f64)] {
        &self.by_item[i.index()]
    }

    pub fn rating(&self, u: UserId, i: ItemId) -> Option<f64> {
        let row = &self.by_user[u.index()];
        row.binary_search_by_key(&i, |&(j, _)| j)
            .ok()
            .map(|pos| row[pos].1)
    }

    /// All ratings in user-major, item-ascending order.
    pub fn ratings(&self) -> impl Iterator<Item = (UserId, ItemId, f64)> + '_ {
        self.by_user
            .iter()
            .enumerate()
            .flat_map(|(u, row)| row.iter().map(move |&(i, r)| (UserId(u as u32), i, r)))
    }

    /// Mean over all stored ratings, `None` for an empty table.
    pub fn global_mean(&self) -> Option<f64> {
        if self.len == 0 {
            return None;
        }
        Some(self.ratings().map(|(_, _, r)| r).sum::<f64>() / self.len as f64)
    }

    pub fn user_mean(&self, u: UserId) -> Option<f64> {
        let row = self.profile(u);
        if row.is_empty() {
            return None;
        }
        Some(row.iter().map(|&(_, r)| r).sum::<f64>() / row.len() as f64)
    }

    /// Number of users with at least one rating.
    pub fn active_users(&self) -> usize {
        self.by_user.iter().filter(|r| !r.is_empty()).count()
    }

    pub fn active_items(&self) -> usize {
        self.by_item.iter().filter(|r| !r.is_empty()).count()
    }

    fn external_triples(&self) -> Vec<(&str, &str, f64)> {
        let mut v: Vec<_> = self
            .ratings()
            .map(|(u, i, r)| (self.catalog.user_name(u), self.catalog.item_name(i), r))
            .collect();
        v.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        v
    }
}

/// Tables compare by their external `(user, item, rating)` content and
/// scale; catalog index assignment is not significant.
impl PartialEq for RatingTable {
    fn eq(&self, other: &Self) -> bool {
        self.scale == other.scale
            && self.len == other.len
            && self.external_triples() == other.external_triples()
    }
}
