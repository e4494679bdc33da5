use crate::dataset::{ItemId, UserId};

/// Everything a target user's query stream has used so far.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodState {
    target: UserId,
    queries: Vec<(ItemId, Vec<UserId>)>,
    member: Vec<bool>,
    members: Vec<UserId>,
    sizes: Vec<usize>,
}

impl NeighborhoodState {
    pub fn new(target: UserId, num_users: usize) -> Self {
        Self {
            target,
            queries: Vec::new(),
            member: vec![false; num_users],
            members: Vec::new(),
            sizes: Vec::new(),
        }
    }

    pub fn target(&self) -> UserId {
        self.target
    }

    /// Size of the user id space.
    pub fn num_users(&self) -> usize {
        self.member.len()
    }

    /// Number of processed queries.
    pub fn q(&self) -> usize {
        self.queries.len()
    }

    /// Processed queries with their neighbor sets, in stream order.
    pub fn queries(&self) -> &[(ItemId, Vec<UserId>)] {
        &self.queries
    }

    /// Whether `u` has served any earlier query of this target.
    pub fn contains(&self, u: UserId) -> bool {
        self.member[u.index()]
    }

    /// The cumulative neighborhood, in order of first use.
    pub fn neighborhood(&self) -> &[UserId] {
        &self.members
    }

    /// |N_u^(q)| for q = 1..=self.q().
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn record(&mut self, item: ItemId, neighbors: Vec<UserId>) {
        for &n in &neighbors {
            if !self.member[n.index()] {
                self.member[n.index()] = true;
                self.members.push(n);
            }
        }
        self.queries.push((item, neighbors));
        self.sizes.push(self.members.len());
    }
}
