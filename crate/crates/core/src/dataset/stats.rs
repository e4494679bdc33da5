use serde::{Deserialize, Serialize};

use super::table::RatingTable;
use crate::error::{Error, Result};

/// Fraction of users counted as "largest profiles" in the contribution
/// statistics.
pub const TOP_PROFILE_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub users: usize,
    pub items: usize,
    pub ratings: usize,
    /// |R| / |U|
    pub ratings_per_user: f64,
    /// |U| / |I|
    pub users_per_item: f64,
    /// |R| / (|U| * |I|)
    pub density: f64,
    /// Share of |R| held by the 5% largest profiles, summed.
    pub top_profile_share: f64,
    /// Mean of |R_u| / |R| over the 5% largest profiles.
    pub top_profile_mean_share: f64,
}

/// Descriptive statistics over users and items holding at least one rating.
pub fn describe(table: &RatingTable) -> Result<DatasetStats> {
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    let mut sizes: Vec<usize> = table
        .users()
        .map(|u| table.profile(u).len())
        .filter(|&n| n > 0)
        .collect();
    let users = sizes.len();
    let items = table.active_items();
    let ratings = table.len();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let top = ((users as f64 * TOP_PROFILE_FRACTION).ceil() as usize).clamp(1, users);
    let top_total: usize = sizes[..top].iter().sum();
    let top_profile_share = top_total as f64 / ratings as f64;

    Ok(DatasetStats {
        users,
        items,
        ratings,
        ratings_per_user: ratings as f64 / users as f64,
        users_per_item: users as f64 / items as f64,
        density: ratings as f64 / (users as f64 * items as f64),
        top_profile_share,
        top_profile_mean_share: top_profile_share / top as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synth::{synth_dataset, SynthSpec};

    #[test]
    fn full_matrix_has_unit_density() {
        let t = synth_dataset(&SynthSpec {
            users: 6,
            items: 4,
            density: 1.0,
            ..SynthSpec::default()
        })
        .unwrap();
        let s = describe(&t).unwrap();
        assert_eq!(s.density, 1.0);
        assert_eq!(s.ratings, 24);
        assert_eq!(s.ratings_per_user, 4.0);
        // one user is the top 5%
        assert!((s.top_profile_share - 4.0 / 24.0).abs() < 1e-15);
        assert_eq!(s.top_profile_share, s.top_profile_mean_share);
    }

    #[test]
    fn describe_is_pure() {
        let t = synth_dataset(&SynthSpec::default()).unwrap();
        assert_eq!(describe(&t).unwrap(), describe(&t).unwrap());
        let s = describe(&t).unwrap();
        assert!(s.top_profile_share > 0.0 && s.top_profile_share <= 1.0);
        let expected = s.ratings as f64 / (s.users as f64 * s.items as f64);
        assert_eq!(s.density, expected);
    }

    #[test]
    fn empty_table_errors() {
        let t = RatingTable::from_triples(
            Default::default(),
            crate::dataset::RatingScale::integer(1, 5).unwrap(),
            std::iter::empty(),
        )
        .unwrap();
        assert!(matches!(describe(&t), Err(Error::EmptyTable)));
    }
}
