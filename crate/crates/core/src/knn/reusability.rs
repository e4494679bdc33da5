use crate::dataset::{RatingTable, UserId};
use crate::error::{Error, Result};

/// Unpersonalized reusability: each user's summed item popularity,
/// `sum over i in I_c of |U_i| / |U|`. Independent of the target.
pub fn expect_scores(train: &RatingTable) -> Vec<f64> {
    let n = train.num_users() as f64;
    train
        .users()
        .map(|c| {
            train
                .profile(c)
                .iter()
                .map(|&(i, _)| train.raters(i).len() as f64 / n)
                .sum()
        })
        .collect()
}

/// Personalized reusability `|I_u ∩ I_c| / |I_u|`.
pub fn gain_score(target: UserId, candidate: UserId, train: &RatingTable) -> Result<f64> {
    let a = train.profile(target);
    if a.is_empty() {
        return Err(Error::EmptyProfile(train.catalog().user_name(target).to_owned()));
    }
    let b = train.profile(candidate);
    let (mut i, mut j, mut common) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    Ok(common as f64 / a.len() as f64)
}

/// Co-rated item counts between `target` and every user.
pub fn overlap_counts(target: UserId, train: &RatingTable) -> Vec<u32> {
    let mut counts = vec![0u32; train.num_users()];
    for &(i, _) in train.profile(target) {
        for &(v, _) in train.raters(i) {
            counts[v.index()] += 1;
        }
    }
    counts
}

/// [`gain_score`] of every user for one target.
pub fn gain_row(target: UserId, train: &RatingTable) -> Result<Vec<f64>> {
    let len = train.profile(target).len();
    if len == 0 {
        return Err(Error::EmptyProfile(train.catalog().user_name(target).to_owned()));
    }
    Ok(overlap_counts(target, train)
        .into_iter()
        .map(|c| c as f64 / len as f64)
        .collect())
}
