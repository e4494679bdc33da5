use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::dataset::RatingScale;

/// Probability that randomized response serves the true rating.
pub const KEEP_PROBABILITY: f64 = 0.75;

/// Coins thrown for one randomized-response serving.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoinTrace {
    /// `true` is heads: serve the real rating.
    pub first: bool,
    /// Only thrown when the first coin is tails; `true` serves the real rating.
    pub second: Option<bool>,
    /// The random rating, when one was drawn.
    pub draw: Option<f64>,
}

/// Result of serving one neighbor rating.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpOutcome {
    pub served: f64,
    /// The serving went through the randomized-response mechanism.
    pub protected: bool,
    /// A random rating replaced the real one.
    pub was_perturbed: bool,
    pub coins: Option<CoinTrace>,
}

impl DpOutcome {
    pub(crate) fn real(rating: f64) -> Self {
        Self {
            served: rating,
            protected: false,
            was_perturbed: false,
            coins: None,
        }
    }
}

fn flip<R: RngCore + ?Sized>(rng: &mut R) -> bool {
    rng.next_u32() & 1 == 1
}

/// Uniform draw over the scale's support: the permitted values of a discrete
/// scale, the closed interval otherwise.
pub fn random_rating<R: RngCore + ?Sized>(scale: &RatingScale, rng: &mut R) -> f64 {
    if scale.is_discrete() {
        let values = scale.values();
        values[rng.random_range(0..values.len())]
    } else {
        let u: f64 = rng.random();
        scale.min() + (scale.max() - scale.min()) * u
    }
}

/// Two-coin randomized response: heads on the first coin keeps the rating;
/// on tails a second coin chooses between the real rating and a uniform
/// random one. The real rating survives with probability 3/4.
pub fn randomized_response<R: RngCore + ?Sized>(rating: f64, scale: &RatingScale, rng: &mut R) -> DpOutcome {
    let first = flip(rng);
    if first {
        return DpOutcome {
            served: rating,
            protected: true,
            was_perturbed: false,
            coins: Some(CoinTrace {
                first,
                second: None,
                draw: None,
            }),
        };
    }
    let second = flip(rng);
    if second {
        return DpOutcome {
            served: rating,
            protected: true,
            was_perturbed: false,
            coins: Some(CoinTrace {
                first,
                second: Some(second),
                draw: None,
            }),
        };
    }
    let draw = random_rating(scale, rng);
    DpOutcome {
        served: draw,
        protected: true,
        was_perturbed: true,
        coins: Some(CoinTrace {
            first,
            second: Some(second),
            draw: Some(draw),
        }),
    }
}
