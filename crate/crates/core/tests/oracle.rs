mod common;

use std::sync::Arc;

use reuseknn::dataset::{read_ratings, DuplicatePolicy, RatingFormat, RatingScale, RatingTable};
use reuseknn::knn::{DpMode, Strategy};

fn tables() -> Vec<RatingTable> {
    let mut out: Vec<RatingTable> = [(12, 15, 0.4, 1), (20, 25, 0.3, 2), (30, 40, 0.2, 3), (30, 12, 0.6, 4)]
        .into_iter()
        .map(|(u, i, d, s)| common::synth(u, i, d, s))
        .collect();
    // all-equal ratings: every similarity and reusability score ties a lot
    let mut text = String::new();
    for u in 0..10 {
        for i in 0..8 {
            if (u + i) % 3 != 0 {
                text.push_str(&format!("u{u},i{i},1\n"));
            }
        }
    }
    out.push(
        read_ratings(
            text.as_bytes(),
            "ties.csv".as_ref(),
            RatingFormat::Csv,
            &RatingScale::integer(1, 5).unwrap(),
            DuplicatePolicy::Reject,
        )
        .unwrap(),
    );
    out
}

fn check(strategy: Strategy, dp: DpMode, tau: f64) {
    for (t, table) in tables().into_iter().enumerate() {
        let table = Arc::new(table);
        for k in [1, 3, 5, 40] {
            let r = common::replay(table.clone(), strategy, k, dp, tau, 17 + t as u64, 6)
                .unwrap_or_else(|e| panic!("table {t}: {e}"));
            assert!(r.queries > 0);
            assert!(r.max_error <= 1e-12);
        }
    }
}

#[test]
fn userknn_matches_brute_force() {
    check(Strategy::UserKnn, DpMode::None, f64::INFINITY);
}

#[test]
fn userknn_reuse_matches_brute_force() {
    check(Strategy::UserKnnReuse, DpMode::None, f64::INFINITY);
}

#[test]
fn expect_matches_brute_force() {
    check(Strategy::Expect, DpMode::None, f64::INFINITY);
}

#[test]
fn gain_matches_brute_force() {
    check(Strategy::Gain, DpMode::None, f64::INFINITY);
}

#[test]
fn neuknn_matches_brute_force() {
    check(Strategy::NeuKnn, DpMode::None, f64::INFINITY);
}

#[test]
fn neuknn_reuse_matches_brute_force() {
    check(Strategy::NeuKnnReuse, DpMode::None, f64::INFINITY);
}

#[test]
fn dp_estimates_use_served_values() {
    for s in Strategy::ALL {
        check(s, DpMode::Threshold, 2.0);
        check(s, DpMode::Full, 0.0);
    }
}

#[test]
fn tie_heavy_table_exercises_open_ties() {
    let table = Arc::new(tables().pop().unwrap());
    let r = common::replay(table, Strategy::Gain, 3, DpMode::None, f64::INFINITY, 5, 6).unwrap();
    assert!(r.tie_sets > 0);
}
