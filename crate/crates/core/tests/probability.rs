use proptest::prelude::*;

use pts_core::prob::{is_informed, is_rho_close, l1_distance, FLOOR, SUM_TOLERANCE};
use pts_core::worked::{pts_case_one, pts_case_two, pts_example_truth, self_dominating_example};
use pts_core::{BeliefState, DirichletParams, Distribution, Error};

fn distribution(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Distribution> {
    n.prop_flat_map(|n| prop::collection::vec(0.001f64..1.0, n))
        .prop_map(|w| Distribution::normalize(&w).unwrap())
}

/// Prior plus rows of arbitrary positive weights.
fn belief(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = BeliefState> {
    n.prop_flat_map(|n| prop::collection::vec(prop::collection::vec(0.001f64..1.0, n), n + 1))
        .prop_map(|rows| {
            let prior = Distribution::normalize(&rows[0]).unwrap();
            let post = rows[1..].iter().map(|r| Distribution::normalize(r).unwrap()).collect();
            BeliefState::new(prior, post).unwrap()
        })
}

#[test]
fn normalize_examples() {
    let d = Distribution::normalize(&[1.0, 1.0, 1.0]).unwrap();
    assert!(d.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
    let d = Distribution::normalize(&[7.0, 2.0, 1.0]).unwrap();
    assert!((d[0] - 0.7).abs() < 1e-15 && (d[1] - 0.2).abs() < 1e-15 && (d[2] - 0.1).abs() < 1e-15);
    let d = Distribution::normalize(&[5.0, 0.0, 5.0]).unwrap();
    assert_eq!(d[1], FLOOR);
    // Independent check of the clamp: the two free entries share 1 − FLOOR.
    assert!((d[0] - (1.0 - FLOOR) / 2.0).abs() < 1e-16);
    assert!(matches!(Distribution::normalize(&[0.0, 0.0]), Err(Error::Domain(_))));
}

#[test]
fn l1_examples() {
    let u = Distribution::uniform(3).unwrap();
    assert_eq!(l1_distance(&u, &u).unwrap(), 0.0);
    let q = pts_example_truth();
    // |1/3 − 0.55| + |1/3 − 0.4| + |1/3 − 0.05|
    let oracle = (0.55 - 1.0 / 3.0) + (0.4 - 1.0 / 3.0) + (1.0 / 3.0 - 0.05);
    assert!((l1_distance(&u, &q).unwrap() - oracle).abs() < 1e-12);
    assert!((oracle - 0.566_666_666_666_666_7).abs() < 1e-12);
    let a = Distribution::point_mass(2, 0).unwrap();
    let b = Distribution::point_mass(2, 1).unwrap();
    assert!((l1_distance(&a, &b).unwrap() - 2.0).abs() < 1e-8);
    assert!(matches!(l1_distance(&u, &a), Err(Error::SpaceMismatch(3, 2))));
}

#[test]
fn rho_closeness_examples() {
    let u = Distribution::uniform(3).unwrap();
    assert!(is_rho_close(&u, &u, 0.0).unwrap());
    let r = Distribution::new(vec![0.35, 0.32, 0.33]).unwrap();
    assert!(is_rho_close(&r, &u, 0.05).unwrap());
    let r = Distribution::new(vec![0.7, 0.2, 0.1]).unwrap();
    assert!(!is_rho_close(&r, &u, 0.5).unwrap());
    assert!(is_rho_close(&r, &u, 1.0).is_err());
    assert!(is_rho_close(&r, &u, -0.1).is_err());
}

#[test]
fn informed_examples() {
    let u = Distribution::uniform(3).unwrap();
    let q = pts_example_truth();
    assert!(is_informed(&q, &u, &q).unwrap());
    let prior = Distribution::new(vec![0.5, 0.4, 0.1]).unwrap();
    assert!(is_informed(&prior, &u, &q).unwrap());
    let prior = Distribution::new(vec![0.2, 0.4, 0.4]).unwrap();
    assert!(!is_informed(&prior, &u, &q).unwrap());
}

#[test]
fn belief_structure_examples() {
    assert!(self_dominating_example().is_self_dominating());
    assert!(!pts_case_one().is_self_dominating());
    let flat = BeliefState::from_rows(&[0.5, 0.5], &[&[0.5, 0.5], &[0.5, 0.5]]).unwrap();
    assert!(!flat.is_self_dominating());
    assert!(!flat.is_linear_self_predicting());
    assert!(pts_case_one().is_self_predicting());
    assert!(pts_case_two().is_self_predicting());
    assert!(pts_case_two().is_linear_self_predicting());
    let b = BeliefState::from_rows(&[0.5, 0.5], &[&[0.4, 0.6], &[0.4, 0.6]]).unwrap();
    assert!(!b.is_self_predicting());
    assert!(pts_case_one().is_indicative(2));
}

#[test]
fn gap_examples() {
    // Second worked table, o = z: min(0.5·(1/3)/0.2, 0.5·(1/3)/0.3)·3 − 1.
    let oracle = (1.5f64 * (1.0 / 3.0) / 0.3).min(1.5 * (1.0 / 3.0) / 0.2) - 1.0;
    assert!((pts_case_two().self_prediction_gap(2) - oracle).abs() < 1e-12);
    assert!((oracle - 2.0 / 3.0).abs() < 1e-12);
    let dir = DirichletParams::new(vec![2.0, 2.0, 2.0]).unwrap().belief();
    assert!((dir.self_prediction_gap(0) - 0.5).abs() < 1e-12);
}

#[test]
fn dirichlet_examples() {
    let b = DirichletParams::new(vec![2.0, 2.0, 2.0]).unwrap().belief();
    assert!((b.posterior(0)[0] - 3.0 / 7.0).abs() < 1e-15);
    let b = DirichletParams::new(vec![3.0, 2.0]).unwrap().belief();
    assert!((b.prior()[0] - 0.6).abs() < 1e-15);
    assert!((b.posterior(1)[0] - 0.5).abs() < 1e-15);
    let base = DirichletParams::new(vec![2.0, 2.0, 2.0]).unwrap();
    let mut last = f64::INFINITY;
    for k in [1.0, 10.0, 100.0, 1000.0] {
        let b = base.scaled(k).unwrap().belief();
        assert!((b.prior()[0] - 1.0 / 3.0).abs() < 1e-15);
        let shift = b.posterior(0)[0] - b.prior()[0];
        assert!(shift < last);
        last = shift;
    }
    assert!(DirichletParams::new(vec![1.0, 2.0]).is_err());
}

#[test]
fn table_text_round_trip() {
    let b = pts_case_one();
    let space = pts_core::worked::xyz();
    assert_eq!(BeliefState::parse_table(&b.to_table(&space)).unwrap(), b);
    let parsed = BeliefState::parse_table("1/3 1/3 1/3\n0.5 0.3 0.2\n0.3 0.5 0.2\n0.2 0.3 0.5\n").unwrap();
    assert!((parsed.prior()[0] - 1.0 / 3.0).abs() < 1e-15);
}

proptest! {
    #[test]
    fn distributions_are_fully_mixed(w in prop::collection::vec(0.0f64..10.0, 2..8)) {
        prop_assume!(w.iter().sum::<f64>() > 0.0);
        let d = Distribution::normalize(&w).unwrap();
        prop_assert!((d.iter().sum::<f64>() - 1.0).abs() <= SUM_TOLERANCE);
        prop_assert!(d.min() >= FLOOR);
    }

    #[test]
    fn self_dominating_rows_have_unique_diagonal_argmax(b in belief(2..=5)) {
        if b.is_self_dominating() {
            for o in 0..b.len() {
                let row = b.posterior(o);
                prop_assert!((0..b.len()).filter(|x| *x != o).all(|x| row[o] > row[x]));
            }
        }
    }

    #[test]
    fn dirichlet_beliefs_are_self_predicting(alpha in prop::collection::vec(1.0001f64..50.0, 2..7)) {
        let b = DirichletParams::new(alpha.clone()).unwrap().belief();
        prop_assert!(b.is_self_predicting());
        // The smallest gap belongs to the largest α.
        let max_alpha = alpha.iter().cloned().fold(0.0, f64::max);
        prop_assert!((b.min_gap() - 1.0 / max_alpha).abs() < 1e-9);
    }

    #[test]
    fn positive_gaps_iff_self_predicting(b in belief(2..=5)) {
        let all_positive = (0..b.len()).all(|o| b.self_prediction_gap(o) > 1e-11);
        let all_nonpositive_somewhere = (0..b.len()).any(|o| b.self_prediction_gap(o) <= 0.0);
        if b.is_self_predicting() {
            prop_assert!(all_positive);
        } else {
            // Up to the strictness margin, a failure shows as a non-positive gap.
            prop_assert!(all_nonpositive_somewhere || (0..b.len()).any(|o| b.self_prediction_gap(o) < 1e-10));
        }
    }

    #[test]
    fn rho_closeness_is_monotone(r in distribution(3..=3), p in distribution(3..=3), rho in 0.0f64..0.99, extra in 0.0f64..1.0) {
        let wider = rho + (0.999 - rho) * extra;
        if is_rho_close(&r, &p, rho).unwrap() {
            prop_assert!(is_rho_close(&r, &p, wider).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn binary_indicative_beliefs_are_self_predicting(
        p in 0.01f64..0.99,
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
    ) {
        // Pr[x|x] ∈ (p, 1) and Pr[y|y] ∈ (1 − p, 1).
        let xx = p + (1.0 - p) * (0.001 + 0.998 * a);
        let yy = (1.0 - p) + p * (0.001 + 0.998 * b);
        let belief = BeliefState::from_rows(&[p, 1.0 - p], &[&[xx, 1.0 - xx], &[1.0 - yy, yy]]).unwrap();
        prop_assume!(belief.is_indicative(0) && belief.is_indicative(1));
        prop_assert!(belief.is_self_predicting());
    }
}
