//! Belief tables of the three-valued worked examples, over `{x, y, z}`.

use crate::prob::{AnswerSpace, BeliefState, Distribution};

pub fn xyz() -> AnswerSpace {
    AnswerSpace::new(["x", "y", "z"]).expect("valid labels")
}

/// Heterogeneous self-dominating belief used with output agreement.
pub fn self_dominating_example() -> BeliefState {
    BeliefState::from_rows(
        &[0.3, 0.4, 0.3],
        &[&[0.7, 0.2, 0.1], &[0.1, 0.8, 0.1], &[0.2, 0.3, 0.5]],
    )
    .expect("valid table")
}

/// Self-predicting belief whose prior differs from a uniform public histogram.
pub fn pts_case_one() -> BeliefState {
    BeliefState::from_rows(
        &[0.5, 0.4, 0.1],
        &[&[0.7, 0.2, 0.1], &[0.4, 0.5, 0.1], &[0.4, 0.4, 0.2]],
    )
    .expect("valid table")
}

/// Self-predicting belief with a uniform prior.
pub fn pts_case_two() -> BeliefState {
    let third = 1.0 / 3.0;
    BeliefState::from_rows(
        &[third, third, third],
        &[&[0.5, 0.3, 0.2], &[0.3, 0.5, 0.2], &[0.2, 0.3, 0.5]],
    )
    .expect("valid table")
}

/// True distribution accompanying the two self-predicting examples.
pub fn pts_example_truth() -> Distribution {
    Distribution::new(vec![0.55, 0.4, 0.05]).expect("valid distribution")
}
