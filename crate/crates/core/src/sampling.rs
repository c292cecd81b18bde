//! Random distributions, Dirichlet parameters and belief tables used by the
//! sampled verifications.

use rand::Rng;

use crate::error::Result;
use crate::prob::{BeliefState, DirichletParams, Distribution};
use crate::sim::SimRng;

/// Upper end of the concentration range for sampled Dirichlet types.
pub const MAX_SIGMA: f64 = 100.0;

/// A flat-Dirichlet draw over `n` values (clamped to full mixing).
pub fn random_distribution(n: usize, rng: &mut SimRng) -> Distribution {
    let weights: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    Distribution::normalize(&weights).expect("exponential draws are positive")
}

/// `α_i = 1 + (Σ − N)·w_i` with `Σ ∈ [N + 1, 100]` and `w` flat on the simplex.
pub fn random_dirichlet_params(n: usize, rng: &mut SimRng) -> DirichletParams {
    let sigma = rng.gen_range((n as f64 + 1.0)..=MAX_SIGMA);
    let w = random_distribution(n, rng);
    let alpha = w.iter().map(|wi| 1.0 + (sigma - n as f64) * wi).collect();
    DirichletParams::new(alpha).expect("every entry exceeds one")
}

/// Dirichlet parameters whose prior is `prior`, if `Σ ∈ [N + 1, 100]` allows it.
pub fn dirichlet_with_prior(prior: &Distribution, rng: &mut SimRng) -> Option<DirichletParams> {
    let n = prior.len() as f64;
    let low = (n + 1.0).max(1.0 / prior.min()) * (1.0 + 1e-9);
    if low >= MAX_SIGMA {
        return None;
    }
    let sigma = rng.gen_range(low..=MAX_SIGMA);
    DirichletParams::new(prior.iter().map(|p| p * sigma).collect()).ok()
}

/// Row `o` is `normalize(prior ⊙ ℓ)` with `ℓ_x ~ U(0.2, 1.5)` off the
/// diagonal and `ℓ_o = (1 + gap)·max_{x≠o} ℓ_x`, so the self-prediction gap at
/// `o` equals `gap`, drawn per row from `gaps`.
pub fn ratio_table(prior: &Distribution, gaps: std::ops::Range<f64>, rng: &mut SimRng) -> Result<BeliefState> {
    let n = prior.len();
    let mut rows = Vec::with_capacity(n);
    for o in 0..n {
        let mut ratios: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.5)).collect();
        let top = (0..n).filter(|x| *x != o).map(|x| ratios[x]).fold(0.0, f64::max);
        ratios[o] = top * (1.0 + rng.gen_range(gaps.clone()));
        let row: Vec<f64> = prior.iter().zip(&ratios).map(|(p, l)| p * l).collect();
        rows.push(Distribution::normalize(&row)?);
    }
    BeliefState::new(prior.clone(), rows)
}

/// A belief table with unconstrained rows.
pub fn random_table(prior: &Distribution, rng: &mut SimRng) -> Result<BeliefState> {
    let rows = (0..prior.len()).map(|_| random_distribution(prior.len(), rng)).collect();
    BeliefState::new(prior.clone(), rows)
}

/// Random likelihood-ratio rows, each redrawn until it is self-predicting.
pub fn random_self_predicting_table(prior: &Distribution, rng: &mut SimRng) -> Result<BeliefState> {
    let n = prior.len();
    let mut rows = Vec::with_capacity(n);
    for o in 0..n {
        loop {
            let ratios: Vec<f64> = (0..n)
                .map(|x| if x == o { rng.gen_range(0.5..3.0) } else { rng.gen_range(0.3..1.7) })
                .collect();
            let row: Vec<f64> = prior.iter().zip(&ratios).map(|(p, l)| p * l).collect();
            let row = Distribution::normalize(&row)?;
            let predicts = (0..n)
                .filter(|x| *x != o)
                .all(|x| crate::prob::strictly_greater(row[o] / prior[o], row[x] / prior[x]));
            if predicts {
                rows.push(row);
                break;
            }
        }
    }
    BeliefState::new(prior.clone(), rows)
}

/// Rows `(1 − w)·prior + w·v` with `v` a random distribution tilted towards
/// `o`, redrawn until `Pr[o|o] − Pr[o]` beats every other additive increase.
pub fn random_linear_self_predicting_table(prior: &Distribution, rng: &mut SimRng) -> Result<BeliefState> {
    let n = prior.len();
    let mut rows = Vec::with_capacity(n);
    for o in 0..n {
        loop {
            let mut v: Vec<f64> = random_distribution(n, rng).probs().to_vec();
            v[o] += rng.gen_range(0.0..2.0);
            let v = Distribution::normalize(&v)?;
            let w = rng.gen_range(0.05..0.5);
            let row: Vec<f64> = prior.iter().zip(v.iter()).map(|(p, q)| (1.0 - w) * p + w * q).collect();
            let row = Distribution::normalize(&row)?;
            let predicts = (0..n)
                .filter(|x| *x != o)
                .all(|x| crate::prob::strictly_greater(row[o] - prior[o], row[x] - prior[x]));
            if predicts {
                rows.push(row);
                break;
            }
        }
    }
    BeliefState::new(prior.clone(), rows)
}

/// A source of private belief types for a given prior.
pub trait TypeSampler: Sync {
    fn name(&self) -> &str;
    fn sample(&self, prior: &Distribution, rng: &mut SimRng) -> Result<BeliefState>;
}

/// Self-predicting types: Dirichlet updates when the prior admits them,
/// otherwise (or with probability one half) rejection-sampled tables.
#[derive(Debug, Clone, Copy, Default)]
pub struct SelfPredictingTypes;

impl TypeSampler for SelfPredictingTypes {
    fn name(&self) -> &str {
        "self_predicting"
    }

    fn sample(&self, prior: &Distribution, rng: &mut SimRng) -> Result<BeliefState> {
        if rng.gen_bool(0.5) {
            if let Some(params) = dirichlet_with_prior(prior, rng) {
                return Ok(params.belief());
            }
        }
        random_self_predicting_table(prior, rng)
    }
}

/// Any fully mixed table, self-predicting or not.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnrestrictedTypes;

impl TypeSampler for UnrestrictedTypes {
    fn name(&self) -> &str {
        "unrestricted"
    }

    fn sample(&self, prior: &Distribution, rng: &mut SimRng) -> Result<BeliefState> {
        random_table(prior, rng)
    }
}
