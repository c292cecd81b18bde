//! Simulation scenarios built from the counterexample constructions, plus the
//! convergence and binary scenarios used by the presets.

use crate::agents::{AgentProfile, BeliefModel, PriorModel, Strategy, UpdateType};
use crate::error::{Error, Result};
use crate::mechanism::{Offset, PaymentSpec};
use crate::prob::{AnswerSpace, BeliefState, Distribution};
use crate::sim::{PopulationEntry, SimConfig};

/// Pseudo-count mass used when the histogram starts proportional to a prior.
pub const HISTOGRAM_MASS: f64 = 100.0;

fn pts_unit() -> PaymentSpec {
    PaymentSpec::pts(1.0, Offset::Constant(0.0)).expect("positive scale")
}

fn clamped(values: &[f64]) -> Result<Distribution> {
    let nonneg: Vec<f64> = values.iter().map(|v| v.max(0.0)).collect();
    Distribution::normalize(&nonneg)
}

/// Beliefs on `{x, y, z}` that depend on whether `R[y]` sits below or above
/// `threshold` (the true frequency of `y`). Below it, `z`-observers lean
/// towards `y`; above it, `y`-observers lean towards `x`. At the threshold
/// every row is a clamped point mass on the observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingBeliefs {
    pub threshold: f64,
    pub epsilon: f64,
    pub delta: f64,
}

impl SwitchingBeliefs {
    pub fn name(&self) -> &'static str {
        "switching"
    }

    pub fn belief(&self, public: &Distribution) -> Result<BeliefState> {
        if public.len() != 3 {
            return Err(Error::SpaceMismatch(public.len(), 3));
        }
        let (rx, ry, rz) = (public[0], public[1], public[2]);
        let (eps, delta) = (self.epsilon, self.delta);
        let spike = |at| Distribution::point_mass(3, at);
        if ry < self.threshold {
            let prior = clamped(&[rx - eps, ry + eps, rz])?;
            let (py, pz) = (prior[1], prior[2]);
            let k = 1.0 / (py + pz);
            let z_row = clamped(&[0.0, py * k - delta * pz, pz * k + delta * pz])?;
            BeliefState::new(prior, vec![spike(0)?, spike(1)?, z_row])
        } else if ry > self.threshold {
            let prior = clamped(&[rx, ry - eps, rz + eps])?;
            let (px, py) = (prior[0], prior[1]);
            let k = 1.0 / (px + py);
            let y_row = clamped(&[px * k - delta * px, py * k + delta * px, 0.0])?;
            BeliefState::new(prior, vec![spike(0)?, y_row, spike(2)?])
        } else {
            BeliefState::new(public.clone(), vec![spike(0)?, spike(1)?, spike(2)?])
        }
    }
}

/// Reference distribution of the no-general-prior scenario; it is also the
/// true distribution.
pub fn no_general_prior_reference() -> Distribution {
    Distribution::new(vec![0.5, 0.3, 0.2]).expect("valid")
}

/// The fixed belief of the no-general-prior scenario around `reference`:
/// prior `(R[x], R[y] − ε, R[z] + ε)`, honest point masses after `x` and `z`,
/// and a `y` row that tilts towards `z`.
pub fn no_general_prior_belief(reference: &Distribution, epsilon: f64, delta: f64) -> Result<BeliefState> {
    if reference.len() != 3 {
        return Err(Error::SpaceMismatch(reference.len(), 3));
    }
    let limit = reference[1].min(1.0 - reference[2]);
    if !(delta > 0.0 && delta < epsilon && epsilon < limit) {
        return Err(Error::domain(format!(
            "need 0 < delta < epsilon < {limit}, got delta = {delta}, epsilon = {epsilon}"
        )));
    }
    let prior = Distribution::new(vec![reference[0], reference[1] - epsilon, reference[2] + epsilon])?;
    let (py, pz) = (prior[1], prior[2]);
    let k = 1.0 / (py + pz);
    let y_row = clamped(&[0.0, (py + delta) * k, (pz - delta) * k])?;
    BeliefState::new(prior, vec![Distribution::point_mass(3, 0)?, y_row, Distribution::point_mass(3, 2)?])
}

/// Best-response agents with a fixed, uninformed prior under PTS; `Q` equals
/// the starting histogram, yet `y`-observers report `z`.
pub fn scenario_no_general_prior(epsilon: f64, delta: f64) -> Result<SimConfig> {
    let reference = no_general_prior_reference();
    let belief = no_general_prior_belief(&reference, epsilon, delta)?;
    Ok(SimConfig {
        space: AnswerSpace::new(["x", "y", "z"])?,
        truth: reference.clone(),
        agents_per_round: 2,
        rounds: 25_000,
        histogram_init: reference.iter().map(|p| p * HISTOGRAM_MASS).collect(),
        payment: pts_unit(),
        population: vec![PopulationEntry::new(
            "fixed_prior",
            1,
            AgentProfile::new(Strategy::BestResponse, BeliefModel::table(belief)),
        )],
        seed: 1,
        rho: 0.0,
    })
}

/// Best-response agents whose private priors differ from `R` in the direction
/// set by [`SwitchingBeliefs`], starting from `R ∝ (0.7, 0.2, 0.1)` with
/// `Q = (0.5, 0.2, 0.3)`.
pub fn scenario_common_prior() -> SimConfig {
    let truth = Distribution::new(vec![0.5, 0.2, 0.3]).expect("valid");
    let beliefs = SwitchingBeliefs { threshold: truth[1], epsilon: 0.05, delta: 1e-4 };
    SimConfig {
        space: AnswerSpace::new(["x", "y", "z"]).expect("valid labels"),
        truth,
        agents_per_round: 2,
        rounds: 50_000,
        histogram_init: vec![0.7 * HISTOGRAM_MASS, 0.2 * HISTOGRAM_MASS, 0.1 * HISTOGRAM_MASS],
        payment: pts_unit(),
        population: vec![PopulationEntry::new(
            "private_prior",
            1,
            AgentProfile::new(Strategy::BestResponse, BeliefModel::Switching(beliefs)),
        )],
        seed: 1,
        rho: 0.0,
    }
}

/// True distribution of the five-value convergence scenarios.
pub fn convergence_truth() -> Distribution {
    Distribution::new(vec![0.35, 0.25, 0.2, 0.12, 0.08]).expect("valid")
}

/// Five values, each agent's prior halfway between `R^t` and `Q` (hence
/// informed), histogram starting at one count per value, `M = 2`,
/// `T = 5·10^4`. `strategy` is either canonical helpful or truthful.
pub fn scenario_convergence(strategy: Strategy, seed: u64) -> SimConfig {
    let beliefs = BeliefModel::Standard {
        prior: PriorModel::InformedMix { weight: 0.5 },
        update: UpdateType::ConvexMix { weight: 0.3 },
    };
    let rho = match strategy {
        Strategy::Helpful { rho } => rho,
        _ => 0.1,
    };
    SimConfig {
        space: AnswerSpace::indexed(5).expect("five labels"),
        truth: convergence_truth(),
        agents_per_round: 2,
        rounds: 50_000,
        histogram_init: vec![1.0; 5],
        payment: pts_unit(),
        population: vec![PopulationEntry::new(strategy.name(), 1, AgentProfile::new(strategy, beliefs))],
        seed,
        rho,
    }
}

/// Binary answers with `x` under-reported at the start (`R = (0.2, 0.8)`,
/// `Q = (0.6, 0.4)`); agents hold informed private priors, indicative
/// updates, and best-respond to a truthful peer.
pub fn scenario_binary_informed(seed: u64) -> SimConfig {
    let beliefs = BeliefModel::Standard {
        prior: PriorModel::InformedMix { weight: 0.3 },
        update: UpdateType::ConvexMix { weight: 0.2 },
    };
    SimConfig {
        space: AnswerSpace::new(["x", "y"]).expect("valid labels"),
        truth: Distribution::new(vec![0.6, 0.4]).expect("valid"),
        agents_per_round: 2,
        rounds: 20_000,
        histogram_init: vec![2.0, 8.0],
        payment: pts_unit(),
        population: vec![PopulationEntry::new(
            "informed",
            1,
            AgentProfile::new(Strategy::BestResponse, beliefs),
        )],
        seed,
        rho: 0.0,
    }
}
