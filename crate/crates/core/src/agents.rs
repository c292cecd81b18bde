//! Reporting strategies, belief-update types and best responses.
//!
//! A pure strategy evaluated at a fixed prior and public distribution is just
//! a map from observation to report; [`ReportMap`] is that map and is what a
//! peer's behaviour reduces to when computing expected payoffs.

use crate::analysis::scenarios::SwitchingBeliefs;
use crate::error::{Error, Result};
use crate::mechanism::Payment;
use crate::prob::{BeliefState, DirichletParams, Distribution};

const PRIOR_MATCH_TOLERANCE: f64 = 1e-9;

/// An agent's private way of turning `(prior, observation)` into a posterior.
#[derive(Debug, Clone, PartialEq)]
pub enum UpdateType {
    /// Conjugate Dirichlet–categorical update with fixed parameters.
    Dirichlet(DirichletParams),
    /// An explicit belief table.
    Table(BeliefState),
    /// `(1 − w)·prior + w·δ_o`, with the point mass clamped to full mixing.
    ConvexMix { weight: f64 },
}

impl UpdateType {
    pub fn convex_mix(weight: f64) -> Result<Self> {
        if weight > 0.0 && weight < 1.0 {
            Ok(UpdateType::ConvexMix { weight })
        } else {
            Err(Error::domain(format!("mixing weight must lie in (0, 1), got {weight}")))
        }
    }

    /// The prior this update carries with it, if any.
    pub fn own_prior(&self) -> Option<Distribution> {
        match self {
            UpdateType::Dirichlet(params) => Some(params.prior()),
            UpdateType::Table(belief) => Some(belief.prior().clone()),
            UpdateType::ConvexMix { .. } => None,
        }
    }

    fn check_prior(&self, prior: &Distribution) -> Result<()> {
        if let Some(own) = self.own_prior() {
            let gap = own.l1_distance(prior)?;
            if own.probs().iter().zip(prior.probs()).any(|(a, b)| (a - b).abs() > PRIOR_MATCH_TOLERANCE) {
                return Err(Error::config(
                    "update",
                    format!("update carries its own prior, which differs from the supplied one by {gap:e} (L1)"),
                ));
            }
        }
        Ok(())
    }

    /// Posterior after observing `observed`.
    pub fn apply(&self, prior: &Distribution, observed: usize) -> Result<Distribution> {
        if observed >= prior.len() {
            return Err(Error::domain(format!("observation {observed} outside the answer space")));
        }
        self.check_prior(prior)?;
        match self {
            UpdateType::Dirichlet(params) => Ok(params.posterior(observed)),
            UpdateType::Table(belief) => Ok(belief.posterior(observed).clone()),
            UpdateType::ConvexMix { weight } => {
                let spike = Distribution::point_mass(prior.len(), observed)?;
                let mixed: Vec<f64> = prior
                    .iter()
                    .zip(spike.iter())
                    .map(|(p, s)| (1.0 - weight) * p + weight * s)
                    .collect();
                Distribution::normalize(&mixed)
            }
        }
    }

    /// The full belief table this update induces from `prior`.
    pub fn belief(&self, prior: &Distribution) -> Result<BeliefState> {
        let rows = (0..prior.len())
            .map(|o| self.apply(prior, o))
            .collect::<Result<Vec<_>>>()?;
        BeliefState::new(prior.clone(), rows)
    }
}

/// Posterior of update `u` applied to `prior` after observing `observed`.
pub fn apply_update(u: &UpdateType, prior: &Distribution, observed: usize) -> Result<Distribution> {
    u.apply(prior, observed)
}

/// Where an agent's prior comes from in a given round.
#[derive(Debug, Clone, PartialEq)]
pub enum PriorModel {
    Fixed(Distribution),
    /// The agent adopts the published distribution.
    Public,
    /// `(1 − w)·R + w·Q`: always informed with respect to `R`.
    InformedMix { weight: f64 },
}

impl PriorModel {
    pub fn resolve(&self, public: &Distribution, truth: &Distribution) -> Result<Distribution> {
        match self {
            PriorModel::Fixed(prior) => Ok(prior.clone()),
            PriorModel::Public => Ok(public.clone()),
            PriorModel::InformedMix { weight } => {
                let mixed: Vec<f64> = public
                    .iter()
                    .zip(truth.iter())
                    .map(|(r, q)| (1.0 - weight) * r + weight * q)
                    .collect();
                Distribution::normalize(&mixed)
            }
        }
    }
}

/// The belief an agent holds in a round, as a function of the public state.
#[derive(Debug, Clone, PartialEq)]
pub enum BeliefModel {
    Standard { prior: PriorModel, update: UpdateType },
    /// Beliefs that switch with the position of the public histogram.
    Switching(SwitchingBeliefs),
}

impl BeliefModel {
    /// A fixed belief table (its prior is the table's own).
    pub fn table(belief: BeliefState) -> Self {
        BeliefModel::Standard {
            prior: PriorModel::Fixed(belief.prior().clone()),
            update: UpdateType::Table(belief),
        }
    }

    pub fn belief_at(&self, public: &Distribution, truth: &Distribution) -> Result<BeliefState> {
        match self {
            BeliefModel::Standard { prior, update } => update.belief(&prior.resolve(public, truth)?),
            BeliefModel::Switching(model) => model.belief(public),
        }
    }

    pub fn prior_at(&self, public: &Distribution, truth: &Distribution) -> Result<Distribution> {
        match self {
            BeliefModel::Standard { prior, .. } => prior.resolve(public, truth),
            BeliefModel::Switching(model) => Ok(model.belief(public)?.prior().clone()),
        }
    }

    pub fn posterior_at(
        &self,
        public: &Distribution,
        truth: &Distribution,
        observed: usize,
    ) -> Result<Distribution> {
        match self {
            BeliefModel::Standard { prior, update } => {
                update.apply(&prior.resolve(public, truth)?, observed)
            }
            BeliefModel::Switching(model) => Ok(model.belief(public)?.posterior(observed).clone()),
        }
    }

    /// Checks that the model can be evaluated (own priors match fixed priors).
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            BeliefModel::Standard { prior, update } => {
                if let PriorModel::InformedMix { weight } = prior {
                    if !(*weight > 0.0 && *weight <= 1.0) {
                        return Err(Error::config("prior", "informed-mix weight must lie in (0, 1]"));
                    }
                }
                if let PriorModel::Fixed(p) = prior {
                    if p.len() != n {
                        return Err(Error::SpaceMismatch(p.len(), n));
                    }
                    update.check_prior(p)?;
                } else if update.own_prior().is_some() {
                    return Err(Error::config(
                        "prior",
                        "dirichlet and table updates carry their own prior; use a fixed prior",
                    ));
                }
                if let Some(own) = update.own_prior() {
                    if own.len() != n {
                        return Err(Error::SpaceMismatch(own.len(), n));
                    }
                }
                Ok(())
            }
            BeliefModel::Switching(model) => {
                if n == 3 {
                    Ok(())
                } else {
                    Err(Error::config("beliefs", format!("{} needs three answers", model.name())))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    Truthful,
    Singleton(usize),
    Helpful { rho: f64 },
    /// Best response to a truthful peer under the running mechanism.
    BestResponse,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Truthful => "truthful",
            Strategy::Singleton(_) => "singleton",
            Strategy::Helpful { .. } => "helpful",
            Strategy::BestResponse => "best_response",
        }
    }
}

/// A pure strategy at fixed `(Pr, R)`: entry `o` is the report after observing `o`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportMap(Vec<usize>);

impl ReportMap {
    pub fn new(reports: Vec<usize>) -> Result<Self> {
        let n = reports.len();
        if reports.iter().any(|r| *r >= n) {
            return Err(Error::domain("report outside the answer space"));
        }
        Ok(Self(reports))
    }

    pub fn truthful(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn singleton(n: usize, value: usize) -> Self {
        assert!(value < n, "singleton value outside the answer space");
        Self(vec![value; n])
    }

    pub fn report(&self, observed: usize) -> usize {
        self.0[observed]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// `Σ_x posterior[x] · τ(report, peer(x), R)`.
pub fn expected_payoff<P: Payment + ?Sized>(
    report: usize,
    posterior: &Distribution,
    pay: &P,
    public: &Distribution,
    peer: &ReportMap,
) -> f64 {
    (0..posterior.len())
        .map(|x| posterior[x] * pay.pay(report, peer.report(x), public))
        .sum()
}

/// The payoff-maximizing report together with the full payoff vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub report: usize,
    pub payoffs: Vec<f64>,
}

impl BestResponse {
    /// Payoff of the best report minus the best alternative.
    pub fn margin(&self) -> f64 {
        let best = self.payoffs[self.report];
        let runner_up = self
            .payoffs
            .iter()
            .enumerate()
            .filter(|(r, _)| *r != self.report)
            .map(|(_, v)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        best - runner_up
    }
}

/// Best response of an agent holding `posterior`; ties go to the lowest index.
pub fn best_response<P: Payment + ?Sized>(
    posterior: &Distribution,
    pay: &P,
    public: &Distribution,
    peer: &ReportMap,
) -> BestResponse {
    let payoffs: Vec<f64> = (0..posterior.len())
        .map(|r| expected_payoff(r, posterior, pay, public, peer))
        .collect();
    let mut report = 0;
    for (r, v) in payoffs.iter().enumerate() {
        if *v > payoffs[report] {
            report = r;
        }
    }
    BestResponse { report, payoffs }
}

/// The canonical ρ-helpful report: truthful while `R` is ρ-close to the prior,
/// otherwise the first strictly under-reported value regardless of `observed`.
pub fn helpful_report(observed: usize, prior: &Distribution, public: &Distribution, rho: f64) -> Result<usize> {
    if public.is_rho_close(prior, rho)? {
        return Ok(observed);
    }
    let under = (0..prior.len()).find(|x| public[*x] < prior[*x]);
    // Two distinct distributions summing to one always have an entry below.
    Ok(under.expect("distinct distributions have an under-reported value"))
}

pub fn helpful_map(prior: &Distribution, public: &Distribution, rho: f64) -> Result<ReportMap> {
    let reports = (0..prior.len())
        .map(|o| helpful_report(o, prior, public, rho))
        .collect::<Result<Vec<_>>>()?;
    ReportMap::new(reports)
}

/// Whether `strategy` is ρ-helpful for `(prior, R)`: truthful when `R` is
/// ρ-close to the prior, and never misreports towards a value with `R[x] ≥ Pr[x]`.
pub fn check_helpful(strategy: &ReportMap, prior: &Distribution, public: &Distribution, rho: f64) -> Result<bool> {
    let n = prior.len();
    if strategy.len() != n {
        return Err(Error::SpaceMismatch(strategy.len(), n));
    }
    if public.is_rho_close(prior, rho)? && (0..n).any(|o| strategy.report(o) != o) {
        return Ok(false);
    }
    Ok((0..n).all(|o| {
        let x = strategy.report(o);
        x == o || public[x] < prior[x]
    }))
}

/// A strategy plus the belief model that drives it.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentProfile {
    pub strategy: Strategy,
    pub beliefs: BeliefModel,
}

impl AgentProfile {
    pub fn new(strategy: Strategy, beliefs: BeliefModel) -> Self {
        Self { strategy, beliefs }
    }

    /// The report after observing `observed` in a round with public `R`.
    pub fn report<P: Payment + ?Sized>(
        &self,
        observed: usize,
        public: &Distribution,
        truth: &Distribution,
        pay: &P,
    ) -> Result<usize> {
        match self.strategy {
            Strategy::Truthful => Ok(observed),
            Strategy::Singleton(x) => Ok(x),
            Strategy::Helpful { rho } => {
                helpful_report(observed, &self.beliefs.prior_at(public, truth)?, public, rho)
            }
            Strategy::BestResponse => {
                Ok(self.best_response(observed, public, truth, pay)?.report)
            }
        }
    }

    /// Best response against a truthful peer.
    pub fn best_response<P: Payment + ?Sized>(
        &self,
        observed: usize,
        public: &Distribution,
        truth: &Distribution,
        pay: &P,
    ) -> Result<BestResponse> {
        let posterior = self.beliefs.posterior_at(public, truth, observed)?;
        Ok(best_response(&posterior, pay, public, &ReportMap::truthful(public.len())))
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if let Strategy::Singleton(x) = self.strategy {
            if x >= n {
                return Err(Error::config("strategy", "singleton value outside the answer space"));
            }
        }
        if let Strategy::Helpful { rho } = self.strategy {
            if !(0.0..1.0).contains(&rho) {
                return Err(Error::config("rho", "must lie in [0, 1)"));
            }
        }
        self.beliefs.validate(n)
    }
}
