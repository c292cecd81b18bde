//! Round-based simulation of the elicitation game.
//!
//! Each round the center holds `R^t` fixed, draws `M` agents from the
//! population, lets each observe `o ~ Q` and report, pairs every agent with a
//! reference report drawn uniformly (with replacement) from the other `M − 1`
//! agents, pays them, and then adds the round's reports to the histogram.

use rand::distributions::{Distribution as _, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::agents::{AgentProfile, ReportMap};
use crate::error::{Error, Result};
use crate::mechanism::{Payment, PaymentSpec};
use crate::prob::{AnswerSpace, Distribution};
use crate::text::format_g12;

/// The generator behind every simulation and sampled verification.
pub type SimRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A population member: a profile and its relative weight.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationEntry {
    pub name: String,
    pub count: u32,
    pub profile: AgentProfile,
}

impl PopulationEntry {
    pub fn new(name: impl Into<String>, count: u32, profile: AgentProfile) -> Self {
        Self { name: name.into(), count, profile }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub space: AnswerSpace,
    pub truth: Distribution,
    pub agents_per_round: usize,
    pub rounds: usize,
    pub histogram_init: Vec<f64>,
    pub payment: PaymentSpec,
    pub population: Vec<PopulationEntry>,
    pub seed: u64,
    /// Default closeness parameter for helpful profiles.
    pub rho: f64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.space.len();
        if self.truth.len() != n {
            return Err(Error::config("truth", format!("expected {n} values, found {}", self.truth.len())));
        }
        if self.agents_per_round < 2 {
            return Err(Error::config("agents_per_round", "M > 1 agents are needed for peer comparison"));
        }
        if self.rounds < 1 {
            return Err(Error::config("rounds", "at least one round is required"));
        }
        if self.histogram_init.len() != n {
            return Err(Error::config(
                "histogram",
                format!("expected {n} counts, found {}", self.histogram_init.len()),
            ));
        }
        if self.histogram_init.iter().any(|c| !c.is_finite() || *c <= 0.0) {
            return Err(Error::config("histogram", "initial counts must be strictly positive"));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::config("rho", "must lie in [0, 1)"));
        }
        self.payment.validate().map_err(|e| Error::config("payment", e.to_string()))?;
        if self.population.is_empty() || self.population.iter().all(|p| p.count == 0) {
            return Err(Error::config("population", "needs at least one profile with a positive count"));
        }
        for entry in &self.population {
            entry
                .profile
                .validate(n)
                .map_err(|e| Error::config(format!("population.{}", entry.name), e.to_string()))?;
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// `H^t` and the published `R^t = normalize(H^t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramState {
    counts: Vec<f64>,
    t: usize,
    public: Distribution,
}

impl HistogramState {
    pub fn new(init: &[f64]) -> Result<Self> {
        if init.iter().any(|c| *c <= 0.0) {
            return Err(Error::domain("initial counts must be strictly positive"));
        }
        Ok(Self { counts: init.to_vec(), t: 0, public: Distribution::normalize(init)? })
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn public(&self) -> &Distribution {
        &self.public
    }

    fn record(&self, reports: &[usize]) -> Self {
        let mut counts = self.counts.clone();
        for r in reports {
            counts[*r] += 1.0;
        }
        let public = Distribution::normalize(&counts).expect("counts stay positive");
        Self { counts, t: self.t + 1, public }
    }
}

/// `R` shifted towards a single report `x` at time `t`:
/// `R'[x] = R[x] + (1 − R[x])/(t + 1)` and `R'[y] = R[y] − R[y]/(t + 1)`.
pub fn incremental_update(public: &Distribution, report: usize, t: usize) -> Result<Distribution> {
    if t < 1 {
        return Err(Error::domain("incremental update needs t ≥ 1"));
    }
    if report >= public.len() {
        return Err(Error::domain(format!("report {report} outside the answer space")));
    }
    let eps = 1.0 / (t as f64 + 1.0);
    let shifted: Vec<f64> = public
        .iter()
        .enumerate()
        .map(|(y, r)| if y == report { r + (1.0 - r) * eps } else { r - r * eps })
        .collect();
    Distribution::normalize(&shifted)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    /// Round index, starting at 1.
    pub t: usize,
    /// `R` after the round's reports were added.
    pub published: Distribution,
    pub profiles: Vec<usize>,
    pub observations: Vec<usize>,
    pub reports: Vec<usize>,
    pub references: Vec<usize>,
    pub rewards: Vec<f64>,
    pub l1: f64,
}

impl RoundRecord {
    pub fn mean_reward(&self) -> f64 {
        self.rewards.iter().sum::<f64>() / self.rewards.len() as f64
    }
}

/// The draws a round consumes, taken sequentially from the generator before
/// any agent acts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundDraws {
    pub profiles: Vec<usize>,
    pub observations: Vec<usize>,
    /// Index of each agent's reference agent (never the agent itself).
    pub partners: Vec<usize>,
}

impl RoundDraws {
    pub fn sample(m: usize, population: &WeightedIndex<u32>, truth: &WeightedIndex<f64>, rng: &mut SimRng) -> Self {
        let profiles = (0..m).map(|_| population.sample(rng)).collect();
        let observations = (0..m).map(|_| truth.sample(rng)).collect();
        let partners = (0..m)
            .map(|i| {
                let j = rng.gen_range(0..m - 1);
                if j >= i {
                    j + 1
                } else {
                    j
                }
            })
            .collect();
        Self { profiles, observations, partners }
    }
}

/// One round against the frozen `state.public()`.
pub fn run_round<P: Payment + Sync + ?Sized>(
    state: &HistogramState,
    population: &[AgentProfile],
    draws: &RoundDraws,
    truth: &Distribution,
    pay: &P,
) -> Result<(RoundRecord, HistogramState)> {
    let m = draws.observations.len();
    if m < 2 || draws.profiles.len() != m || draws.partners.len() != m {
        return Err(Error::domain("a round needs M ≥ 2 consistent draws"));
    }
    let public = state.public();
    let n = public.len();

    // Each profile's pure strategy at this R, computed once per round.
    let mut maps: Vec<Option<ReportMap>> = vec![None; population.len()];
    for &p in &draws.profiles {
        if maps[p].is_none() {
            let profile = &population[p];
            let reports = (0..n)
                .map(|o| profile.report(o, public, truth, pay))
                .collect::<Result<Vec<_>>>()?;
            maps[p] = Some(ReportMap::new(reports)?);
        }
    }
    let reports: Vec<usize> = (0..m)
        .map(|i| maps[draws.profiles[i]].as_ref().expect("computed above").report(draws.observations[i]))
        .collect();
    let references: Vec<usize> = draws.partners.iter().map(|j| reports[*j]).collect();
    let rewards: Vec<f64> = reports
        .iter()
        .zip(&references)
        .map(|(r, rr)| pay.pay(*r, *rr, public))
        .collect();

    let next = state.record(&reports);
    let record = RoundRecord {
        t: next.t,
        l1: next.public.l1_distance(truth)?,
        published: next.public.clone(),
        profiles: draws.profiles.clone(),
        observations: draws.observations.clone(),
        reports,
        references,
        rewards,
    };
    Ok((record, next))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSummary {
    pub seed: u64,
    pub final_public: Distribution,
    pub final_l1: f64,
    pub report_frequencies: Vec<f64>,
    /// Total reward per population entry, in population order.
    pub reward_totals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub labels: Vec<String>,
    pub profile_names: Vec<String>,
    pub records: Vec<RoundRecord>,
    pub final_counts: Vec<f64>,
    pub summary: SimSummary,
}

impl SimTrace {
    /// Frequency of each report over rounds `from..to` (0-based record indices).
    pub fn report_frequencies(&self, from: usize, to: usize) -> Vec<f64> {
        let mut counts = vec![0.0; self.labels.len()];
        let mut total = 0.0;
        for rec in &self.records[from.min(self.records.len())..to.min(self.records.len())] {
            for r in &rec.reports {
                counts[*r] += 1.0;
                total += 1.0;
            }
        }
        if total > 0.0 {
            counts.iter_mut().for_each(|c| *c /= total);
        }
        counts
    }

    /// Frequencies over the last `n_reports` reports (whole rounds).
    pub fn tail_frequencies(&self, n_reports: usize) -> Vec<f64> {
        let per_round = self.records.first().map_or(1, |r| r.reports.len());
        let rounds = n_reports.div_ceil(per_round).min(self.records.len());
        self.report_frequencies(self.records.len() - rounds, self.records.len())
    }

    /// `l1(R^t, Q)` at round `t` (1-based).
    pub fn l1_at(&self, t: usize) -> Option<f64> {
        self.records.get(t.checked_sub(1)?).map(|r| r.l1)
    }

    /// A `# seed = ...` comment, then `t,<labels>,l1,mean_reward` rows with
    /// 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# seed = {}\nt,{},l1,mean_reward\n", self.summary.seed, self.labels.join(","));
        for rec in &self.records {
            out.push_str(&rec.t.to_string());
            for p in rec.published.iter() {
                out.push(',');
                out.push_str(&format_g12(p));
            }
            out.push(',');
            out.push_str(&format_g12(rec.l1));
            out.push(',');
            out.push_str(&format_g12(rec.mean_reward()));
            out.push('\n');
        }
        out
    }

    pub fn summary_text(&self) -> String {
        let s = &self.summary;
        let mut out = String::new();
        out.push_str(&format!("seed = {}\n", s.seed));
        out.push_str(&format!("rounds = {}\n", self.records.len()));
        for (label, p) in self.labels.iter().zip(s.final_public.iter()) {
            out.push_str(&format!("final_public.{label} = {}\n", format_g12(p)));
        }
        out.push_str(&format!("final_l1 = {}\n", format_g12(s.final_l1)));
        for (label, f) in self.labels.iter().zip(&s.report_frequencies) {
            out.push_str(&format!("report_freq.{label} = {}\n", format_g12(*f)));
        }
        for (name, r) in self.profile_names.iter().zip(&s.reward_totals) {
            out.push_str(&format!("reward_total.{name} = {}\n", format_g12(*r)));
        }
        out
    }
}

/// Runs `config.rounds` rounds with a generator seeded from `config.seed`.
pub fn run_simulation(config: &SimConfig) -> Result<SimTrace> {
    config.validate()?;
    let mut rng = seeded_rng(config.seed);
    let weights: Vec<u32> = config.population.iter().map(|p| p.count).collect();
    let population_index = WeightedIndex::new(&weights).map_err(|e| Error::config("population", e.to_string()))?;
    let truth_index = WeightedIndex::new(config.truth.probs()).map_err(|e| Error::config("truth", e.to_string()))?;
    let profiles: Vec<AgentProfile> = config.population.iter().map(|p| p.profile.clone()).collect();

    let mut state = HistogramState::new(&config.histogram_init)?;
    let mut records = Vec::with_capacity(config.rounds);
    let mut freq = vec![0.0; config.space.len()];
    let mut reward_totals = vec![0.0; profiles.len()];
    for _ in 0..config.rounds {
        let draws = RoundDraws::sample(config.agents_per_round, &population_index, &truth_index, &mut rng);
        let (record, next) = run_round(&state, &profiles, &draws, &config.truth, &config.payment)?;
        for (i, r) in record.reports.iter().enumerate() {
            freq[*r] += 1.0;
            reward_totals[record.profiles[i]] += record.rewards[i];
        }
        records.push(record);
        state = next;
    }
    let total: f64 = freq.iter().sum();
    freq.iter_mut().for_each(|f| *f /= total);
    let final_l1 = state.public().l1_distance(&config.truth)?;
    Ok(SimTrace {
        labels: config.space.labels().to_vec(),
        profile_names: config.population.iter().map(|p| p.name.clone()).collect(),
        records,
        final_counts: state.counts().to_vec(),
        summary: SimSummary {
            seed: config.seed,
            final_public: state.public().clone(),
            final_l1,
            report_frequencies: freq,
            reward_totals,
        },
    })
}

/// Runs independent simulations in parallel; results keep the input order.
pub fn run_batch(configs: &[SimConfig]) -> Vec<Result<SimTrace>> {
    configs.par_iter().map(run_simulation).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{BeliefModel, Strategy};
    use crate::mechanism::Offset;
    use crate::worked::pts_case_two;

    fn pts() -> PaymentSpec {
        PaymentSpec::pts(1.0, Offset::Constant(0.0)).unwrap()
    }

    fn profile(strategy: Strategy) -> AgentProfile {
        AgentProfile::new(strategy, BeliefModel::table(pts_case_two()))
    }

    fn draws(observations: Vec<usize>) -> RoundDraws {
        let m = observations.len();
        RoundDraws { profiles: vec![0; m], observations, partners: (0..m).map(|i| (i + 1) % m).collect() }
    }

    #[test]
    fn forced_consensus_pays_inverse_frequency() {
        let state = HistogramState::new(&[1.0, 1.0, 1.0]).unwrap();
        let truth = Distribution::point_mass(3, 0).unwrap();
        let (rec, next) = run_round(&state, &[profile(Strategy::Truthful)], &draws(vec![0; 4]), &truth, &pts()).unwrap();
        assert!(rec.rewards.iter().all(|r| (r - 3.0).abs() < 1e-12));
        assert_eq!(next.counts(), &[5.0, 1.0, 1.0]);

        let (rec, _) = run_round(&state, &[profile(Strategy::Singleton(1))], &draws(vec![0, 2, 1]), &truth, &pts()).unwrap();
        assert_eq!(rec.reports, vec![1, 1, 1]);
        assert!(rec.rewards.iter().all(|r| (r - 3.0).abs() < 1e-12));
    }

    #[test]
    fn mismatched_pair_gets_offset_only() {
        let state = HistogramState::new(&[1.0, 1.0, 1.0]).unwrap();
        let truth = Distribution::uniform(3).unwrap();
        let spec = PaymentSpec::pts(1.0, Offset::Constant(-0.5)).unwrap();
        let (rec, _) = run_round(&state, &[profile(Strategy::Truthful)], &draws(vec![0, 1]), &truth, &spec).unwrap();
        assert_eq!(rec.rewards, vec![-0.5, -0.5]);
    }

    #[test]
    fn incremental_update_examples() {
        let r = Distribution::new(vec![0.5, 0.3, 0.2]).unwrap();
        let next = incremental_update(&r, 0, 9).unwrap();
        assert!((next[0] - 0.55).abs() < 1e-12);
        assert!((next.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let spike = Distribution::point_mass(3, 1).unwrap();
        let next = incremental_update(&spike, 1, 5).unwrap();
        assert!(next.l1_distance(&spike).unwrap() < 1e-8);
        assert!(incremental_update(&r, 0, 0).is_err());
    }

    #[test]
    fn partners_are_never_self() {
        let mut rng = seeded_rng(3);
        let pop = WeightedIndex::new([1u32]).unwrap();
        let truth = WeightedIndex::new([0.5, 0.5]).unwrap();
        for _ in 0..200 {
            let d = RoundDraws::sample(3, &pop, &truth, &mut rng);
            assert!(d.partners.iter().enumerate().all(|(i, j)| i != *j && *j < 3));
        }
    }
}
