//! Numeric verification of equilibrium and optimality claims, plus the
//! counterexample constructions used by the impossibility scenarios.

pub mod scenarios;

use crate::agents::{best_response, expected_payoff, helpful_map, BestResponse, ReportMap, Strategy};
use crate::error::{Error, Result};
use crate::mechanism::{Payment, PaymentSpec, ScoringKind, ScoringRule};
use crate::prob::{AnswerSpace, BeliefState, DirichletParams, Distribution};
use crate::sampling::TypeSampler;
use crate::sim::{incremental_update, seeded_rng};
use crate::text::format_g12;

/// Decision margins below this are treated as ties.
pub const DECISION_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Refuted,
    Inconclusive,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Refuted => "refuted",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// A concrete configuration behind a verdict: observing `observation`, the
/// agent prefers `deviation` given `payoffs` (one entry per report).
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub observation: usize,
    pub deviation: usize,
    pub payoffs: Vec<f64>,
    pub belief: BeliefState,
    pub public: Distribution,
    pub peer: ReportMap,
}

impl Witness {
    /// Recomputes the payoffs under `pay` and confirms the deviation is at
    /// least as good as the prescribed report.
    pub fn recheck<P: Payment + ?Sized>(&self, pay: &P, prescribed: usize) -> bool {
        let posterior = self.belief.posterior(self.observation);
        let dev = expected_payoff(self.deviation, posterior, pay, &self.public, &self.peer);
        let own = expected_payoff(prescribed, posterior, pay, &self.public, &self.peer);
        dev >= own - DECISION_FLOOR
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub claim: String,
    pub verdict: Verdict,
    /// Whether the verdict rests on random sampling rather than enumeration.
    pub sampled: bool,
    pub witness: Option<Witness>,
    pub samples: usize,
    /// Cases dropped because a decision margin was below the numeric floor.
    pub excluded: usize,
    pub seed: Option<u64>,
    /// Smallest decision margin seen (negative when refuted).
    pub worst_margin: f64,
}

impl VerificationReport {
    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }

    /// Key-value text, one entry per line.
    pub fn to_text(&self, space: &AnswerSpace) -> String {
        let mut out = format!("claim = {}\n", self.claim);
        let verdict = if self.sampled && self.verdict == Verdict::Holds {
            "holds (sampled)".to_string()
        } else {
            self.verdict.name().to_string()
        };
        out.push_str(&format!("verdict = {verdict}\n"));
        out.push_str(&format!("samples = {}\n", self.samples));
        out.push_str(&format!("excluded = {}\n", self.excluded));
        match self.seed {
            Some(seed) => out.push_str(&format!("seed = {seed}\n")),
            None => out.push_str("seed = none\n"),
        }
        out.push_str(&format!("worst_margin = {}\n", format_g12(self.worst_margin)));
        if let Some(w) = &self.witness {
            out.push_str(&format!("witness.observation = {}\n", space.label(w.observation)));
            out.push_str(&format!("witness.deviation = {}\n", space.label(w.deviation)));
            out.push_str(&format!("witness.payoffs = {}\n", join(&w.payoffs)));
            out.push_str(&format!("witness.public = {}\n", join(w.public.probs())));
            out.push_str(&format!("witness.prior = {}\n", join(w.belief.prior().probs())));
            for (o, row) in w.belief.posteriors().iter().enumerate() {
                out.push_str(&format!("witness.posterior.{} = {}\n", space.label(o), join(row.probs())));
            }
            let peer: Vec<&str> = w.peer.as_slice().iter().map(|r| space.label(*r)).collect();
            out.push_str(&format!("witness.peer = {}\n", peer.join(" ")));
        }
        out
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format_g12(*v)).collect::<Vec<_>>().join(" ")
}

/// `min_o δ(o)/(2 + δ(o))`: below this closeness the PTS best response to a
/// truthful peer is truthful.
pub fn truthfulness_threshold(belief: &BeliefState) -> Result<f64> {
    if !belief.is_self_predicting() {
        return Err(Error::domain("the truthfulness threshold needs a self-predicting belief"));
    }
    Ok((0..belief.len())
        .map(|o| {
            let d = belief.self_prediction_gap(o);
            d / (2.0 + d)
        })
        .fold(f64::INFINITY, f64::min))
}

/// Whether truthful reporting is a strict best response to a truthful peer at
/// every observation, with margin above `tol`.
pub fn verify_truthful_equilibrium<P: Payment + ?Sized>(
    pay: &P,
    belief: &BeliefState,
    public: &Distribution,
    tol: f64,
) -> VerificationReport {
    let n = belief.len();
    let peer = ReportMap::truthful(n);
    let mut worst: Option<(f64, usize, BestResponse)> = None;
    for o in 0..n {
        let br = best_response(belief.posterior(o), pay, public, &peer);
        let rival = (0..n)
            .filter(|r| *r != o)
            .map(|r| br.payoffs[r])
            .fold(f64::NEG_INFINITY, f64::max);
        let margin = br.payoffs[o] - rival;
        if worst.as_ref().is_none_or(|(m, _, _)| margin < *m) {
            worst = Some((margin, o, br));
        }
    }
    let (margin, o, br) = worst.expect("at least two observations");
    let verdict = if margin > tol { Verdict::Holds } else { Verdict::Refuted };
    let witness = (verdict == Verdict::Refuted).then(|| {
        let deviation = (0..n)
            .filter(|r| *r != o)
            .fold(None::<usize>, |best, r| match best {
                Some(b) if br.payoffs[b] >= br.payoffs[r] => Some(b),
                _ => Some(r),
            })
            .expect("some other report");
        Witness {
            observation: o,
            deviation,
            payoffs: br.payoffs.clone(),
            belief: belief.clone(),
            public: public.clone(),
            peer: peer.clone(),
        }
    });
    VerificationReport {
        claim: "truthful_strict_equilibrium".into(),
        verdict,
        sampled: false,
        witness,
        samples: 1,
        excluded: 0,
        seed: None,
        worst_margin: margin,
    }
}

/// The pure strategy `strategy` induces at `(prior, R)`.
pub fn strategy_map(strategy: &Strategy, prior: &Distribution, public: &Distribution) -> Result<ReportMap> {
    let n = prior.len();
    match *strategy {
        Strategy::Truthful => Ok(ReportMap::truthful(n)),
        Strategy::Singleton(x) => {
            if x >= n {
                return Err(Error::domain("singleton value outside the answer space"));
            }
            Ok(ReportMap::singleton(n, x))
        }
        Strategy::Helpful { rho } => helpful_map(prior, public, rho),
        Strategy::BestResponse => Err(Error::domain(
            "best-response profiles depend on the peer's type; give a fixed strategy",
        )),
    }
}

/// Samples private types from `sampler` and checks that no type gains by
/// deviating from `strategy` while its peer plays `strategy`.
pub fn verify_expost_equilibrium<P: Payment + ?Sized>(
    pay: &P,
    strategy: &Strategy,
    prior: &Distribution,
    sampler: &dyn TypeSampler,
    public: &Distribution,
    n_samples: usize,
    seed: u64,
) -> Result<VerificationReport> {
    let n = prior.len();
    let map = strategy_map(strategy, prior, public)?;
    let mut rng = seeded_rng(seed);
    let mut worst = f64::INFINITY;
    let mut witness = None;
    for _ in 0..n_samples {
        let belief = sampler.sample(prior, &mut rng)?;
        for o in 0..n {
            let prescribed = map.report(o);
            let payoffs: Vec<f64> = (0..n)
                .map(|r| expected_payoff(r, belief.posterior(o), pay, public, &map))
                .collect();
            let (deviation, rival) = (0..n)
                .filter(|r| *r != prescribed)
                .map(|r| (r, payoffs[r]))
                .fold((usize::MAX, f64::NEG_INFINITY), |acc, (r, v)| if v > acc.1 { (r, v) } else { acc });
            let margin = payoffs[prescribed] - rival;
            if margin < worst {
                worst = margin;
                if margin < -DECISION_FLOOR {
                    witness = Some(Witness {
                        observation: o,
                        deviation,
                        payoffs,
                        belief: belief.clone(),
                        public: public.clone(),
                        peer: map.clone(),
                    });
                }
            }
        }
    }
    let verdict = if witness.is_some() {
        Verdict::Refuted
    } else if worst > DECISION_FLOOR {
        Verdict::Holds
    } else {
        Verdict::Inconclusive
    };
    Ok(VerificationReport {
        claim: format!("expost_equilibrium.{}.{}", strategy.name(), sampler.name()),
        verdict,
        sampled: true,
        witness,
        samples: n_samples,
        excluded: 0,
        seed: Some(seed),
        worst_margin: worst,
    })
}

/// Two Dirichlet beliefs, `α` and `α + e_x − e_y`, whose posteriors after `x`
/// and after `y` respectively coincide.
pub fn dirichlet_confusion_pair(alpha: &DirichletParams, x: usize, y: usize) -> Result<(BeliefState, BeliefState)> {
    let n = alpha.alpha().len();
    if x >= n || y >= n || x == y {
        return Err(Error::domain("the confusion pair needs two distinct values"));
    }
    if alpha.alpha()[y] <= 2.0 {
        return Err(Error::domain(format!("alpha at the second value must exceed 2, got {}", alpha.alpha()[y])));
    }
    let mut shifted = alpha.alpha().to_vec();
    shifted[x] += 1.0;
    shifted[y] -= 1.0;
    let other = DirichletParams::new(shifted)?;
    Ok((alpha.belief(), other.belief()))
}

/// `(exact, first_order)` gain in `S(·, sample)` from shifting `R` towards
/// `report` at time `t`; the first-order term uses `ε = 1/(t + 1)`.
pub fn center_gain(
    public: &Distribution,
    report: usize,
    sample: usize,
    t: usize,
    rule: &ScoringRule,
) -> Result<(f64, f64)> {
    if sample >= public.len() {
        return Err(Error::domain(format!("sample {sample} outside the answer space")));
    }
    let shifted = incremental_update(public, report, t)?;
    let exact = rule.score(&shifted, sample) - rule.score(public, sample);
    let eps = 1.0 / (t as f64 + 1.0);
    let hit = if report == sample { 1.0 } else { 0.0 };
    let first_order = match rule.kind {
        ScoringKind::Logarithmic => eps * (hit / public[report] - 1.0),
        ScoringKind::Quadratic => {
            let sq: f64 = public.iter().map(|p| p * p).sum();
            eps * (2.0 * hit - 2.0 * public[report] - 2.0 * public[sample] + 2.0 * sq)
        }
    } * rule.scale;
    Ok((exact, first_order))
}

/// The payment whose expectation is affine in the first-order gain of `rule`.
pub fn matching_payment(rule: &ScoringRule) -> PaymentSpec {
    match rule.kind {
        ScoringKind::Logarithmic => {
            PaymentSpec::pts(1.0, crate::mechanism::Offset::Constant(0.0)).expect("positive scale")
        }
        ScoringKind::Quadratic => PaymentSpec::pts_quadratic(),
    }
}

fn argmax_with_margin(values: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    let second = values
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != best)
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    (best, values[best] - second)
}

/// Checks, observation by observation, that the report maximizing the
/// center's expected exact gain is the report maximizing the expected matching
/// peer payment (against a truthful peer).
pub fn verify_optimality(
    public: &Distribution,
    belief: &BeliefState,
    t: usize,
    rule: &ScoringRule,
) -> Result<VerificationReport> {
    let n = belief.len();
    if public.len() != n {
        return Err(Error::SpaceMismatch(public.len(), n));
    }
    let pay = matching_payment(rule);
    let peer = ReportMap::truthful(n);
    let eps = 1.0 / (t as f64 + 1.0);
    let mut worst = f64::INFINITY;
    let mut inconclusive = 0;
    let mut witness = None;
    for o in 0..n {
        let posterior = belief.posterior(o);
        let mut gains = vec![0.0; n];
        let mut error = 0.0f64;
        for (r, gain) in gains.iter_mut().enumerate() {
            let mut linear = 0.0;
            for x in 0..n {
                let (exact, first) = center_gain(public, r, x, t, rule)?;
                *gain += posterior[x] * exact;
                linear += posterior[x] * first;
            }
            error = error.max((*gain - linear).abs());
        }
        let payoffs: Vec<f64> = (0..n).map(|r| expected_payoff(r, posterior, &pay, public, &peer)).collect();
        let (gain_best, gain_margin) = argmax_with_margin(&gains);
        let (pay_best, pay_margin) = argmax_with_margin(&payoffs);
        // The first-order gain is `ε·C·payoff + const`, so the payoff margin
        // rescaled by ε bounds how much approximation error is tolerable.
        let decision = eps * rule.scale * pay_margin;
        if gain_margin <= DECISION_FLOOR * eps || pay_margin <= DECISION_FLOOR || 2.0 * error >= decision {
            inconclusive += 1;
            continue;
        }
        worst = worst.min(pay_margin);
        if gain_best != pay_best && witness.is_none() {
            witness = Some(Witness {
                observation: o,
                deviation: gain_best,
                payoffs: gains,
                belief: belief.clone(),
                public: public.clone(),
                peer: peer.clone(),
            });
        }
    }
    let verdict = if witness.is_some() {
        Verdict::Refuted
    } else if inconclusive > 0 {
        Verdict::Inconclusive
    } else {
        Verdict::Holds
    };
    Ok(VerificationReport {
        claim: format!(
            "optimality.{}",
            match rule.kind {
                ScoringKind::Logarithmic => "log",
                ScoringKind::Quadratic => "quadratic",
            }
        ),
        verdict,
        sampled: false,
        witness,
        samples: n,
        excluded: inconclusive,
        seed: None,
        worst_margin: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::Offset;
    use crate::sampling::{SelfPredictingTypes, UnrestrictedTypes};
    use crate::worked::{pts_case_one, pts_case_two, self_dominating_example};

    fn pts() -> PaymentSpec {
        PaymentSpec::pts(1.0, Offset::Constant(0.0)).unwrap()
    }

    #[test]
    fn threshold_examples() {
        let b = pts_case_two();
        let d = b.self_prediction_gap(2);
        assert!((d / (2.0 + d) - 0.25).abs() < 1e-12);
        let th = truthfulness_threshold(&b).unwrap();
        assert!(th <= 0.25 + 1e-12);
        let dir = DirichletParams::new(vec![2.0, 2.0, 2.0]).unwrap().belief();
        assert!((truthfulness_threshold(&dir).unwrap() - 0.2).abs() < 1e-12);
        let flat = BeliefState::from_rows(&[0.5, 0.5], &[&[0.4, 0.6], &[0.4, 0.6]]).unwrap();
        assert!(truthfulness_threshold(&flat).is_err());
    }

    #[test]
    fn truthful_equilibrium_examples() {
        let r = Distribution::uniform(3).unwrap();
        assert!(verify_truthful_equilibrium(&pts(), &pts_case_two(), &r, 1e-9).holds());
        let rep = verify_truthful_equilibrium(&pts(), &pts_case_one(), &r, 1e-9);
        assert_eq!(rep.verdict, Verdict::Refuted);
        let w = rep.witness.unwrap();
        assert_eq!((w.observation, w.deviation), (2, 0));
        assert!(w.recheck(&pts(), 2));
        let oa = PaymentSpec::output_agreement(1.0).unwrap();
        assert!(verify_truthful_equilibrium(&oa, &self_dominating_example(), &r, 1e-9).holds());
    }

    #[test]
    fn expost_examples() {
        let prior = Distribution::new(vec![0.4, 0.35, 0.25]).unwrap();
        let rep = verify_expost_equilibrium(&pts(), &Strategy::Truthful, &prior, &SelfPredictingTypes, &prior, 300, 9).unwrap();
        assert!(rep.holds(), "{rep:?}");
        let public = Distribution::new(vec![0.5, 0.3, 0.2]).unwrap();
        let rep = verify_expost_equilibrium(&pts(), &Strategy::Singleton(2), &prior, &SelfPredictingTypes, &public, 100, 9).unwrap();
        assert!(rep.holds());
        let rep = verify_expost_equilibrium(&pts(), &Strategy::Truthful, &prior, &UnrestrictedTypes, &prior, 100, 9).unwrap();
        assert_eq!(rep.verdict, Verdict::Refuted);
        let w = rep.witness.unwrap();
        assert!(w.recheck(&pts(), w.observation));
    }

    #[test]
    fn confusion_pair_example() {
        let alpha = DirichletParams::new(vec![2.0, 3.0, 2.0]).unwrap();
        let (b1, b2) = dirichlet_confusion_pair(&alpha, 0, 1).unwrap();
        let expect = [3.0 / 8.0, 3.0 / 8.0, 2.0 / 8.0];
        for i in 0..3 {
            assert!((b1.posterior(0)[i] - expect[i]).abs() < 1e-12);
            assert!((b2.posterior(1)[i] - expect[i]).abs() < 1e-12);
        }
        let same = DirichletParams::new(vec![2.0, 2.0, 2.0]).unwrap();
        assert!(dirichlet_confusion_pair(&same, 0, 1).is_err());
    }

    #[test]
    fn center_gain_examples() {
        let r = Distribution::new(vec![0.5, 0.3, 0.2]).unwrap();
        let log = ScoringRule::logarithmic();
        let t = 99;
        let eps: f64 = 0.01;
        let (exact, first) = center_gain(&r, 1, 1, t, &log).unwrap();
        assert!((exact - (1.0 + eps * 0.7 / 0.3).ln()).abs() < 1e-12);
        assert!((first - eps * (1.0 / 0.3 - 1.0)).abs() < 1e-12);
        let (exact, first) = center_gain(&r, 0, 2, t, &log).unwrap();
        assert!((exact - (1.0 - eps).ln()).abs() < 1e-12);
        assert!((first + eps).abs() < 1e-12);
        assert!(center_gain(&r, 0, 0, 0, &log).is_err());
    }

    #[test]
    fn first_order_matches_gradient() {
        let r = Distribution::new(vec![0.45, 0.35, 0.2]).unwrap();
        for rule in [ScoringRule::logarithmic(), ScoringRule::quadratic()] {
            for report in 0..3 {
                for sample in 0..3 {
                    let eps = 1.0 / 1001.0;
                    let grad: f64 = (0..3)
                        .map(|i| rule.partial(&r, sample, i) * ((if i == report { 1.0 } else { 0.0 }) - r[i]))
                        .sum();
                    let (_, first) = center_gain(&r, report, sample, 1000, &rule).unwrap();
                    assert!((first - eps * grad).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn optimality_examples() {
        let r = Distribution::uniform(3).unwrap();
        let rep = verify_optimality(&r, &pts_case_two(), 10_000, &ScoringRule::logarithmic()).unwrap();
        assert!(rep.holds(), "{rep:?}");
        let rep = verify_optimality(&r, &pts_case_two(), 10_000, &ScoringRule::quadratic()).unwrap();
        assert!(pts_case_two().is_linear_self_predicting());
        assert!(rep.holds(), "{rep:?}");
    }

    #[test]
    fn optimality_first_case_prefers_a_misreport() {
        let r = Distribution::uniform(3).unwrap();
        let b = pts_case_one();
        let rule = ScoringRule::logarithmic();
        let gains: Vec<f64> = (0..3)
            .map(|rep| {
                (0..3)
                    .map(|x| b.posterior(2)[x] * center_gain(&r, rep, x, 10_000, &rule).unwrap().0)
                    .sum()
            })
            .collect();
        assert!(gains[0] > gains[2] && gains[1] > gains[2]);
        // x and y tie under PTS, so the observation is excluded rather than judged.
        let rep = verify_optimality(&r, &b, 10_000, &rule).unwrap();
        assert_eq!(rep.verdict, Verdict::Inconclusive);
        assert!(rep.excluded >= 1);
    }
}
