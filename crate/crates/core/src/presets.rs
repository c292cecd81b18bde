//! Named experiments reproducing the worked examples and the counterexample
//! constructions. Each preset produces its output files and a list of
//! expectations; a preset passes when every expectation does.

use rand::Rng;

use crate::agents::{best_response, expected_payoff, ReportMap, Strategy};
use crate::analysis::scenarios::{
    no_general_prior_belief, no_general_prior_reference, scenario_binary_informed, scenario_common_prior,
    scenario_convergence, scenario_no_general_prior,
};
use crate::analysis::{verify_optimality, verify_truthful_equilibrium, Verdict, VerificationReport};
use crate::error::{Error, Result};
use crate::mechanism::{Offset, Payment, PaymentSpec, ScoringRule};
use crate::prob::{AnswerSpace, BeliefState, Distribution};
use crate::sampling::{random_distribution, random_linear_self_predicting_table, random_self_predicting_table};
use crate::sim::{run_simulation, seeded_rng, SimTrace};
use crate::text::format_g12;
use crate::worked::{pts_case_one, pts_case_two, pts_example_truth, self_dominating_example, xyz};

pub const PRESET_NAMES: [&str; 8] = [
    "output-agreement-example",
    "pts-example-1",
    "pts-example-2",
    "helpful-convergence",
    "no-general-prior",
    "common-prior",
    "optimality-check",
    "binary-informed",
];

/// Grid of rounds on which convergence is checked to be monotone.
pub const CONVERGENCE_GRID: [usize; 5] = [5, 50, 500, 5_000, 50_000];

/// Tolerance for the worked-example payoffs.
pub const EXAMPLE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Expectation {
    pub name: String,
    /// Where the expected behaviour comes from, in words.
    pub anchor: String,
    pub passed: bool,
    pub detail: String,
}

impl Expectation {
    fn new(name: &str, anchor: &str, passed: bool, detail: String) -> Self {
        Self { name: name.into(), anchor: anchor.into(), passed, detail }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PresetOutcome {
    pub name: String,
    pub seed: u64,
    /// `(file name, contents)` pairs.
    pub files: Vec<(String, String)>,
    pub expectations: Vec<Expectation>,
}

impl PresetOutcome {
    pub fn passed(&self) -> bool {
        self.expectations.iter().all(|e| e.passed)
    }

    pub fn failures(&self) -> Vec<&Expectation> {
        self.expectations.iter().filter(|e| !e.passed).collect()
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn expectations_text(&self) -> String {
        let mut out = format!("preset = {}\nseed = {}\n", self.name, self.seed);
        for e in &self.expectations {
            out.push_str(&format!("expectation.{}.status = {}\n", e.name, if e.passed { "pass" } else { "fail" }));
            out.push_str(&format!("expectation.{}.anchor = {}\n", e.name, e.anchor));
            out.push_str(&format!("expectation.{}.detail = {}\n", e.name, e.detail));
        }
        out
    }
}

pub fn default_seed(name: &str) -> Result<u64> {
    PRESET_NAMES
        .iter()
        .position(|p| *p == name)
        .map(|i| i as u64 + 1)
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))
}

/// Runs a preset; `seed` overrides its default seed.
pub fn run_preset(name: &str, seed: Option<u64>) -> Result<PresetOutcome> {
    let seed = match seed {
        Some(s) => s,
        None => default_seed(name)?,
    };
    let (files, expectations) = match name {
        "output-agreement-example" => output_agreement_example()?,
        "pts-example-1" => pts_example_one()?,
        "pts-example-2" => pts_example_two()?,
        "helpful-convergence" => helpful_convergence(seed)?,
        "no-general-prior" => no_general_prior(seed)?,
        "common-prior" => common_prior(seed)?,
        "optimality-check" => optimality_check(seed)?,
        "binary-informed" => binary_informed(seed)?,
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    let mut files: Vec<(String, String)> = files.into_iter().map(|(n, c)| (format!("{name}.{n}"), c)).collect();
    let mut outcome = PresetOutcome { name: name.to_string(), seed, files: Vec::new(), expectations };
    files.push((format!("{name}.expectations.txt"), outcome.expectations_text()));
    outcome.files = files;
    Ok(outcome)
}

type Parts = (Vec<(String, String)>, Vec<Expectation>);

fn pts_unit() -> PaymentSpec {
    PaymentSpec::pts(1.0, Offset::Constant(0.0)).expect("positive scale")
}

/// Payoff of every report at every observation against a truthful peer.
fn payoff_matrix<P: Payment + ?Sized>(belief: &BeliefState, pay: &P, public: &Distribution) -> Vec<Vec<f64>> {
    let n = belief.len();
    let peer = ReportMap::truthful(n);
    (0..n)
        .map(|o| (0..n).map(|r| expected_payoff(r, belief.posterior(o), pay, public, &peer)).collect())
        .collect()
}

fn payoff_csv(space: &AnswerSpace, rows: &[Vec<f64>]) -> String {
    let mut out = format!("observation,{}\n", space.labels().join(","));
    for (o, row) in rows.iter().enumerate() {
        out.push_str(space.label(o));
        for v in row {
            out.push(',');
            out.push_str(&format_g12(*v));
        }
        out.push('\n');
    }
    out
}

fn payoff_expectation(name: &str, anchor: &str, got: f64, want: f64) -> Expectation {
    Expectation::new(
        name,
        anchor,
        (got - want).abs() <= EXAMPLE_TOLERANCE,
        format!("expected {} got {}", format_g12(want), format_g12(got)),
    )
}

fn example_files(space: &AnswerSpace, rows: &[Vec<f64>], report: &VerificationReport) -> Vec<(String, String)> {
    vec![("payoffs.csv".into(), payoff_csv(space, rows)), ("report.txt".into(), report.to_text(space))]
}

fn output_agreement_example() -> Result<Parts> {
    let belief = self_dominating_example();
    let public = Distribution::uniform(3)?;
    let pay = PaymentSpec::output_agreement(1.0)?;
    let rows = payoff_matrix(&belief, &pay, &public);
    let report = verify_truthful_equilibrium(&pay, &belief, &public, 1e-9);
    let anchor = "output agreement worked example, self-dominating belief table";
    let expectations = vec![
        payoff_expectation("report_x_after_x", anchor, rows[0][0], 0.7),
        // The table's Pr[y|x] is 0.2; output agreement pays exactly that.
        payoff_expectation("report_y_after_x", anchor, rows[0][1], belief.posterior(0)[1]),
        Expectation::new(
            "truthful_best_response",
            anchor,
            report.holds() && belief.is_self_dominating(),
            format!("verdict {}", report.verdict.name()),
        ),
    ];
    Ok((example_files(&xyz(), &rows, &report), expectations))
}

fn pts_example_one() -> Result<Parts> {
    let belief = pts_case_one();
    let public = Distribution::uniform(3)?;
    let pay = pts_unit();
    let rows = payoff_matrix(&belief, &pay, &public);
    let report = verify_truthful_equilibrium(&pay, &belief, &public, 1e-9);
    let br = best_response(belief.posterior(2), &pay, &public, &ReportMap::truthful(3));
    let anchor = "first PTS worked example, prior (0.5, 0.4, 0.1) far from R";
    let witness_ok = report
        .witness
        .as_ref()
        .is_some_and(|w| w.observation == 2 && w.deviation == 0 && w.recheck(&pay, 2));
    let informed = public.informs(belief.prior(), &pts_example_truth())?;
    let expectations = vec![
        payoff_expectation("report_z_after_z", anchor, rows[2][2], 0.6),
        payoff_expectation("report_x_after_z", anchor, rows[2][0], 1.2),
        payoff_expectation("report_y_after_z", anchor, rows[2][1], 1.2),
        Expectation::new("best_response_after_z_is_x", anchor, br.report == 0, format!("best response {}", br.report)),
        Expectation::new(
            "truthfulness_refuted_with_witness",
            anchor,
            report.verdict == Verdict::Refuted && witness_ok,
            format!("verdict {}", report.verdict.name()),
        ),
        Expectation::new("prior_is_informed", anchor, informed, format!("informed = {informed}")),
    ];
    Ok((example_files(&xyz(), &rows, &report), expectations))
}

fn pts_example_two() -> Result<Parts> {
    let belief = pts_case_two();
    let public = Distribution::uniform(3)?;
    let pay = pts_unit();
    let rows = payoff_matrix(&belief, &pay, &public);
    let report = verify_truthful_equilibrium(&pay, &belief, &public, 1e-9);
    let anchor = "second PTS worked example, prior equal to R";
    let expectations = vec![
        payoff_expectation("report_z_after_z", anchor, rows[2][2], 1.5),
        payoff_expectation("report_y_after_z", anchor, rows[2][1], 0.9),
        Expectation::new("truthful_equilibrium", anchor, report.holds(), format!("verdict {}", report.verdict.name())),
    ];
    Ok((example_files(&xyz(), &rows, &report), expectations))
}

/// Whether `l1` strictly decreases along [`CONVERGENCE_GRID`].
pub fn decreasing_on_grid(trace: &SimTrace) -> bool {
    let values: Vec<f64> = CONVERGENCE_GRID.iter().filter_map(|t| trace.l1_at(*t)).collect();
    values.len() == CONVERGENCE_GRID.len() && values.windows(2).all(|w| w[1] < w[0])
}

fn trace_files(prefix: &str, trace: &SimTrace) -> Vec<(String, String)> {
    vec![
        (format!("{prefix}trace.csv"), trace.to_csv()),
        (format!("{prefix}summary.txt"), trace.summary_text()),
    ]
}

fn helpful_convergence(seed: u64) -> Result<Parts> {
    let helpful = run_simulation(&scenario_convergence(Strategy::Helpful { rho: 0.1 }, seed))?;
    let truthful = run_simulation(&scenario_convergence(Strategy::Truthful, seed))?;
    let anchor = "convergence of helpful reporting under informed common priors";
    let grid: Vec<String> = CONVERGENCE_GRID
        .iter()
        .map(|t| format_g12(helpful.l1_at(*t).unwrap_or(f64::NAN)))
        .collect();
    let expectations = vec![
        Expectation::new(
            "helpful_final_l1_below_0.05",
            anchor,
            helpful.summary.final_l1 < 0.05,
            format!("final l1 {}", format_g12(helpful.summary.final_l1)),
        ),
        Expectation::new(
            "helpful_l1_decreasing_on_grid",
            anchor,
            decreasing_on_grid(&helpful),
            format!("l1 on grid {}", grid.join(" ")),
        ),
        Expectation::new(
            "truthful_final_l1_below_0.03",
            "any truthful mechanism is asymptotically accurate",
            truthful.summary.final_l1 < 0.03,
            format!("final l1 {}", format_g12(truthful.summary.final_l1)),
        ),
    ];
    let mut files = trace_files("helpful.", &helpful);
    files.extend(trace_files("truthful.", &truthful));
    Ok((files, expectations))
}

/// Reports averaged over the tail window of the impossibility scenarios.
pub const TAIL_REPORTS: usize = 10_000;

fn no_general_prior(seed: u64) -> Result<Parts> {
    let (eps, delta) = (0.1, 1e-3);
    let config = scenario_no_general_prior(eps, delta)?.with_seed(seed);
    let reference = no_general_prior_reference();
    let belief = no_general_prior_belief(&reference, eps, delta)?;
    let br = best_response(belief.posterior(1), &pts_unit(), &reference, &ReportMap::truthful(3));
    let trace = run_simulation(&config)?;
    let tail = trace.tail_frequencies(TAIL_REPORTS);
    let anchor = "no-general-prior construction: fixed uninformed prior, Q equal to the starting R";
    let expectations = vec![
        Expectation::new(
            "y_observer_reports_z",
            anchor,
            br.report == 2,
            format!("payoffs {}", br.payoffs.iter().map(|v| format_g12(*v)).collect::<Vec<_>>().join(" ")),
        ),
        Expectation::new(
            "y_frequency_differs_from_reference",
            anchor,
            (tail[1] - reference[1]).abs() > 0.05,
            format!("tail freq(y) {} vs R[y] {}", format_g12(tail[1]), format_g12(reference[1])),
        ),
    ];
    Ok((trace_files("", &trace), expectations))
}

fn common_prior(seed: u64) -> Result<Parts> {
    let trace = run_simulation(&scenario_common_prior().with_seed(seed))?;
    let freq = &trace.summary.report_frequencies;
    let anchor = "different-priors construction starting from R = (0.7, 0.2, 0.1)";
    let expectations = vec![
        Expectation::new(
            "z_frequency_below_0.27",
            anchor,
            freq[2] < 0.27,
            format!("freq(z) {}", format_g12(freq[2])),
        ),
        Expectation::new(
            "x_frequency_above_0.52",
            anchor,
            freq[0] > 0.52,
            format!("freq(x) {}", format_g12(freq[0])),
        ),
    ];
    Ok((trace_files("", &trace), expectations))
}

/// Pairs checked by the optimality preset.
pub const OPTIMALITY_PAIRS: usize = 100;
pub const OPTIMALITY_ROUND: usize = 10_000;

/// Tally of optimality verdicts over random `(R, belief)` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OptimalityTally {
    pub observations: usize,
    pub agreed: usize,
    pub disagreed: usize,
    pub excluded: usize,
}

/// Random `(R, belief)` pairs with `N ∈ {2..5}`; quadratic-rule beliefs are
/// drawn linear self-predicting.
pub fn optimality_sweep(rule: &ScoringRule, pairs: usize, seed: u64) -> Result<(OptimalityTally, Vec<VerificationReport>)> {
    let mut rng = seeded_rng(seed);
    let mut tally = OptimalityTally::default();
    let mut refuted = Vec::new();
    for _ in 0..pairs {
        let n = rng.gen_range(2..=5);
        let public = random_distribution(n, &mut rng);
        let prior = random_distribution(n, &mut rng);
        let belief = match rule.kind {
            crate::mechanism::ScoringKind::Logarithmic => random_self_predicting_table(&prior, &mut rng)?,
            crate::mechanism::ScoringKind::Quadratic => random_linear_self_predicting_table(&prior, &mut rng)?,
        };
        let report = verify_optimality(&public, &belief, OPTIMALITY_ROUND, rule)?;
        tally.observations += n;
        tally.excluded += report.excluded;
        if report.verdict == Verdict::Refuted {
            tally.disagreed += 1;
            tally.agreed += n - report.excluded - 1;
            refuted.push(report);
        } else {
            tally.agreed += n - report.excluded;
        }
    }
    Ok((tally, refuted))
}

fn optimality_check(seed: u64) -> Result<Parts> {
    let mut files = Vec::new();
    let mut expectations = Vec::new();
    for (label, rule) in [("log", ScoringRule::logarithmic()), ("quadratic", ScoringRule::quadratic())] {
        let (tally, refuted) = optimality_sweep(&rule, OPTIMALITY_PAIRS, seed)?;
        let excluded_share = tally.excluded as f64 / tally.observations as f64;
        let anchor = "optimality of PTS (log rule) and of its quadratic variant";
        expectations.push(Expectation::new(
            &format!("{label}_argmax_agreement"),
            anchor,
            tally.disagreed == 0,
            format!("agreed {} disagreed {}", tally.agreed, tally.disagreed),
        ));
        expectations.push(Expectation::new(
            &format!("{label}_exclusions_below_5pct"),
            anchor,
            excluded_share < 0.05,
            format!("excluded {} of {}", tally.excluded, tally.observations),
        ));
        let mut text = format!(
            "rule = {label}\nseed = {seed}\npairs = {OPTIMALITY_PAIRS}\nt = {OPTIMALITY_ROUND}\nobservations = {}\nagreed = {}\ndisagreed = {}\nexcluded = {}\n",
            tally.observations, tally.agreed, tally.disagreed, tally.excluded
        );
        for r in &refuted {
            let space = AnswerSpace::indexed(r.witness.as_ref().map_or(2, |w| w.belief.len()))?;
            text.push_str(&r.to_text(&space));
        }
        files.push((format!("{label}.report.txt"), text));
    }
    Ok((files, expectations))
}

fn binary_informed(seed: u64) -> Result<Parts> {
    let config = scenario_binary_informed(seed);
    let trace = run_simulation(&config)?;
    let truth = &config.truth;
    // Count x-observers who reported y while x was under-reported.
    let mut public = Distribution::normalize(&config.histogram_init)?;
    let mut violations = 0;
    let mut under_rounds = 0;
    for rec in &trace.records {
        if public[0] < truth[0] {
            under_rounds += 1;
            violations += rec.observations.iter().zip(&rec.reports).filter(|(o, r)| **o == 0 && **r == 1).count();
        }
        public = rec.published.clone();
    }
    let anchor = "binary answers with informed private priors and indicative observations";
    let expectations = vec![
        Expectation::new(
            "under_reported_value_never_abandoned",
            anchor,
            violations == 0 && under_rounds > 0,
            format!("violations {violations} over {under_rounds} under-reported rounds"),
        ),
        Expectation::new(
            "final_l1_below_0.05",
            anchor,
            trace.summary.final_l1 < 0.05,
            format!("final l1 {}", format_g12(trace.summary.final_l1)),
        ),
    ];
    Ok((trace_files("", &trace), expectations))
}
