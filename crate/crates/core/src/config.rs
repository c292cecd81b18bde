//! Scenario documents: TOML text to and from [`SimConfig`].
//!
//! Top-level keys hold the scalar settings; `[histogram]` and `[payment]` are
//! tables and every `[[population]]` entry is one agent profile. Unknown keys
//! are rejected. Probabilities may be written as numbers or as `"a/b"`
//! strings.

use serde::{Deserialize, Serialize};

use crate::agents::{AgentProfile, BeliefModel, PriorModel, Strategy, UpdateType};
use crate::analysis::scenarios::SwitchingBeliefs;
use crate::error::{Error, Result};
use crate::mechanism::{MechanismKind, Offset, PaymentSpec, Scale};
use crate::prob::{AnswerSpace, BeliefState, DirichletParams, Distribution};
use crate::sim::{PopulationEntry, SimConfig};
use crate::text::parse_real;

pub const DEFAULT_AGENTS_PER_ROUND: i64 = 2;
pub const DEFAULT_ROUNDS: i64 = 1000;
pub const DEFAULT_RHO: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Real {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Real {
    fn value(&self, field: &str) -> Result<f64> {
        match self {
            Real::Float(v) => Ok(*v),
            Real::Int(v) => Ok(*v as f64),
            Real::Text(s) => parse_real(s).map_err(|m| Error::config(field, m)),
        }
    }
}

fn reals(values: &[Real], field: &str) -> Result<Vec<f64>> {
    values.iter().map(|v| v.value(field)).collect()
}

fn floats(values: &[f64]) -> Vec<Real> {
    values.iter().map(|v| Real::Float(*v)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum PriorDoc {
    Named(String),
    Values(Vec<Real>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HistogramDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    counts: Option<Vec<Real>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prior: Option<Vec<Real>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mass: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PaymentDoc {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    offset: Option<Real>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    count: Option<i64>,
    strategy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beliefs: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prior: Option<PriorDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prior_weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    update: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    update_weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<Vec<Real>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    table: Option<Vec<Vec<Real>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    answers: Vec<String>,
    truth: Vec<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    agents_per_round: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rounds: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    histogram: Option<HistogramDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    payment: Option<PaymentDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    population: Vec<ProfileDoc>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses and validates a scenario document.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    let doc: ScenarioDoc = toml::from_str(text).map_err(|e| Error::Parse {
        line: e.span().map_or(0, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    let config = build(doc)?;
    config.validate()?;
    Ok(config)
}

fn build(doc: ScenarioDoc) -> Result<SimConfig> {
    let space = AnswerSpace::new(doc.answers.clone()).map_err(|e| Error::config("answers", e.to_string()))?;
    let n = space.len();
    let distribution = |values: &[Real], field: &str| -> Result<Distribution> {
        let v = reals(values, field)?;
        if v.len() != n {
            return Err(Error::config(field, format!("expected {n} values, found {}", v.len())));
        }
        Distribution::new(v).map_err(|e| Error::config(field, e.to_string()))
    };
    let truth = distribution(&doc.truth, "truth")?;

    let m = doc.agents_per_round.unwrap_or(DEFAULT_AGENTS_PER_ROUND);
    if m < 2 {
        return Err(Error::config("agents_per_round", format!("M > 1 agents are needed, got {m}")));
    }
    let rounds = doc.rounds.unwrap_or(DEFAULT_ROUNDS);
    if rounds < 1 {
        return Err(Error::config("rounds", format!("at least one round is required, got {rounds}")));
    }
    let rho = doc.rho.unwrap_or(DEFAULT_RHO);

    let histogram_init = match &doc.histogram {
        None => vec![1.0; n],
        Some(h) => match (&h.counts, &h.prior) {
            (Some(counts), None) => {
                if h.mass.is_some() {
                    return Err(Error::config("histogram.mass", "only valid together with histogram.prior"));
                }
                let counts = reals(counts, "histogram.counts")?;
                if counts.len() != n {
                    return Err(Error::config("histogram.counts", format!("expected {n} counts, found {}", counts.len())));
                }
                if let Some(c) = counts.iter().find(|c| **c <= 0.0) {
                    return Err(Error::config("histogram.counts", format!("counts must be strictly positive, got {c}")));
                }
                counts
            }
            (None, Some(prior)) => {
                let prior = distribution(prior, "histogram.prior")?;
                let mass = h.mass.unwrap_or(n as f64);
                if !(mass > 0.0) {
                    return Err(Error::config("histogram.mass", "must be positive"));
                }
                prior.iter().map(|p| p * mass).collect()
            }
            _ => return Err(Error::config("histogram", "give exactly one of `counts` or `prior`")),
        },
    };

    let payment = match &doc.payment {
        None => PaymentSpec::pts(1.0, Offset::Constant(0.0))?,
        Some(p) => build_payment(p)?,
    };

    let population = if doc.population.is_empty() {
        vec![default_profile()]
    } else {
        doc.population
            .iter()
            .enumerate()
            .map(|(i, p)| build_profile(p, i, &space, rho))
            .collect::<Result<Vec<_>>>()?
    };

    Ok(SimConfig {
        space,
        truth,
        agents_per_round: m as usize,
        rounds: rounds as usize,
        histogram_init,
        payment,
        population,
        seed: doc.seed.unwrap_or(0),
        rho,
    })
}

fn default_profile() -> PopulationEntry {
    PopulationEntry::new(
        "truthful",
        1,
        AgentProfile::new(
            Strategy::Truthful,
            BeliefModel::Standard { prior: PriorModel::Public, update: UpdateType::ConvexMix { weight: 0.5 } },
        ),
    )
}

fn build_payment(doc: &PaymentDoc) -> Result<PaymentSpec> {
    let kind = MechanismKind::from_name(&doc.kind).ok_or_else(|| {
        Error::config("payment.kind", format!("unknown mechanism `{}` (output_agreement, pts, pts_quadratic)", doc.kind))
    })?;
    let scale = match (&doc.c, doc.alpha) {
        (Some(c), None) => Scale::Constant(c.value("payment.c")?),
        (None, Some(alpha)) => Scale::MinPublic { alpha },
        (None, None) => Scale::Constant(1.0),
        (Some(_), Some(_)) => return Err(Error::config("payment", "give at most one of `c` or `alpha`")),
    };
    let offset = match &doc.offset {
        None => Offset::Constant(0.0),
        Some(Real::Text(s)) if s == "minus_c" => Offset::MinusScale,
        Some(v) => Offset::Constant(v.value("payment.offset")?),
    };
    PaymentSpec::new(kind, scale, offset).map_err(|e| Error::config("payment", e.to_string()))
}

fn build_profile(doc: &ProfileDoc, index: usize, space: &AnswerSpace, default_rho: f64) -> Result<PopulationEntry> {
    let n = space.len();
    let name = doc.name.clone().unwrap_or_else(|| format!("profile{}", index + 1));
    let field = |key: &str| format!("population.{name}.{key}");
    let count = doc.count.unwrap_or(1);
    if count < 0 || count > u32::MAX as i64 {
        return Err(Error::config(field("count"), format!("must be a nonnegative integer, got {count}")));
    }
    let strategy = match doc.strategy.as_str() {
        "truthful" => Strategy::Truthful,
        "singleton" => {
            let label = doc.value.as_deref().ok_or_else(|| Error::config(field("value"), "singleton needs a value"))?;
            let x = space
                .index_of(label)
                .ok_or_else(|| Error::config(field("value"), format!("`{label}` is not an answer")))?;
            Strategy::Singleton(x)
        }
        "helpful" => Strategy::Helpful { rho: doc.rho.unwrap_or(default_rho) },
        "best_response" => Strategy::BestResponse,
        other => {
            return Err(Error::config(
                field("strategy"),
                format!("unknown strategy `{other}` (truthful, singleton, helpful, best_response)"),
            ))
        }
    };
    if doc.value.is_some() && !matches!(strategy, Strategy::Singleton(_)) {
        return Err(Error::config(field("value"), "only singleton profiles take a value"));
    }

    let beliefs = match doc.beliefs.as_deref().unwrap_or("standard") {
        "switching" => {
            if n != 3 {
                return Err(Error::config(field("beliefs"), "switching beliefs need three answers"));
            }
            BeliefModel::Switching(SwitchingBeliefs {
                threshold: doc.threshold.ok_or_else(|| Error::config(field("threshold"), "required"))?,
                epsilon: doc.epsilon.ok_or_else(|| Error::config(field("epsilon"), "required"))?,
                delta: doc.delta.ok_or_else(|| Error::config(field("delta"), "required"))?,
            })
        }
        "standard" => {
            let update = match doc.update.as_deref().unwrap_or("convex_mix") {
                "convex_mix" => UpdateType::convex_mix(doc.update_weight.unwrap_or(0.5))
                    .map_err(|e| Error::config(field("update_weight"), e.to_string()))?,
                "dirichlet" => {
                    let alpha = doc.alpha.as_ref().ok_or_else(|| Error::config(field("alpha"), "required"))?;
                    let alpha = reals(alpha, &field("alpha"))?;
                    if alpha.len() != n {
                        return Err(Error::config(field("alpha"), format!("expected {n} values")));
                    }
                    UpdateType::Dirichlet(DirichletParams::new(alpha).map_err(|e| Error::config(field("alpha"), e.to_string()))?)
                }
                "table" => {
                    let rows = doc.table.as_ref().ok_or_else(|| Error::config(field("table"), "required"))?;
                    let rows = rows.iter().map(|r| reals(r, &field("table"))).collect::<Result<Vec<_>>>()?;
                    if rows.len() != n + 1 || rows.iter().any(|r| r.len() != n) {
                        return Err(Error::config(field("table"), format!("expected {} rows of {n} values (prior first)", n + 1)));
                    }
                    let posteriors: Vec<&[f64]> = rows[1..].iter().map(Vec::as_slice).collect();
                    UpdateType::Table(
                        BeliefState::from_rows(&rows[0], &posteriors).map_err(|e| Error::config(field("table"), e.to_string()))?,
                    )
                }
                other => {
                    return Err(Error::config(field("update"), format!("unknown update `{other}` (convex_mix, dirichlet, table)")))
                }
            };
            let prior = match &doc.prior {
                None => match update.own_prior() {
                    Some(p) => PriorModel::Fixed(p),
                    None => PriorModel::Public,
                },
                Some(PriorDoc::Named(s)) if s == "public" => PriorModel::Public,
                Some(PriorDoc::Named(s)) if s == "informed" => {
                    PriorModel::InformedMix { weight: doc.prior_weight.unwrap_or(0.5) }
                }
                Some(PriorDoc::Named(s)) => {
                    return Err(Error::config(field("prior"), format!("unknown prior `{s}` (public, informed, or a list)")))
                }
                Some(PriorDoc::Values(v)) => {
                    let v = reals(v, &field("prior"))?;
                    if v.len() != n {
                        return Err(Error::config(field("prior"), format!("expected {n} values")));
                    }
                    PriorModel::Fixed(Distribution::new(v).map_err(|e| Error::config(field("prior"), e.to_string()))?)
                }
            };
            BeliefModel::Standard { prior, update }
        }
        other => return Err(Error::config(field("beliefs"), format!("unknown belief model `{other}` (standard, switching)"))),
    };
    Ok(PopulationEntry::new(name, count as u32, AgentProfile::new(strategy, beliefs)))
}

/// Writes `config` as a scenario document that parses back to an equal config.
pub fn emit_config(config: &SimConfig) -> Result<String> {
    let space = &config.space;
    let payment = &config.payment;
    let (c, alpha) = match payment.scale {
        Scale::Constant(c) => (Some(Real::Float(c)), None),
        Scale::MinPublic { alpha } => (None, Some(alpha)),
    };
    let offset = match payment.offset {
        Offset::Constant(b) => Real::Float(b),
        Offset::MinusScale => Real::Text("minus_c".into()),
    };
    let population = config
        .population
        .iter()
        .map(|entry| {
            let profile = &entry.profile;
            let mut doc = ProfileDoc {
                name: Some(entry.name.clone()),
                count: Some(entry.count as i64),
                strategy: profile.strategy.name().to_string(),
                ..ProfileDoc::default()
            };
            match profile.strategy {
                Strategy::Singleton(x) => doc.value = Some(space.label(x).to_string()),
                Strategy::Helpful { rho } => doc.rho = Some(rho),
                _ => {}
            }
            match &profile.beliefs {
                BeliefModel::Switching(s) => {
                    doc.beliefs = Some("switching".into());
                    doc.threshold = Some(s.threshold);
                    doc.epsilon = Some(s.epsilon);
                    doc.delta = Some(s.delta);
                }
                BeliefModel::Standard { prior, update } => {
                    doc.prior = Some(match prior {
                        PriorModel::Public => PriorDoc::Named("public".into()),
                        PriorModel::InformedMix { weight } => {
                            doc.prior_weight = Some(*weight);
                            PriorDoc::Named("informed".into())
                        }
                        PriorModel::Fixed(p) => PriorDoc::Values(floats(p.probs())),
                    });
                    match update {
                        UpdateType::ConvexMix { weight } => {
                            doc.update = Some("convex_mix".into());
                            doc.update_weight = Some(*weight);
                        }
                        UpdateType::Dirichlet(params) => {
                            doc.update = Some("dirichlet".into());
                            doc.alpha = Some(floats(params.alpha()));
                        }
                        UpdateType::Table(b) => {
                            doc.update = Some("table".into());
                            let mut rows = vec![floats(b.prior().probs())];
                            rows.extend(b.posteriors().iter().map(|r| floats(r.probs())));
                            doc.table = Some(rows);
                        }
                    }
                }
            }
            doc
        })
        .collect();
    let doc = ScenarioDoc {
        answers: space.labels().to_vec(),
        truth: floats(config.truth.probs()),
        agents_per_round: Some(config.agents_per_round as i64),
        rounds: Some(config.rounds as i64),
        seed: Some(config.seed),
        rho: Some(config.rho),
        histogram: Some(HistogramDoc { counts: Some(floats(&config.histogram_init)), prior: None, mass: None }),
        payment: Some(PaymentDoc { kind: payment.kind.name().into(), c, alpha, offset: Some(offset) }),
        population,
    };
    toml::to_string(&doc).map_err(|e| Error::config("document", e.to_string()))
}

/// A small three-answer scenario: a helpful and a truthful profile under PTS.
pub fn default_config() -> SimConfig {
    let beliefs = BeliefModel::Standard {
        prior: PriorModel::InformedMix { weight: 0.5 },
        update: UpdateType::ConvexMix { weight: 0.3 },
    };
    SimConfig {
        space: AnswerSpace::new(["x", "y", "z"]).expect("valid labels"),
        truth: Distribution::new(vec![0.5, 0.3, 0.2]).expect("valid"),
        agents_per_round: 2,
        rounds: DEFAULT_ROUNDS as usize,
        histogram_init: vec![1.0; 3],
        payment: PaymentSpec::pts(1.0, Offset::Constant(0.0)).expect("positive scale"),
        population: vec![
            PopulationEntry::new("helpful", 3, AgentProfile::new(Strategy::Helpful { rho: DEFAULT_RHO }, beliefs.clone())),
            PopulationEntry::new("truthful", 1, AgentProfile::new(Strategy::Truthful, beliefs)),
        ],
        seed: 7,
        rho: DEFAULT_RHO,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = parse_config("answers = [\"a\", \"b\"]\ntruth = [\"1/4\", 0.75]\n").unwrap();
        assert_eq!(c.agents_per_round, 2);
        assert_eq!(c.histogram_init, vec![1.0, 1.0]);
        assert_eq!(c.truth.probs(), &[0.25, 0.75]);
        assert_eq!(c.population.len(), 1);
    }

    #[test]
    fn semantic_errors_name_the_field() {
        let base = "answers = [\"a\", \"b\"]\ntruth = [0.5, 0.5]\n";
        match parse_config(&format!("{base}agents_per_round = 1\n")) {
            Err(Error::Config { field, message }) => {
                assert_eq!(field, "agents_per_round");
                assert!(message.contains("M > 1"));
            }
            other => panic!("unexpected {other:?}"),
        }
        match parse_config(&format!("{base}[histogram]\ncounts = [1, -2]\n")) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "histogram.counts"),
            other => panic!("unexpected {other:?}"),
        }
        match parse_config(&format!("{base}[[population]]\nstrategy = \"singleton\"\nvalue = \"c\"\n")) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "population.profile1.value"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_and_unknown_keys_report_lines() {
        match parse_config("answers = [\"a\", \"b\"]\ntruth = [0.5, 0.5]\nbogus = 3\n") {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("bogus"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        match parse_config("answers = [\"a\", \"b\"]\ntruth = [0.5, \n") {
            Err(Error::Parse { line, .. }) => assert!(line >= 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn emit_and_parse_round_trip() {
        let config = default_config();
        let text = emit_config(&config).unwrap();
        assert_eq!(parse_config(&text).unwrap(), config);
    }
}
