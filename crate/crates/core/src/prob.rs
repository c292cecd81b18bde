//! Finite distributions, belief states and the belief-structure predicates.
//!
//! Answers are addressed by their index in an [`AnswerSpace`]. Every
//! [`Distribution`] is fully mixed: entries are clamped to at least
//! [`FLOOR`] and renormalized so that `1 / p` stays finite.

use std::collections::HashSet;
use std::ops::Index;

use crate::error::{Error, Result};
use crate::text;

/// Smallest probability a [`Distribution`] may hold.
pub const FLOOR: f64 = 1e-9;

/// Margin used for every strict inequality: `a > b` means `a - b > STRICT_MARGIN`.
pub const STRICT_MARGIN: f64 = 1e-12;

/// Slack allowed on the unit sum of a [`Distribution`].
pub const SUM_TOLERANCE: f64 = 1e-12;

// Explicit probability vectors may be off by this much before normalization.
const INPUT_SUM_TOLERANCE: f64 = 1e-6;

/// Strict comparison with the library-wide numeric margin.
pub fn strictly_greater(a: f64, b: f64) -> bool {
    a - b > STRICT_MARGIN
}

/// An ordered, finite set of answer labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerSpace {
    labels: Vec<String>,
}

impl AnswerSpace {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 {
            return Err(Error::domain("an answer space needs at least two values"));
        }
        let mut seen = HashSet::new();
        for label in &labels {
            if label.trim().is_empty() || label.contains(|c: char| c == ',' || c.is_whitespace()) {
                return Err(Error::domain(format!("invalid answer label `{label}`")));
            }
            if !seen.insert(label.as_str()) {
                return Err(Error::domain(format!("duplicate answer label `{label}`")));
            }
        }
        Ok(Self { labels })
    }

    /// `x1, x2, ..., xN`.
    pub fn indexed(n: usize) -> Result<Self> {
        Self::new((1..=n).map(|i| format!("x{i}")))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, idx: usize) -> &str {
        &self.labels[idx]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// A fully mixed probability vector over an answer space.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Normalizes a nonnegative count vector, clamping entries below [`FLOOR`].
    pub fn normalize(counts: &[f64]) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::domain("a distribution needs at least two values"));
        }
        if counts.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::domain("counts must be finite and nonnegative"));
        }
        let total: f64 = counts.iter().sum();
        if total <= 0.0 {
            return Err(Error::domain("cannot normalize an all-zero vector"));
        }
        let mut probs: Vec<f64> = counts.iter().map(|c| c / total).collect();
        clamp_to_floor(&mut probs);
        Ok(Self { probs })
    }

    /// Builds a distribution from probabilities that already sum to one
    /// (within `1e-6`); zero entries are clamped. Input that is fully mixed and
    /// sums to one within [`SUM_TOLERANCE`] is kept bit for bit.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > INPUT_SUM_TOLERANCE {
            return Err(Error::domain(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        let mixed = probs.iter().all(|p| *p >= FLOOR);
        if probs.len() >= 2 && mixed && (total - 1.0).abs() <= SUM_TOLERANCE {
            return Ok(Self { probs });
        }
        Self::normalize(&probs)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::normalize(&vec![1.0; n])
    }

    /// A point mass at `at`, clamped to be fully mixed.
    pub fn point_mass(n: usize, at: usize) -> Result<Self> {
        if at >= n {
            return Err(Error::domain(format!("value {at} outside 0..{n}")));
        }
        let mut counts = vec![0.0; n];
        counts[at] = 1.0;
        Self::normalize(&counts)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.probs.iter().copied()
    }

    pub fn min(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn check_same_space(&self, other: &Distribution) -> Result<()> {
        if self.len() == other.len() {
            Ok(())
        } else {
            Err(Error::SpaceMismatch(self.len(), other.len()))
        }
    }

    /// `Σ_x |self[x] − other[x]|`.
    pub fn l1_distance(&self, other: &Distribution) -> Result<f64> {
        self.check_same_space(other)?;
        Ok(self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum())
    }

    /// Whether `self` is ρ-close to `reference`: every entry lies in
    /// `[(1−ρ)·reference[x], (1+ρ)·reference[x]]`.
    pub fn is_rho_close(&self, reference: &Distribution, rho: f64) -> Result<bool> {
        check_rho(rho)?;
        self.check_same_space(reference)?;
        Ok(self.probs.iter().zip(&reference.probs).all(|(r, p)| {
            *r >= (1.0 - rho) * p - STRICT_MARGIN && *r <= (1.0 + rho) * p + STRICT_MARGIN
        }))
    }

    /// Whether `prior` is informed about `truth` relative to `self` (the public
    /// distribution): `(R[x] − Q[x])(R[x] − Pr[x]) ≥ 0` for every `x`.
    pub fn informs(&self, prior: &Distribution, truth: &Distribution) -> Result<bool> {
        self.check_same_space(prior)?;
        self.check_same_space(truth)?;
        Ok((0..self.len()).all(|x| {
            let r = self.probs[x];
            (r - truth.probs[x]) * (r - prior.probs[x]) >= -1e-15
        }))
    }
}

impl Index<usize> for Distribution {
    type Output = f64;

    fn index(&self, idx: usize) -> &f64 {
        &self.probs[idx]
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if (0.0..1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::domain(format!("rho must lie in [0, 1), got {rho}")))
    }
}

// Water-filling clamp: entries under FLOOR are pinned to FLOOR and the rest
// rescaled to the remaining mass, repeated until nothing new drops below.
fn clamp_to_floor(probs: &mut [f64]) {
    let mut pinned = vec![false; probs.len()];
    loop {
        let n_pinned = pinned.iter().filter(|p| **p).count();
        let free_mass = 1.0 - FLOOR * n_pinned as f64;
        let free_sum: f64 = probs
            .iter()
            .zip(&pinned)
            .filter(|(_, p)| !**p)
            .map(|(v, _)| *v)
            .sum();
        for (v, p) in probs.iter_mut().zip(&pinned) {
            if !*p {
                *v *= free_mass / free_sum;
            }
        }
        let mut changed = false;
        for (v, p) in probs.iter_mut().zip(pinned.iter_mut()) {
            if !*p && *v < FLOOR {
                *v = FLOOR;
                *p = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
}

/// `L1(P, Q)`.
pub fn l1_distance(p: &Distribution, q: &Distribution) -> Result<f64> {
    p.l1_distance(q)
}

/// Whether `r` is ρ-close to `p`.
pub fn is_rho_close(r: &Distribution, p: &Distribution, rho: f64) -> Result<bool> {
    r.is_rho_close(p, rho)
}

/// Whether `prior` is informed about `truth` with respect to the public `public`.
pub fn is_informed(prior: &Distribution, public: &Distribution, truth: &Distribution) -> Result<bool> {
    public.informs(prior, truth)
}

/// Informed, or `public` is ρ-close to `prior`.
pub fn is_rho_informed(
    prior: &Distribution,
    public: &Distribution,
    truth: &Distribution,
    rho: f64,
) -> Result<bool> {
    let close = public.is_rho_close(prior, rho)?;
    Ok(close || public.informs(prior, truth)?)
}

/// A prior together with one posterior row `Pr[·|o]` per observation `o`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    prior: Distribution,
    posteriors: Vec<Distribution>,
}

impl BeliefState {
    pub fn new(prior: Distribution, posteriors: Vec<Distribution>) -> Result<Self> {
        let n = prior.len();
        if posteriors.len() != n {
            return Err(Error::domain(format!(
                "expected {n} posterior rows, found {}",
                posteriors.len()
            )));
        }
        for row in &posteriors {
            prior.check_same_space(row)?;
        }
        Ok(Self { prior, posteriors })
    }

    /// Builds a belief from raw rows; each row must sum to one.
    pub fn from_rows(prior: &[f64], posteriors: &[&[f64]]) -> Result<Self> {
        let prior = Distribution::new(prior.to_vec())?;
        let rows = posteriors
            .iter()
            .map(|row| Distribution::new(row.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(prior, rows)
    }

    pub fn len(&self) -> usize {
        self.prior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prior.is_empty()
    }

    pub fn prior(&self) -> &Distribution {
        &self.prior
    }

    pub fn posterior(&self, observed: usize) -> &Distribution {
        &self.posteriors[observed]
    }

    pub fn posteriors(&self) -> &[Distribution] {
        &self.posteriors
    }

    fn off_diagonal(&self) -> impl Iterator<Item = (usize, usize)> {
        let n = self.len();
        (0..n).flat_map(move |o| (0..n).filter(move |x| *x != o).map(move |x| (o, x)))
    }

    /// `Pr[o|o] / Pr[o]`, the likelihood ratio of `x` after observing `o`.
    fn lift(&self, observed: usize, x: usize) -> f64 {
        self.posteriors[observed][x] / self.prior[x]
    }

    /// `Pr[o|o] > Pr[x|o]` for every `o` and `x ≠ o`.
    pub fn is_self_dominating(&self) -> bool {
        self.off_diagonal().all(|(o, x)| {
            let row = &self.posteriors[o];
            strictly_greater(row[o], row[x])
        })
    }

    /// `Pr[o|o]/Pr[o] > Pr[x|o]/Pr[x]` for every `o` and `x ≠ o`.
    pub fn is_self_predicting(&self) -> bool {
        self.off_diagonal()
            .all(|(o, x)| strictly_greater(self.lift(o, o), self.lift(o, x)))
    }

    /// `δ(o) = min_{x≠o} (Pr[o|o]/Pr[o])·(Pr[x]/Pr[x|o]) − 1`; positive exactly
    /// when the update is self-predicting at `o`.
    pub fn self_prediction_gap(&self, observed: usize) -> f64 {
        let own = self.lift(observed, observed);
        (0..self.len())
            .filter(|x| *x != observed)
            .map(|x| own / self.lift(observed, x) - 1.0)
            .fold(f64::INFINITY, f64::min)
    }

    /// `min_o δ(o)`.
    pub fn min_gap(&self) -> f64 {
        (0..self.len())
            .map(|o| self.self_prediction_gap(o))
            .fold(f64::INFINITY, f64::min)
    }

    /// `Pr[o|o] − Pr[o] > Pr[x|o] − Pr[x]` for every `o` and `x ≠ o`.
    pub fn is_linear_self_predicting(&self) -> bool {
        self.off_diagonal().all(|(o, x)| {
            let row = &self.posteriors[o];
            strictly_greater(row[o] - self.prior[o], row[x] - self.prior[x])
        })
    }

    /// `Pr[o|o] > Pr[o]`.
    pub fn is_indicative(&self, observed: usize) -> bool {
        strictly_greater(self.posteriors[observed][observed], self.prior[observed])
    }

    /// Parses the plain-text layout: the prior row followed by one posterior
    /// row per observation, in answer-space order.
    pub fn parse_table(text: &str) -> Result<Self> {
        let rows = text::parse_matrix(text)?;
        let n = rows.first().map(Vec::len).unwrap_or(0);
        if rows.len() != n + 1 {
            return Err(Error::Parse {
                line: 0,
                message: format!("expected {} rows (prior + {n} posteriors), found {}", n + 1, rows.len()),
            });
        }
        let posteriors: Vec<&[f64]> = rows[1..].iter().map(Vec::as_slice).collect();
        Self::from_rows(&rows[0], &posteriors)
    }

    pub fn to_table(&self, space: &AnswerSpace) -> String {
        let mut out = format!("# prior | {}\n", space.labels().join(" "));
        out.push_str(&text::format_matrix(&[self.prior.probs().to_vec()]));
        for (o, row) in self.posteriors.iter().enumerate() {
            out.push_str(&format!("# posterior | {}\n", space.label(o)));
            out.push_str(&text::format_matrix(&[row.probs().to_vec()]));
        }
        out
    }
}

/// Dirichlet concentration parameters, each strictly above one.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletParams {
    alpha: Vec<f64>,
}

impl DirichletParams {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() < 2 {
            return Err(Error::domain("Dirichlet parameters need at least two values"));
        }
        if let Some(a) = alpha.iter().find(|a| !a.is_finite() || **a <= 1.0) {
            return Err(Error::domain(format!(
                "Dirichlet parameters must exceed 1, got {a}"
            )));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// `Σ = Σ_j α_j`.
    pub fn sigma(&self) -> f64 {
        self.alpha.iter().sum()
    }

    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(self.alpha.iter().map(|a| a * k).collect())
    }

    /// Expected categorical distribution `α / Σ`.
    pub fn prior(&self) -> Distribution {
        Distribution::normalize(&self.alpha).expect("alpha is positive")
    }

    /// Conjugate single-observation update: `α'_i = α_i + 1[i = k]`.
    pub fn posterior(&self, observed: usize) -> Distribution {
        let mut updated = self.alpha.clone();
        updated[observed] += 1.0;
        Distribution::normalize(&updated).expect("alpha is positive")
    }

    pub fn belief(&self) -> BeliefState {
        let rows = (0..self.alpha.len()).map(|k| self.posterior(k)).collect();
        BeliefState::new(self.prior(), rows).expect("rows share the prior's space")
    }
}

/// The Dirichlet–categorical belief for `params`.
pub fn dirichlet_belief(params: &DirichletParams) -> BeliefState {
    params.belief()
}
