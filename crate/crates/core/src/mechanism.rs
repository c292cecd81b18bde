//! Payment functions `τ(r, rr, R)`, scoring rules, and the structural checks
//! on payments (arbitrage freedom and the consensus-only decomposition).

use crate::error::{Error, Result};
use crate::prob::{Distribution, FLOOR};
use crate::text;

/// Default tolerance for the structural checks.
pub const STRUCTURE_TOLERANCE: f64 = 1e-9;

/// A payment function: the reward for reporting `report` when the reference
/// report is `reference` and the published distribution is `public`.
pub trait Payment {
    fn pay(&self, report: usize, reference: usize, public: &Distribution) -> f64;
}

impl<F> Payment for F
where
    F: Fn(usize, usize, &Distribution) -> f64,
{
    fn pay(&self, report: usize, reference: usize, public: &Distribution) -> f64 {
        self(report, reference, public)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MechanismKind {
    OutputAgreement,
    Pts,
    PtsQuadratic,
}

impl MechanismKind {
    pub fn name(self) -> &'static str {
        match self {
            MechanismKind::OutputAgreement => "output_agreement",
            MechanismKind::Pts => "pts",
            MechanismKind::PtsQuadratic => "pts_quadratic",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "output_agreement" => Some(MechanismKind::OutputAgreement),
            "pts" => Some(MechanismKind::Pts),
            "pts_quadratic" => Some(MechanismKind::PtsQuadratic),
            _ => None,
        }
    }
}

/// The multiplier `C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scale {
    Constant(f64),
    /// `C = alpha · min_x R[x]`, evaluated against the distribution passed at
    /// payment time.
    MinPublic { alpha: f64 },
}

/// The report-independent shift `f(rr)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Offset {
    Constant(f64),
    /// `f(rr) = −C`.
    MinusScale,
}

/// Mechanism identity plus its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaymentSpec {
    pub kind: MechanismKind,
    pub scale: Scale,
    pub offset: Offset,
}

impl PaymentSpec {
    pub fn output_agreement(c: f64) -> Result<Self> {
        Self::new(MechanismKind::OutputAgreement, Scale::Constant(c), Offset::Constant(0.0))
    }

    pub fn pts(c: f64, offset: Offset) -> Result<Self> {
        Self::new(MechanismKind::Pts, Scale::Constant(c), offset)
    }

    /// PTS with `C = alpha · min R` and `f = beta`; rewards lie in `[beta, beta + alpha]`.
    pub fn pts_bounded(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(MechanismKind::Pts, Scale::MinPublic { alpha }, Offset::Constant(beta))
    }

    pub fn pts_quadratic() -> Self {
        Self {
            kind: MechanismKind::PtsQuadratic,
            scale: Scale::Constant(1.0),
            offset: Offset::Constant(0.0),
        }
    }

    pub fn new(kind: MechanismKind, scale: Scale, offset: Offset) -> Result<Self> {
        let spec = Self { kind, scale, offset };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.scale {
            Scale::Constant(c) => c.is_finite() && c > 0.0,
            Scale::MinPublic { alpha } => alpha.is_finite() && alpha > 0.0,
        };
        if !ok {
            return Err(Error::domain(format!(
                "{} needs a strictly positive scale",
                self.kind.name()
            )));
        }
        if let Offset::Constant(beta) = self.offset {
            if !beta.is_finite() {
                return Err(Error::domain("payment offset must be finite"));
            }
        }
        Ok(())
    }

    /// `C` under the published distribution.
    pub fn scale_at(&self, public: &Distribution) -> f64 {
        match self.scale {
            Scale::Constant(c) => c,
            Scale::MinPublic { alpha } => alpha * public.min(),
        }
    }

    /// `f(rr)`; none of the supported offsets depend on `rr`.
    pub fn offset_at(&self, public: &Distribution) -> f64 {
        match self.offset {
            Offset::Constant(beta) => beta,
            Offset::MinusScale => -self.scale_at(public),
        }
    }
}

impl Payment for PaymentSpec {
    fn pay(&self, report: usize, reference: usize, public: &Distribution) -> f64 {
        let c = self.scale_at(public);
        let f = self.offset_at(public);
        let agree = report == reference;
        let base = match self.kind {
            MechanismKind::OutputAgreement => {
                if agree {
                    c
                } else {
                    0.0
                }
            }
            MechanismKind::Pts => {
                if agree {
                    c / public[report]
                } else {
                    0.0
                }
            }
            MechanismKind::PtsQuadratic => c * pts_quadratic_pay(report, reference, public),
        };
        f + base
    }
}

/// `C` on agreement, `0` otherwise.
pub fn output_agreement_pay(report: usize, reference: usize, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::domain(format!("output agreement needs C > 0, got {c}")));
    }
    Ok(if report == reference { c } else { 0.0 })
}

/// `f(rr) + C/R[r]` on agreement, `f(rr)` otherwise.
pub fn pts_pay(report: usize, reference: usize, public: &Distribution, spec: &PaymentSpec) -> Result<f64> {
    if spec.kind != MechanismKind::Pts {
        return Err(Error::domain(format!(
            "pts_pay called with a {} payment",
            spec.kind.name()
        )));
    }
    if public.min() < FLOOR {
        return Err(Error::domain("public distribution is not fully mixed"));
    }
    Ok(spec.pay(report, reference, public))
}

/// `2 − 2R[r]` on agreement, `−2R[r]` otherwise.
pub fn pts_quadratic_pay(report: usize, reference: usize, public: &Distribution) -> f64 {
    let own = public[report];
    if report == reference {
        2.0 - 2.0 * own
    } else {
        -2.0 * own
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoringKind {
    Logarithmic,
    Quadratic,
}

/// A proper scoring rule `S(R, x)` scaled by `C > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoringRule {
    pub kind: ScoringKind,
    pub scale: f64,
}

impl ScoringRule {
    pub fn new(kind: ScoringKind, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::domain(format!("scoring scale must be positive, got {scale}")));
        }
        Ok(Self { kind, scale })
    }

    pub fn logarithmic() -> Self {
        Self { kind: ScoringKind::Logarithmic, scale: 1.0 }
    }

    pub fn quadratic() -> Self {
        Self { kind: ScoringKind::Quadratic, scale: 1.0 }
    }

    /// `log R[x]` or `2R[x] − Σ_y R[y]²`, times the scale.
    pub fn score(&self, public: &Distribution, sample: usize) -> f64 {
        let raw = match self.kind {
            ScoringKind::Logarithmic => public[sample].ln(),
            ScoringKind::Quadratic => {
                2.0 * public[sample] - public.iter().map(|p| p * p).sum::<f64>()
            }
        };
        self.scale * raw
    }

    /// `∂S(R, sample) / ∂R[wrt]`.
    pub fn partial(&self, public: &Distribution, sample: usize, wrt: usize) -> f64 {
        let hit = if sample == wrt { 1.0 } else { 0.0 };
        let raw = match self.kind {
            ScoringKind::Logarithmic => hit / public[sample],
            ScoringKind::Quadratic => 2.0 * hit - 2.0 * public[wrt],
        };
        self.scale * raw
    }
}

/// `S(R, x)`.
pub fn score(rule: &ScoringRule, public: &Distribution, sample: usize) -> f64 {
    rule.score(public, sample)
}

/// `Σ_rr R[rr] · τ(r, rr, R)`: the expected payment of an agent who only knows `R`.
pub fn expected_under_public<P: Payment + ?Sized>(pay: &P, report: usize, public: &Distribution) -> f64 {
    (0..public.len())
        .map(|rr| public[rr] * pay.pay(report, rr, public))
        .sum()
}

/// Reports with the largest and smallest expected payment under `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArbitrageViolation {
    pub max_report: usize,
    pub max_value: f64,
    pub min_report: usize,
    pub min_value: f64,
}

/// Succeeds with the common expected payment when every report earns the same
/// amount in expectation under `R`.
pub fn check_arbitrage_free<P: Payment + ?Sized>(
    pay: &P,
    public: &Distribution,
    tol: f64,
) -> std::result::Result<f64, ArbitrageViolation> {
    let values: Vec<f64> = (0..public.len())
        .map(|r| expected_under_public(pay, r, public))
        .collect();
    let (mut max_report, mut min_report) = (0, 0);
    for (r, v) in values.iter().enumerate() {
        if *v > values[max_report] {
            max_report = r;
        }
        if *v < values[min_report] {
            min_report = r;
        }
    }
    let (max_value, min_value) = (values[max_report], values[min_report]);
    if max_value - min_value <= tol * (1.0 + max_value.abs().max(min_value.abs())) {
        Ok(values.iter().sum::<f64>() / values.len() as f64)
    } else {
        Err(ArbitrageViolation {
            max_report,
            max_value,
            min_report,
            min_value,
        })
    }
}

/// `τ(r, rr) = f(rr) + 1[r = rr] · C / R[r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusForm {
    pub scale: f64,
    pub offsets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecompositionViolation {
    /// `τ(report, reference) ≠ τ(other, reference)` although neither report matches.
    OffDiagonal {
        report: usize,
        other: usize,
        reference: usize,
        difference: f64,
    },
    /// The diagonal residual `τ(r, r) − f(r)` is not `C / R[r]`.
    Diagonal {
        report: usize,
        residual: f64,
        expected: f64,
    },
    /// The recovered `C` is not strictly positive.
    NonPositiveScale(f64),
}

/// Recovers `(C, f)` from a payment that rewards consensus only, or names the
/// first cell that rules the form out. `C` is fixed from the first value's
/// diagonal and verified on all others.
pub fn decompose_consensus<P: Payment + ?Sized>(
    pay: &P,
    public: &Distribution,
    tol: f64,
) -> std::result::Result<ConsensusForm, DecompositionViolation> {
    let n = public.len();
    let within = |a: f64, b: f64| (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()));

    let mut offsets = Vec::with_capacity(n);
    for reference in 0..n {
        let mut others = (0..n).filter(|r| *r != reference);
        let first = others.next().expect("at least two values");
        let value = pay.pay(first, reference, public);
        for other in others {
            let v = pay.pay(other, reference, public);
            if !within(value, v) {
                return Err(DecompositionViolation::OffDiagonal {
                    report: first,
                    other,
                    reference,
                    difference: value - v,
                });
            }
        }
        offsets.push(value);
    }

    let residual = |r: usize| pay.pay(r, r, public) - offsets[r];
    let scale = public[0] * residual(0);
    if scale <= tol {
        return Err(DecompositionViolation::NonPositiveScale(scale));
    }
    for r in 1..n {
        let expected = scale / public[r];
        let got = residual(r);
        if !within(got, expected) {
            return Err(DecompositionViolation::Diagonal {
                report: r,
                residual: got,
                expected,
            });
        }
    }
    Ok(ConsensusForm { scale, offsets })
}

/// A payment tabulated for one fixed public distribution: row = own report,
/// column = reference report.
#[derive(Debug, Clone, PartialEq)]
pub struct PaymentTable {
    cells: Vec<Vec<f64>>,
}

impl PaymentTable {
    pub fn new(cells: Vec<Vec<f64>>) -> Result<Self> {
        let n = cells.len();
        if n < 2 || cells.iter().any(|row| row.len() != n) {
            return Err(Error::domain("payment table must be square with at least two values"));
        }
        Ok(Self { cells })
    }

    pub fn tabulate<P: Payment + ?Sized>(pay: &P, public: &Distribution) -> Self {
        let n = public.len();
        let cells = (0..n)
            .map(|r| (0..n).map(|rr| pay.pay(r, rr, public)).collect())
            .collect();
        Self { cells }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, report: usize, reference: usize) -> f64 {
        self.cells[report][reference]
    }

    pub fn set(&mut self, report: usize, reference: usize, value: f64) {
        self.cells[report][reference] = value;
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::new(text::parse_matrix(text)?)
    }

    pub fn to_text(&self) -> String {
        text::format_matrix(&self.cells)
    }
}

impl Payment for PaymentTable {
    fn pay(&self, report: usize, reference: usize, _public: &Distribution) -> f64 {
        self.cells[report][reference]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::worked::self_dominating_example;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12
    }

    #[test]
    fn output_agreement_examples() {
        assert_eq!(output_agreement_pay(1, 1, 1.0).unwrap(), 1.0);
        assert_eq!(output_agreement_pay(0, 2, 1.0).unwrap(), 0.0);
        assert!(output_agreement_pay(0, 0, 0.0).is_err());
        assert!(PaymentSpec::output_agreement(-1.0).is_err());

        let belief = self_dominating_example();
        let spec = PaymentSpec::output_agreement(1.0).unwrap();
        let r = Distribution::uniform(3).unwrap();
        let row = belief.posterior(0);
        let expected: f64 = (0..3).map(|x| row[x] * spec.pay(0, x, &r)).sum();
        assert!(close(expected, 0.7));
    }

    #[test]
    fn pts_examples() {
        let r = Distribution::uniform(3).unwrap();
        let spec = PaymentSpec::pts(1.0, Offset::Constant(0.0)).unwrap();
        assert!(close(pts_pay(1, 1, &r, &spec).unwrap(), 3.0));
        assert_eq!(pts_pay(1, 2, &r, &spec).unwrap(), 0.0);
        assert!(pts_pay(1, 1, &r, &PaymentSpec::pts_quadratic()).is_err());

        let belief = crate::worked::pts_case_one();
        let row = belief.posterior(2);
        let expect = |report: usize| -> f64 { (0..3).map(|x| row[x] * spec.pay(report, x, &r)).sum() };
        assert!(close(expect(2), 0.6));
        assert!(close(expect(0), 1.2));
    }

    #[test]
    fn pts_quadratic_examples() {
        let r = Distribution::new(vec![0.25, 0.25, 0.5]).unwrap();
        assert!(close(pts_quadratic_pay(0, 0, &r), 1.5));
        assert!(close(pts_quadratic_pay(0, 1, &r), -0.5));
        let spike = Distribution::point_mass(2, 0).unwrap();
        assert!(pts_quadratic_pay(0, 0, &spike).abs() < 1e-8);
    }

    #[test]
    fn scoring_examples() {
        let log = ScoringRule::logarithmic();
        for n in 2..6 {
            let u = Distribution::uniform(n).unwrap();
            assert!(close(score(&log, &u, n - 1), -(n as f64).ln()));
        }
        let half = Distribution::uniform(2).unwrap();
        assert!(close(ScoringRule::quadratic().score(&half, 0), 0.5));
        let r = Distribution::new(vec![0.7, 0.2, 0.1]).unwrap();
        assert!(close(log.score(&r, 2), 0.1f64.ln()));
        assert!(ScoringRule::new(ScoringKind::Quadratic, 0.0).is_err());
    }

    #[test]
    fn partials_match_finite_differences() {
        let r = Distribution::new(vec![0.5, 0.3, 0.2]).unwrap();
        let h = 1e-6;
        for rule in [ScoringRule::logarithmic(), ScoringRule::quadratic()] {
            for sample in 0..3 {
                for wrt in 0..3 {
                    // Central difference on the unconstrained extension of S.
                    let eval = |delta: f64| -> f64 {
                        let mut v = r.probs().to_vec();
                        v[wrt] += delta;
                        match rule.kind {
                            ScoringKind::Logarithmic => v[sample].ln(),
                            ScoringKind::Quadratic => {
                                2.0 * v[sample] - v.iter().map(|p| p * p).sum::<f64>()
                            }
                        }
                    };
                    let fd = (eval(h) - eval(-h)) / (2.0 * h);
                    assert!((fd - rule.partial(&r, sample, wrt)).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn arbitrage_examples() {
        let r = Distribution::new(vec![0.2, 0.5, 0.3]).unwrap();
        let zeroed = PaymentSpec::pts(1.0, Offset::MinusScale).unwrap();
        assert!(check_arbitrage_free(&zeroed, &r, STRUCTURE_TOLERANCE).unwrap().abs() < 1e-12);
        let plain = PaymentSpec::pts(1.0, Offset::Constant(0.0)).unwrap();
        assert!(close(check_arbitrage_free(&plain, &r, STRUCTURE_TOLERANCE).unwrap(), 1.0));

        let skewed = Distribution::new(vec![0.7, 0.2, 0.1]).unwrap();
        let oa = PaymentSpec::output_agreement(1.0).unwrap();
        let violation = check_arbitrage_free(&oa, &skewed, STRUCTURE_TOLERANCE).unwrap_err();
        assert_eq!(violation.max_report, 0);
        assert_eq!(violation.min_report, 2);
        assert!(close(violation.max_value, 0.7) && close(violation.min_value, 0.1));
    }

    #[test]
    fn decomposition_recovers_pts() {
        let r = Distribution::new(vec![0.2, 0.5, 0.3]).unwrap();
        let pay = |report: usize, reference: usize, public: &Distribution| -> f64 {
            let f = public[reference];
            if report == reference {
                f + 2.0 / public[report]
            } else {
                f
            }
        };
        let form = decompose_consensus(&pay, &r, STRUCTURE_TOLERANCE).unwrap();
        assert!(close(form.scale, 2.0));
        for (x, f) in form.offsets.iter().enumerate() {
            assert!(close(*f, r[x]));
        }
    }

    #[test]
    fn decomposition_rejects_quadratic_variant() {
        let r = Distribution::new(vec![0.2, 0.5, 0.3]).unwrap();
        let err = decompose_consensus(&PaymentSpec::pts_quadratic(), &r, STRUCTURE_TOLERANCE).unwrap_err();
        assert!(matches!(err, DecompositionViolation::OffDiagonal { .. }));
        // Quadratic PTS is still arbitrage-free.
        assert!(check_arbitrage_free(&PaymentSpec::pts_quadratic(), &r, STRUCTURE_TOLERANCE).is_ok());
    }

    #[test]
    fn decomposition_names_offending_cell() {
        let r = Distribution::uniform(3).unwrap();
        let mut table = PaymentTable::tabulate(&PaymentSpec::pts(1.0, Offset::Constant(0.0)).unwrap(), &r);
        table.set(1, 2, 0.25);
        match decompose_consensus(&table, &r, STRUCTURE_TOLERANCE) {
            Err(DecompositionViolation::OffDiagonal { report, other, reference, .. }) => {
                assert_eq!((report, other, reference), (0, 1, 2));
            }
            other => panic!("unexpected {other:?}"),
        }
        let mut negative = PaymentTable::tabulate(&PaymentSpec::output_agreement(1.0).unwrap(), &r);
        for x in 0..3 {
            negative.set(x, x, -1.0);
        }
        assert!(matches!(
            decompose_consensus(&negative, &r, STRUCTURE_TOLERANCE),
            Err(DecompositionViolation::NonPositiveScale(_))
        ));
    }

    #[test]
    fn output_agreement_decomposes_only_under_uniform_public() {
        let oa = PaymentSpec::output_agreement(1.0).unwrap();
        let u = Distribution::uniform(3).unwrap();
        let form = decompose_consensus(&oa, &u, STRUCTURE_TOLERANCE).unwrap();
        assert!(close(form.scale, 1.0 / 3.0));
        let skewed = Distribution::new(vec![0.7, 0.2, 0.1]).unwrap();
        assert!(matches!(
            decompose_consensus(&oa, &skewed, STRUCTURE_TOLERANCE),
            Err(DecompositionViolation::Diagonal { report: 1, .. })
        ));
    }

    #[test]
    fn bounded_pts_range() {
        let spec = PaymentSpec::pts_bounded(2.0, -1.0).unwrap();
        let r = Distribution::new(vec![0.1, 0.6, 0.3]).unwrap();
        assert!(close(spec.pay(0, 0, &r), 1.0));
        assert!(close(spec.pay(1, 1, &r), -1.0 + 0.2 / 0.6));
        assert!(close(spec.pay(1, 0, &r), -1.0));
    }

    #[test]
    fn table_text_round_trip() {
        let r = Distribution::new(vec![0.1, 0.6, 0.3]).unwrap();
        let table = PaymentTable::tabulate(&PaymentSpec::pts(1.5, Offset::MinusScale).unwrap(), &r);
        assert_eq!(PaymentTable::parse(&table.to_text()).unwrap(), table);
        assert!(PaymentTable::parse("1 2\n3 4\n5 6\n").is_err());
    }
}
