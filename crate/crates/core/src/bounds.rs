//! Upper bounds on an unknown spectral width from probe-state fidelities.
//!
//! With equal-width Gaussian system states the fidelity inequality
//! `F_a(r1, r2) F_a(xi1, xi2) <= F_a(phi1, phi2)` inverts to
//!
//! ```text
//! sigma <= sqrt(a (a - 1) dmu^2 / (2 ln f)),   f = F_a(phi1, phi2) / F_a(r1, r2)
//! ```
//!
//! whenever `f < 1`. The reversed argument order gives a second family. When
//! `f >= 1` the inequality holds for every sigma and the data say nothing.

use serde::{Deserialize, Serialize};

use crate::error::{ProbeError, Result};
use crate::fidelity::{AlphaParameter, FidelityEvaluator};
use crate::linalg::DensityMatrix;

/// Argument order of the fidelity fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    /// `F(phi1, phi2) / F(r1, r2)`, giving B1.
    Forward,
    /// `F(phi2, phi1) / F(r2, r1)`, giving B2.
    Reversed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    B1,
    B2,
}

impl Family {
    pub fn order(self) -> Order {
        match self {
            Family::B1 => Order::Forward,
            Family::B2 => Order::Reversed,
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::B1 => "B1",
            Family::B2 => "B2",
        })
    }
}

/// Initial and evolved probe states plus the known center shift (Hz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RecordJson", into = "RecordJson")]
pub struct ProbingRecord {
    rho1: DensityMatrix,
    rho2: DensityMatrix,
    phi1_rho1: DensityMatrix,
    phi2_rho2: DensityMatrix,
    delta_mu: f64,
}

#[derive(Serialize, Deserialize)]
struct RecordJson {
    rho1: DensityMatrix,
    rho2: DensityMatrix,
    phi1_rho1: DensityMatrix,
    phi2_rho2: DensityMatrix,
    delta_mu_hz: f64,
}

impl TryFrom<RecordJson> for ProbingRecord {
    type Error = ProbeError;
    fn try_from(j: RecordJson) -> Result<Self> {
        ProbingRecord::new(j.rho1, j.rho2, j.phi1_rho1, j.phi2_rho2, j.delta_mu_hz)
    }
}

impl From<ProbingRecord> for RecordJson {
    fn from(r: ProbingRecord) -> Self {
        RecordJson {
            rho1: r.rho1,
            rho2: r.rho2,
            phi1_rho1: r.phi1_rho1,
            phi2_rho2: r.phi2_rho2,
            delta_mu_hz: r.delta_mu,
        }
    }
}

impl ProbingRecord {
    pub fn new(
        rho1: DensityMatrix,
        rho2: DensityMatrix,
        phi1_rho1: DensityMatrix,
        phi2_rho2: DensityMatrix,
        delta_mu: f64,
    ) -> Result<Self> {
        for m in [&rho1, &rho2, &phi1_rho1, &phi2_rho2] {
            if m.dim() != 2 {
                return Err(ProbeError::DimensionMismatch {
                    expected: 2,
                    actual: m.dim(),
                });
            }
        }
        if !(delta_mu >= 0.0) || !delta_mu.is_finite() {
            return Err(ProbeError::InvalidParameter {
                name: "delta_mu",
                reason: format!("{delta_mu} must be finite and nonnegative"),
            });
        }
        Ok(Self {
            rho1,
            rho2,
            phi1_rho1,
            phi2_rho2,
            delta_mu,
        })
    }

    pub fn rho1(&self) -> &DensityMatrix {
        &self.rho1
    }
    pub fn rho2(&self) -> &DensityMatrix {
        &self.rho2
    }
    pub fn phi1_rho1(&self) -> &DensityMatrix {
        &self.phi1_rho1
    }
    pub fn phi2_rho2(&self) -> &DensityMatrix {
        &self.phi2_rho2
    }
    pub fn delta_mu(&self) -> f64 {
        self.delta_mu
    }

    /// Same states, different control shift.
    pub fn with_delta_mu(&self, delta_mu: f64) -> Result<Self> {
        Self::new(
            self.rho1.clone(),
            self.rho2.clone(),
            self.phi1_rho1.clone(),
            self.phi2_rho2.clone(),
            delta_mu,
        )
    }
}

/// Fidelity fractions of a record for many alphas, sharing the four
/// eigendecompositions.
struct FractionEvaluator<'a> {
    evolved_fwd: FidelityEvaluator<'a>,
    initial_fwd: FidelityEvaluator<'a>,
    evolved_rev: FidelityEvaluator<'a>,
    initial_rev: FidelityEvaluator<'a>,
}

impl<'a> FractionEvaluator<'a> {
    fn new(r: &'a ProbingRecord) -> Result<Self> {
        Ok(Self {
            evolved_fwd: FidelityEvaluator::new(&r.phi1_rho1, &r.phi2_rho2)?,
            initial_fwd: FidelityEvaluator::new(&r.rho1, &r.rho2)?,
            evolved_rev: FidelityEvaluator::new(&r.phi2_rho2, &r.phi1_rho1)?,
            initial_rev: FidelityEvaluator::new(&r.rho2, &r.rho1)?,
        })
    }

    fn fraction(&self, alpha: AlphaParameter, order: Order) -> Result<f64> {
        let (num, den) = match order {
            Order::Forward => (&self.evolved_fwd, &self.initial_fwd),
            Order::Reversed => (&self.evolved_rev, &self.initial_rev),
        };
        let den = den.fidelity(alpha)?;
        if den <= 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(num.fidelity(alpha)? / den)
    }
}

/// Fidelity fraction for one order; `+inf` when the initial fidelity is 0.
pub fn fraction(record: &ProbingRecord, alpha: AlphaParameter, order: Order) -> Result<f64> {
    FractionEvaluator::new(record)?.fraction(alpha, order)
}

/// Per-(alpha, order) classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundOutcome {
    /// Upper bound on sigma, Hz.
    Bound(f64),
    /// Fraction at or above one: the inequality constrains nothing.
    NoInformation,
}

impl BoundOutcome {
    pub fn value(self) -> Option<f64> {
        match self {
            BoundOutcome::Bound(v) => Some(v),
            BoundOutcome::NoInformation => None,
        }
    }
}

/// `sqrt(a (a - 1) dmu^2 / (2 ln f))` for `f < 1`.
pub fn sigma_bound_from_fraction(fraction: f64, alpha: AlphaParameter, delta_mu: f64) -> BoundOutcome {
    match ratio_from_fraction(fraction, alpha) {
        Some(r) if r > 0.0 => BoundOutcome::Bound(delta_mu / r),
        Some(_) => BoundOutcome::Bound(f64::INFINITY),
        None => BoundOutcome::NoInformation,
    }
}

/// `dmu / sigma >= sqrt(2 ln f / (a (a - 1)))` for `f < 1`.
fn ratio_from_fraction(fraction: f64, alpha: AlphaParameter) -> Option<f64> {
    if fraction.is_nan() || fraction >= 1.0 {
        return None;
    }
    let a = alpha.value();
    Some((2.0 * fraction.ln() / (a * (a - 1.0))).sqrt())
}

fn check_bound_alpha(alpha: AlphaParameter) -> Result<()> {
    if alpha.inequality_guaranteed() {
        Ok(())
    } else {
        Err(ProbeError::AlphaOutsideBoundRange(alpha.value()))
    }
}

/// Classifies one (alpha, family) cell. `delta_mu = 0` is the degenerate
/// control and an error.
pub fn classify(record: &ProbingRecord, alpha: AlphaParameter, family: Family) -> Result<BoundOutcome> {
    check_bound_alpha(alpha)?;
    if record.delta_mu == 0.0 {
        return Err(ProbeError::DegenerateControl);
    }
    let f = fraction(record, alpha, family.order())?;
    Ok(sigma_bound_from_fraction(f, alpha, record.delta_mu))
}

pub fn bound_b1(record: &ProbingRecord, alpha: AlphaParameter) -> Result<Option<f64>> {
    Ok(classify(record, alpha, Family::B1)?.value())
}

pub fn bound_b2(record: &ProbingRecord, alpha: AlphaParameter) -> Result<Option<f64>> {
    Ok(classify(record, alpha, Family::B2)?.value())
}

/// Lower bound on the shift when sigma is known: the larger of the two
/// order-specific bounds.
pub fn lower_bound_delta_mu(record: &ProbingRecord, sigma_known: f64, alpha: AlphaParameter) -> Result<Option<f64>> {
    if !(sigma_known > 0.0) {
        return Err(ProbeError::InvalidParameter {
            name: "sigma_known",
            reason: format!("{sigma_known} must be positive"),
        });
    }
    Ok(ratio_lower_bound(record, alpha)?.map(|r| r * sigma_known))
}

/// Lower bound on `dmu / sigma`, the larger over both orders.
pub fn ratio_lower_bound(record: &ProbingRecord, alpha: AlphaParameter) -> Result<Option<f64>> {
    check_bound_alpha(alpha)?;
    let eval = FractionEvaluator::new(record)?;
    let mut best: Option<f64> = None;
    for order in [Order::Forward, Order::Reversed] {
        if let Some(r) = ratio_from_fraction(eval.fraction(alpha, order)?, alpha) {
            best = Some(best.map_or(r, |b: f64| b.max(r)));
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TightestBound {
    pub value: f64,
    pub alpha: f64,
    pub family: Family,
}

/// Both bound families over an alpha grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCurve {
    pub alphas: Vec<f64>,
    pub fraction1: Vec<f64>,
    pub fraction2: Vec<f64>,
    pub b1: Vec<Option<f64>>,
    pub b2: Vec<Option<f64>>,
    pub valid1: Vec<bool>,
    pub valid2: Vec<bool>,
    pub b_inf: Option<TightestBound>,
}

impl BoundCurve {
    pub fn is_no_information(&self) -> bool {
        self.b_inf.is_none()
    }

    /// CSV with columns `alpha,b1_hz,b2_hz,valid1,valid2`, plus
    /// `b1_over_sigma,b2_over_sigma` when a reference sigma is given.
    /// Absent bounds are empty fields.
    pub fn to_csv(&self, reference_sigma: Option<f64>) -> String {
        let mut out = String::from("alpha,b1_hz,b2_hz,valid1,valid2");
        if reference_sigma.is_some() {
            out.push_str(",b1_over_sigma,b2_over_sigma");
        }
        out.push('\n');
        let opt = |v: Option<f64>| v.map(sci).unwrap_or_default();
        for i in 0..self.alphas.len() {
            out.push_str(&format!(
                "{},{},{},{},{}",
                sci(self.alphas[i]),
                opt(self.b1[i]),
                opt(self.b2[i]),
                self.valid1[i],
                self.valid2[i]
            ));
            if let Some(s) = reference_sigma {
                out.push_str(&format!(",{},{}", opt(self.b1[i].map(|b| b / s)), opt(self.b2[i].map(|b| b / s))));
            }
            out.push('\n');
        }
        out
    }

    /// CSV with columns `alpha,fraction_forward,fraction_reversed`.
    pub fn fractions_csv(&self) -> String {
        let mut out = String::from("alpha,fraction_forward,fraction_reversed\n");
        for i in 0..self.alphas.len() {
            out.push_str(&format!(
                "{},{},{}\n",
                sci(self.alphas[i]),
                sci(self.fraction1[i]),
                sci(self.fraction2[i])
            ));
        }
        out
    }

    pub fn summary(&self, reference_sigma: Option<f64>) -> BoundSummary {
        BoundSummary {
            b_inf_hz: self.b_inf.map(|b| b.value),
            alpha_star: self.b_inf.map(|b| b.alpha),
            family: self.b_inf.map(|b| b.family),
            no_information: self.is_no_information(),
            reference_sigma_hz: reference_sigma,
            sigma_units: match (self.b_inf, reference_sigma) {
                (Some(b), Some(s)) => Some(b.value / s),
                _ => None,
            },
        }
    }
}

/// Machine-readable summary of a [`BoundCurve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSummary {
    pub b_inf_hz: Option<f64>,
    pub alpha_star: Option<f64>,
    pub family: Option<Family>,
    pub no_information: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_sigma_hz: Option<f64>,
    /// `b_inf / reference sigma`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_units: Option<f64>,
}

/// Scientific notation with 13 significant digits.
pub fn sci(x: f64) -> String {
    format!("{x:.12e}")
}

/// Evaluates B1 and B2 on `alpha_grid` and picks the smallest bound.
pub fn tightest_bound(record: &ProbingRecord, alpha_grid: &[AlphaParameter]) -> Result<BoundCurve> {
    if alpha_grid.is_empty() {
        return Err(ProbeError::InvalidParameter {
            name: "alpha_grid",
            reason: "grid is empty".into(),
        });
    }
    if record.delta_mu == 0.0 {
        return Err(ProbeError::DegenerateControl);
    }
    let eval = FractionEvaluator::new(record)?;
    let n = alpha_grid.len();
    let mut curve = BoundCurve {
        alphas: Vec::with_capacity(n),
        fraction1: Vec::with_capacity(n),
        fraction2: Vec::with_capacity(n),
        b1: Vec::with_capacity(n),
        b2: Vec::with_capacity(n),
        valid1: Vec::with_capacity(n),
        valid2: Vec::with_capacity(n),
        b_inf: None,
    };
    for &alpha in alpha_grid {
        check_bound_alpha(alpha)?;
        let f1 = eval.fraction(alpha, Order::Forward)?;
        let f2 = eval.fraction(alpha, Order::Reversed)?;
        let b1 = sigma_bound_from_fraction(f1, alpha, record.delta_mu).value();
        let b2 = sigma_bound_from_fraction(f2, alpha, record.delta_mu).value();
        for (b, family) in [(b1, Family::B1), (b2, Family::B2)] {
            if let Some(v) = b {
                if curve.b_inf.is_none_or(|t| v < t.value) {
                    curve.b_inf = Some(TightestBound {
                        value: v,
                        alpha: alpha.value(),
                        family,
                    });
                }
            }
        }
        curve.alphas.push(alpha.value());
        curve.fraction1.push(f1);
        curve.fraction2.push(f2);
        curve.valid1.push(b1.is_some());
        curve.valid2.push(b2.is_some());
        curve.b1.push(b1);
        curve.b2.push(b2);
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ComplexMatrix;
    use num_complex::Complex64;

    fn qubit(p: f64, re: f64, im: f64) -> DensityMatrix {
        DensityMatrix::new(
            ComplexMatrix::from_row_slice(
                2,
                &[
                    Complex64::new(p, 0.0),
                    Complex64::new(re, -im),
                    Complex64::new(re, im),
                    Complex64::new(1.0 - p, 0.0),
                ],
            )
            .unwrap(),
        )
        .unwrap()
    }

    fn a(v: f64) -> AlphaParameter {
        AlphaParameter::new(v).unwrap()
    }

    #[test]
    fn identity_channel_fraction_is_one() {
        let rho = qubit(0.5, 0.4, 0.1);
        let rec = ProbingRecord::new(rho.clone(), rho.clone(), rho.clone(), rho, 1.0).unwrap();
        for order in [Order::Forward, Order::Reversed] {
            assert!((fraction(&rec, a(0.7), order).unwrap() - 1.0).abs() < 1e-12);
        }
        assert_eq!(classify(&rec, a(0.7), Family::B1).unwrap(), BoundOutcome::NoInformation);
    }

    #[test]
    fn degenerate_control() {
        let rho = qubit(0.5, 0.4, 0.1);
        let phi = qubit(0.5, 0.1, 0.3);
        let rec = ProbingRecord::new(rho.clone(), rho, phi.clone(), qubit(0.5, 0.3, -0.1), 0.0).unwrap();
        assert!(matches!(bound_b1(&rec, a(0.5)), Err(ProbeError::DegenerateControl)));
        assert!(matches!(tightest_bound(&rec, &[a(0.5)]), Err(ProbeError::DegenerateControl)));
    }

    #[test]
    fn inverts_closed_form_fraction() {
        // plugging the Gaussian fidelity in as the fraction recovers sigma
        let f = (-1.0_f64 / 8.0).exp();
        match sigma_bound_from_fraction(f, a(0.5), 1.0) {
            BoundOutcome::Bound(b) => assert!((b - 1.0).abs() < 1e-14),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn near_one_fraction_gives_huge_bound() {
        match sigma_bound_from_fraction(1.0 - 1e-15, a(0.5), 1.0) {
            BoundOutcome::Bound(b) => assert!(b > 1e6),
            other => panic!("{other:?}"),
        }
        assert_eq!(sigma_bound_from_fraction(1.0, a(0.5), 1.0), BoundOutcome::NoInformation);
        assert_eq!(sigma_bound_from_fraction(1.0 + 1e-10, a(0.5), 1.0), BoundOutcome::NoInformation);
        assert_eq!(sigma_bound_from_fraction(f64::INFINITY, a(0.5), 1.0), BoundOutcome::NoInformation);
    }

    #[test]
    fn low_alpha_rejected() {
        let rho = qubit(0.5, 0.4, 0.1);
        let rec = ProbingRecord::new(rho.clone(), rho.clone(), rho.clone(), rho, 1.0).unwrap();
        assert!(matches!(bound_b2(&rec, a(0.3)), Err(ProbeError::AlphaOutsideBoundRange(_))));
    }

    #[test]
    fn symmetric_record_gives_equal_families() {
        // real off-diagonals and rho1 = rho2: both orders coincide
        let rho = qubit(0.5, 0.45, 0.0);
        let rec = ProbingRecord::new(rho.clone(), rho, qubit(0.5, 0.3, 0.0), qubit(0.5, 0.3, 0.0).clone(), 1.0).unwrap();
        let curve = tightest_bound(&rec, &crate::fidelity::alpha_grid(0.5, 0.99, 20).unwrap()).unwrap();
        // identical pairs: fraction is 1 up to roundoff, so either nothing or an astronomically loose bound
        assert!(curve.b_inf.is_none_or(|b| b.value > 1e5));
        // equal real initial states, evolved states complex conjugates of each other
        let rec = ProbingRecord::new(
            qubit(0.5, 0.45, 0.0),
            qubit(0.5, 0.45, 0.0),
            qubit(0.5, 0.3, 0.2),
            qubit(0.5, 0.3, -0.2),
            1.0,
        )
        .unwrap();
        let curve = tightest_bound(&rec, &crate::fidelity::alpha_grid(0.5, 0.99, 20).unwrap()).unwrap();
        for i in 0..curve.alphas.len() {
            let (x, y) = (curve.b1[i].unwrap(), curve.b2[i].unwrap());
            assert!((x - y).abs() <= 1e-9 * x, "alpha {}: {x} vs {y}", curve.alphas[i]);
        }
    }

    #[test]
    fn csv_layout() {
        let rec = ProbingRecord::new(
            qubit(0.5, 0.45, 0.0),
            qubit(0.5, 0.45, 0.0),
            qubit(0.5, 0.4, 0.0),
            qubit(0.5, 0.2, 0.0),
            2.0,
        )
        .unwrap();
        let curve = tightest_bound(&rec, &[a(0.5), a(0.9)]).unwrap();
        let csv = curve.to_csv(Some(2.0));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "alpha,b1_hz,b2_hz,valid1,valid2,b1_over_sigma,b2_over_sigma");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("5.000000000000e-1,"));
        assert_eq!(lines[1].split(',').count(), 7);
        let summary = curve.summary(Some(2.0));
        assert!(!summary.no_information);
        assert!((summary.sigma_units.unwrap() - summary.b_inf_hz.unwrap() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn record_json_round_trip() {
        let rec = ProbingRecord::new(
            qubit(0.5, 0.45, 0.0),
            qubit(0.6, 0.45, 0.1),
            qubit(0.5, 0.4, 0.0),
            qubit(0.5, 0.2, 0.0),
            2.0,
        )
        .unwrap();
        let s = serde_json::to_string(&rec).unwrap();
        assert!(s.contains("\"delta_mu_hz\":2.0"));
        let back: ProbingRecord = serde_json::from_str(&s).unwrap();
        assert_eq!(back, rec);
    }
}
