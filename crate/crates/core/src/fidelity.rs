//! Alpha-fidelities of density matrices and the generalized data-processing
//! inequality.
//!
//! `F_a(r1, r2) = tr[(r2^{(1-a)/(2a)} r1 r2^{(1-a)/(2a)})^a]`. At `a = 1/2`
//! this is the usual (root) fidelity; it is not symmetric for other `a`.

use log::warn;

use crate::error::{ProbeError, Result};
use crate::linalg::{eig_hermitian, psd_power_of, DensityMatrix, HermitianEigen};

/// Raw fidelities above one by more than this are reported before clamping.
pub const CLAMP_WARN_EXCESS: f64 = 1e-9;
pub const DEFAULT_ALPHA_MIN: f64 = 0.5;
pub const DEFAULT_ALPHA_MAX: f64 = 0.9999;
pub const DEFAULT_ALPHA_POINTS: usize = 500;

/// Order parameter of the fidelity, always in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AlphaParameter(f64);

impl AlphaParameter {
    /// Accepts any value in `(0, 1)`. Values below 1/2 are allowed here but
    /// the fidelity inequality is not guaranteed for them.
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Self(value))
        } else {
            Err(ProbeError::InvalidAlpha(value))
        }
    }

    /// Accepts only `[1/2, 1)`, the range used by every bound.
    pub fn for_bounds(value: f64) -> Result<Self> {
        let a = Self::new(value)?;
        if a.inequality_guaranteed() {
            Ok(a)
        } else {
            Err(ProbeError::AlphaOutsideBoundRange(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn inequality_guaranteed(self) -> bool {
        self.0 >= 0.5
    }

    /// Exponent `(1 - a) / (2a)` applied to the second argument.
    pub fn sandwich_exponent(self) -> f64 {
        (1.0 - self.0) / (2.0 * self.0)
    }
}

/// Uniform grid over `[min, max]`, both ends included.
pub fn alpha_grid(min: f64, max: f64, points: usize) -> Result<Vec<AlphaParameter>> {
    if points == 0 {
        return Err(ProbeError::InvalidParameter {
            name: "points",
            reason: "alpha grid needs at least one point".into(),
        });
    }
    if !(min <= max) {
        return Err(ProbeError::InvalidParameter {
            name: "min",
            reason: format!("alpha range [{min}, {max}] is empty"),
        });
    }
    if points == 1 {
        return Ok(vec![AlphaParameter::new(min)?]);
    }
    let step = (max - min) / (points - 1) as f64;
    (0..points)
        .map(|i| {
            let v = if i == points - 1 { max } else { min + step * i as f64 };
            AlphaParameter::new(v)
        })
        .collect()
}

/// `[0.5, 0.9999]`, 500 points.
pub fn default_alpha_grid() -> Vec<AlphaParameter> {
    alpha_grid(DEFAULT_ALPHA_MIN, DEFAULT_ALPHA_MAX, DEFAULT_ALPHA_POINTS).expect("default grid is valid")
}

fn check_dims(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(ProbeError::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    Ok(())
}

fn clamp_fidelity(raw: f64) -> f64 {
    if raw > 1.0 + CLAMP_WARN_EXCESS {
        warn!("alpha-fidelity raw value {raw} exceeds 1 beyond roundoff; clamping");
    }
    raw.clamp(0.0, 1.0)
}

/// Evaluates `F_a(first, second)` for many `a` with one eigendecomposition of
/// the second argument.
#[derive(Debug, Clone)]
pub struct FidelityEvaluator<'a> {
    first: &'a DensityMatrix,
    second_eig: HermitianEigen,
}

impl<'a> FidelityEvaluator<'a> {
    pub fn new(first: &'a DensityMatrix, second: &DensityMatrix) -> Result<Self> {
        check_dims(first, second)?;
        Ok(Self {
            first,
            second_eig: eig_hermitian(second.matrix())?,
        })
    }

    /// Unclamped trace value.
    pub fn raw(&self, alpha: AlphaParameter) -> Result<f64> {
        let s = psd_power_of(&self.second_eig, alpha.sandwich_exponent())?;
        let sandwich = (&(&s * self.first.matrix()) * &s).hermitian_part();
        let eig = eig_hermitian(&sandwich)?;
        let a = alpha.value();
        let mut total = 0.0;
        for &l in &eig.values {
            if l < -crate::linalg::PSD_TOL {
                return Err(ProbeError::NotPositive { min_eigenvalue: l });
            }
            if l >= crate::linalg::EIGEN_FLOOR {
                total += l.powf(a);
            }
        }
        Ok(total)
    }

    pub fn fidelity(&self, alpha: AlphaParameter) -> Result<f64> {
        Ok(clamp_fidelity(self.raw(alpha)?))
    }
}

/// `F_a(rho1, rho2)`, clamped to `[0, 1]`.
pub fn alpha_fidelity(rho1: &DensityMatrix, rho2: &DensityMatrix, alpha: AlphaParameter) -> Result<f64> {
    FidelityEvaluator::new(rho1, rho2)?.fidelity(alpha)
}

/// `S_a(rho1 || rho2) = ln F_a / (a - 1)`; `+inf` when `F_a = 0`.
pub fn renyi_divergence(rho1: &DensityMatrix, rho2: &DensityMatrix, alpha: AlphaParameter) -> Result<f64> {
    let f = alpha_fidelity(rho1, rho2, alpha)?;
    if f <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(f.ln() / (alpha.value() - 1.0))
}

/// `F_a(phi1, phi2) - F_a(rho1, rho2) * xi_fid`. Nonnegative for states
/// produced by a common coupling from system states whose fidelity is `xi_fid`.
pub fn dpi_margin(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    phi1_rho1: &DensityMatrix,
    phi2_rho2: &DensityMatrix,
    xi_fid: f64,
    alpha: AlphaParameter,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&xi_fid) {
        return Err(ProbeError::InvalidParameter {
            name: "xi_fid",
            reason: format!("{xi_fid} is not in [0, 1]"),
        });
    }
    check_dims(rho1, phi1_rho1)?;
    let before = alpha_fidelity(rho1, rho2, alpha)?;
    let after = alpha_fidelity(phi1_rho1, phi2_rho2, alpha)?;
    Ok(after - before * xi_fid)
}
