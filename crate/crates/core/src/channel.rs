//! Birefringent wave-plate coupling between frequency and polarization.
//!
//! Each plate is a linear retarder: in its own axes it delays the second
//! polarization component by `2 pi w dn x / c`. A plate rotated by `theta` is
//! `R(theta) diag(1, e^{i phi}) R(theta)^T`. Global phases are dropped.

use std::f64::consts::PI;

use log::debug;
use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ProbeError, Result};
use crate::linalg::{partial_trace_env, ComplexMatrix, DensityMatrix};
use crate::spectra::{discretize, FrequencyGrid, GaussianSpectrum, DEFAULT_SPAN_SIGMAS, SPEED_OF_LIGHT};

/// Quartz near 810 nm.
pub const DEFAULT_BIREFRINGENCE: f64 = 0.00925;
/// Largest environment discretization accepted by the joint-state oracle.
pub const ORACLE_MAX_ENV: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavePlate {
    /// Meters.
    thickness: f64,
    /// Optical axis angle from the horizontal axis, radians.
    orientation: f64,
}

impl WavePlate {
    pub fn new(thickness: f64, orientation: f64) -> Result<Self> {
        if !(thickness > 0.0) || !thickness.is_finite() {
            return Err(ProbeError::InvalidParameter {
                name: "thickness",
                reason: format!("{thickness} m must be positive"),
            });
        }
        if !orientation.is_finite() {
            return Err(ProbeError::InvalidParameter {
                name: "orientation",
                reason: "orientation must be finite".into(),
            });
        }
        Ok(Self { thickness, orientation })
    }

    pub fn thickness(&self) -> f64 {
        self.thickness
    }

    pub fn orientation(&self) -> f64 {
        self.orientation
    }
}

/// Plates in the order the light traverses them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavePlateStack {
    plates: Vec<WavePlate>,
    birefringence: f64,
}

type Jones = Matrix2<Complex64>;

impl WavePlateStack {
    pub fn new(plates: Vec<WavePlate>, birefringence: f64) -> Result<Self> {
        if plates.is_empty() {
            return Err(ProbeError::InvalidParameter {
                name: "plates",
                reason: "stack needs at least one plate".into(),
            });
        }
        if birefringence == 0.0 || !birefringence.is_finite() {
            return Err(ProbeError::InvalidParameter {
                name: "birefringence",
                reason: format!("{birefringence} must be finite and nonzero"),
            });
        }
        Ok(Self { plates, birefringence })
    }

    /// Single plate with its axis horizontal.
    pub fn aligned(thickness: f64, birefringence: f64) -> Result<Self> {
        Self::new(vec![WavePlate::new(thickness, 0.0)?], birefringence)
    }

    pub fn plates(&self) -> &[WavePlate] {
        &self.plates
    }

    pub fn birefringence(&self) -> f64 {
        self.birefringence
    }

    pub fn total_thickness(&self) -> f64 {
        self.plates.iter().map(|p| p.thickness).sum()
    }

    /// Effective delay `dn * x / c` of one plate, seconds.
    pub fn plate_delay(&self, plate: &WavePlate) -> f64 {
        self.birefringence * plate.thickness / SPEED_OF_LIGHT
    }

    fn jones(&self, omega: f64) -> Jones {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let mut total = Jones::identity();
        for plate in &self.plates {
            let phase = Complex64::from_polar(1.0, 2.0 * PI * omega * self.plate_delay(plate));
            let (s, c) = plate.orientation.sin_cos();
            let rot = Jones::new(
                Complex64::new(c, 0.0),
                Complex64::new(-s, 0.0),
                Complex64::new(s, 0.0),
                Complex64::new(c, 0.0),
            );
            let retarder = Jones::new(one, zero, zero, phase);
            let m = rot * retarder * rot.transpose();
            total = m * total;
        }
        total
    }
}

fn to_complex_matrix(j: &Jones) -> ComplexMatrix {
    ComplexMatrix::from_fn(2, |r, c| j[(r, c)])
}

/// Polarization unitary of the stack at frequency `omega` (Hz).
pub fn jones_at_frequency(stack: &WavePlateStack, omega: f64) -> Result<ComplexMatrix> {
    if !(omega > 0.0) {
        return Err(ProbeError::InvalidParameter {
            name: "omega",
            reason: format!("frequency {omega} must be positive"),
        });
    }
    Ok(to_complex_matrix(&stack.jones(omega)))
}

fn require_qubit(rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != 2 {
        return Err(ProbeError::DimensionMismatch {
            expected: 2,
            actual: rho.dim(),
        });
    }
    Ok(())
}

/// Induced probe channel `sum_i w_i V(w_i) rho V(w_i)^dagger`.
///
/// `grid` should come from `spectrum`; a mismatched grid only degrades the
/// result as a quadrature of the wrong spectrum.
pub fn apply_channel(
    stack: &WavePlateStack,
    spectrum: &GaussianSpectrum,
    rho: &DensityMatrix,
    grid: &FrequencyGrid,
) -> Result<DensityMatrix> {
    require_qubit(rho)?;
    if (grid.mean() - spectrum.mu()).abs() > spectrum.sigma() {
        debug!("frequency grid mean {} is far from spectrum center {}", grid.mean(), spectrum.mu());
    }
    let r = rho.matrix();
    let input = Jones::new(r.get(0, 0), r.get(0, 1), r.get(1, 0), r.get(1, 1));
    let mut acc = Jones::zeros();
    for (&omega, &w) in grid.points().iter().zip(grid.weights()) {
        let v = stack.jones(omega);
        acc += (v * input * v.adjoint()) * Complex64::new(w, 0.0);
    }
    DensityMatrix::new(to_complex_matrix(&acc).hermitian_part())
}

/// [`apply_channel`] on the default discretization of `spectrum`.
pub fn apply_channel_default(stack: &WavePlateStack, spectrum: &GaussianSpectrum, rho: &DensityMatrix) -> Result<DensityMatrix> {
    let grid = discretize(spectrum, DEFAULT_SPAN_SIGMAS, crate::spectra::DEFAULT_GRID_POINTS)?;
    apply_channel(stack, spectrum, rho, &grid)
}

/// Brute-force reference: builds `rho ⊗ xi` on an `n_env`-point frequency
/// register, applies the frequency-controlled unitary `⊕_i V(w_i)` and traces
/// the register out.
pub fn apply_channel_oracle(
    stack: &WavePlateStack,
    spectrum: &GaussianSpectrum,
    rho: &DensityMatrix,
    n_env: usize,
) -> Result<DensityMatrix> {
    require_qubit(rho)?;
    if n_env > ORACLE_MAX_ENV {
        return Err(ProbeError::DimensionOverflow(2 * n_env));
    }
    let grid = discretize(spectrum, DEFAULT_SPAN_SIGMAS, n_env)?;
    let xi = ComplexMatrix::from_real_diagonal(grid.weights());
    let joint = rho.matrix().kron(&xi);
    let blocks: Vec<Jones> = grid.points().iter().map(|&w| stack.jones(w)).collect();
    let unitary = ComplexMatrix::from_fn(2 * n_env, |row, col| {
        let (p, e) = (row / n_env, row % n_env);
        let (q, f) = (col / n_env, col % n_env);
        if e == f {
            blocks[e][(p, q)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let evolved = joint.conjugate_by(&unitary);
    let reduced = partial_trace_env(&evolved, 2, n_env)?;
    DensityMatrix::new(reduced.hermitian_part())
}
