//! Dense complex Hermitian linear algebra.
//!
//! Everything here works on small dense matrices (qubits, qutrits and the
//! few-hundred-dimensional joint spaces of the channel oracle). Fractional
//! powers act on the support: eigenvalues below [`EIGEN_FLOOR`] are treated
//! as exact zeros.
//!
//! Tensor products follow the probe-major convention: in `A ⊗ B` the index of
//! `A` varies slowest, so joint index `a * dim_b + b`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ProbeError, Result};

/// Eigenvalues below this are treated as zero by fractional powers.
pub const EIGEN_FLOOR: f64 = 1e-12;
/// Entrywise Hermiticity tolerance for inputs.
pub const HERMITIAN_TOL: f64 = 1e-9;
/// Smallest eigenvalue still accepted as positive semidefinite.
pub const PSD_TOL: f64 = 1e-9;
/// Hermiticity tolerance for raw data that gets repaired into a state.
pub const REPAIR_HERMITIAN_TOL: f64 = 1e-6;

/// Square complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    /// Builds a matrix from `f(row, col)`.
    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self(DMatrix::from_fn(dim, dim, f))
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_slice(dim: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(ProbeError::MalformedMatrix(format!(
                "{} entries for a {dim}x{dim} matrix",
                entries.len()
            )));
        }
        Ok(Self(DMatrix::from_row_slice(dim, dim, entries)))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, |r, c| {
            if r == c {
                Complex64::new(diag[r], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Outer product `|v><v|`.
    pub fn projector(ket: &[Complex64]) -> Self {
        Self::from_fn(ket.len(), |r, c| ket[r] * ket[c].conj())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.0[(row, col)] = value;
    }

    pub fn as_nalgebra(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn from_nalgebra(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(ProbeError::MalformedMatrix(format!("{}x{} is not square", m.nrows(), m.ncols())));
        }
        Ok(Self(m))
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self(self.0.map(|z| z * factor))
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise `|M - M^dagger|`.
    pub fn max_asymmetry(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self.0[(r, c)] - self.0[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// `(M + M^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()).map(|z| z * 0.5))
    }

    /// Largest entrywise distance to `other`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        (&self.0 - &other.0).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Tensor product `self ⊗ other` (probe-major).
    pub fn kron(&self, other: &ComplexMatrix) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    /// `U M U^dagger`.
    pub fn conjugate_by(&self, unitary: &ComplexMatrix) -> Self {
        Self(&unitary.0 * &self.0 * unitary.0.adjoint())
    }

    pub fn diagonal_real(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim(), self.dim())?;
        for r in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|c| {
                    let z = self.0[(r, c)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

/// JSON interchange form: `{ "dim": n, "re": [[...]], "im": [[...]] }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = ProbeError;

    fn try_from(j: MatrixJson) -> Result<Self> {
        let rows_ok = |rows: &Vec<Vec<f64>>| rows.len() == j.dim && rows.iter().all(|r| r.len() == j.dim);
        if j.dim == 0 || !rows_ok(&j.re) || !rows_ok(&j.im) {
            return Err(ProbeError::MalformedMatrix(format!("re/im must both be {0}x{0} arrays", j.dim)));
        }
        Ok(Self::from_fn(j.dim, |r, c| Complex64::new(j.re[r][c], j.im[r][c])))
    }
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        let n = m.dim();
        MatrixJson {
            dim: n,
            re: (0..n).map(|r| (0..n).map(|c| m.get(r, c).re).collect()).collect(),
            im: (0..n).map(|r| (0..n).map(|c| m.get(r, c).im).collect()).collect(),
        }
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        ComplexMatrix::try_from(j).map_err(serde::de::Error::custom)
    }
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    /// Validates `m` against the state invariants.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let asym = m.max_asymmetry();
        if asym > HERMITIAN_TOL {
            return Err(ProbeError::NotHermitian { max_asymmetry: asym });
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-12 {
            return Err(ProbeError::NotUnitTrace { re: tr.re, im: tr.im });
        }
        let eig = eig_hermitian(&m)?;
        let min = eig.values.first().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(ProbeError::NotPositive { min_eigenvalue: min });
        }
        Ok(Self(m))
    }

    /// `|psi><psi|` for a (not necessarily normalized) ket.
    pub fn pure(ket: &[Complex64]) -> Result<Self> {
        let norm = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(ProbeError::InvalidParameter {
                name: "ket",
                reason: "zero vector".into(),
            });
        }
        let unit: Vec<Complex64> = ket.iter().map(|z| z / norm).collect();
        Self::new(ComplexMatrix::projector(&unit))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim).scale(1.0 / dim as f64))
    }

    /// Diagonal state from a probability vector.
    pub fn from_probabilities(p: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::from_real_diagonal(p))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    /// `U rho U^dagger`, revalidated.
    pub fn evolve(&self, unitary: &ComplexMatrix) -> Result<Self> {
        Self::new(self.0.conjugate_by(unitary))
    }

    /// Trace distance `||rho - sigma||_1 / 2`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(ProbeError::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        let diff = (&self.0 - &other.0).hermitian_part();
        let eig = eig_hermitian(&diff)?;
        Ok(0.5 * eig.values.iter().map(|v| v.abs()).sum::<f64>())
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(d)?;
        DensityMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `V f(diag(lambda)) V^dagger`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let v = self.vectors.as_nalgebra();
        let mut scaled = v.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let fl = f(lambda);
            scaled.column_mut(j).scale_mut(fl);
        }
        ComplexMatrix(scaled * v.adjoint())
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_spectrum(|l| l)
    }
}

pub fn eig_hermitian(m: &ComplexMatrix) -> Result<HermitianEigen> {
    let asym = m.max_asymmetry();
    if asym > HERMITIAN_TOL {
        return Err(ProbeError::NotHermitian { max_asymmetry: asym });
    }
    let eig = SymmetricEigen::new(m.hermitian_part().0);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let n = m.dim();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEigen {
        values,
        vectors: ComplexMatrix(vectors),
    })
}

/// Power of a PSD matrix acting on its support.
///
/// Eigenvalues below [`EIGEN_FLOOR`] map to zero for every `p`, so `p = 0`
/// yields the support projector.
pub fn mat_pow_psd(m: &ComplexMatrix, p: f64) -> Result<ComplexMatrix> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(ProbeError::InvalidParameter {
            name: "p",
            reason: format!("exponent {p} must be finite and nonnegative"),
        });
    }
    let eig = eig_hermitian(m)?;
    psd_power_of(&eig, p)
}

pub(crate) fn psd_power_of(eig: &HermitianEigen, p: f64) -> Result<ComplexMatrix> {
    if let Some(&min) = eig.values.first() {
        if min < -PSD_TOL {
            return Err(ProbeError::NotPositive { min_eigenvalue: min });
        }
    }
    Ok(eig.map_spectrum(|l| if l < EIGEN_FLOOR { 0.0 } else { l.powf(p) }))
}

/// Nearest-by-clipping physical state: Hermitize, clip negative eigenvalues,
/// renormalize.
pub fn project_to_state(m: &ComplexMatrix) -> Result<DensityMatrix> {
    let asym = m.max_asymmetry();
    if asym > REPAIR_HERMITIAN_TOL {
        return Err(ProbeError::NotHermitian { max_asymmetry: asym });
    }
    let eig = eig_hermitian(&m.hermitian_part())?;
    let total: f64 = eig.values.iter().map(|&l| l.max(0.0)).sum();
    if !(total > 0.0) {
        return Err(ProbeError::Unreconstructable("no positive eigenvalue left after clipping".into()));
    }
    let repaired = eig.map_spectrum(|l| l.max(0.0) / total).hermitian_part();
    DensityMatrix::new(repaired)
}

/// Traces out the environment factor of a probe-major joint matrix.
pub fn partial_trace_env(joint: &ComplexMatrix, dim_probe: usize, dim_env: usize) -> Result<ComplexMatrix> {
    let expected = dim_probe * dim_env;
    if joint.dim() != expected {
        return Err(ProbeError::DimensionMismatch {
            expected,
            actual: joint.dim(),
        });
    }
    let j = joint.as_nalgebra();
    Ok(ComplexMatrix::from_fn(dim_probe, |a, b| {
        (0..dim_env).map(|e| j[(a * dim_env + e, b * dim_env + e)]).sum()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_eigenvalues() {
        let e = eig_hermitian(&ComplexMatrix::identity(2)).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pauli_x_eigenvalues() {
        let x = ComplexMatrix::from_row_slice(2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]).unwrap();
        let e = eig_hermitian(&x).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        assert!(e.reconstruct().max_abs_diff(&x) < 1e-14);
    }

    #[test]
    fn non_hermitian_rejected_with_asymmetry() {
        let m = ComplexMatrix::from_row_slice(2, &[c(1., 0.), c(0.5, 0.), c(0., 0.), c(1., 0.)]).unwrap();
        match eig_hermitian(&m) {
            Err(ProbeError::NotHermitian { max_asymmetry }) => assert!((max_asymmetry - 0.5).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn power_examples() {
        let m = ComplexMatrix::from_real_diagonal(&[4.0, 9.0]);
        let r = mat_pow_psd(&m, 0.5).unwrap();
        assert!(r.max_abs_diff(&ComplexMatrix::from_real_diagonal(&[2.0, 3.0])) < 1e-13);
        assert!(mat_pow_psd(&m, 1.0).unwrap().max_abs_diff(&m) < 1e-13);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let proj = ComplexMatrix::projector(&[c(s, 0.), c(0., s)]);
        for p in [0.1, 0.5, 1.7] {
            assert!(mat_pow_psd(&proj, p).unwrap().max_abs_diff(&proj) < 1e-13);
        }
        // p = 0 gives the support projector, not the identity
        let supp = mat_pow_psd(&ComplexMatrix::from_real_diagonal(&[0.0, 2.0]), 0.0).unwrap();
        assert!(supp.max_abs_diff(&ComplexMatrix::from_real_diagonal(&[0.0, 1.0])) < 1e-14);
    }

    #[test]
    fn power_rejects_negative_spectrum() {
        let m = ComplexMatrix::from_real_diagonal(&[1.0, -1e-6]);
        assert!(matches!(mat_pow_psd(&m, 0.5), Err(ProbeError::NotPositive { .. })));
        // roundoff-level negatives are tolerated
        let m = ComplexMatrix::from_real_diagonal(&[1.0, -1e-11]);
        assert!(mat_pow_psd(&m, 0.5).is_ok());
    }

    #[test]
    fn projection_examples() {
        let r = project_to_state(&ComplexMatrix::from_real_diagonal(&[1.1, -0.1])).unwrap();
        assert!(r.matrix().max_abs_diff(&ComplexMatrix::from_real_diagonal(&[1.0, 0.0])) < 1e-14);
        let r = project_to_state(&ComplexMatrix::from_real_diagonal(&[0.6, 0.6])).unwrap();
        assert!(r.matrix().max_abs_diff(&ComplexMatrix::from_real_diagonal(&[0.5, 0.5])) < 1e-14);
        let rho = ComplexMatrix::from_row_slice(2, &[c(0.7, 0.), c(0.2, -0.1), c(0.2, 0.1), c(0.3, 0.)]).unwrap();
        let r = project_to_state(&rho).unwrap();
        assert!(r.matrix().max_abs_diff(&rho) < 1e-12);
        assert!(matches!(
            project_to_state(&ComplexMatrix::from_real_diagonal(&[-0.5, -0.5])),
            Err(ProbeError::Unreconstructable(_))
        ));
    }

    /// Brute-force check of the clip-then-normalize example: scan diagonal
    /// qubit states and pick the one closest to the clipped, renormalized input.
    #[test]
    fn projection_matches_grid_search() {
        let input = [1.1_f64, -0.1];
        let clipped: Vec<f64> = input.iter().map(|x| x.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        let target: Vec<f64> = clipped.iter().map(|x| x / total).collect();
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..=10_000 {
            let p = k as f64 / 10_000.0;
            let resid = (p - target[0]).powi(2) + (1.0 - p - target[1]).powi(2);
            if resid < best.0 {
                best = (resid, p);
            }
        }
        let got = project_to_state(&ComplexMatrix::from_real_diagonal(&input)).unwrap();
        assert!((got.matrix().get(0, 0).re - best.1).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_examples() {
        let rho = ComplexMatrix::from_row_slice(2, &[c(0.6, 0.), c(0.1, 0.2), c(0.1, -0.2), c(0.4, 0.)]).unwrap();
        let xi = ComplexMatrix::from_real_diagonal(&[0.2, 0.3, 0.5]).scale(2.0);
        let out = partial_trace_env(&rho.kron(&xi), 2, 3).unwrap();
        assert!(out.max_abs_diff(&rho.scale(2.0)) < 1e-14);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = ComplexMatrix::projector(&[c(s, 0.), c(0., 0.), c(0., 0.), c(s, 0.)]);
        let red = partial_trace_env(&bell, 2, 2).unwrap();
        assert!(red.max_abs_diff(&ComplexMatrix::identity(2).scale(0.5)) < 1e-15);

        assert!(matches!(
            partial_trace_env(&bell, 2, 3),
            Err(ProbeError::DimensionMismatch { expected: 6, actual: 4 })
        ));
    }

    #[test]
    fn density_validation() {
        assert!(DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[0.5, 0.6])).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[1.2, -0.2])).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[0.3, 0.7])).is_ok());
    }

    #[test]
    fn matrix_json_round_trip() {
        let m = ComplexMatrix::from_row_slice(2, &[c(0.6, 0.), c(0.1, 0.2), c(0.1, -0.2), c(0.4, 0.)]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.starts_with("{\"dim\":2,\"re\":[[0.6,0.1],[0.1,0.4]]"));
        let back: ComplexMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let bad = r#"{"dim":2,"re":[[1,0]],"im":[[0,0],[0,0]]}"#;
        assert!(serde_json::from_str::<ComplexMatrix>(bad).is_err());
    }
}
