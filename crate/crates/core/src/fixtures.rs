//! Measured probe states of the 5 mm quartz-plate experiment, to the printed
//! three decimals, with the experiment's control shift and reference width.
//!
//! Basis order is (horizontal, vertical).

use num_complex::Complex64;

use crate::bounds::ProbingRecord;
use crate::linalg::{ComplexMatrix, DensityMatrix};

/// Center shift between the two spectra, Hz.
pub const DELTA_MU_HZ: f64 = 7.95e11;
/// Actual spectral width, Hz. Only used to express bounds in units of sigma.
pub const SIGMA_HZ: f64 = 5.68e11;

fn qubit(p00: f64, off_re: f64, off_im: f64) -> DensityMatrix {
    let m = ComplexMatrix::from_row_slice(
        2,
        &[
            Complex64::new(p00, 0.0),
            Complex64::new(off_re, off_im),
            Complex64::new(off_re, -off_im),
            Complex64::new(1.0 - p00, 0.0),
        ],
    )
    .expect("2x2");
    DensityMatrix::new(m).expect("fixture is a valid state")
}

/// Initial probe for the first spectrum. The printed lower-left entry reads
/// `0.482 + 0.06i`; the Hermitian partner of the upper-right `0.482 - 0.006i`
/// is used.
pub fn rho1() -> DensityMatrix {
    qubit(0.513, 0.482, -0.006)
}

pub fn rho2() -> DensityMatrix {
    qubit(0.535, 0.496, -0.017)
}

pub fn phi1_rho1() -> DensityMatrix {
    qubit(0.51, 0.435, 0.073)
}

pub fn phi2_rho2() -> DensityMatrix {
    qubit(0.509, 0.257, 0.329)
}

pub fn record_5mm() -> ProbingRecord {
    ProbingRecord::new(rho1(), rho2(), phi1_rho1(), phi2_rho2(), DELTA_MU_HZ).expect("valid record")
}
