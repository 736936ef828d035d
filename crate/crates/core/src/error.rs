use thiserror::Error;

/// Errors produced by the probing library.
#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("matrix is not Hermitian: max |M - M^dagger| = {max_asymmetry:.3e}")]
    NotHermitian { max_asymmetry: f64 },

    #[error("matrix is not positive semidefinite: smallest eigenvalue {min_eigenvalue:.3e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("trace {re:.12} + {im:.3e}i is not one")]
    NotUnitTrace { re: f64, im: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix data malformed: {0}")]
    MalformedMatrix(String),

    #[error("state cannot be reconstructed: {0}")]
    Unreconstructable(String),

    #[error("invalid alpha {0}: must lie in (0, 1)")]
    InvalidAlpha(f64),

    #[error("alpha {0} outside [0.5, 1) where the fidelity inequality holds")]
    AlphaOutsideBoundRange(f64),

    #[error("unequal spectral widths ({sigma1:e} Hz vs {sigma2:e} Hz): the closed form needs a shared sigma, use discrete_alpha_fidelity instead")]
    UnequalWidths { sigma1: f64, sigma2: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate control: delta_mu = 0 only yields the trivial condition sigma >= 0")]
    DegenerateControl,

    #[error("joint dimension {0} exceeds the oracle limit")]
    DimensionOverflow(usize),

    #[error("no replica produced a bound (no-information fraction {no_info_fraction})")]
    AllNoInformation { no_info_fraction: f64 },
}

pub type Result<T> = std::result::Result<T, ProbeError>;
