//! Coupling-agnostic quantum probing.
//!
//! Two equal-width Gaussian frequency spectra, shifted by a known amount,
//! induce two unknown channels on a polarization probe. Comparing
//! alpha-fidelities of the probe states before and after the interaction
//! gives upper bounds on the unknown spectral width without any model of the
//! coupling. The crate provides the fidelities ([`fidelity`]), the bounds
//! ([`bounds`]), a birefringent wave-plate simulator to generate data
//! ([`channel`], [`spectra`]), simulated tomography ([`tomography`]) and the
//! scenario runner behind the `qprobe` binary ([`runner`]).

// `!(x > 0.0)` style checks are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod channel;
pub mod error;
pub mod fidelity;
pub mod fixtures;
pub mod linalg;
pub mod runner;
pub mod spectra;
pub mod tomography;

pub use bounds::{tightest_bound, BoundCurve, Family, Order, ProbingRecord};
pub use channel::{apply_channel, WavePlate, WavePlateStack};
pub use error::{ProbeError, Result};
pub use fidelity::{alpha_fidelity, AlphaParameter};
pub use linalg::{ComplexMatrix, DensityMatrix};
pub use spectra::GaussianSpectrum;
