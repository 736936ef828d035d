//! Gaussian frequency spectra of the system.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ProbeError, Result};
use crate::fidelity::AlphaParameter;

/// Vacuum speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const DEFAULT_SPAN_SIGMAS: f64 = 6.0;
pub const DEFAULT_GRID_POINTS: usize = 2001;

/// Gaussian intensity distribution `|g(w)|^2` with mean `mu` and standard
/// deviation `sigma`, both in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpectrum {
    mu: f64,
    sigma: f64,
}

impl GaussianSpectrum {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(ProbeError::InvalidParameter {
                name: "mu",
                reason: format!("central frequency {mu} must be positive"),
            });
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(ProbeError::InvalidParameter {
                name: "sigma",
                reason: format!("width {sigma} must be positive"),
            });
        }
        Ok(Self { mu, sigma })
    }

    /// From a center wavelength and a wavelength width, both in nm.
    pub fn from_wavelength_nm(center_nm: f64, width_nm: f64) -> Result<Self> {
        if !(center_nm > 0.0) {
            return Err(ProbeError::InvalidParameter {
                name: "center_nm",
                reason: format!("{center_nm} must be positive"),
            });
        }
        Self::new(wavelength_nm_to_hz(center_nm), wavelength_width_to_hz(center_nm, width_nm))
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Same width, center moved by `shift` Hz.
    pub fn shifted(&self, shift: f64) -> Result<Self> {
        Self::new(self.mu + shift, self.sigma)
    }

    pub fn density(&self, omega: f64) -> f64 {
        let z = (omega - self.mu) / self.sigma;
        (-0.5 * z * z).exp() / (self.sigma * (2.0 * PI).sqrt())
    }
}

/// `nu = c / lambda`.
pub fn wavelength_nm_to_hz(lambda_nm: f64) -> f64 {
    SPEED_OF_LIGHT / (lambda_nm * 1e-9)
}

/// `sigma_nu = c * sigma_lambda / lambda^2`.
pub fn wavelength_width_to_hz(center_nm: f64, width_nm: f64) -> f64 {
    let lambda = center_nm * 1e-9;
    SPEED_OF_LIGHT * width_nm * 1e-9 / (lambda * lambda)
}

/// Quadrature nodes and normalized weights.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl FrequencyGrid {
    /// Weights are renormalized to sum to one.
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(ProbeError::InvalidParameter {
                name: "weights",
                reason: format!("{} points vs {} weights", points.len(), weights.len()),
            });
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(ProbeError::InvalidParameter {
                name: "weights",
                reason: "weights must be nonnegative".into(),
            });
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(ProbeError::InvalidParameter {
                name: "weights",
                reason: "weights sum to zero".into(),
            });
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { points, weights })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.points.iter().zip(&self.weights).map(|(x, w)| x * w).sum()
    }

    /// Quadrature of `sum_i w_i exp(i 2 pi tau w_i)`.
    pub fn characteristic(&self, tau: f64) -> Complex64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&omega, &w)| Complex64::from_polar(w, 2.0 * PI * tau * omega))
            .sum()
    }
}

/// Uniform grid of `n` points over `mu ± span_sigmas * sigma`, weighted by
/// the Gaussian density.
pub fn discretize(s: &GaussianSpectrum, span_sigmas: f64, n: usize) -> Result<FrequencyGrid> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(ProbeError::InvalidParameter {
            name: "n",
            reason: format!("grid size {n} must be odd and at least 3"),
        });
    }
    if !(span_sigmas > 0.0) {
        return Err(ProbeError::InvalidParameter {
            name: "span_sigmas",
            reason: format!("{span_sigmas} must be positive"),
        });
    }
    let half = (n / 2) as f64;
    let step = span_sigmas * s.sigma / half;
    let offsets: Vec<f64> = (0..n).map(|i| (i as f64 - half) * step).collect();
    let points = offsets.iter().map(|d| s.mu + d).collect();
    let weights = offsets
        .iter()
        .map(|d| {
            let z = d / s.sigma;
            (-0.5 * z * z).exp()
        })
        .collect();
    FrequencyGrid::new(points, weights)
}

/// Closed-form alpha-fidelity of two equal-width Gaussian spectra:
/// `exp(-(1 - a) a dmu^2 / (2 sigma^2))`.
pub fn gaussian_alpha_fidelity(s1: &GaussianSpectrum, s2: &GaussianSpectrum, alpha: AlphaParameter) -> Result<f64> {
    let rel = (s1.sigma - s2.sigma).abs() / s1.sigma.max(s2.sigma);
    if rel > 1e-9 {
        return Err(ProbeError::UnequalWidths {
            sigma1: s1.sigma,
            sigma2: s2.sigma,
        });
    }
    let a = alpha.value();
    let dmu = (s2.mu - s1.mu).abs();
    Ok(gaussian_fidelity_from_ratio(dmu / s1.sigma, a))
}

/// Closed form in terms of `dmu / sigma`.
pub fn gaussian_fidelity_from_ratio(ratio: f64, alpha: f64) -> f64 {
    (-(1.0 - alpha) * alpha * ratio * ratio / 2.0).exp()
}

/// Classical alpha-fidelity `sum p_i^a q_i^(1-a)` of two spectra sampled on a
/// shared uniform grid. Handles unequal widths.
pub fn discrete_alpha_fidelity(
    s1: &GaussianSpectrum,
    s2: &GaussianSpectrum,
    alpha: AlphaParameter,
    span_sigmas: f64,
    n: usize,
) -> Result<f64> {
    if n < 3 {
        return Err(ProbeError::InvalidParameter {
            name: "n",
            reason: format!("grid size {n} must be at least 3"),
        });
    }
    let lo = (s1.mu - span_sigmas * s1.sigma).min(s2.mu - span_sigmas * s2.sigma);
    let hi = (s1.mu + span_sigmas * s1.sigma).max(s2.mu + span_sigmas * s2.sigma);
    let step = (hi - lo) / (n - 1) as f64;
    let omegas: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
    let normalized = |s: &GaussianSpectrum| {
        let raw: Vec<f64> = omegas.iter().map(|&w| s.density(w)).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / total).collect::<Vec<_>>()
    };
    let p = normalized(s1);
    let q = normalized(s2);
    let a = alpha.value();
    Ok(p.iter()
        .zip(&q)
        .filter(|(pi, qi)| **pi > 0.0 && **qi > 0.0)
        .map(|(pi, qi)| pi.powf(a) * qi.powf(1.0 - a))
        .sum())
}

/// Dephasing coefficient `kappa(tau) = exp(i 2 pi tau mu - (2 pi tau sigma)^2 / 2)`,
/// the characteristic function of the spectrum at effective delay `tau`
/// (birefringence times thickness over c, in seconds).
pub fn kappa(s: &GaussianSpectrum, tau: f64) -> Complex64 {
    let spread = 2.0 * PI * tau * s.sigma;
    Complex64::from_polar((-0.5 * spread * spread).exp(), 2.0 * PI * tau * s.mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_pair() -> (GaussianSpectrum, GaussianSpectrum) {
        let s1 = GaussianSpectrum::new(3.7e14, 5.68e11).unwrap();
        (s1, s1.shifted(7.95e11).unwrap())
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GaussianSpectrum::new(-1.0, 1.0).is_err());
        assert!(GaussianSpectrum::new(1.0, 0.0).is_err());
        let s = GaussianSpectrum::new(1.0, 1.0).unwrap();
        assert!(discretize(&s, 6.0, 2000).is_err());
        assert!(discretize(&s, 6.0, 1).is_err());
        assert!(discretize(&s, 0.0, 11).is_err());
    }

    #[test]
    fn closed_form_examples() {
        let (s1, s2) = paper_pair();
        let a = AlphaParameter::new(0.5).unwrap();
        assert_eq!(gaussian_alpha_fidelity(&s1, &s1, a).unwrap(), 1.0);
        let f = gaussian_alpha_fidelity(&s1, &s2, a).unwrap();
        let expect = (-(7.95_f64 / 5.68).powi(2) / 8.0).exp();
        assert!((f - expect).abs() < 1e-15);
        assert!((f - 0.7828).abs() < 5e-5);
        assert_eq!(f, gaussian_alpha_fidelity(&s2, &s1, a).unwrap());
    }

    #[test]
    fn closed_form_rejects_unequal_widths() {
        let s1 = GaussianSpectrum::new(1e14, 1e11).unwrap();
        let s2 = GaussianSpectrum::new(1e14, 2e11).unwrap();
        let a = AlphaParameter::new(0.5).unwrap();
        assert!(matches!(
            gaussian_alpha_fidelity(&s1, &s2, a),
            Err(ProbeError::UnequalWidths { .. })
        ));
        assert!(discrete_alpha_fidelity(&s1, &s2, a, 8.0, 4001).unwrap() < 1.0);
    }

    #[test]
    fn grid_properties() {
        let s = GaussianSpectrum::new(3.7e14, 5.68e11).unwrap();
        let g = discretize(&s, DEFAULT_SPAN_SIGMAS, DEFAULT_GRID_POINTS).unwrap();
        assert_eq!(g.len(), 2001);
        assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let center = g.weights()[1000];
        assert!(g.weights().iter().all(|&w| w <= center));
        assert!((g.points()[1000] - s.mu()).abs() < 1e-3);
        // weighted mean computed directly, relative to mu to avoid cancellation
        let mean_offset: f64 = g.points().iter().zip(g.weights()).map(|(x, w)| (x - s.mu()) * w).sum();
        assert!(mean_offset.abs() < 1e-9 * s.sigma());
    }

    #[test]
    fn kappa_examples() {
        let s = GaussianSpectrum::new(3.7e14, 5.68e11).unwrap();
        assert_eq!(kappa(&s, 0.0), Complex64::new(1.0, 0.0));
        let tau = 1.0 / (2.0 * PI * s.sigma());
        assert!((kappa(&s, tau).norm() - (-0.5_f64).exp()).abs() < 1e-15);
        assert!((kappa(&s, tau).norm() - 0.60653).abs() < 1e-5);
    }

    #[test]
    fn kappa_matches_quadrature() {
        let s = GaussianSpectrum::new(3.7e14, 5.68e11).unwrap();
        let g = discretize(&s, DEFAULT_SPAN_SIGMAS, DEFAULT_GRID_POINTS).unwrap();
        for tau in [0.0, 3e-14, 1.5e-13, 4.6e-13, -2e-13, 1e-12] {
            let d = (kappa(&s, tau) - g.characteristic(tau)).norm();
            assert!(d < 1e-6, "tau {tau}: {d}");
        }
    }

    #[test]
    fn wavelength_conversion() {
        let s = GaussianSpectrum::from_wavelength_nm(810.0, 1.24).unwrap();
        assert!((s.sigma() / 5.68e11 - 1.0).abs() < 0.01);
        let dmu = wavelength_width_to_hz(810.0, 1.73);
        assert!((dmu / 7.95e11 - 1.0).abs() < 0.01);
    }
}
