//! Simulated polarization tomography with Poissonian coincidence counts.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{tightest_bound, ProbingRecord};
use crate::error::{ProbeError, Result};
use crate::fidelity::AlphaParameter;
use crate::linalg::{project_to_state, ComplexMatrix, DensityMatrix};

pub const DEFAULT_COUNT_RATE: f64 = 200.0;
pub const DEFAULT_INTEGRATION_TIME: f64 = 60.0;

/// The three mutually unbiased qubit bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    /// Horizontal (+) / vertical (-); measures sigma_z.
    Rectilinear,
    /// +45 (+) / -45 (-); measures sigma_x.
    Diagonal,
    /// (H + iV)/sqrt2 (+) / (H - iV)/sqrt2 (-); measures sigma_y.
    Circular,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::Rectilinear, Basis::Diagonal, Basis::Circular];

    /// Kets of the `+` and `-` outcomes.
    pub fn kets(self) -> [[Complex64; 2]; 2] {
        let r = |x: f64| Complex64::new(x, 0.0);
        let s = FRAC_1_SQRT_2;
        match self {
            Basis::Rectilinear => [[r(1.0), r(0.0)], [r(0.0), r(1.0)]],
            Basis::Diagonal => [[r(s), r(s)], [r(s), r(-s)]],
            Basis::Circular => [[r(s), Complex64::new(0.0, s)], [r(s), Complex64::new(0.0, -s)]],
        }
    }

    fn pauli(self) -> ComplexMatrix {
        let z = Complex64::new(0.0, 0.0);
        let o = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let entries = match self {
            Basis::Rectilinear => [o, z, z, -o],
            Basis::Diagonal => [z, o, o, z],
            Basis::Circular => [z, -i, i, z],
        };
        ComplexMatrix::from_row_slice(2, &entries).expect("2x2")
    }
}

/// How counts are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// Independent Poisson counts.
    Poisson,
    /// Expected counts rounded to integers; no randomness.
    Expected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TomographySettings {
    /// Seconds per basis.
    pub integration_time: f64,
    /// Expected coincidences per second.
    pub count_rate: f64,
    pub seed: u64,
    pub sampling: Sampling,
}

impl TomographySettings {
    pub fn new(integration_time: f64, count_rate: f64, seed: u64) -> Result<Self> {
        let s = Self {
            integration_time,
            count_rate,
            seed,
            sampling: Sampling::Poisson,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn noiseless(self) -> Self {
        Self {
            sampling: Sampling::Expected,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.integration_time > 0.0) || !self.integration_time.is_finite() {
            return Err(ProbeError::InvalidParameter {
                name: "integration_time",
                reason: format!("{} s must be positive", self.integration_time),
            });
        }
        if !(self.count_rate > 0.0) || !self.count_rate.is_finite() {
            return Err(ProbeError::InvalidParameter {
                name: "count_rate",
                reason: format!("{} /s must be positive", self.count_rate),
            });
        }
        Ok(())
    }

    /// Expected total counts per basis.
    pub fn expected_total(&self) -> f64 {
        self.count_rate * self.integration_time
    }
}

/// Outcome counts `[n_plus, n_minus]` per basis.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRecord {
    pub rectilinear: [u64; 2],
    pub diagonal: [u64; 2],
    pub circular: [u64; 2],
}

impl CountRecord {
    pub fn get(&self, basis: Basis) -> [u64; 2] {
        match basis {
            Basis::Rectilinear => self.rectilinear,
            Basis::Diagonal => self.diagonal,
            Basis::Circular => self.circular,
        }
    }

    fn slot(&mut self, basis: Basis) -> &mut [u64; 2] {
        match basis {
            Basis::Rectilinear => &mut self.rectilinear,
            Basis::Diagonal => &mut self.diagonal,
            Basis::Circular => &mut self.circular,
        }
    }

    /// Counts equal to `total * p`, rounded, for a noiseless round trip.
    pub fn exact(rho: &DensityMatrix, total: f64) -> Result<Self> {
        let mut rec = CountRecord::default();
        for basis in Basis::ALL {
            let (p, m) = born_probabilities(rho, basis)?;
            *rec.slot(basis) = [(total * p).round() as u64, (total * m).round() as u64];
        }
        Ok(rec)
    }
}

/// Born-rule probabilities of the two outcomes of `basis`.
pub fn born_probabilities(rho: &DensityMatrix, basis: Basis) -> Result<(f64, f64)> {
    if rho.dim() != 2 {
        return Err(ProbeError::DimensionMismatch {
            expected: 2,
            actual: rho.dim(),
        });
    }
    let m = rho.matrix();
    let expect = |ket: &[Complex64; 2]| -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..2 {
            for c in 0..2 {
                acc += ket[r].conj() * m.get(r, c) * ket[c];
            }
        }
        acc.re.clamp(0.0, 1.0)
    };
    let [plus, minus] = basis.kets();
    Ok((expect(&plus), expect(&minus)))
}

/// Born probabilities in all three bases, in [`Basis::ALL`] order.
pub fn all_probabilities(rho: &DensityMatrix) -> Result<[(f64, f64); 3]> {
    Ok([
        born_probabilities(rho, Basis::Rectilinear)?,
        born_probabilities(rho, Basis::Diagonal)?,
        born_probabilities(rho, Basis::Circular)?,
    ])
}

/// Counter-based stream: the same `(seed, stream)` always yields the same
/// sequence, independent of how many other streams exist.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw<R: Rng>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let poisson = Poisson::new(mean).expect("positive finite mean");
    poisson.sample(rng) as u64
}

/// Draws counts for the three bases (probabilities in [`Basis::ALL`] order)
/// from stream `stream` of the settings' seed.
pub fn sample_counts(probabilities: &[(f64, f64); 3], settings: &TomographySettings, stream: u64) -> Result<CountRecord> {
    settings.validate()?;
    let total = settings.expected_total();
    let mut rec = CountRecord::default();
    match settings.sampling {
        Sampling::Expected => {
            for (basis, &(p, m)) in Basis::ALL.iter().zip(probabilities) {
                *rec.slot(*basis) = [(total * p).round() as u64, (total * m).round() as u64];
            }
        }
        Sampling::Poisson => {
            let mut rng = stream_rng(settings.seed, stream);
            for (basis, &(p, m)) in Basis::ALL.iter().zip(probabilities) {
                let plus = draw(total * p, &mut rng);
                let minus = draw(total * m, &mut rng);
                *rec.slot(*basis) = [plus, minus];
            }
        }
    }
    Ok(rec)
}

/// Linear inversion `(I + sum <s_k> s_k) / 2` followed by projection onto
/// the nearest valid state.
pub fn reconstruct(counts: &CountRecord) -> Result<DensityMatrix> {
    let mut m = ComplexMatrix::identity(2);
    for basis in Basis::ALL {
        let [plus, minus] = counts.get(basis);
        let total = plus + minus;
        if total == 0 {
            return Err(ProbeError::Unreconstructable(format!("no counts in the {basis:?} basis")));
        }
        let expectation = (plus as f64 - minus as f64) / total as f64;
        m = &m + &basis.pauli().scale(expectation);
    }
    project_to_state(&m.scale(0.5))
}

/// Simulates tomography of `rho` on stream `stream` and reconstructs it.
pub fn measure_state(rho: &DensityMatrix, settings: &TomographySettings, stream: u64) -> Result<DensityMatrix> {
    reconstruct(&sample_counts(&all_probabilities(rho)?, settings, stream)?)
}

/// Aggregate of repeated noisy tomography runs of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub mean_b_inf_hz: f64,
    pub std_b_inf_hz: f64,
    pub no_info_fraction: f64,
    pub replicas: usize,
    pub seed: u64,
    /// Per-replica tightest bound; `None` marks a no-information replica.
    #[serde(skip)]
    pub b_inf: Vec<Option<f64>>,
}

impl MonteCarloReport {
    /// Fraction of replicas whose bound fell below `sigma`, i.e. where
    /// counting noise broke the inequality.
    pub fn fraction_below(&self, sigma: f64) -> f64 {
        let below = self.b_inf.iter().filter(|b| matches!(b, Some(v) if *v < sigma)).count();
        below as f64 / self.replicas as f64
    }
}

/// Re-simulates tomography of all four states `replicas` times, each replica
/// on its own RNG streams, and aggregates the tightest bounds.
pub fn monte_carlo_bounds(
    truth: &ProbingRecord,
    settings: &TomographySettings,
    replicas: usize,
    alpha_grid: &[AlphaParameter],
) -> Result<MonteCarloReport> {
    if replicas < 2 {
        return Err(ProbeError::InvalidParameter {
            name: "replicas",
            reason: format!("{replicas} replicas; need at least 2"),
        });
    }
    settings.validate()?;
    let states = [truth.rho1(), truth.rho2(), truth.phi1_rho1(), truth.phi2_rho2()];
    let probabilities: Vec<[(f64, f64); 3]> = states.iter().map(|s| all_probabilities(s)).collect::<Result<_>>()?;

    let b_inf: Vec<Option<f64>> = (0..replicas)
        .into_par_iter()
        .map(|replica| {
            let mut measured = Vec::with_capacity(4);
            for (k, p) in probabilities.iter().enumerate() {
                let stream = (replica as u64) * 4 + k as u64;
                measured.push(reconstruct(&sample_counts(p, settings, stream)?)?);
            }
            let mut it = measured.into_iter();
            let (r1, r2, p1, p2) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
            let record = ProbingRecord::new(r1, r2, p1, p2, truth.delta_mu())?;
            Ok(tightest_bound(&record, alpha_grid)?.b_inf.map(|b| b.value))
        })
        .collect::<Result<_>>()?;

    let present: Vec<f64> = b_inf.iter().flatten().copied().collect();
    let no_info_fraction = (replicas - present.len()) as f64 / replicas as f64;
    if present.is_empty() {
        return Err(ProbeError::AllNoInformation { no_info_fraction });
    }
    // Welford in replica order: deterministic, and exact for equal values.
    let (mut mean, mut m2) = (0.0, 0.0);
    for (k, &b) in present.iter().enumerate() {
        let delta = b - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (b - mean);
    }
    let std = if present.len() > 1 {
        (m2 / (present.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(MonteCarloReport {
        mean_b_inf_hz: mean,
        std_b_inf_hz: std,
        no_info_fraction,
        replicas,
        seed: settings.seed,
        b_inf,
    })
}

/// Mean of `|a_i - b_i| / b_i` over replicas where both runs produced a
/// bound; compares e.g. short against long integration on paired replicas.
pub fn relative_bound_difference(a: &MonteCarloReport, b: &MonteCarloReport) -> Option<f64> {
    let diffs: Vec<f64> = a
        .b_inf
        .iter()
        .zip(&b.b_inf)
        .filter_map(|(x, y)| match (x, y) {
            (Some(x), Some(y)) if *y > 0.0 => Some((x - y).abs() / y),
            _ => None,
        })
        .collect();
    if diffs.is_empty() {
        None
    } else {
        Some(diffs.iter().sum::<f64>() / diffs.len() as f64)
    }
}
