//! Scenario configs, the simulation pipeline and report emission.
//!
//! A run writes CSV and JSON artifacts into an output directory. Everything
//! except the `generated_unix_s` field of `report.json` is a pure function of
//! the config.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{sci, tightest_bound, BoundCurve, BoundSummary, Family, ProbingRecord};
use crate::channel::{apply_channel, WavePlate, WavePlateStack, DEFAULT_BIREFRINGENCE};
use crate::error::ProbeError;
use crate::fidelity::{alpha_grid, AlphaParameter, DEFAULT_ALPHA_MAX, DEFAULT_ALPHA_MIN, DEFAULT_ALPHA_POINTS};
use crate::fixtures;
use crate::linalg::DensityMatrix;
use crate::spectra::{discretize, wavelength_nm_to_hz, wavelength_width_to_hz, GaussianSpectrum, DEFAULT_GRID_POINTS, DEFAULT_SPAN_SIGMAS};
use crate::tomography::{
    measure_state, monte_carlo_bounds, stream_rng, MonteCarloReport, Sampling, TomographySettings, DEFAULT_COUNT_RATE,
};

pub const SCHEMA: &str = "qprobe.scenario/1";

/// Failures of a run, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("golden check failed: {}", .0.join("; "))]
    Golden(Vec<String>),

    #[error("no information: the fidelity fraction is >= 1 at every alpha, so no bound on sigma follows")]
    NoInformation,

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: ProbeError,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config { .. } => 2,
            RunError::Golden(_) => 3,
            RunError::NoInformation => 4,
            RunError::Stage { .. } | RunError::Io { .. } => 1,
        }
    }

    fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        RunError::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T, RunError>;
}

impl<T> StageExt<T> for Result<T, ProbeError> {
    fn stage(self, stage: &'static str) -> Result<T, RunError> {
        self.map_err(|source| RunError::Stage { stage, source })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpectraConfig {
    Frequency { mu1_hz: f64, mu2_hz: f64, sigma_hz: f64 },
    Wavelength { center1_nm: f64, center2_nm: f64, width_nm: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeLiteral {
    /// `|+><+|`, the diagonal polarization.
    #[serde(rename = "plus")]
    Plus,
    /// The measured initial state of the 5 mm experiment for this slot.
    #[serde(rename = "paper")]
    Paper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProbeConfig {
    Literal(ProbeLiteral),
    Matrix(DensityMatrix),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbesConfig {
    pub rho1: ProbeConfig,
    pub rho2: ProbeConfig,
}

impl Default for ProbesConfig {
    fn default() -> Self {
        Self {
            rho1: ProbeConfig::Literal(ProbeLiteral::Plus),
            rho2: ProbeConfig::Literal(ProbeLiteral::Plus),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RandomLiteral {
    #[serde(rename = "random")]
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OrientationConfig {
    Degrees(f64),
    Random(RandomLiteral),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateConfig {
    pub thickness_mm: f64,
    pub orientation_deg: OrientationConfig,
}

fn default_birefringence() -> f64 {
    DEFAULT_BIREFRINGENCE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackConfig {
    #[serde(default = "default_birefringence")]
    pub birefringence: f64,
    /// Seed for resolving `"random"` orientations.
    #[serde(default)]
    pub orientation_seed: u64,
    pub plates: Vec<PlateConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CouplingLiteral {
    /// Use the measured states of the 5 mm experiment instead of a simulation.
    #[serde(rename = "paper-matrices")]
    PaperMatrices,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CouplingConfig {
    Literal(CouplingLiteral),
    Stack(StackConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExactLiteral {
    #[serde(rename = "exact-states")]
    ExactStates,
}

fn default_count_rate() -> f64 {
    DEFAULT_COUNT_RATE
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographyConfig {
    pub integration_time_s: f64,
    #[serde(default = "default_count_rate")]
    pub count_rate_hz: f64,
    #[serde(default)]
    pub seed: u64,
    /// Monte-Carlo replicas on top of the single measured record; 0 disables.
    #[serde(default)]
    pub replicas: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TomographyChoice {
    Exact(ExactLiteral),
    Simulated(TomographyConfig),
}

impl Default for TomographyChoice {
    fn default() -> Self {
        TomographyChoice::Exact(ExactLiteral::ExactStates)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaGridConfig {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for AlphaGridConfig {
    fn default() -> Self {
        Self {
            min: DEFAULT_ALPHA_MIN,
            max: DEFAULT_ALPHA_MAX,
            points: DEFAULT_ALPHA_POINTS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyGridConfig {
    pub span_sigmas: f64,
    pub points: usize,
}

impl Default for FrequencyGridConfig {
    fn default() -> Self {
        Self {
            span_sigmas: DEFAULT_SPAN_SIGMAS,
            points: DEFAULT_GRID_POINTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub thicknesses_mm: Vec<f64>,
}

/// Top-level scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: String,
    /// The width (`sigma_hz` / `width_nm`) drives the simulation and labels
    /// reports; the bounds never read it.
    pub spectra: SpectraConfig,
    #[serde(default)]
    pub probes: ProbesConfig,
    pub coupling: CouplingConfig,
    #[serde(default)]
    pub tomography: TomographyChoice,
    #[serde(default)]
    pub alpha_grid: AlphaGridConfig,
    #[serde(default)]
    pub frequency_grid: FrequencyGridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    /// Exit with the no-information code when no bound results.
    #[serde(default)]
    pub require_bound: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            RunError::config(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(|source| RunError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.schema != SCHEMA {
            return Err(RunError::config(
                "schema",
                format!("expected \"{SCHEMA}\", got \"{}\"", self.schema),
            ));
        }
        let positive = |path: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(RunError::config(path, format!("{v} must be positive")))
            }
        };
        match self.spectra {
            SpectraConfig::Frequency { mu1_hz, mu2_hz, sigma_hz } => {
                positive("spectra.mu1_hz", mu1_hz)?;
                positive("spectra.mu2_hz", mu2_hz)?;
                positive("spectra.sigma_hz", sigma_hz)?;
            }
            SpectraConfig::Wavelength {
                center1_nm,
                center2_nm,
                width_nm,
            } => {
                positive("spectra.center1_nm", center1_nm)?;
                positive("spectra.center2_nm", center2_nm)?;
                positive("spectra.width_nm", width_nm)?;
            }
        }
        if let CouplingConfig::Stack(stack) = &self.coupling {
            if stack.plates.is_empty() {
                return Err(RunError::config("coupling.plates", "at least one plate is required"));
            }
            if stack.birefringence == 0.0 || !stack.birefringence.is_finite() {
                return Err(RunError::config("coupling.birefringence", "must be finite and nonzero"));
            }
            for (i, p) in stack.plates.iter().enumerate() {
                positive(&format!("coupling.plates[{i}].thickness_mm"), p.thickness_mm)?;
                if let OrientationConfig::Degrees(d) = p.orientation_deg {
                    if !d.is_finite() {
                        return Err(RunError::config(format!("coupling.plates[{i}].orientation_deg"), "must be finite"));
                    }
                }
            }
        }
        if let TomographyChoice::Simulated(t) = &self.tomography {
            positive("tomography.integration_time_s", t.integration_time_s)?;
            positive("tomography.count_rate_hz", t.count_rate_hz)?;
            if t.replicas == 1 {
                return Err(RunError::config("tomography.replicas", "use 0 (off) or at least 2"));
            }
        }
        let g = self.alpha_grid;
        if g.points == 0 || !(g.min >= 0.5) || !(g.max < 1.0) || g.min > g.max {
            return Err(RunError::config(
                "alpha_grid",
                format!("need 0.5 <= min <= max < 1 and points >= 1, got {g:?}"),
            ));
        }
        let f = self.frequency_grid;
        if f.points < 3 || f.points.is_multiple_of(2) {
            return Err(RunError::config("frequency_grid.points", "must be odd and at least 3"));
        }
        positive("frequency_grid.span_sigmas", f.span_sigmas)?;
        if let Some(s) = &self.sweep {
            if s.thicknesses_mm.is_empty() {
                return Err(RunError::config("sweep.thicknesses_mm", "empty list"));
            }
            for (i, &x) in s.thicknesses_mm.iter().enumerate() {
                positive(&format!("sweep.thicknesses_mm[{i}]"), x)?;
            }
        }
        Ok(())
    }

    /// The two system spectra.
    pub fn spectra(&self) -> Result<(GaussianSpectrum, GaussianSpectrum), RunError> {
        let (mu1, mu2, sigma) = match self.spectra {
            SpectraConfig::Frequency { mu1_hz, mu2_hz, sigma_hz } => (mu1_hz, mu2_hz, sigma_hz),
            SpectraConfig::Wavelength {
                center1_nm,
                center2_nm,
                width_nm,
            } => (
                wavelength_nm_to_hz(center1_nm),
                wavelength_nm_to_hz(center2_nm),
                // shared width, evaluated at the first center
                wavelength_width_to_hz(center1_nm, width_nm),
            ),
        };
        Ok((
            GaussianSpectrum::new(mu1, sigma).stage("spectra")?,
            GaussianSpectrum::new(mu2, sigma).stage("spectra")?,
        ))
    }

    pub fn alphas(&self) -> Result<Vec<AlphaParameter>, RunError> {
        alpha_grid(self.alpha_grid.min, self.alpha_grid.max, self.alpha_grid.points).stage("alpha grid")
    }

    fn probe(&self, which: &ProbeConfig, slot: usize) -> Result<DensityMatrix, RunError> {
        match which {
            ProbeConfig::Literal(ProbeLiteral::Plus) => {
                let h = num_complex::Complex64::new(1.0, 0.0);
                DensityMatrix::pure(&[h, h]).stage("probe preparation")
            }
            ProbeConfig::Literal(ProbeLiteral::Paper) => Ok(if slot == 1 { fixtures::rho1() } else { fixtures::rho2() }),
            ProbeConfig::Matrix(m) => {
                if m.dim() != 2 {
                    return Err(RunError::config(format!("probes.rho{slot}"), "probe must be a qubit state"));
                }
                Ok(m.clone())
            }
        }
    }

    /// Builds the wave-plate stack, resolving random orientations from the
    /// configured seed (uniform in `[0, pi)`).
    pub fn stack(&self) -> Result<Option<WavePlateStack>, RunError> {
        let CouplingConfig::Stack(cfg) = &self.coupling else {
            return Ok(None);
        };
        let mut rng = stream_rng(cfg.orientation_seed, 0);
        let plates = cfg
            .plates
            .iter()
            .map(|p| {
                let theta = match p.orientation_deg {
                    OrientationConfig::Degrees(d) => d.to_radians(),
                    OrientationConfig::Random(_) => rng.random::<f64>() * PI,
                };
                WavePlate::new(p.thickness_mm * 1e-3, theta)
            })
            .collect::<Result<Vec<_>, _>>()
            .stage("coupling")?;
        Ok(Some(WavePlateStack::new(plates, cfg.birefringence).stage("coupling")?))
    }

    fn tomography_settings(&self) -> Option<(TomographySettings, usize)> {
        match &self.tomography {
            TomographyChoice::Exact(_) => None,
            TomographyChoice::Simulated(t) => Some((
                TomographySettings {
                    integration_time: t.integration_time_s,
                    count_rate: t.count_rate_hz,
                    seed: t.seed,
                    sampling: Sampling::Poisson,
                },
                t.replicas,
            )),
        }
    }
}

/// Numeric result of one scenario, before any file is written.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub sigma: f64,
    pub stack: Option<WavePlateStack>,
    /// Exact probe states.
    pub truth: ProbingRecord,
    /// States fed to the bounds: `truth` or its simulated tomography.
    pub measured: ProbingRecord,
    pub curve: BoundCurve,
    pub monte_carlo: Option<MonteCarloReport>,
}

fn evolve_pair(
    cfg: &ScenarioConfig,
    stack: &WavePlateStack,
    s1: &GaussianSpectrum,
    s2: &GaussianSpectrum,
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
) -> Result<(DensityMatrix, DensityMatrix), RunError> {
    let fg = cfg.frequency_grid;
    let g1 = discretize(s1, fg.span_sigmas, fg.points).stage("frequency grid")?;
    let g2 = discretize(s2, fg.span_sigmas, fg.points).stage("frequency grid")?;
    let phi1 = apply_channel(stack, s1, rho1, &g1).stage("channel")?;
    let phi2 = apply_channel(stack, s2, rho2, &g2).stage("channel")?;
    Ok((phi1, phi2))
}

fn evaluate_with_stack(cfg: &ScenarioConfig, stack: Option<WavePlateStack>) -> Result<ScenarioOutcome, RunError> {
    let (s1, s2) = cfg.spectra()?;
    let delta_mu = (s2.mu() - s1.mu()).abs();
    let truth = match &stack {
        None => fixtures::record_5mm().with_delta_mu(delta_mu).stage("probing record")?,
        Some(stack) => {
            let rho1 = cfg.probe(&cfg.probes.rho1, 1)?;
            let rho2 = cfg.probe(&cfg.probes.rho2, 2)?;
            let (phi1, phi2) = evolve_pair(cfg, stack, &s1, &s2, &rho1, &rho2)?;
            ProbingRecord::new(rho1, rho2, phi1, phi2, delta_mu).stage("probing record")?
        }
    };
    let alphas = cfg.alphas()?;
    let (measured, monte_carlo) = match cfg.tomography_settings() {
        None => (truth.clone(), None),
        Some((settings, replicas)) => {
            let states = [truth.rho1(), truth.rho2(), truth.phi1_rho1(), truth.phi2_rho2()];
            let m: Vec<DensityMatrix> = states
                .iter()
                .enumerate()
                .map(|(k, s)| measure_state(s, &settings, k as u64))
                .collect::<Result<_, _>>()
                .stage("tomography")?;
            let measured = ProbingRecord::new(m[0].clone(), m[1].clone(), m[2].clone(), m[3].clone(), delta_mu).stage("tomography")?;
            let mc = if replicas >= 2 {
                Some(monte_carlo_bounds(&truth, &settings, replicas, &alphas).stage("monte carlo")?)
            } else {
                None
            };
            (measured, mc)
        }
    };
    let curve = tightest_bound(&measured, &alphas).stage("bounds")?;
    Ok(ScenarioOutcome {
        sigma: s1.sigma(),
        stack,
        truth,
        measured,
        curve,
        monte_carlo,
    })
}

/// Runs the pipeline without touching the filesystem.
pub fn evaluate_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutcome, RunError> {
    cfg.validate()?;
    let stack = cfg.stack()?;
    evaluate_with_stack(cfg, stack)
}

/// What produced a run. Deliberately free of wall-clock time so reruns are
/// byte-identical.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub crate_version: String,
    pub seeds: Vec<u64>,
}

impl Provenance {
    fn new(seeds: Vec<u64>) -> Self {
        Self {
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            seeds,
        }
    }
}

/// Index of a run: config echo, emitted files and provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub kind: String,
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolved_stack: Option<WavePlateStack>,
    /// File names relative to the output directory.
    pub files: Vec<PathBuf>,
    pub provenance: Provenance,
}

struct OutputDir {
    root: PathBuf,
    files: Vec<PathBuf>,
}

impl OutputDir {
    fn create(root: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(root).map_err(|source| RunError::Io {
            path: root.to_path_buf(),
            source,
        })?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, RunError> {
        let path = self.root.join(name);
        fs::write(&path, contents).map_err(|source| RunError::Io {
            path: path.clone(),
            source,
        })?;
        self.files.push(PathBuf::from(name));
        Ok(path)
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, RunError> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable");
        text.push('\n');
        self.write(name, &text)
    }

    fn finish(
        mut self,
        kind: &str,
        config: serde_json::Value,
        stack: Option<WavePlateStack>,
        seeds: Vec<u64>,
    ) -> Result<RunReport, RunError> {
        let mut files = self.files.clone();
        files.push(PathBuf::from("report.json"));
        let report = RunReport {
            kind: kind.to_string(),
            config,
            resolved_stack: stack,
            files,
            provenance: Provenance::new(seeds),
        };
        self.write_json("report.json", &report)?;
        Ok(report)
    }
}

/// Summary JSON of a simulated scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSummary {
    #[serde(flatten)]
    pub bound: BoundSummary,
    pub true_sigma_hz: f64,
    pub delta_mu_hz: f64,
    /// Whether `b_inf >= true sigma` (absent without a bound).
    pub sound: Option<bool>,
}

fn config_seeds(cfg: &ScenarioConfig) -> Vec<u64> {
    let mut seeds = Vec::new();
    if let CouplingConfig::Stack(s) = &cfg.coupling {
        seeds.push(s.orientation_seed);
    }
    if let TomographyChoice::Simulated(t) = &cfg.tomography {
        seeds.push(t.seed);
    }
    seeds
}

/// Output directory: the explicit argument, else the config's, else `qprobe-out`.
pub fn resolve_out(cfg: &ScenarioConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("qprobe-out"))
}

/// Runs a scenario and writes `curve.csv`, `summary.json`, optionally
/// `monte_carlo.json`, and `report.json` into the output directory.
pub fn run_scenario(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<(RunReport, ScenarioOutcome), RunError> {
    let outcome = evaluate_scenario(cfg)?;
    let mut dir = OutputDir::create(&resolve_out(cfg, out))?;
    dir.write("curve.csv", &outcome.curve.to_csv(Some(outcome.sigma)))?;
    let bound = outcome.curve.summary(Some(outcome.sigma));
    let summary = ScenarioSummary {
        sound: bound.b_inf_hz.map(|b| b >= outcome.sigma),
        bound,
        true_sigma_hz: outcome.sigma,
        delta_mu_hz: outcome.measured.delta_mu(),
    };
    dir.write_json("summary.json", &summary)?;
    if let Some(mc) = &outcome.monte_carlo {
        dir.write_json("monte_carlo.json", mc)?;
    }
    let echo = serde_json::to_value(cfg).expect("serializable");
    let report = dir.finish("simulate", echo, outcome.stack.clone(), config_seeds(cfg))?;
    if cfg.require_bound && outcome.curve.is_no_information() {
        return Err(RunError::NoInformation);
    }
    Ok((report, outcome))
}

/// Golden numbers of the 5 mm reproduction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fig4Summary {
    pub sigma_hz: f64,
    pub delta_mu_hz: f64,
    pub b1_at_half_over_sigma: f64,
    pub b2_at_half_over_sigma: f64,
    pub b2_at_top_over_sigma: f64,
    pub alpha_top: f64,
    pub b_inf_over_sigma: f64,
    pub b_inf_alpha: f64,
    pub b_inf_family: Family,
    pub fractions_below_one: bool,
    pub passed: bool,
    pub failures: Vec<String>,
}

pub const FIG4_B_INF_RANGE: (f64, f64) = (1.73, 1.91);
pub const FIG4_HALF_RANGE: (f64, f64) = (2.11, 2.33);

/// Evaluates the measured 5 mm record on `alphas` and checks the golden values.
pub fn fig4_summary(alphas: &[AlphaParameter]) -> Result<(BoundCurve, Fig4Summary), RunError> {
    let record = fixtures::record_5mm();
    let curve = tightest_bound(&record, alphas).stage("bounds")?;
    let sigma = fixtures::SIGMA_HZ;
    let half = AlphaParameter::new(0.5).expect("valid");
    let b1_half = crate::bounds::bound_b1(&record, half).stage("bounds")?;
    let b2_half = crate::bounds::bound_b2(&record, half).stage("bounds")?;
    let top = *alphas.last().expect("nonempty grid");
    let b2_top = crate::bounds::bound_b2(&record, top).stage("bounds")?;

    let mut failures = Vec::new();
    let in_range = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
    let over = |b: Option<f64>| b.map_or(f64::NAN, |v| v / sigma);
    let (b1h, b2h, b2t) = (over(b1_half), over(b2_half), over(b2_top));
    if !in_range(b1h, FIG4_HALF_RANGE) {
        failures.push(format!("B1(0.5)/sigma = {b1h:.4}, expected in {FIG4_HALF_RANGE:?}"));
    }
    if !in_range(b2h, FIG4_HALF_RANGE) {
        failures.push(format!("B2(0.5)/sigma = {b2h:.4}, expected in {FIG4_HALF_RANGE:?}"));
    }
    let fractions_below_one = curve.fraction1.iter().chain(&curve.fraction2).all(|&f| f < 1.0);
    if !fractions_below_one {
        failures.push("a fidelity fraction reached 1 on the grid".into());
    }
    let (b_inf, b_inf_alpha, family) = match curve.b_inf {
        Some(b) => (b.value / sigma, b.alpha, b.family),
        None => (f64::NAN, f64::NAN, Family::B2),
    };
    if !in_range(b_inf, FIG4_B_INF_RANGE) {
        failures.push(format!("b_inf/sigma = {b_inf:.4}, expected in {FIG4_B_INF_RANGE:?}"));
    }
    if curve.b_inf.map(|b| b.family) != Some(Family::B2) {
        failures.push(format!("tightest family {family}, expected B2"));
    }
    if (b_inf_alpha - top.value()).abs() > 1e-12 {
        failures.push(format!("tightest alpha {b_inf_alpha}, expected the grid top {}", top.value()));
    }
    if !in_range(b2t, FIG4_B_INF_RANGE) {
        failures.push(format!("B2(top)/sigma = {b2t:.4}, expected in {FIG4_B_INF_RANGE:?}"));
    }
    let summary = Fig4Summary {
        sigma_hz: sigma,
        delta_mu_hz: fixtures::DELTA_MU_HZ,
        b1_at_half_over_sigma: b1h,
        b2_at_half_over_sigma: b2h,
        b2_at_top_over_sigma: b2t,
        alpha_top: top.value(),
        b_inf_over_sigma: b_inf,
        b_inf_alpha,
        b_inf_family: family,
        fractions_below_one,
        passed: failures.is_empty(),
        failures,
    };
    Ok((curve, summary))
}

/// Reproduces the 5 mm bound curves from the measured matrices and writes
/// `fig4_curve.csv`, `fig4_fractions.csv`, `fig4_summary.json` and
/// `report.json`. Fails with [`RunError::Golden`] if a golden check misses;
/// the artifacts are written either way.
pub fn reproduce_fig4(out: &Path) -> Result<(RunReport, Fig4Summary), RunError> {
    let alphas = crate::fidelity::default_alpha_grid();
    let (curve, summary) = fig4_summary(&alphas)?;
    let mut dir = OutputDir::create(out)?;
    dir.write("fig4_curve.csv", &curve.to_csv(Some(fixtures::SIGMA_HZ)))?;
    dir.write("fig4_fractions.csv", &curve.fractions_csv())?;
    dir.write_json("fig4_summary.json", &summary)?;
    let echo = serde_json::json!({
        "record": fixtures::record_5mm(),
        "alpha_grid": AlphaGridConfig::default(),
    });
    let report = dir.finish("reproduce-fig4", echo, None, Vec::new())?;
    if !summary.passed {
        return Err(RunError::Golden(summary.failures.clone()));
    }
    Ok((report, summary))
}

/// One thickness of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub thickness_mm: f64,
    pub b_inf_hz: Option<f64>,
    pub b_inf_over_sigma: Option<f64>,
    pub alpha_star: Option<f64>,
    pub family: Option<Family>,
    pub no_information: bool,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("thickness_mm,b_inf_hz,b_inf_over_sigma,alpha_star,family,no_information\n");
    let opt = |v: Option<f64>| v.map(sci).unwrap_or_default();
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            sci(r.thickness_mm),
            opt(r.b_inf_hz),
            opt(r.b_inf_over_sigma),
            opt(r.alpha_star),
            r.family.map(|f| f.to_string()).unwrap_or_default(),
            r.no_information
        ));
    }
    out
}

/// Computes the sweep rows: one aligned plate per listed thickness.
pub fn evaluate_sweep(cfg: &ScenarioConfig) -> Result<Vec<SweepRow>, RunError> {
    cfg.validate()?;
    let Some(sweep) = &cfg.sweep else {
        return Err(RunError::config("sweep", "missing thickness list"));
    };
    let CouplingConfig::Stack(stack_cfg) = &cfg.coupling else {
        return Err(RunError::config("coupling", "a sweep needs a plate stack (for its birefringence)"));
    };
    sweep
        .thicknesses_mm
        .iter()
        .map(|&x| {
            let stack = WavePlateStack::aligned(x * 1e-3, stack_cfg.birefringence).stage("coupling")?;
            let o = evaluate_with_stack(cfg, Some(stack))?;
            let b = o.curve.b_inf;
            Ok(SweepRow {
                thickness_mm: x,
                b_inf_hz: b.map(|b| b.value),
                b_inf_over_sigma: b.map(|b| b.value / o.sigma),
                alpha_star: b.map(|b| b.alpha),
                family: b.map(|b| b.family),
                no_information: b.is_none(),
            })
        })
        .collect()
}

/// Runs a thickness sweep and writes `sweep.csv` and `report.json`.
pub fn sweep_thickness(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<(RunReport, Vec<SweepRow>), RunError> {
    let rows = evaluate_sweep(cfg)?;
    let mut dir = OutputDir::create(&resolve_out(cfg, out))?;
    dir.write("sweep.csv", &sweep_csv(&rows))?;
    let echo = serde_json::to_value(cfg).expect("serializable");
    let report = dir.finish("sweep", echo, None, config_seeds(cfg))?;
    Ok((report, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_json(coupling: &str) -> String {
        format!(
            r#"{{
                "schema": "qprobe.scenario/1",
                "spectra": {{"mu1_hz": 3.70e14, "mu2_hz": 3.70795e14, "sigma_hz": 5.68e11}},
                "coupling": {coupling},
                "alpha_grid": {{"min": 0.5, "max": 0.9999, "points": 40}}
            }}"#
        )
    }

    #[test]
    fn parses_literals_and_defaults() {
        let cfg = ScenarioConfig::from_json(&base_json(r#""paper-matrices""#)).unwrap();
        assert_eq!(cfg.coupling, CouplingConfig::Literal(CouplingLiteral::PaperMatrices));
        assert_eq!(cfg.tomography, TomographyChoice::Exact(ExactLiteral::ExactStates));
        assert_eq!(cfg.frequency_grid, FrequencyGridConfig::default());
        let cfg = ScenarioConfig::from_json(&base_json(
            r#"{"plates": [{"thickness_mm": 5, "orientation_deg": "random"}, {"thickness_mm": 2, "orientation_deg": 30}]}"#,
        ))
        .unwrap();
        let CouplingConfig::Stack(s) = &cfg.coupling else { panic!() };
        assert_eq!(s.birefringence, DEFAULT_BIREFRINGENCE);
        assert_eq!(s.plates[0].orientation_deg, OrientationConfig::Random(RandomLiteral::Random));
    }

    #[test]
    fn validation_names_field_paths() {
        let err = ScenarioConfig::from_json(&base_json(
            r#"{"plates": [{"thickness_mm": 5, "orientation_deg": 0}, {"thickness_mm": -1, "orientation_deg": 0}]}"#,
        ))
        .unwrap_err();
        match err {
            RunError::Config { path, .. } => assert_eq!(path, "coupling.plates[1].thickness_mm"),
            other => panic!("{other:?}"),
        }
        let bad_schema = base_json(r#""paper-matrices""#).replace("qprobe.scenario/1", "v0");
        assert!(matches!(ScenarioConfig::from_json(&bad_schema), Err(RunError::Config { path, .. }) if path == "schema"));
        let unknown = base_json(r#""paper-matrices""#).replace("\"alpha_grid\"", "\"alpha_grdi\"");
        let err = ScenarioConfig::from_json(&unknown).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn random_orientations_follow_seed() {
        let cfg = ScenarioConfig::from_json(&base_json(
            r#"{"orientation_seed": 9, "plates": [{"thickness_mm": 5, "orientation_deg": "random"}, {"thickness_mm": 2, "orientation_deg": "random"}]}"#,
        ))
        .unwrap();
        let a = cfg.stack().unwrap().unwrap();
        let b = cfg.stack().unwrap().unwrap();
        assert_eq!(a, b);
        for p in a.plates() {
            assert!((0.0..PI).contains(&p.orientation()));
        }
        assert_ne!(a.plates()[0].orientation(), a.plates()[1].orientation());
    }

    #[test]
    fn degenerate_shift_is_reported() {
        let json = base_json(r#"{"plates": [{"thickness_mm": 5, "orientation_deg": 0}]}"#).replace("3.70795e14", "3.70e14");
        let cfg = ScenarioConfig::from_json(&json).unwrap();
        match evaluate_scenario(&cfg).unwrap_err() {
            RunError::Stage {
                source: ProbeError::DegenerateControl,
                ..
            } => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sweep_requires_stack() {
        let json = base_json(r#""paper-matrices""#).replace("\"alpha_grid\"", "\"sweep\": {\"thicknesses_mm\": [5]}, \"alpha_grid\"");
        let cfg = ScenarioConfig::from_json(&json).unwrap();
        assert!(matches!(evaluate_sweep(&cfg), Err(RunError::Config { .. })));
    }
}
