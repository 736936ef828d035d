use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use qprobe::bounds::{sci, tightest_bound, ProbingRecord};
use qprobe::fidelity::{alpha_grid, FidelityEvaluator, DEFAULT_ALPHA_MAX, DEFAULT_ALPHA_MIN, DEFAULT_ALPHA_POINTS};
use qprobe::linalg::DensityMatrix;
use qprobe::runner::{self, RunError, ScenarioConfig};
use qprobe::tomography::{
    all_probabilities, reconstruct, sample_counts, CountRecord, TomographySettings, DEFAULT_COUNT_RATE, DEFAULT_INTEGRATION_TIME,
};

#[derive(Parser)]
#[command(name = "qprobe", version, about = "Coupling-agnostic quantum probing bounds and simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct GridArgs {
    #[arg(long, default_value_t = DEFAULT_ALPHA_MIN)]
    alpha_min: f64,
    #[arg(long, default_value_t = DEFAULT_ALPHA_MAX)]
    alpha_max: f64,
    #[arg(long, default_value_t = DEFAULT_ALPHA_POINTS)]
    points: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Alpha-fidelity curve F_a(rho1, rho2) of two matrix JSON files.
    Afid {
        #[arg(long)]
        rho1: PathBuf,
        #[arg(long)]
        rho2: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bound curves from a probing record JSON.
    Bound {
        #[arg(long)]
        record: PathBuf,
        /// Reference sigma (Hz) for normalized columns.
        #[arg(long)]
        reference_sigma: Option<f64>,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value = "qprobe-out")]
        out: PathBuf,
        /// Exit with code 4 when the record yields no bound.
        #[arg(long)]
        require_bound: bool,
    },
    /// Run a scenario config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulated tomography of one state: counts and reconstruction.
    Tomography {
        #[arg(long)]
        state: PathBuf,
        #[arg(long, default_value_t = DEFAULT_INTEGRATION_TIME)]
        time: f64,
        #[arg(long, default_value_t = DEFAULT_COUNT_RATE)]
        rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reproduce the 5 mm bound curves from the measured matrices.
    #[command(name = "reproduce-fig4")]
    ReproduceFig4 {
        #[arg(long, default_value = "qprobe-fig4")]
        out: PathBuf,
    },
    /// Aligned-plate thickness sweep from a scenario config with a `sweep` block.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, RunError> {
    let text = fs::read_to_string(path).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| RunError::Config {
        path: format!("{}:{}", path.display(), e.path()),
        message: e.into_inner().to_string(),
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), RunError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| RunError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn stage<T>(stage: &'static str, r: qprobe::Result<T>) -> Result<T, RunError> {
    r.map_err(|source| RunError::Stage { stage, source })
}

fn grid(args: &GridArgs) -> Result<Vec<qprobe::AlphaParameter>, RunError> {
    alpha_grid(args.alpha_min, args.alpha_max, args.points).map_err(|e| RunError::Config {
        path: "alpha grid".into(),
        message: e.to_string(),
    })
}

fn run(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Afid { rho1, rho2, grid: g, out } => {
            let r1: DensityMatrix = read_json(&rho1)?;
            let r2: DensityMatrix = read_json(&rho2)?;
            let eval = stage("fidelity", FidelityEvaluator::new(&r1, &r2))?;
            let mut csv = String::from("alpha,fidelity\n");
            for a in grid(&g)? {
                let f = stage("fidelity", eval.fidelity(a))?;
                csv.push_str(&format!("{},{}\n", sci(a.value()), sci(f)));
            }
            match out {
                Some(p) => write_file(&p, &csv)?,
                None => print!("{csv}"),
            }
        }
        Command::Bound {
            record,
            reference_sigma,
            grid: g,
            out,
            require_bound,
        } => {
            let rec: ProbingRecord = read_json(&record)?;
            let curve = stage("bounds", tightest_bound(&rec, &grid(&g)?))?;
            let summary = curve.summary(reference_sigma);
            write_file(&out.join("curve.csv"), &curve.to_csv(reference_sigma))?;
            write_file(&out.join("fractions.csv"), &curve.fractions_csv())?;
            let text = pretty(&summary);
            write_file(&out.join("summary.json"), &text)?;
            print!("{text}");
            if require_bound && curve.is_no_information() {
                return Err(RunError::NoInformation);
            }
        }
        Command::Simulate { config, out } => {
            let cfg = ScenarioConfig::from_file(&config)?;
            let (report, _) = runner::run_scenario(&cfg, out.as_deref())?;
            let dir = runner::resolve_out(&cfg, out.as_deref());
            for f in &report.files {
                println!("wrote {}", dir.join(f).display());
            }
        }
        Command::Tomography {
            state,
            time,
            rate,
            seed,
            stream,
            out,
        } => {
            let rho: DensityMatrix = read_json(&state)?;
            let settings = stage("tomography", TomographySettings::new(time, rate, seed))?;
            let probs = stage("tomography", all_probabilities(&rho))?;
            let counts: CountRecord = stage("tomography", sample_counts(&probs, &settings, stream))?;
            let reconstructed = stage("tomography", reconstruct(&counts))?;
            let text = pretty(&serde_json::json!({
                "settings": settings,
                "stream": stream,
                "counts": counts,
                "reconstructed": reconstructed,
            }));
            match out {
                Some(p) => write_file(&p, &text)?,
                None => print!("{text}"),
            }
        }
        Command::ReproduceFig4 { out } => {
            let (_, summary) = runner::reproduce_fig4(&out)?;
            print!("{}", pretty(&summary));
        }
        Command::Sweep { config, out } => {
            let cfg = ScenarioConfig::from_file(&config)?;
            let (_, rows) = runner::sweep_thickness(&cfg, out.as_deref())?;
            print!("{}", runner::sweep_csv(&rows));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
