use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use karcher_harness::{run, to_csv, Experiment, HarnessError, Preset, Settings};

/// Runs one convergence experiment and writes its CSV report.
///
/// Exits with 0 when every embedded threshold holds, 1 when one fails and 2
/// on errors.  `KC_THREADS` sets the number of worker threads.
#[derive(Debug, Parser)]
#[command(name = "karcher-complex", version)]
struct Cli {
    /// Experiment to run; may instead come from the config file.
    #[arg(value_enum)]
    experiment: Option<Experiment>,
    /// euclidean, sphere, hyperbolic or torus.
    #[arg(long)]
    manifold: Option<String>,
    /// Inclusive refinement depths, e.g. `1..5`.
    #[arg(long)]
    depths: Option<String>,
    /// Tolerance of the Karcher mean iteration.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Vertex set of the Delaunay experiment; all presets when absent.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// TOML file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Cli {
    fn settings(&self) -> Settings {
        Settings {
            experiment: self.experiment,
            manifold: self.manifold.clone(),
            depths: self.depths.clone(),
            tol: self.tol,
            seed: self.seed,
            out: self.out.clone(),
            preset: self.preset,
        }
    }
}

fn configure_threads() -> Result<(), HarnessError> {
    let Ok(value) = std::env::var("KC_THREADS") else {
        return Ok(());
    };
    let threads: usize = value.trim().parse().map_err(|e| HarnessError::Upstream {
        context: format!("KC_THREADS = `{value}`"),
        source: Box::new(e),
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| HarnessError::Upstream {
            context: "configuring the thread pool".into(),
            source: Box::new(e),
        })
}

fn execute(cli: &Cli) -> Result<bool, HarnessError> {
    configure_threads()?;
    let base = match &cli.config {
        Some(path) => Settings::from_toml(&fs::read_to_string(path)?)?,
        None => Settings::default(),
    };
    let cfg = base.merge(cli.settings()).resolve()?;
    let report = run(&cfg)?;
    let csv = to_csv(&cfg, &report);
    match &cfg.out {
        Some(path) => fs::write(path, csv)?,
        None => io::stdout().write_all(csv.as_bytes())?,
    }
    for s in report.failures() {
        let criterion = s.criterion.map_or(String::new(), |c| c.to_string());
        eprintln!(
            "threshold failed: {} {} = {:e} (want {criterion})",
            s.family, s.quantity, s.value
        );
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
