use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cahnwell_core::experiments::{run_experiment, write_output, ExperimentKind, ExperimentSpec, Provenance};
use cahnwell_core::Error;
use clap::{Args, Parser, Subcommand};

/// Batch runner for phase-transition experiments with moving wells.
#[derive(Parser)]
#[command(name = "cahnwell", version)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Gamma-convergence sweep with fixed or free traces.
    Gamma(Target),
    /// Gamma-convergence sweep under a mass constraint.
    GammaMass(Target),
    /// Geodesic distance benchmark.
    Geodesic(Target),
    /// Path length of the annular landscape against the ring count.
    Annular(Target),
    /// Hypothesis audit.
    Audit(Target),
}

#[derive(Args)]
struct Target {
    /// Experiment config (TOML).
    config: PathBuf,
    /// Output directory; falls back to `output` in the config, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Verb {
    fn parts(&self) -> (ExperimentKind, &Target) {
        match self {
            Verb::Gamma(t) => (ExperimentKind::GammaSweep, t),
            Verb::GammaMass(t) => (ExperimentKind::GammaSweepMass, t),
            Verb::Geodesic(t) => (ExperimentKind::GeodesicBench, t),
            Verb::Annular(t) => (ExperimentKind::AnnularStudy, t),
            Verb::Audit(t) => (ExperimentKind::Audit, t),
        }
    }
}

fn run(cli: &Cli) -> Result<PathBuf, Error> {
    let (kind, target) = cli.verb.parts();
    let text = fs::read_to_string(&target.config)
        .map_err(|e| Error::Config(format!("{}: {e}", target.config.display())))?;
    let spec = ExperimentSpec::from_toml(&text)?;
    if spec.kind != kind {
        return Err(Error::Usage(format!(
            "config is a {:?} experiment, not {:?}",
            spec.kind, kind
        )));
    }
    let base = target.config.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let out_dir = target
        .out
        .clone()
        .or_else(|| spec.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let output = run_experiment(&spec, Some(base))?;
    write_output(&output, &out_dir, &Provenance::new(&text, spec.seed))?;
    Ok(out_dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let line = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::from(if e.kind() == "config" || e.kind() == "usage" { 2 } else { 1 })
        }
    }
}
