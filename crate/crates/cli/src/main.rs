use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use epzero_cli::{configure_jobs, parse_config, run, Experiment, VERSION};

/// Runs one epzero experiment and writes its outputs plus a manifest.
#[derive(Debug, Parser)]
#[command(name = "epzero", version = VERSION)]
struct Cli {
    /// unit-suite, decay, dispersive, strichartz, limit-sweep or single-run
    experiment: Experiment,
    /// TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed of the random-field corpora (overrides `seed`)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads
    #[arg(long, env = "EPZERO_JOBS")]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("epzero: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    let mut config = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprint!("epzero: {e}");
            return ExitCode::from(2);
        }
    };
    if config.experiment != cli.experiment {
        eprintln!(
            "epzero: the command line asks for `{}` but {} configures `{}`",
            cli.experiment,
            cli.config.display(),
            config.experiment
        );
        return ExitCode::from(2);
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = cli.out {
        config.output_dir = out;
    }
    configure_jobs(cli.jobs);
    let out = config.output_dir.clone();
    match run(&config, &text, &out) {
        Ok(manifest) => {
            for c in &manifest.checks {
                println!("{}", c.line());
            }
            if let Some(e) = &manifest.error {
                eprintln!("epzero: {} failed: {e}", config.experiment);
            }
            println!("manifest: {}", out.join(epzero_cli::MANIFEST_NAME).display());
            if manifest.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("epzero: {e:#}");
            ExitCode::FAILURE
        }
    }
}
