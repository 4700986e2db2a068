use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use layerood::bench::{run_benchmark, sweep_layer_subsets};
use layerood::hsd::read_dump_file;
use layerood::inspect::summarize;
use layerood::manifest::read_manifest;
use layerood::synth::{write_synthetic, SyntheticSpec};
use layerood::HarnessError;

#[derive(Parser)]
#[command(
    name = "layerood",
    version,
    about = "Post-hoc OOD detection benchmarks over hidden-state dumps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the configured detector and report AUROC / FAR95 per OOD set.
    Run { manifest: PathBuf },
    /// Generate synthetic ID train/test and OOD dumps plus a manifest.
    Synth {
        spec_file: PathBuf,
        out_dir: PathBuf,
    },
    /// Best Mahalanobis layer subset per subset size (searched on test data).
    Sweep {
        manifest: PathBuf,
        #[arg(long)]
        max_k: usize,
        #[arg(long)]
        budget: usize,
    },
    /// Print a dump's header and a summary line per record.
    Inspect {
        dump: PathBuf,
        #[arg(long)]
        limit: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<String, HarnessError> {
    match cli.command {
        Command::Run { manifest } => {
            let config = read_manifest(&manifest)?;
            Ok(run_benchmark(&config)?.render(config.output))
        }
        Command::Synth { spec_file, out_dir } => {
            let text =
                std::fs::read_to_string(&spec_file).map_err(|e| HarnessError::io(&spec_file, e))?;
            let spec = SyntheticSpec::parse(&text)?;
            let manifest = write_synthetic(&spec, &out_dir)?;
            Ok(format!("wrote {}\n", manifest.display()))
        }
        Command::Sweep {
            manifest,
            max_k,
            budget,
        } => {
            let config = read_manifest(&manifest)?;
            Ok(sweep_layer_subsets(&config, max_k, budget)?.render(config.output))
        }
        Command::Inspect { dump, limit } => {
            let parsed = read_dump_file(&dump).map_err(|e| HarnessError::hsd(&dump, e))?;
            Ok(summarize(&parsed, limit))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors are validation errors; --help and --version are not errors.
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
