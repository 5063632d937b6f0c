//! Thin CLI over the pipeline stages. All logic lives in the library.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use teamnet::config::Config;
use teamnet::pipeline::{self, InputPaths};

#[derive(Parser)]
#[command(
    name = "teamnet",
    version,
    about = "Collaboration-network diversity and inclusion analytics"
)]
struct Cli {
    /// Configuration file (TOML; defaults apply when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. --set run.seed=7 (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct TableArgs {
    /// Projects table (.csv or .jsonl).
    #[arg(long)]
    projects: PathBuf,
    /// Credits table (.csv or .jsonl).
    #[arg(long)]
    credits: PathBuf,
    /// Optional first-name gender lexicon (.csv).
    #[arg(long)]
    lexicon: Option<PathBuf>,
}

impl TableArgs {
    fn paths(&self) -> InputPaths {
        InputPaths {
            projects: self.projects.clone(),
            credits: self.credits.clone(),
            lexicon: self.lexicon.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate the input tables and report the filter stages.
    Validate {
        #[command(flatten)]
        tables: TableArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Compute the per-project metric table.
    Metrics {
        #[command(flatten)]
        tables: TableArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Fit the regression suite over a metric table.
    Model {
        /// Path to a metrics.csv produced by `metrics`.
        #[arg(long)]
        metrics: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Firm-level sequences and transfer entropy.
    Sequence {
        #[arg(long)]
        metrics: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Unknown-gender relabeling experiments.
    Robustness {
        #[command(flatten)]
        tables: TableArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Generate a synthetic corpus in the input schema.
    Synth {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Bundle previously produced artifacts; never recomputes.
    Report {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the resolved configuration (defaults plus overrides).
    Config {
        /// Print the built-in defaults, ignoring --config and --set.
        #[arg(long)]
        defaults: bool,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}

fn run(cli: Cli) -> teamnet::Result<()> {
    let config = Config::load(cli.config.as_deref(), &cli.set)?;
    pipeline::init_threads(config.run.threads);
    match cli.command {
        Command::Validate { tables, out } => {
            let report = pipeline::run_validate(&config, &tables.paths(), &out)?;
            println!("{report}");
        }
        Command::Metrics { tables, out } => {
            let stage = pipeline::run_metrics(&config, &tables.paths(), &out)?;
            println!(
                "metrics: {} rows -> {}",
                stage.rows.len(),
                out.join("metrics.csv").display()
            );
        }
        Command::Model { metrics, out } => {
            let stage = pipeline::run_model(&config, &metrics, &out)?;
            println!(
                "model: {} fits, {} F-tests -> {}",
                stage.fits.len(),
                stage.ftests.len(),
                out.display()
            );
        }
        Command::Sequence { metrics, out } => {
            let stage = pipeline::run_sequence(&config, &metrics, &out)?;
            println!(
                "sequence: {} firms, {} outcome models -> {}",
                stage.points.len(),
                stage.fits.len(),
                out.display()
            );
        }
        Command::Robustness { tables, out } => {
            let stage = pipeline::run_robustness(&config, &tables.paths(), &out)?;
            println!(
                "robustness: {} levels over {} projects -> {}",
                stage.experiments.len(),
                stage.baseline_rows.len(),
                out.display()
            );
        }
        Command::Synth { out } => {
            let stage = pipeline::run_synth(&config, &out)?;
            println!(
                "synth: wrote {} and {}",
                stage.projects_path.display(),
                stage.credits_path.display()
            );
        }
        Command::Report { out } => {
            let bundled = pipeline::run_report(&config, &out)?;
            println!("report: bundled {bundled} artifacts -> {}", out.join("report").display());
        }
        Command::Config { defaults } => {
            let shown = if defaults { Config::default() } else { config };
            print!("{}", shown.to_toml_string());
        }
    }
    Ok(())
}
