//! Thin command-line front end over [`lobrep::experiment`].
//!
//! Exit codes: 0 success, 1 usage/config error, 2 data error, 3 training
//! divergence.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lobrep::error::{Error, ErrorCategory};
use lobrep::experiment::{
    run_diagnostics, run_evaluate, run_experiment, run_ingest_summary, run_label_audit, run_train,
    ExperimentConfig,
};
use lobrep::eval::render_table;
use lobrep::model::ModelKind;
use lobrep::perturb::Scenario;

#[derive(Parser)]
#[command(
    name = "lobrep",
    about = "Order book representation robustness harness",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration file (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override the configured global seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Override the configured output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        if !self.config.exists() {
            return Err(Error::Config(format!(
                "config file not found: {}",
                self.config.display()
            )));
        }
        let mut config = ExperimentConfig::from_file(&self.config)?;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(out) = &self.out {
            config.out_dir = out.clone();
        }
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse the data source and print a summary.
    Ingest {
        #[command(flatten)]
        common: Common,
    },
    /// Perturbation diagnostics: shift, visibility and injected volume.
    Perturb {
        #[command(flatten)]
        common: Common,
        /// Restrict to one scenario (default: all four).
        #[arg(long, value_name = "none|ask|bid|both")]
        scenario: Option<Scenario>,
    },
    /// Compare computed micro-movement labels against provided label rows.
    LabelAudit {
        #[command(flatten)]
        common: Common,
    },
    /// Train the configured models on the unperturbed training split.
    Train {
        #[command(flatten)]
        common: Common,
        /// Restrict to one model (default: all configured).
        #[arg(long, value_name = "lr|mlp")]
        model: Option<ModelKind>,
    },
    /// Evaluate previously trained parameters under perturbation scenarios.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "lr|mlp")]
        model: Option<ModelKind>,
        #[arg(long, value_name = "none|ask|bid|both")]
        scenario: Option<Scenario>,
    },
    /// Full pipeline: train, evaluate all scenarios, write reports.
    Experiment {
        #[command(flatten)]
        common: Common,
    },
}

fn scenario_list(choice: Option<Scenario>) -> Vec<Scenario> {
    match choice {
        Some(s) => vec![s],
        None => Scenario::ALL.to_vec(),
    }
}

fn model_list(config: &ExperimentConfig, choice: Option<ModelKind>) -> Vec<ModelKind> {
    match choice {
        Some(m) => vec![m],
        None => config.models.clone(),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Ingest { common } => {
            let config = common.load()?;
            let summary = run_ingest_summary(&config)?;
            print!("{summary}");
            println!("summary written to {}", config.out_dir.display());
        }
        Command::Perturb { common, scenario } => {
            let config = common.load()?;
            let aggregates = run_diagnostics(&config, &scenario_list(scenario))?;
            for d in &aggregates {
                println!(
                    "{}: snapshots={} mean_shift={:.6} mean_visible_fraction={:.4} mean_injected_volume={:.2}",
                    d.scenario,
                    d.snapshots,
                    d.mean_euclid_shift,
                    d.mean_visible_fraction,
                    d.mean_injected_volume
                );
            }
            println!("per-snapshot tables written to {}", config.out_dir.display());
        }
        Command::LabelAudit { common } => {
            let config = common.load()?;
            let report = run_label_audit(&config)?;
            print!("{}", report.summary());
            println!("audit table written to {}", config.out_dir.display());
        }
        Command::Train { common, model } => {
            let config = common.load()?;
            let models = model_list(&config, model);
            let out = run_train(&config, &models)?;
            println!("trained {:?}; artifacts in {}", models, out.display());
        }
        Command::Evaluate {
            common,
            model,
            scenario,
        } => {
            let config = common.load()?;
            let models = model_list(&config, model);
            let outcome = run_evaluate(&config, &models, &scenario_list(scenario))?;
            print!("{}", render_table(&outcome.reports)?);
            println!("reports written to {}", outcome.out_dir.display());
        }
        Command::Experiment { common } => {
            let config = common.load()?;
            let outcome = run_experiment(&config)?;
            print!("{}", render_table(&outcome.reports)?);
            println!("artifacts written to {}", outcome.out_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(ErrorCategory::Usage.exit_code() as u8);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.category().exit_code() as u8)
        }
    }
}
