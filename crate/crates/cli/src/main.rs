use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use uqtab_cli::{CliError, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "uqtab", version, about = "Uncertainty-aware tabular classification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (JSON). Defaults apply to omitted keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated priors, e.g. `normal:0:10,horseshoe:1`.
    #[arg(long, global = true, value_delimiter = ',')]
    priors: Option<Vec<String>>,
    /// Fit the scaler on all rows before splitting.
    #[arg(long, global = true)]
    paper_faithful_scaling: bool,
    /// Oversample the training split once, before cross-validation.
    #[arg(long, global = true)]
    paper_faithful_smote: bool,
    /// Omit the timestamp so identical runs produce identical reports.
    #[arg(long, global = true)]
    canonical: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Descriptive statistics and histograms.
    Stats,
    /// Grid-searched baseline classifiers.
    Baseline,
    /// Shadow-feature selection.
    Select,
    /// Bayesian networks under each configured prior.
    Bnn,
    /// Shapley explanations of the best model.
    Shap,
    /// Every stage in order, plus the consolidated report.
    Pipeline,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: cli.seed,
        output_dir: cli.out.clone(),
        priors: cli.priors.clone(),
        paper_faithful_scaling: cli.paper_faithful_scaling,
        paper_faithful_smote: cli.paper_faithful_smote,
        canonical: cli.canonical,
    });
    match cli.command {
        Command::Stats => uqtab_cli::cmd_stats(&cfg),
        Command::Baseline => uqtab_cli::cmd_baseline(&cfg),
        Command::Select => uqtab_cli::cmd_select(&cfg),
        Command::Bnn => uqtab_cli::cmd_bnn(&cfg),
        Command::Shap => uqtab_cli::cmd_shap(&cfg),
        Command::Pipeline => {
            let report = uqtab_cli::run_pipeline(&cfg)?;
            let best = &report.best_model;
            println!("best model: {} (test accuracy {:.4})", best.name, best.test_accuracy);
            for d in &report.deviations {
                println!("deviation: {d}");
            }
            match report.failures.first() {
                Some(f) => Err(CliError::stage(f.stage.clone(), &f.message)),
                None => Ok(()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
