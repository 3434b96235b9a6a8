use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use xfid::equivalence::DEFAULT_ATOL;
use xfid::explain::ExplainerId;
use xfid::harness::{evaluate_files, generate_artifacts, report, run_single, run_sweep, SingleRequest};
use xfid::metrics::write_records;
use xfid::{ExperimentConfig, HarnessError};

#[derive(Parser)]
#[command(name = "xfid", version, about = "Score post hoc explainers against known additive structure")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write models, datasets and ground truth for every grid task.
    Gen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Explain one model file with one explainer and score it.
    Explain {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        explainer: ExplainerId,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Enumerate every coalition whatever the dimension.
        #[arg(long)]
        exact_shap: bool,
        /// Rows to explain.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Seconds.
        #[arg(long, default_value_t = 120.0)]
        timeout: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a stored explanation; prints one metrics row.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        expl: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run a full sweep into a results directory.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Summarize a results.csv (or the directory holding it).
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print configuration.
    Config {
        #[arg(long, required = true)]
        defaults: bool,
    },
}

fn run(cli: Cli) -> Result<i32, HarnessError> {
    match cli.command {
        Command::Gen { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let (ok, failed) = generate_artifacts(&cfg, &out)?;
            eprintln!("{ok} models written, {failed} failed");
            Ok(0)
        }
        Command::Explain { model, data, explainer, seed, exact_shap, samples, timeout, out } => {
            if samples == 0 || timeout.is_nan() || timeout <= 0.0 {
                return Err(HarnessError::ConfigInvalid("samples and timeout must be positive".into()));
            }
            let mut req = SingleRequest::new(model, explainer, seed);
            req.data_path = data;
            req.settings.shap.force_exact = exact_shap;
            req.samples_per_model = samples;
            req.timeout_secs = timeout;
            req.out_dir = out;
            let outcome = run_single(&req)?;
            if let Some(err) = &outcome.error {
                eprintln!("{err}");
            }
            write_records(std::slice::from_ref(&outcome.record), std::io::stdout())?;
            Ok(outcome.record.status.exit_code())
        }
        Command::Eval { model, expl, data } => {
            let (record, _) = evaluate_files(&model, &expl, data.as_deref(), DEFAULT_ATOL)?;
            write_records(&[record], std::io::stdout())?;
            Ok(0)
        }
        Command::Sweep { config, out, jobs } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if jobs.is_some() {
                cfg.jobs = jobs;
            }
            let outcome = run_sweep(&cfg, &out)?;
            eprintln!(
                "{} rows ({} reused) -> {}",
                outcome.records.len(),
                outcome.reused,
                outcome.results_path.display()
            );
            Ok(0)
        }
        Command::Report { input, out } => {
            let rows = report(&input, &out)?;
            eprintln!("{} summary rows -> {}", rows.len(), out.display());
            Ok(0)
        }
        Command::Config { .. } => {
            println!("{}", ExperimentConfig::default().to_json_pretty());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
