use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use reschain::datagen::read_trajectory_csv;
use reschain::harness::{self, ExperimentConfig};
use reschain::{Error, Metric, Planner, Result, Scheme};

#[derive(Parser)]
#[command(
    name = "reschain",
    version,
    about = "Residual-chain trajectory planner toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML). Built-in defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides every seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the configured synthetic trajectories as CSV.
    Generate(Common),
    /// Train one planner; writes a checkpoint and its loss curve.
    Train(Common),
    /// Train two schemes on the same data and summarise the final losses.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "relative")]
        baseline: Scheme,
        #[arg(long, default_value = "residual_chain")]
        candidate: Scheme,
    },
    /// Score a checkpoint on trajectories and write `metrics.csv`.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Trajectory CSV; every window is evaluated. Without it, the
        /// validation split of the configured dataset is used.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Comma-separated metric names; defaults to the config's `eval_metrics`.
        #[arg(long, value_delimiter = ',')]
        metrics: Option<Vec<String>>,
    },
}

impl Common {
    fn resolve(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg = cfg.with_seed(seed);
        }
        cfg.validate()?;
        let out = self.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
        Ok((cfg, out))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(common) => {
            let (cfg, out) = common.resolve()?;
            let path = harness::run_generate(&cfg, &out)?;
            println!(
                "wrote {} trajectories to {}",
                cfg.dataset.trajectories,
                path.display()
            );
        }
        Command::Train(common) => {
            let (cfg, out) = common.resolve()?;
            let (outcome, files) = harness::run_train(&cfg, &out)?;
            let last = outcome.final_report();
            println!(
                "{}: epoch {} train_abs_loss {:.6} val_abs_loss {:.6}",
                cfg.scheme, last.epoch, last.train_abs_loss, last.val_abs_loss
            );
            println!("checkpoint: {}", files.checkpoint.display());
            println!("loss curve: {}", files.loss_curve.display());
        }
        Command::Compare {
            common,
            baseline,
            candidate,
        } => {
            let (cfg, out) = common.resolve()?;
            let (c, files) = harness::run_compare(&cfg, baseline, candidate, &out)?;
            let s = &c.summary;
            println!(
                "{} val_abs_loss {:.6} | {} val_abs_loss {:.6} | ratio {:.4} (reference {:.2})",
                s.baseline_scheme,
                s.baseline_final_val_abs_loss,
                s.candidate_scheme,
                s.candidate_final_val_abs_loss,
                s.ratio,
                s.reference_ratio
            );
            if !s.candidate_not_worse {
                eprintln!(
                    "warning: {} ended with a higher validation loss than {} for this seed",
                    s.candidate_scheme, s.baseline_scheme
                );
            }
            println!("summary: {}", files.summary.display());
        }
        Command::Evaluate {
            common,
            checkpoint,
            data,
            metrics,
        } => {
            let (cfg, out) = common.resolve()?;
            let planner = Planner::load(&checkpoint)?;
            let metrics: Vec<Metric> = match metrics {
                Some(names) => harness::parse_metrics(&names)?,
                None => cfg.eval_metrics.clone(),
            };
            if metrics.is_empty() {
                return Err(Error::InvalidArgument("no metrics selected".into()));
            }
            let samples = evaluation_samples(&cfg, &planner, data.as_deref())?;
            let report = harness::evaluate(&planner, &samples, &metrics)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            let path = out.join("metrics.csv");
            report.write_csv(&path)?;
            for (m, v) in &report.rows {
                println!("{m}: {v:.6}");
            }
            println!("{} samples; metrics: {}", report.samples, path.display());
        }
    }
    Ok(())
}

fn evaluation_samples(
    cfg: &ExperimentConfig,
    planner: &Planner,
    data: Option<&Path>,
) -> Result<Vec<reschain::TrainingSample>> {
    match data {
        Some(path) => {
            let mut samples = Vec::new();
            for traj in read_trajectory_csv(path)? {
                samples.extend(
                    reschain::traj::extract_windows(&traj, planner.n, planner.m, cfg.dataset.stride)?
                        .into_samples(),
                );
            }
            if samples.is_empty() {
                return Err(Error::EmptyDataset(format!(
                    "{} has no trajectory long enough for windows (n={}, m={})",
                    path.display(),
                    planner.n,
                    planner.m
                )));
            }
            Ok(samples)
        }
        None => {
            let mut cfg = cfg.clone();
            cfg.dataset.n = planner.n;
            cfg.dataset.m = planner.m;
            Ok(harness::load_dataset(&cfg)?.val)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
