//! Training loop, scheme comparison, evaluation and the file outputs the CLI
//! produces.

mod compare;
mod config;
mod evaluate;
mod train;

use std::path::{Path, PathBuf};

pub use compare::{
    compare_schemes, comparison_csv, write_comparison, Comparison, ComparisonFiles, Summary, REFERENCE_RATIO,
};
pub use config::{ExperimentConfig, ModelConfig};
pub use evaluate::{evaluate, evaluate_with, parse_metrics, EvalReport};
pub use train::{
    load_dataset, loss_csv, make_targets, mean_absolute_loss, train_on, train_one, write_loss_csv,
    TrainOutcome, LOSS_CSV_HEADER,
};

use crate::datagen::write_trajectory_csv;
use crate::error::{Error, Result};
use crate::loss::Scheme;

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Generate the configured synthetic trajectories into `dir/trajectories.csv`.
pub fn run_generate(config: &ExperimentConfig, dir: &Path) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let trajs = config.dataset.generate_trajectories()?;
    let path = dir.join("trajectories.csv");
    write_trajectory_csv(&trajs, &path)?;
    Ok(path)
}

#[derive(Debug, Clone)]
pub struct TrainFiles {
    pub checkpoint: PathBuf,
    pub loss_curve: PathBuf,
}

/// Train and write `checkpoint.json` and `loss_<scheme>.csv` into `dir`.
pub fn run_train(config: &ExperimentConfig, dir: &Path) -> Result<(TrainOutcome, TrainFiles)> {
    let outcome = train_one(config)?;
    ensure_dir(dir)?;
    let files = TrainFiles {
        checkpoint: dir.join("checkpoint.json"),
        loss_curve: dir.join(format!("loss_{}.csv", config.scheme)),
    };
    outcome.planner.save(&files.checkpoint)?;
    write_loss_csv(&outcome.reports, &files.loss_curve)?;
    Ok((outcome, files))
}

/// Compare `baseline` against `candidate` on the shared config and write the
/// curves and summary into `dir`.
pub fn run_compare(
    config: &ExperimentConfig,
    baseline: Scheme,
    candidate: Scheme,
    dir: &Path,
) -> Result<(Comparison, ComparisonFiles)> {
    let mut a = config.clone();
    a.scheme = baseline;
    let mut b = config.clone();
    b.scheme = candidate;
    let c = compare_schemes(&a, &b)?;
    let files = write_comparison(&c, dir)?;
    Ok((c, files))
}
