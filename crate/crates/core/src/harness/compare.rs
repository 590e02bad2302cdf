use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::Scheme;

use super::config::ExperimentConfig;
use super::train::{load_dataset, train_on, write_loss_csv, TrainOutcome};

/// Loss ratio (candidate / baseline) reported for the residual chain against
/// the relative-coordinate baseline on real driving logs. Kept for reference
/// in summaries; not a target for synthetic runs.
pub const REFERENCE_RATIO: f64 = 0.85;

#[derive(Debug, Clone)]
pub struct Comparison {
    pub baseline: TrainOutcome,
    pub candidate: TrainOutcome,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub baseline_scheme: Scheme,
    pub candidate_scheme: Scheme,
    pub baseline_final_val_abs_loss: f64,
    pub candidate_final_val_abs_loss: f64,
    pub baseline_final_train_abs_loss: f64,
    pub candidate_final_train_abs_loss: f64,
    /// candidate / baseline, on final validation loss.
    pub ratio: f64,
    pub reference_ratio: f64,
    /// Whether the candidate's final validation loss is no worse than the
    /// baseline's.
    pub candidate_not_worse: bool,
    pub epochs: usize,
    pub config_hash: String,
}

/// Train both configs on one shared dataset and summarise. The configs may
/// differ only in `scheme`.
pub fn compare_schemes(baseline: &ExperimentConfig, candidate: &ExperimentConfig) -> Result<Comparison> {
    let mut aligned = candidate.clone();
    aligned.scheme = baseline.scheme;
    aligned.output_dir = baseline.output_dir.clone();
    if &aligned != baseline {
        return Err(Error::invalid("compared configs must differ only in scheme"));
    }
    baseline.validate()?;
    let dataset = load_dataset(baseline)?;

    let (a, b) = std::thread::scope(|s| {
        let a = s.spawn(|| train_on(baseline, &dataset));
        let b = s.spawn(|| train_on(candidate, &dataset));
        (a.join(), b.join())
    });
    let baseline_run = a.expect("baseline training thread panicked")?;
    let candidate_run = b.expect("candidate training thread panicked")?;

    let (fa, fb) = (baseline_run.final_report(), candidate_run.final_report());
    let ratio = fb.val_abs_loss / fa.val_abs_loss;
    let summary = Summary {
        baseline_scheme: baseline.scheme,
        candidate_scheme: candidate.scheme,
        baseline_final_val_abs_loss: fa.val_abs_loss,
        candidate_final_val_abs_loss: fb.val_abs_loss,
        baseline_final_train_abs_loss: fa.train_abs_loss,
        candidate_final_train_abs_loss: fb.train_abs_loss,
        ratio,
        reference_ratio: REFERENCE_RATIO,
        candidate_not_worse: fb.val_abs_loss <= fa.val_abs_loss,
        epochs: baseline.sgd.epochs,
        config_hash: baseline.shared_hash(),
    };
    Ok(Comparison {
        baseline: baseline_run,
        candidate: candidate_run,
        summary,
    })
}

/// Per-epoch validation curves side by side.
pub fn comparison_csv(c: &Comparison) -> String {
    let mut out = format!(
        "epoch,{}_val_abs_loss,{}_val_abs_loss\n",
        prefix("baseline", c.summary.baseline_scheme),
        prefix("candidate", c.summary.candidate_scheme)
    );
    for (a, b) in c.baseline.reports.iter().zip(&c.candidate.reports) {
        out.push_str(&format!(
            "{},{:.9},{:.9}\n",
            a.epoch, a.val_abs_loss, b.val_abs_loss
        ));
    }
    out
}

fn prefix(role: &str, scheme: Scheme) -> String {
    format!("{role}_{scheme}")
}

#[derive(Debug, Clone)]
pub struct ComparisonFiles {
    pub baseline_loss: PathBuf,
    pub candidate_loss: PathBuf,
    pub curves: PathBuf,
    pub summary: PathBuf,
}

/// Write both loss curves, the aligned validation curves and `summary.json`.
pub fn write_comparison(c: &Comparison, dir: &Path) -> Result<ComparisonFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = ComparisonFiles {
        baseline_loss: dir.join(format!(
            "loss_{}.csv",
            prefix("baseline", c.summary.baseline_scheme)
        )),
        candidate_loss: dir.join(format!(
            "loss_{}.csv",
            prefix("candidate", c.summary.candidate_scheme)
        )),
        curves: dir.join("comparison.csv"),
        summary: dir.join("summary.json"),
    };
    write_loss_csv(&c.baseline.reports, &files.baseline_loss)?;
    write_loss_csv(&c.candidate.reports, &files.candidate_loss)?;
    std::fs::write(&files.curves, comparison_csv(c)).map_err(|e| Error::io(&files.curves, e))?;
    let json = serde_json::to_string_pretty(&c.summary).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(&files.summary, json + "\n").map_err(|e| Error::io(&files.summary, e))?;
    Ok(files)
}
