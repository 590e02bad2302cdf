use std::path::Path;

use crate::error::{Error, Result};
use crate::loss::Scheme;
use crate::metrics::{Metric, PointSeq};
use crate::mlp::Planner;
use crate::traj::{DeltaSequence, TrainingSample};

/// Mean of each selected metric over the evaluated samples, in selection order.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub samples: usize,
    pub rows: Vec<(Metric, f64)>,
}

impl EvalReport {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        self.rows.iter().find(|(m, _)| *m == metric).map(|(_, v)| *v)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        for (m, v) in &self.rows {
            out.push_str(&format!("{m},{v:.9}\n"));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Parse metric names, rejecting unknown ones.
pub fn parse_metrics<S: AsRef<str>>(names: &[S]) -> Result<Vec<Metric>> {
    names.iter().map(|n| n.as_ref().trim().parse()).collect()
}

/// Evaluate an arbitrary predictor whose outputs follow `scheme`.
pub fn evaluate_with<F>(
    samples: &[TrainingSample],
    scheme: Scheme,
    metrics: &[Metric],
    mut predict: F,
) -> Result<EvalReport>
where
    F: FnMut(&TrainingSample) -> Result<DeltaSequence>,
{
    if samples.is_empty() {
        return Err(Error::invalid("no samples to evaluate"));
    }
    let mut sums = vec![0.0; metrics.len()];
    for s in samples {
        let outputs = predict(s)?;
        if outputs.len() != s.m() {
            return Err(Error::invalid("prediction length does not match sample horizon"));
        }
        let pred = PointSeq::new(scheme.recover(s, &outputs))?;
        let truth = PointSeq::new(s.future_positions())?;
        for (sum, m) in sums.iter_mut().zip(metrics) {
            *sum += m.compute(&pred, &truth)?;
        }
    }
    let count = samples.len() as f64;
    Ok(EvalReport {
        samples: samples.len(),
        rows: metrics.iter().zip(sums).map(|(m, s)| (*m, s / count)).collect(),
    })
}

pub fn evaluate(planner: &Planner, samples: &[TrainingSample], metrics: &[Metric]) -> Result<EvalReport> {
    evaluate_with(samples, planner.scheme, metrics, |s| planner.predict(s))
}
