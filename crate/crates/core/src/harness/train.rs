use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::datagen::{build_dataset, derive_seed, read_trajectory_csv, split_trajectories, Dataset};
use crate::error::{Error, Result};
use crate::loss::{delta_training_loss, evaluate_absolute, LossReport, Scheme};
use crate::mlp::{
    backward_into, featurize, forward_trace, init_params, sgd_step, FeatureScaler, Gradients, Planner,
    SgdState,
};
use crate::traj::{residual_chain_targets, to_deltas, to_relative, DeltaSequence, TrainingSample};

use super::config::ExperimentConfig;

/// Training targets for `sample` under `scheme`. The residual chain needs the
/// model's own predictions for the same sample.
pub fn make_targets(
    sample: &TrainingSample,
    scheme: Scheme,
    predicted: Option<&DeltaSequence>,
) -> Result<DeltaSequence> {
    match scheme {
        Scheme::Relative => Ok(DeltaSequence(to_relative(sample))),
        Scheme::Delta => Ok(to_deltas(sample)),
        Scheme::ResidualChain => {
            let predicted = predicted
                .ok_or_else(|| Error::invalid("residual-chain targets need the model's predictions"))?;
            residual_chain_targets(sample, predicted)
        }
    }
}

/// Synthetic dataset, or the configured CSV windowed and split the same way.
pub fn load_dataset(config: &ExperimentConfig) -> Result<Dataset> {
    match &config.data_csv {
        None => build_dataset(&config.dataset),
        Some(path) => {
            let trajs = read_trajectory_csv(path)?;
            let d = &config.dataset;
            split_trajectories(&trajs, d.n, d.m, d.stride, d.split_fraction, d.seed)
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub planner: Planner,
    pub reports: Vec<LossReport>,
}

impl TrainOutcome {
    pub fn final_report(&self) -> &LossReport {
        self.reports.last().expect("at least one epoch")
    }
}

/// Mean absolute-space loss of `planner` over `samples`.
pub fn mean_absolute_loss(planner: &Planner, samples: &[TrainingSample]) -> Result<f64> {
    let mut total = 0.0;
    for s in samples {
        total += evaluate_absolute(s, &planner.predict(s)?, planner.scheme)?;
    }
    Ok(total / samples.len() as f64)
}

pub fn train_one(config: &ExperimentConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let dataset = load_dataset(config)?;
    train_on(config, &dataset)
}

/// Train on an already assembled dataset. Deterministic given the config.
pub fn train_on(config: &ExperimentConfig, dataset: &Dataset) -> Result<TrainOutcome> {
    config.validate()?;
    let (n, m) = (config.dataset.n, config.dataset.m);
    if let Some(s) = dataset
        .train
        .iter()
        .chain(&dataset.val)
        .find(|s| s.n() != n || s.m() != m)
    {
        return Err(Error::invalid(format!(
            "dataset window (n={}, m={}) does not match config (n={n}, m={m})",
            s.n(),
            s.m()
        )));
    }
    if dataset.train.is_empty() || dataset.val.is_empty() {
        return Err(Error::EmptyDataset(
            "train or validation split has no samples".into(),
        ));
    }

    let raw: Vec<Vec<f64>> = dataset.train.iter().map(featurize).collect();
    let scaler = FeatureScaler::fit(&raw)?;
    let features: Vec<Vec<f64>> = raw
        .into_iter()
        .map(|mut f| {
            scaler.apply(&mut f);
            f
        })
        .collect();

    let scheme = config.scheme;
    let sgd = &config.sgd;
    let params = init_params(
        &config.layer_sizes(),
        config.model.activation,
        config.model.init_seed,
    )?;
    let mut planner = Planner {
        params,
        scaler,
        n,
        m,
        scheme,
    };
    let mut state = SgdState::new(&planner.params);
    let mut grads = Gradients::zeros_like(&planner.params);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(sgd.seed, 0));
    let mut order: Vec<usize> = (0..dataset.train.len()).collect();
    let mut reports = Vec::with_capacity(sgd.epochs);

    for epoch in 1..=sgd.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut last_batch = 0;
        for (batch, idx) in order.chunks(sgd.batch_size).enumerate() {
            last_batch = batch;
            grads.values_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / idx.len() as f64;
            let mut batch_loss = 0.0;
            for &i in idx {
                let sample = &dataset.train[i];
                let trace = forward_trace(&planner.params, &features[i])?;
                let predicted = DeltaSequence::from_flat(trace.output())?;
                // Targets are plain values: no gradient flows through them.
                let targets = make_targets(sample, scheme, Some(&predicted))?;
                let (loss, out_grad) = delta_training_loss(&targets, &predicted)?;
                batch_loss += loss;
                backward_into(&planner.params, &trace, &out_grad.to_flat(), scale, &mut grads)?;
            }
            if !batch_loss.is_finite() {
                return Err(Error::Divergence { epoch, batch });
            }
            epoch_loss += batch_loss;
            sgd_step(&mut planner.params, &grads, sgd, &mut state).map_err(|e| match e {
                Error::NonFiniteGradient { .. } => Error::Divergence { epoch, batch },
                other => other,
            })?;
        }

        let report = LossReport {
            epoch,
            train_delta_loss: epoch_loss / dataset.train.len() as f64,
            train_abs_loss: mean_absolute_loss(&planner, &dataset.train)?,
            val_abs_loss: mean_absolute_loss(&planner, &dataset.val)?,
            scheme,
        };
        let finite = [
            report.train_delta_loss,
            report.train_abs_loss,
            report.val_abs_loss,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Divergence {
                epoch,
                batch: last_batch,
            });
        }
        reports.push(report);
    }

    Ok(TrainOutcome { planner, reports })
}

pub const LOSS_CSV_HEADER: &str = "epoch,train_delta_loss,train_abs_loss,val_abs_loss";

pub fn loss_csv(reports: &[LossReport]) -> String {
    let mut out = String::from(LOSS_CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&format!(
            "{},{:.9},{:.9},{:.9}\n",
            r.epoch, r.train_delta_loss, r.train_abs_loss, r.val_abs_loss
        ));
    }
    out
}

pub fn write_loss_csv(reports: &[LossReport], path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(loss_csv(reports).as_bytes())
        .map_err(|e| Error::io(path, e))
}
