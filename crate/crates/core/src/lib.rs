//! Residual-chain targets for imitation-learned path planners.
//!
//! A planner predicts `m` per-step increments from a short pose history. This
//! crate provides the target conversions the planner can be trained against
//! (relative coordinates, ground-truth increments, and residual-chain
//! increments that are re-anchored on the model's own earlier predictions),
//! the losses and polyline metrics used to score it, a small MLP trained with
//! momentum SGD, a synthetic data generator, and the experiment harness.

pub mod datagen;
pub mod error;
pub mod harness;
pub mod loss;
pub mod metrics;
pub mod mlp;
pub mod traj;

pub use error::{Error, Result};
pub use loss::{LossReport, Scheme};
pub use metrics::{Metric, PointSeq};
pub use mlp::{ModelParams, Planner, SgdConfig};
pub use traj::{DeltaSequence, PathPoint, TrainingSample, Trajectory, Vec2};
