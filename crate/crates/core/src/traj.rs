//! Path points, training windows and the target conversions a planner can be
//! trained against.
//!
//! All conversions work in a translated frame: coordinates are expressed
//! relative to the current pose, never rotated into its heading. The vertical
//! coordinate is not modelled.

use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A planar displacement or position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl From<(f64, f64)> for Vec2 {
    fn from((x, y): (f64, f64)) -> Self {
        Vec2::new(x, y)
    }
}

/// One timestamped pose sample. `t` counts equal-interval ticks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub t: i64,
    pub x: f64,
    pub y: f64,
    /// Heading in radians. Recorded by the generators, ignored by the conversions.
    #[serde(default)]
    pub yaw: f64,
}

impl PathPoint {
    pub fn new(t: i64, x: f64, y: f64) -> Self {
        PathPoint { t, x, y, yaw: 0.0 }
    }

    pub fn with_yaw(t: i64, x: f64, y: f64, yaw: f64) -> Self {
        PathPoint { t, x, y, yaw }
    }

    pub fn pos(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.yaw.is_finite()
    }
}

fn check_consecutive(points: &[PathPoint], what: &str) -> Result<()> {
    if let Some(p) = points.iter().find(|p| !p.is_finite()) {
        return Err(Error::Validation(format!(
            "{what}: non-finite coordinate at t={}",
            p.t
        )));
    }
    for w in points.windows(2) {
        if w[1].t != w[0].t + 1 {
            return Err(Error::Validation(format!(
                "{what}: timestamps not consecutive ({} followed by {})",
                w[0].t, w[1].t
            )));
        }
    }
    Ok(())
}

/// An equal-interval driving log: at least two points with consecutive ticks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    points: Vec<PathPoint>,
}

impl Trajectory {
    pub fn new(points: Vec<PathPoint>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Validation(format!(
                "trajectory needs at least 2 points, got {}",
                points.len()
            )));
        }
        check_consecutive(&points, "trajectory")?;
        Ok(Trajectory { points })
    }

    pub fn points(&self) -> &[PathPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<PathPoint> {
        self.points
    }
}

/// Model input/target pair: `past` ends with the current pose, `future` holds
/// the `m` ground-truth points that follow it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample {
    past: Vec<PathPoint>,
    future: Vec<PathPoint>,
}

impl TrainingSample {
    pub fn new(past: Vec<PathPoint>, future: Vec<PathPoint>) -> Result<Self> {
        if past.is_empty() || future.is_empty() {
            return Err(Error::Validation(
                "sample needs a current point and at least one future point".into(),
            ));
        }
        if future[0].t != past[past.len() - 1].t + 1 {
            return Err(Error::Validation(
                "future does not continue the past window".into(),
            ));
        }
        check_consecutive(&past, "past window")?;
        check_consecutive(&future, "future window")?;
        Ok(TrainingSample { past, future })
    }

    pub fn past(&self) -> &[PathPoint] {
        &self.past
    }

    pub fn future(&self) -> &[PathPoint] {
        &self.future
    }

    /// The current pose `(x_0, y_0)`.
    pub fn current(&self) -> &PathPoint {
        &self.past[self.past.len() - 1]
    }

    /// Number of history points before the current one.
    pub fn n(&self) -> usize {
        self.past.len() - 1
    }

    /// Prediction horizon.
    pub fn m(&self) -> usize {
        self.future.len()
    }

    pub fn future_positions(&self) -> Vec<Vec2> {
        self.future.iter().map(PathPoint::pos).collect()
    }

    /// Shift every point by `offset`.
    pub fn translated(&self, offset: Vec2) -> TrainingSample {
        let shift = |p: &PathPoint| PathPoint {
            x: p.x + offset.x,
            y: p.y + offset.y,
            ..*p
        };
        TrainingSample {
            past: self.past.iter().map(shift).collect(),
            future: self.future.iter().map(shift).collect(),
        }
    }
}

/// Ordered per-step displacements; the planner's output space.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeltaSequence(pub Vec<Vec2>);

impl DeltaSequence {
    pub fn new(deltas: Vec<Vec2>) -> Self {
        DeltaSequence(deltas)
    }

    pub fn zeros(m: usize) -> Self {
        DeltaSequence(vec![Vec2::ZERO; m])
    }

    /// Interpret a flat `[dx1, dy1, dx2, dy2, ...]` buffer.
    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if !flat.len().is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "flat delta buffer has odd length {}",
                flat.len()
            )));
        }
        Ok(DeltaSequence(
            flat.chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect(),
        ))
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.0.iter().flat_map(|d| [d.x, d.y]).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Vec2] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|d| d.is_finite())
    }
}

/// Result of [`extract_windows`]. A trajectory that is merely too short is not
/// an error; it yields [`Windows::TooShort`].
#[derive(Debug, Clone, PartialEq)]
pub enum Windows {
    Samples(Vec<TrainingSample>),
    TooShort { len: usize, required: usize },
}

impl Windows {
    pub fn into_samples(self) -> Vec<TrainingSample> {
        match self {
            Windows::Samples(s) => s,
            Windows::TooShort { .. } => Vec::new(),
        }
    }
}

/// Cut every window with `n` history points and `m` future points whose
/// current index lies in `n..=len-m-1`, stepping by `stride`.
pub fn extract_windows(traj: &Trajectory, n: usize, m: usize, stride: usize) -> Result<Windows> {
    if m == 0 {
        return Err(Error::invalid("window horizon m must be at least 1"));
    }
    if stride == 0 {
        return Err(Error::invalid("window stride must be at least 1"));
    }
    let pts = traj.points();
    let required = n + m + 1;
    if pts.len() < required {
        return Ok(Windows::TooShort {
            len: pts.len(),
            required,
        });
    }
    let samples = (n..=pts.len() - m - 1)
        .step_by(stride)
        .map(|i| TrainingSample {
            past: pts[i - n..=i].to_vec(),
            future: pts[i + 1..=i + m].to_vec(),
        })
        .collect();
    Ok(Windows::Samples(samples))
}

/// Future points relative to the current pose.
pub fn to_relative(sample: &TrainingSample) -> Vec<Vec2> {
    let origin = sample.current().pos();
    sample.future.iter().map(|p| p.pos() - origin).collect()
}

/// Step-to-step increments along the ground-truth future, starting at the
/// current pose.
pub fn to_deltas(sample: &TrainingSample) -> DeltaSequence {
    let mut prev = sample.current().pos();
    DeltaSequence(
        sample
            .future
            .iter()
            .map(|p| {
                let d = p.pos() - prev;
                prev = p.pos();
                d
            })
            .collect(),
    )
}

/// Residual-chain targets: the increment each output step must contribute so
/// that the *predicted* chain of previous increments lands on the ground
/// truth. Target `t` is `x_t - (x_0 + sum of predicted deltas before t)`.
///
/// The returned values are plain numbers; callers must treat them as
/// constants when differentiating.
pub fn residual_chain_targets(sample: &TrainingSample, predicted: &DeltaSequence) -> Result<DeltaSequence> {
    if predicted.len() != sample.m() {
        return Err(Error::invalid(format!(
            "predicted sequence has {} steps, sample horizon is {}",
            predicted.len(),
            sample.m()
        )));
    }
    let mut reached = sample.current().pos();
    let targets = sample
        .future
        .iter()
        .zip(predicted.as_slice())
        .map(|(truth, step)| {
            let target = truth.pos() - reached;
            reached += *step;
            target
        })
        .collect();
    Ok(DeltaSequence(targets))
}

/// Absolute points obtained by chaining `deltas` from `current`.
pub fn recover_absolute(current: &PathPoint, deltas: &DeltaSequence) -> Vec<Vec2> {
    let mut pos = current.pos();
    deltas
        .as_slice()
        .iter()
        .map(|d| {
            pos += *d;
            pos
        })
        .collect()
}
