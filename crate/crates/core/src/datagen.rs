//! Synthetic driving logs with known kinematics, dataset assembly and
//! trajectory CSV files.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::traj::{extract_windows, PathPoint, TrainingSample, Trajectory, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    Straight,
    Arc,
    /// Constant forward speed with a sigmoid lateral offset.
    LaneChange,
    /// Piecewise-constant curvature; segment lengths and curvatures are drawn
    /// from the seed.
    Mixed,
}

/// Parameters of one synthetic trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: PathKind,
    pub num_points: usize,
    /// Meters per tick.
    pub speed: f64,
    /// 1/meters. For `Mixed` this is the largest magnitude a segment may use.
    #[serde(default)]
    pub curvature: f64,
    #[serde(default)]
    pub lateral_amplitude: f64,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub start: Vec2,
    /// Initial heading in radians.
    #[serde(default)]
    pub heading: f64,
}

impl GeneratorSpec {
    pub fn new(kind: PathKind, num_points: usize, speed: f64) -> Self {
        GeneratorSpec {
            kind,
            num_points,
            speed,
            curvature: 0.0,
            lateral_amplitude: 0.0,
            noise_std: 0.0,
            seed: 0,
            start: Vec2::ZERO,
            heading: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_points < 2 {
            return Err(Error::invalid("num_points must be at least 2"));
        }
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return Err(Error::invalid("speed must be positive"));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::invalid("noise_std must be non-negative"));
        }
        let finite = [
            self.curvature,
            self.lateral_amplitude,
            self.heading,
            self.start.x,
            self.start.y,
        ];
        if !finite.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("generator parameters must be finite"));
        }
        Ok(())
    }
}

/// One tick along a circle of curvature `c` (or a line when `c` is ~0).
fn advance(pos: Vec2, heading: f64, speed: f64, c: f64) -> (Vec2, f64) {
    let turn = speed * c;
    let (chord, dir) = if c.abs() < 1e-12 {
        (speed, heading)
    } else {
        (2.0 * (turn / 2.0).sin() / c, heading + turn / 2.0)
    };
    (
        pos + Vec2::new(chord * dir.cos(), chord * dir.sin()),
        heading + turn,
    )
}

fn nominal_path(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Vec<(Vec2, f64)> {
    let n = spec.num_points;
    match spec.kind {
        PathKind::Straight | PathKind::Arc => {
            let c = if spec.kind == PathKind::Arc {
                spec.curvature
            } else {
                0.0
            };
            let mut state = (spec.start, spec.heading);
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                out.push(state);
                state = advance(state.0, state.1, spec.speed, c);
            }
            out
        }
        PathKind::LaneChange => {
            let center = (n - 1) as f64 / 2.0;
            let tau = (n as f64 / 10.0).max(1.0);
            let (fwd, left) = (
                Vec2::new(spec.heading.cos(), spec.heading.sin()),
                Vec2::new(-spec.heading.sin(), spec.heading.cos()),
            );
            (0..n)
                .map(|k| {
                    let s = k as f64 * spec.speed;
                    let sig = 1.0 / (1.0 + (-(k as f64 - center) / tau).exp());
                    let lateral = spec.lateral_amplitude * sig;
                    let slope = spec.lateral_amplitude * sig * (1.0 - sig) / tau;
                    let pos =
                        spec.start + Vec2::new(fwd.x * s + left.x * lateral, fwd.y * s + left.y * lateral);
                    (pos, spec.heading + slope.atan2(spec.speed))
                })
                .collect()
        }
        PathKind::Mixed => {
            let mut state = (spec.start, spec.heading);
            let mut out = Vec::with_capacity(n);
            let mut c = 0.0;
            let mut left = 0;
            for _ in 0..n {
                if left == 0 {
                    left = rng.random_range(5..=15);
                    c = spec.curvature * rng.random_range(-1.0..=1.0);
                }
                left -= 1;
                out.push(state);
                state = advance(state.0, state.1, spec.speed, c);
            }
            out
        }
    }
}

/// Deterministic synthetic trajectory. Gaussian position noise is applied
/// after the nominal path; `yaw` is the nominal heading.
pub fn generate_trajectory(spec: &GeneratorSpec) -> Result<Trajectory> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let path = nominal_path(spec, &mut rng);
    let noise = Normal::new(0.0, spec.noise_std).map_err(|e| Error::invalid(e.to_string()))?;
    let points = path
        .into_iter()
        .enumerate()
        .map(|(t, (pos, yaw))| {
            let (mut x, mut y) = (pos.x, pos.y);
            if spec.noise_std > 0.0 {
                x += noise.sample(&mut rng);
                y += noise.sample(&mut rng);
            }
            PathPoint::with_yaw(t as i64, x, y, yaw)
        })
        .collect();
    Trajectory::new(points)
}

/// Closed interval `[lo, hi]` sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span(pub f64, pub f64);

impl Span {
    pub fn fixed(v: f64) -> Self {
        Span(v, v)
    }

    fn sample(self, rng: &mut impl Rng) -> f64 {
        if self.0 == self.1 {
            self.0
        } else {
            rng.random_range(self.0..=self.1)
        }
    }

    fn valid(self) -> bool {
        self.0.is_finite() && self.1.is_finite() && self.0 <= self.1
    }
}

/// A family of trajectories in the dataset mix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixEntry {
    pub kind: PathKind,
    pub weight: f64,
    pub speed: Span,
    #[serde(default = "zero_span")]
    pub curvature: Span,
    #[serde(default = "zero_span")]
    pub lateral_amplitude: Span,
    #[serde(default)]
    pub noise_std: f64,
}

fn zero_span() -> Span {
    Span::fixed(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub trajectories: usize,
    pub points_per_trajectory: usize,
    pub mix: Vec<MixEntry>,
    pub n: usize,
    pub m: usize,
    #[serde(default = "one")]
    pub stride: usize,
    pub split_fraction: f64,
    pub seed: u64,
    /// Start positions are drawn uniformly from `[-start_extent, start_extent]^2`.
    #[serde(default)]
    pub start_extent: f64,
}

fn one() -> usize {
    1
}

impl Default for DatasetSpec {
    fn default() -> Self {
        let noise = 0.05;
        DatasetSpec {
            trajectories: 200,
            points_per_trajectory: 40,
            mix: vec![
                MixEntry {
                    kind: PathKind::Arc,
                    weight: 1.0,
                    speed: Span(0.8, 1.6),
                    curvature: Span(-0.06, 0.06),
                    lateral_amplitude: zero_span(),
                    noise_std: noise,
                },
                MixEntry {
                    kind: PathKind::LaneChange,
                    weight: 1.0,
                    speed: Span(0.8, 1.6),
                    curvature: zero_span(),
                    lateral_amplitude: Span(-3.5, 3.5),
                    noise_std: noise,
                },
                MixEntry {
                    kind: PathKind::Mixed,
                    weight: 1.0,
                    speed: Span(0.8, 1.6),
                    curvature: Span::fixed(0.08),
                    lateral_amplitude: zero_span(),
                    noise_std: noise,
                },
            ],
            n: 4,
            m: 6,
            stride: 1,
            split_fraction: 0.2,
            seed: DEFAULT_SEED,
            start_extent: 500.0,
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trajectories < 2 {
            return Err(Error::invalid("need at least 2 trajectories to split"));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::invalid("split_fraction must lie strictly between 0 and 1"));
        }
        if self.mix.is_empty() {
            return Err(Error::invalid("generator mix is empty"));
        }
        if self
            .mix
            .iter()
            .any(|e| !(e.weight >= 0.0 && e.weight.is_finite()))
        {
            return Err(Error::invalid("mix weights must be non-negative"));
        }
        if self.mix.iter().all(|e| e.weight == 0.0) {
            return Err(Error::invalid("mix weights are all zero"));
        }
        for e in &self.mix {
            if !(e.speed.valid() && e.curvature.valid() && e.lateral_amplitude.valid()) {
                return Err(Error::invalid(format!(
                    "{:?}: parameter ranges must be finite with lo <= hi",
                    e.kind
                )));
            }
            if e.speed.0 <= 0.0 {
                return Err(Error::invalid("speeds must be positive"));
            }
        }
        if self.m == 0 || self.stride == 0 {
            return Err(Error::invalid("m and stride must be at least 1"));
        }
        if !(self.start_extent >= 0.0 && self.start_extent.is_finite()) {
            return Err(Error::invalid("start_extent must be non-negative"));
        }
        Ok(())
    }

    /// Generator parameters for trajectory `index`; independent of every
    /// other index.
    pub fn generator_for(&self, index: usize) -> GeneratorSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, index as u64));
        let total: f64 = self.mix.iter().map(|e| e.weight).sum();
        let mut pick = rng.random_range(0.0..total);
        let entry = self
            .mix
            .iter()
            .find(|e| {
                if pick < e.weight {
                    true
                } else {
                    pick -= e.weight;
                    false
                }
            })
            .unwrap_or_else(|| self.mix.iter().rfind(|e| e.weight > 0.0).unwrap());
        let ext = self.start_extent;
        GeneratorSpec {
            kind: entry.kind,
            num_points: self.points_per_trajectory,
            speed: entry.speed.sample(&mut rng),
            curvature: entry.curvature.sample(&mut rng),
            lateral_amplitude: entry.lateral_amplitude.sample(&mut rng),
            noise_std: entry.noise_std,
            start: Vec2::new(Span(-ext, ext).sample(&mut rng), Span(-ext, ext).sample(&mut rng)),
            heading: rng.random_range(-PI..PI),
            seed: rng.next_u64(),
        }
    }

    pub fn generate_trajectories(&self) -> Result<Vec<Trajectory>> {
        self.validate()?;
        (0..self.trajectories)
            .map(|i| generate_trajectory(&self.generator_for(i)))
            .collect()
    }
}

/// Seed shared by the default dataset, initialisation and shuffling.
pub const DEFAULT_SEED: u64 = 11;

/// SplitMix64 finaliser over `(master, stream)`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Vec<TrainingSample>,
    pub val: Vec<TrainingSample>,
    pub train_trajectories: Vec<usize>,
    pub val_trajectories: Vec<usize>,
}

/// Split whole trajectories into train and validation, then cut windows.
pub fn split_trajectories(
    trajs: &[Trajectory],
    n: usize,
    m: usize,
    stride: usize,
    split_fraction: f64,
    seed: u64,
) -> Result<Dataset> {
    if trajs.len() < 2 {
        return Err(Error::invalid("need at least 2 trajectories to split"));
    }
    if !(split_fraction > 0.0 && split_fraction < 1.0) {
        return Err(Error::invalid("split_fraction must lie strictly between 0 and 1"));
    }
    let count = trajs.len();
    let val_count = ((count as f64 * split_fraction).round() as usize).clamp(1, count - 1);
    let mut order: Vec<usize> = (0..count).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, u64::MAX)));
    let mut val_ids = order[..val_count].to_vec();
    let mut train_ids = order[val_count..].to_vec();
    val_ids.sort_unstable();
    train_ids.sort_unstable();

    let windows = |ids: &[usize]| -> Result<Vec<TrainingSample>> {
        let mut out = Vec::new();
        for &i in ids {
            out.extend(extract_windows(&trajs[i], n, m, stride)?.into_samples());
        }
        Ok(out)
    };
    let train = windows(&train_ids)?;
    let val = windows(&val_ids)?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "windows (n={n}, m={m}) produced {} train and {} validation samples",
            train.len(),
            val.len()
        )));
    }
    Ok(Dataset {
        train,
        val,
        train_trajectories: train_ids,
        val_trajectories: val_ids,
    })
}

pub fn build_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    let trajs = spec.generate_trajectories()?;
    split_trajectories(
        &trajs,
        spec.n,
        spec.m,
        spec.stride,
        spec.split_fraction,
        spec.seed,
    )
}

const CSV_HEADER: [&str; 5] = ["traj_id", "t", "x", "y", "yaw"];

/// Write trajectories with ids `0..len` in the `traj_id,t,x,y,yaw` schema.
pub fn write_trajectory_csv(trajs: &[Trajectory], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", CSV_HEADER.join(",")).map_err(io)?;
    for (id, traj) in trajs.iter().enumerate() {
        for p in traj.points() {
            writeln!(w, "{id},{},{:.9},{:.9},{:.9}", p.t, p.x, p.y, p.yaw).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

/// Read trajectories grouped by `traj_id` (ascending) and sorted by `t`.
pub fn read_trajectory_csv(path: &Path) -> Result<Vec<Trajectory>> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => parse_err(1, format!("{other:?}")),
        })?;
    let headers = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let mut columns = [0usize; 5];
    for (slot, name) in columns.iter_mut().zip(CSV_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(1, format!("missing column `{name}`")))?;
    }

    let mut groups: BTreeMap<i64, BTreeMap<i64, PathPoint>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |col: usize| {
            record
                .get(columns[col])
                .ok_or_else(|| parse_err(line, format!("missing field `{}`", CSV_HEADER[col])))
        };
        let int = |col: usize| -> Result<i64> {
            let raw = field(col)?;
            raw.parse()
                .map_err(|_| parse_err(line, format!("`{}` is not an integer: `{raw}`", CSV_HEADER[col])))
        };
        let float = |col: usize| -> Result<f64> {
            let raw = field(col)?;
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(parse_err(
                    line,
                    format!("`{}` is not a finite number: `{raw}`", CSV_HEADER[col]),
                )),
            }
        };
        let (id, t) = (int(0)?, int(1)?);
        let point = PathPoint::with_yaw(t, float(2)?, float(3)?, float(4)?);
        if groups.entry(id).or_default().insert(t, point).is_some() {
            return Err(parse_err(line, format!("duplicate row for traj_id {id}, t {t}")));
        }
    }

    groups
        .into_iter()
        .map(|(id, pts)| {
            Trajectory::new(pts.into_values().collect())
                .map_err(|e| Error::Validation(format!("traj_id {id}: {e}")))
        })
        .collect()
}
