//! A small fully connected planner with hand-written backpropagation and
//! momentum SGD. Everything is `f64`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::Scheme;
use crate::traj::{DeltaSequence, TrainingSample};

/// Hidden-layer nonlinearity. The output layer is always linear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the activation output `a = f(z)`.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            other => Err(Error::invalid(format!("unknown activation `{other}`"))),
        }
    }
}

/// One affine map. `weights` is row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.weights
                .chunks_exact(self.inputs)
                .zip(&self.biases)
                .map(|(row, b)| b + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>()),
        );
    }

    fn values(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(&self.biases)
    }

    fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(self.biases.iter_mut())
    }
}

/// Weights and biases of the planner plus its shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub layers: Vec<Layer>,
}

fn check_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::invalid("need at least an input and an output size"));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::invalid("layer sizes must be positive"));
    }
    Ok(())
}

impl ModelParams {
    pub fn zeros(layer_sizes: &[usize], activation: Activation) -> Result<Self> {
        check_sizes(layer_sizes)?;
        Ok(ModelParams {
            layer_sizes: layer_sizes.to_vec(),
            activation,
            layers: layer_sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
        })
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        self.layer_sizes[self.layer_sizes.len() - 1]
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// All weights then biases, layer by layer.
    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(Layer::values)
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(Layer::values_mut)
    }

    /// Shape and finiteness check, used after deserialisation.
    pub fn validate(&self) -> Result<()> {
        check_sizes(&self.layer_sizes)?;
        if self.layers.len() != self.layer_sizes.len() - 1 {
            return Err(Error::Validation("layer count does not match layer_sizes".into()));
        }
        for (l, w) in self.layers.iter().zip(self.layer_sizes.windows(2)) {
            if l.inputs != w[0]
                || l.outputs != w[1]
                || l.weights.len() != w[0] * w[1]
                || l.biases.len() != w[1]
            {
                return Err(Error::Validation("layer shapes do not chain".into()));
            }
        }
        if !self.values().all(|v| v.is_finite()) {
            return Err(Error::Validation("parameters contain non-finite values".into()));
        }
        Ok(())
    }
}

/// Xavier-uniform weights, zero biases.
pub fn init_params(layer_sizes: &[usize], activation: Activation, seed: u64) -> Result<ModelParams> {
    let mut params = ModelParams::zeros(layer_sizes, activation)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for layer in &mut params.layers {
        let bound = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
        for w in &mut layer.weights {
            *w = rng.random_range(-bound..=bound);
        }
    }
    Ok(params)
}

/// Intermediate activations of one forward pass; `activations[0]` is the input.
#[derive(Debug, Clone)]
pub struct Trace {
    activations: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        &self.activations[self.activations.len() - 1]
    }
}

pub fn forward_trace(params: &ModelParams, features: &[f64]) -> Result<Trace> {
    if features.len() != params.input_size() {
        return Err(Error::invalid(format!(
            "feature length {} does not match model input size {}",
            features.len(),
            params.input_size()
        )));
    }
    let last = params.layers.len() - 1;
    let mut activations = Vec::with_capacity(params.layers.len() + 1);
    activations.push(features.to_vec());
    for (i, layer) in params.layers.iter().enumerate() {
        let mut z = Vec::with_capacity(layer.outputs);
        layer.affine(&activations[i], &mut z);
        if i < last {
            z.iter_mut().for_each(|v| *v = params.activation.apply(*v));
        }
        activations.push(z);
    }
    Ok(Trace { activations })
}

/// Predicted deltas for one feature vector.
pub fn forward(params: &ModelParams, features: &[f64]) -> Result<DeltaSequence> {
    DeltaSequence::from_flat(forward_trace(params, features)?.output())
}

/// Gradient container with the same shape as [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        Gradients {
            layers: params
                .layers
                .iter()
                .map(|l| Layer::zeros(l.inputs, l.outputs))
                .collect(),
        }
    }

    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(Layer::values)
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(Layer::values_mut)
    }

    fn matches(&self, params: &ModelParams) -> bool {
        self.layers.len() == params.layers.len()
            && self
                .layers
                .iter()
                .zip(&params.layers)
                .all(|(g, p)| g.inputs == p.inputs && g.outputs == p.outputs)
    }
}

/// Accumulate `scale * d(output . output_grad)/d(params)` into `grads`.
pub fn backward_into(
    params: &ModelParams,
    trace: &Trace,
    output_grad: &[f64],
    scale: f64,
    grads: &mut Gradients,
) -> Result<()> {
    if output_grad.len() != params.output_size() {
        return Err(Error::invalid(format!(
            "output gradient length {} does not match model output size {}",
            output_grad.len(),
            params.output_size()
        )));
    }
    if !grads.matches(params) {
        return Err(Error::invalid("gradient buffer shape does not match params"));
    }
    let mut delta: Vec<f64> = output_grad.iter().map(|g| g * scale).collect();
    for i in (0..params.layers.len()).rev() {
        let layer = &params.layers[i];
        let input = &trace.activations[i];
        let g = &mut grads.layers[i];
        for (o, d) in delta.iter().enumerate() {
            g.biases[o] += d;
            let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
            for (w, x) in row.iter_mut().zip(input) {
                *w += d * x;
            }
        }
        if i > 0 {
            let mut upstream = vec![0.0; layer.inputs];
            for (row, d) in layer.weights.chunks_exact(layer.inputs).zip(&delta) {
                for (u, w) in upstream.iter_mut().zip(row) {
                    *u += w * d;
                }
            }
            for (u, a) in upstream.iter_mut().zip(input) {
                *u *= params.activation.derivative_from_output(*a);
            }
            delta = upstream;
        }
    }
    Ok(())
}

/// Reverse-mode gradient of `output . output_grad` with respect to every
/// parameter.
pub fn backward(params: &ModelParams, features: &[f64], output_grad: &[f64]) -> Result<Gradients> {
    let trace = forward_trace(params, features)?;
    let mut grads = Gradients::zeros_like(params);
    backward_into(params, &trace, output_grad, 1.0, &mut grads)?;
    Ok(grads)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            learning_rate: 1e-3,
            momentum: 0.9,
            batch_size: 32,
            epochs: 200,
            seed: crate::datagen::DEFAULT_SEED,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid("momentum must lie in [0, 1)"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        Ok(())
    }
}

/// Velocity buffer carried between [`sgd_step`] calls.
#[derive(Debug, Clone)]
pub struct SgdState {
    velocity: Gradients,
    step: u64,
}

impl SgdState {
    pub fn new(params: &ModelParams) -> Self {
        SgdState {
            velocity: Gradients::zeros_like(params),
            step: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }
}

/// Classical momentum: `v = mu * v + g; p -= lr * v`.
pub fn sgd_step(
    params: &mut ModelParams,
    grads: &Gradients,
    config: &SgdConfig,
    state: &mut SgdState,
) -> Result<()> {
    if !grads.matches(params) || !state.velocity.matches(params) {
        return Err(Error::invalid("gradient shape does not match params"));
    }
    if !grads.values().all(|g| g.is_finite()) {
        return Err(Error::NonFiniteGradient { step: state.step });
    }
    let (lr, mu) = (config.learning_rate, config.momentum);
    for ((p, v), g) in params
        .values_mut()
        .zip(state.velocity.values_mut())
        .zip(grads.values())
    {
        *v = mu * *v + g;
        *p -= lr * *v;
    }
    state.step += 1;
    Ok(())
}

/// Past poses relative to the current one, flattened `[x_-n, y_-n, ..., 0, 0]`.
pub fn featurize(sample: &TrainingSample) -> Vec<f64> {
    let origin = sample.current().pos();
    sample
        .past()
        .iter()
        .flat_map(|p| {
            let r = p.pos() - origin;
            [r.x, r.y]
        })
        .collect()
}

pub fn feature_len(n: usize) -> usize {
    2 * (n + 1)
}

/// Per-feature standardisation frozen from the training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureScaler {
    /// Features with (near) zero spread keep unit scale.
    const MIN_STD: f64 = 1e-9;

    pub fn identity(len: usize) -> Self {
        FeatureScaler {
            mean: vec![0.0; len],
            std: vec![1.0; len],
        }
    }

    pub fn fit(features: &[Vec<f64>]) -> Result<Self> {
        let first = features
            .first()
            .ok_or_else(|| Error::invalid("cannot fit a scaler on zero samples"))?;
        let len = first.len();
        let count = features.len() as f64;
        let mut mean = vec![0.0; len];
        for f in features {
            if f.len() != len {
                return Err(Error::invalid("feature vectors differ in length"));
            }
            mean.iter_mut().zip(f).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= count);
        let mut var = vec![0.0; len];
        for f in features {
            for ((s, v), m) in var.iter_mut().zip(f).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / count).sqrt();
                if sd < Self::MIN_STD {
                    1.0
                } else {
                    sd
                }
            })
            .collect();
        Ok(FeatureScaler { mean, std })
    }

    pub fn apply(&self, features: &mut [f64]) {
        for ((f, m), s) in features.iter_mut().zip(&self.mean).zip(&self.std) {
            *f = (*f - m) / s;
        }
    }
}

/// A trained planner: parameters, input scaling, window shape and the
/// target scheme its outputs follow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Planner {
    pub params: ModelParams,
    pub scaler: FeatureScaler,
    pub n: usize,
    pub m: usize,
    pub scheme: Scheme,
}

impl Planner {
    pub fn features(&self, sample: &TrainingSample) -> Vec<f64> {
        let mut f = featurize(sample);
        self.scaler.apply(&mut f);
        f
    }

    pub fn predict(&self, sample: &TrainingSample) -> Result<DeltaSequence> {
        if sample.n() != self.n || sample.m() != self.m {
            return Err(Error::invalid(format!(
                "planner expects windows (n={}, m={}), got (n={}, m={})",
                self.n,
                self.m,
                sample.n(),
                sample.m()
            )));
        }
        forward(&self.params, &self.features(sample))
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let input = feature_len(self.n);
        if self.params.input_size() != input || self.params.output_size() != 2 * self.m {
            return Err(Error::Validation(format!(
                "model shape {:?} does not fit windows (n={}, m={})",
                self.params.layer_sizes, self.n, self.m
            )));
        }
        if self.scaler.mean.len() != input || self.scaler.std.len() != input {
            return Err(Error::Validation(
                "scaler length does not match input size".into(),
            ));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            planner: self.clone(),
        };
        let json = serde_json::to_string_pretty(&file).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: Checkpoint = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line() as u64,
            message: e.to_string(),
        })?;
        if file.format != CHECKPOINT_FORMAT {
            return Err(Error::Validation(format!(
                "unsupported checkpoint format `{}`",
                file.format
            )));
        }
        file.planner.validate()?;
        Ok(file.planner)
    }
}

const CHECKPOINT_FORMAT: &str = "reschain-planner/1";

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    #[serde(flatten)]
    planner: Planner,
}
