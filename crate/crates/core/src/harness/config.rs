use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datagen::DatasetSpec;
use crate::error::{Error, Result};
use crate::loss::Scheme;
use crate::metrics::Metric;
use crate::mlp::{feature_len, Activation, SgdConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub init_seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden: vec![64, 64],
            activation: Activation::Tanh,
            init_seed: crate::datagen::DEFAULT_SEED,
        }
    }
}

/// Everything one training run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    /// Read trajectories from this CSV instead of generating them. Window and
    /// split settings still come from `dataset`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_csv: Option<PathBuf>,
    pub model: ModelConfig,
    pub sgd: SgdConfig,
    pub scheme: Scheme,
    pub eval_metrics: Vec<Metric>,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetSpec::default(),
            data_csv: None,
            model: ModelConfig::default(),
            sgd: SgdConfig::default(),
            scheme: Scheme::ResidualChain,
            eval_metrics: Metric::ALL.to_vec(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map_or(0, |s| text[..s.start].matches('\n').count() as u64 + 1);
            Error::Parse {
                path: origin.to_path_buf(),
                line,
                message: e.message().to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg = Self::from_toml_str(&text, path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        self.sgd.validate()?;
        if self.model.hidden.contains(&0) {
            return Err(Error::invalid("hidden layer sizes must be positive"));
        }
        Ok(())
    }

    /// Use `seed` for data generation, initialisation and shuffling.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.dataset.seed = seed;
        self.model.init_seed = seed;
        self.sgd.seed = seed;
        self
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![feature_len(self.dataset.n)];
        sizes.extend(&self.model.hidden);
        sizes.push(2 * self.dataset.m);
        sizes
    }

    /// SHA-256 over the canonical JSON form, ignoring `output_dir`.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let json = serde_json::to_vec(&canonical).expect("config serialises");
        hex::encode(Sha256::digest(&json))
    }

    /// Hash of everything except the target scheme; equal for the two sides of
    /// a comparison.
    pub fn shared_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.scheme = Scheme::Relative;
        canonical.hash()
    }
}
