use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::DEFAULT_TAUS;
use crate::nn::BRANCH_WIDTH;

/// Training hyperparameters. Every field has a default, so a config file
/// only needs the values it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub tau_frames: usize,
    pub lambda: f64,
    pub seed: u64,
    pub batch_size: usize,
    pub hidden: usize,
    pub layers: usize,
    pub branch_width: usize,
    pub use_tagger: bool,
    pub use_adversary: bool,
    /// Draw both VOT types equally often.
    pub balance_classes: bool,
    /// Updates per epoch; defaults to the training-set size.
    pub epoch_size: Option<usize>,
    /// Validation and report tolerances, in ms.
    pub eval_taus: Vec<f64>,
    /// Train/validation/test speaker fractions when one manifest is split.
    pub split: [f64; 3],
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            max_epochs: 100,
            patience: 5,
            tau_frames: 2,
            lambda: 0.1,
            seed: 0,
            batch_size: 1,
            hidden: 100,
            layers: 2,
            branch_width: BRANCH_WIDTH,
            use_tagger: true,
            use_adversary: true,
            balance_classes: true,
            epoch_size: None,
            eval_taus: DEFAULT_TAUS.to_vec(),
            split: [0.8, 0.1, 0.1],
        }
    }
}

impl TrainConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("{what} must be positive")));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs");
        }
        if self.patience == 0 {
            return bad("patience");
        }
        if self.batch_size == 0 {
            return bad("batch_size");
        }
        if self.hidden == 0 || self.layers == 0 || self.branch_width == 0 {
            return bad("hidden, layers and branch_width");
        }
        if self.epoch_size == Some(0) {
            return bad("epoch_size");
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::Config("lambda must be nonnegative".into()));
        }
        if self.eval_taus.is_empty() || self.eval_taus.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::Config("eval_taus must be nonnegative and non-empty".into()));
        }
        Ok(())
    }
}
