use serde::{Deserialize, Serialize};

use crate::ndtensor::OptimizerKind;
use crate::{Error, Result};

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub num_layers: usize,
    pub hidden: usize,
    pub walk_length: usize,
    /// Random-walk encoding steps; 0 disables the encoding.
    pub pe_steps: usize,
    pub classes: usize,
    pub d_state: usize,
    /// When false the pathway branch is dropped and each layer is MLP∘GIN.
    pub use_global: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            num_layers: 1,
            hidden: 32,
            walk_length: 8,
            pe_steps: 8,
            classes: 2,
            d_state: 16,
            use_global: true,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("num_layers", self.num_layers),
            ("hidden", self.hidden),
            ("walk_length", self.walk_length),
            ("classes", self.classes),
            ("d_state", self.d_state),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// Optimisation and cross-validation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub folds: usize,
    pub repeats: usize,
    pub optimizer: OptimizerKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 32,
            learning_rate: 1e-3,
            weight_decay: 5e-4,
            folds: 10,
            repeats: 5,
            optimizer: OptimizerKind::Adam,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be positive".into()));
        }
        if self.folds < 2 {
            return Err(Error::Config("cross-validation needs at least 2 folds".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Config("weight_decay must be non-negative".into()));
        }
        Ok(())
    }
}
