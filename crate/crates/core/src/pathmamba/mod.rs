//! GIN + pathway selective-scan graph classifier and its training harness.
//!
//! Each layer adds a local GIN aggregation to a global branch that runs a
//! selective state-space scan along one sampled walk per node, then mixes
//! the sum with a two-layer MLP. A max-pooled readout MLP produces logits.

mod config;
mod layers;
mod model;
mod params;
mod train;

pub use config::{ModelConfig, TrainConfig};
pub use layers::{gin_layer, global_layer, linear, mamba_scan, mlp, pathmamba_layer, readout_classify, WalkPlan};
pub use model::{argmax, Checkpoint, Model, NamedTensor, Prediction, Prepared, CHECKPOINT_VERSION};
pub use params::{GinParams, LayerParams, Linear, MambaParams, Mlp, ModelLayout, ParamId, ParamStore};
pub use train::{cross_validate, fit, stratified_folds, train, ClassSummary, CvReport, MeanStd, TrainLog};
