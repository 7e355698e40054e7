use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::graphio::{FeatureMatrix, Graph};
use crate::ndtensor::{softmax, Tape, Tensor, Var};
use crate::pathsampler::{rwse, sample_pathways, sample_pathways_keyed, PathwaySet, PositionalEncoding};
use crate::rng::{derive_seed, rng_for};
use crate::{Error, Result};

use super::config::ModelConfig;
use super::layers::{pathmamba_layer, readout_classify, WalkPlan};
use super::params::{Builder, GinParams, LayerParams, MambaParams, ModelLayout, ParamStore};

/// Version written into and required from checkpoint files.
pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything the forward pass needs about one graph besides parameters.
#[derive(Debug, Clone)]
pub struct Prepared<'a> {
    pub graph: &'a Graph,
    pub features: &'a FeatureMatrix,
    pub pe: PositionalEncoding,
    pub paths: PathwaySet,
    pub plan: WalkPlan,
}

impl<'a> Prepared<'a> {
    pub fn new(config: &ModelConfig, graph: &'a Graph, features: &'a FeatureMatrix, walk_seed: u64) -> Result<Self> {
        let paths = sample_pathways(graph, config.walk_length, walk_seed)?;
        Self::with_parts(graph, features, rwse(graph, config.pe_steps), paths)
    }

    pub fn with_parts(
        graph: &'a Graph,
        features: &'a FeatureMatrix,
        pe: PositionalEncoding,
        paths: PathwaySet,
    ) -> Result<Self> {
        if features.rows() != graph.node_count() {
            return Err(Error::Dimension(format!(
                "{} feature rows for {} nodes",
                features.rows(),
                graph.node_count()
            )));
        }
        let plan = WalkPlan::new(graph, &paths)?;
        Ok(Self {
            graph,
            features,
            pe,
            paths,
            plan,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub probabilities: Vec<f64>,
    pub label: usize,
}

impl Prediction {
    pub fn from_probabilities(probabilities: Vec<f64>) -> Self {
        let label = argmax(&probabilities);
        Self { probabilities, label }
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// The GIN + pathway-scan graph classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    config: ModelConfig,
    feature_dim: usize,
    layout: ModelLayout,
    params: ParamStore,
    /// Seed for walks drawn at prediction time.
    pub inference_seed: u64,
    /// Number of walk draws averaged per prediction (1 = single draw).
    pub inference_samples: usize,
}

impl Model {
    /// Glorot-initialised weights, zero biases, ε = 0, D ~ U(0.1, 1).
    pub fn new(config: ModelConfig, feature_dim: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        if feature_dim == 0 {
            return Err(Error::Config("feature dimension must be positive".into()));
        }
        let mut rng = rng_for(&[seed, 0x1a17]);
        let mut b = Builder {
            store: ParamStore::new(),
            rng: &mut rng,
        };
        let h = config.hidden;
        let input = b.weight("input.weight".into(), feature_dim + config.pe_steps, h);
        let mut layers = Vec::with_capacity(config.num_layers);
        for l in 0..config.num_layers {
            let gin = GinParams {
                weight: b.weight(format!("layer{l}.gin.weight"), h, h),
                epsilon: b.store.add(format!("layer{l}.gin.epsilon"), Tensor::zeros(1, 1)),
            };
            let mamba = config.use_global.then(|| MambaParams {
                delta: b.linear(&format!("layer{l}.mamba.delta"), h, 1, true),
                b: b.linear(&format!("layer{l}.mamba.b"), h, config.d_state, true),
                c: b.linear(&format!("layer{l}.mamba.c"), h, config.d_state, true),
                d: b.uniform(format!("layer{l}.mamba.d"), 1, config.d_state, 0.1, 1.0),
                out: b.weight(format!("layer{l}.mamba.out"), config.d_state, h),
            });
            let combine = b.mlp(&format!("layer{l}.combine"), h, h, h);
            layers.push(LayerParams { gin, mamba, combine });
        }
        let readout = b.mlp("readout", h, h, config.classes);
        let layout = ModelLayout {
            input,
            layers,
            readout,
        };
        let params = b.store;
        Ok(Self {
            config,
            feature_dim,
            layout,
            params,
            inference_seed: derive_seed(&[seed, 0x1f]),
            inference_samples: 1,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn layout(&self) -> &ModelLayout {
        &self.layout
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    fn check_dim(&self, features: &FeatureMatrix) -> Result<()> {
        if features.dim() != self.feature_dim {
            return Err(Error::Dimension(format!(
                "model expects {} feature columns, got {}",
                self.feature_dim,
                features.dim()
            )));
        }
        Ok(())
    }

    pub fn prepare<'a>(&self, graph: &'a Graph, features: &'a FeatureMatrix, walk_seed: u64) -> Result<Prepared<'a>> {
        self.check_dim(features)?;
        Prepared::new(&self.config, graph, features, walk_seed)
    }

    /// Records the forward pass and returns 1×C logits.
    ///
    /// `features` is the N×d input (a constant or, for gradient
    /// attribution, a trainable leaf). `edge_weights` is an optional 1×E
    /// soft mask aligned to `graph.edges()`; it scales GIN neighbour sums
    /// and pathway transitions.
    pub fn logits(
        &self,
        tape: &mut Tape,
        vars: &[Var],
        input: &Prepared<'_>,
        features: Var,
        edge_weights: Option<Var>,
    ) -> Result<Var> {
        if vars.len() != self.params.len() {
            return Err(Error::Config("parameter binding does not match model".into()));
        }
        let pe = tape.constant(input.pe.matrix.clone());
        let joined = tape.concat_columns(&[features, pe])?;
        let mut x = tape.matmul(joined, vars[self.layout.input.0])?;
        let gates = if self.config.use_global {
            input.plan.gates(tape, edge_weights, input.graph.edge_count())?
        } else {
            None
        };
        for layer in &self.layout.layers {
            x = pathmamba_layer(
                tape,
                vars,
                x,
                input.graph,
                &input.plan,
                edge_weights,
                gates.as_deref(),
                layer,
            )?;
        }
        readout_classify(tape, vars, x, &self.layout.readout)
    }

    /// Logit vector for prepared input with frozen parameters.
    pub fn logits_value(&self, input: &Prepared<'_>) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let vars = self.params.bind(&mut tape, false);
        let x = tape.constant(input.features.tensor().clone());
        let out = self.logits(&mut tape, &vars, input, x, None)?;
        Ok(tape.tensor(out).to_vec())
    }

    /// Class probabilities using walks drawn from the inference seed
    /// (averaged over `inference_samples` draws).
    pub fn predict(&self, graph: &Graph, features: &FeatureMatrix) -> Result<Prediction> {
        self.check_dim(features)?;
        let pe = rwse(graph, self.config.pe_steps);
        let samples = self.inference_samples.max(1);
        let mut mean = vec![0.0; self.config.classes];
        for s in 0..samples {
            let seed = if samples == 1 {
                self.inference_seed
            } else {
                derive_seed(&[self.inference_seed, s as u64])
            };
            let paths = sample_pathways(graph, self.config.walk_length, seed)?;
            let prep = Prepared::with_parts(graph, features, pe.clone(), paths)?;
            let p = softmax(&self.logits_value(&prep)?);
            for (m, v) in mean.iter_mut().zip(p) {
                *m += v / samples as f64;
            }
        }
        Ok(Prediction::from_probabilities(mean))
    }

    /// Like [`Model::predict`] with a single draw whose walk streams are
    /// keyed by `keys` (see [`sample_pathways_keyed`]). Relabelled copies of a
    /// graph with matching keys get identical predictions.
    pub fn predict_keyed(&self, graph: &Graph, features: &FeatureMatrix, keys: &[u64]) -> Result<Prediction> {
        self.check_dim(features)?;
        let paths = sample_pathways_keyed(graph, self.config.walk_length, self.inference_seed, keys)?;
        let prep = Prepared::with_parts(graph, features, rwse(graph, self.config.pe_steps), paths)?;
        Ok(Prediction::from_probabilities(softmax(&self.logits_value(&prep)?)))
    }

    /// Walks used by [`Model::predict`] for its first draw.
    pub fn inference_pathways(&self, graph: &Graph) -> Result<PathwaySet> {
        sample_pathways(graph, self.config.walk_length, self.inference_seed)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: self.config.clone(),
            feature_dim: self.feature_dim,
            inference_seed: self.inference_seed,
            inference_samples: self.inference_samples,
            params: self
                .params
                .names()
                .iter()
                .zip(self.params.tensors())
                .map(|(name, t)| NamedTensor {
                    name: name.clone(),
                    tensor: t.clone(),
                })
                .collect(),
        }
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self> {
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Parse(format!(
                "checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})",
                ck.version
            )));
        }
        let mut model = Model::new(ck.config, ck.feature_dim, 0)?;
        if ck.params.len() != model.params.len() {
            return Err(Error::Parse(format!(
                "checkpoint has {} tensors, model needs {}",
                ck.params.len(),
                model.params.len()
            )));
        }
        for (i, nt) in ck.params.into_iter().enumerate() {
            let expected = &model.params.names()[i];
            if &nt.name != expected {
                return Err(Error::Parse(format!("checkpoint tensor {i} is {:?}, expected {expected:?}", nt.name)));
            }
            let slot = model.params.get_mut(super::ParamId(i));
            if slot.shape() != nt.tensor.shape() {
                return Err(Error::Parse(format!(
                    "checkpoint tensor {} has shape {:?}, expected {:?}",
                    nt.name,
                    nt.tensor.shape(),
                    slot.shape()
                )));
            }
            *slot = nt.tensor;
        }
        model.inference_seed = ck.inference_seed;
        model.inference_samples = ck.inference_samples.max(1);
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.to_checkpoint())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        if value.get("version").and_then(|v| v.as_u64()).is_none() {
            return Err(Error::Parse(format!("{}: checkpoint lacks a version field", path.display())));
        }
        Self::from_checkpoint(serde_json::from_value(value)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    #[serde(flatten)]
    pub tensor: Tensor,
}

/// Serialised model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub tool_version: String,
    pub config: ModelConfig,
    pub feature_dim: usize,
    pub inference_seed: u64,
    #[serde(default = "one")]
    pub inference_samples: usize,
    pub params: Vec<NamedTensor>,
}

fn one() -> usize {
    1
}
