use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ndtensor::{Tape, Tensor, Var};

/// Index of a tensor in a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParamId(pub usize);

/// Named, ordered parameter tensors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, tensor: Tensor) -> ParamId {
        self.names.push(name.into());
        self.tensors.push(tensor);
        ParamId(self.tensors.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    /// Records every tensor on `tape`, as trainable leaves or as constants.
    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> Vec<Var> {
        self.tensors
            .iter()
            .map(|t| tape.leaf(t.clone(), trainable))
            .collect()
    }

    /// Order-sensitive digest of every value's bit pattern.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for t in &self.tensors {
            for v in t.as_array().iter() {
                h ^= v.to_bits();
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: Option<ParamId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub first: Linear,
    pub second: Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GinParams {
    pub weight: ParamId,
    /// 1×1 self-loop weight ε.
    pub epsilon: ParamId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MambaParams {
    pub delta: Linear,
    pub b: Linear,
    pub c: Linear,
    /// 1×d_state decay vector.
    pub d: ParamId,
    /// d_state×hidden projection back to node-feature width.
    pub out: ParamId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub gin: GinParams,
    pub mamba: Option<MambaParams>,
    pub combine: Mlp,
}

/// Where each model tensor lives in the store.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelLayout {
    pub input: ParamId,
    pub layers: Vec<LayerParams>,
    pub readout: Mlp,
}

fn glorot(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let values = (0..rows * cols)
        .map(|_| rng.random_range(-limit..limit))
        .collect();
    Tensor::from_vec(rows, cols, values).expect("length matches")
}

pub(crate) struct Builder<'a> {
    pub store: ParamStore,
    pub rng: &'a mut ChaCha8Rng,
}

impl Builder<'_> {
    pub fn weight(&mut self, name: String, rows: usize, cols: usize) -> ParamId {
        let t = glorot(self.rng, rows, cols);
        self.store.add(name, t)
    }

    pub fn linear(&mut self, name: &str, rows: usize, cols: usize, bias: bool) -> Linear {
        let weight = self.weight(format!("{name}.weight"), rows, cols);
        let bias = bias.then(|| self.store.add(format!("{name}.bias"), Tensor::zeros(1, cols)));
        Linear { weight, bias }
    }

    pub fn mlp(&mut self, name: &str, inp: usize, mid: usize, out: usize) -> Mlp {
        Mlp {
            first: self.linear(&format!("{name}.0"), inp, mid, true),
            second: self.linear(&format!("{name}.1"), mid, out, true),
        }
    }

    pub fn uniform(&mut self, name: String, rows: usize, cols: usize, lo: f64, hi: f64) -> ParamId {
        let values = (0..rows * cols).map(|_| self.rng.random_range(lo..hi)).collect();
        self.store
            .add(name, Tensor::from_vec(rows, cols, values).expect("length matches"))
    }
}
