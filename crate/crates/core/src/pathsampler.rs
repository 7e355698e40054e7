//! Per-node random walks ("pathways") and random-walk return-probability
//! positional encodings.

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graphio::{FeatureMatrix, Graph};
use crate::ndtensor::{Tape, Tensor, Var};
use crate::rng::rng_for;
use crate::{Error, Result};

/// One walk. `nodes[0]` is the start; consecutive entries are adjacent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pathway {
    pub start: usize,
    pub nodes: Vec<usize>,
}

/// One pathway per node of a graph, in node order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathwaySet {
    pub pathways: Vec<Pathway>,
    pub walk_length: usize,
    pub seed: u64,
}

impl PathwaySet {
    pub fn len(&self) -> usize {
        self.pathways.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pathways.is_empty()
    }

    /// Checks that the set was sampled on `graph`: one pathway per node,
    /// each starting at its node and walking along edges.
    pub fn validate_for(&self, graph: &Graph) -> Result<()> {
        if self.pathways.len() != graph.node_count() {
            return Err(Error::Config(format!(
                "{} pathways for a graph with {} nodes",
                self.pathways.len(),
                graph.node_count()
            )));
        }
        for (i, p) in self.pathways.iter().enumerate() {
            if p.start != i || p.nodes.first() != Some(&i) {
                return Err(Error::Config(format!("pathway {i} does not start at node {i}")));
            }
            if p.nodes.len() > self.walk_length + 1 {
                return Err(Error::Config(format!("pathway {i} is longer than the walk length")));
            }
            if let Some(w) = p.nodes.windows(2).find(|w| !graph.has_edge(w[0], w[1])) {
                return Err(Error::Config(format!(
                    "pathway {i} steps across non-edge ({}, {})",
                    w[0], w[1]
                )));
            }
        }
        Ok(())
    }
}

/// Samples one walk of `walk_length` steps per node, choosing uniformly
/// among neighbours at each step. Node `i` draws from its own stream keyed
/// by `(seed, i)`. Isolated nodes (only possible on mutilated graphs) get a
/// single-node pathway.
pub fn sample_pathways(graph: &Graph, walk_length: usize, seed: u64) -> Result<PathwaySet> {
    let keys: Vec<u64> = (0..graph.node_count() as u64).collect();
    sample_pathways_keyed(graph, walk_length, seed, &keys)
}

/// Like [`sample_pathways`], but node `i`'s stream is keyed by `keys[i]` and
/// neighbours are enumerated in key order. Two isomorphic graphs whose
/// corresponding nodes carry the same keys receive corresponding walks.
pub fn sample_pathways_keyed(graph: &Graph, walk_length: usize, seed: u64, keys: &[u64]) -> Result<PathwaySet> {
    if walk_length < 1 {
        return Err(Error::Config("walk length must be at least 1".into()));
    }
    if keys.len() != graph.node_count() {
        return Err(Error::Config("one sampling key per node required".into()));
    }
    let ordered: Vec<Vec<usize>> = (0..graph.node_count())
        .map(|v| {
            let mut nb = graph.neighbors(v).to_vec();
            nb.sort_by_key(|&w| (keys[w], w));
            nb
        })
        .collect();
    let pathways = (0..graph.node_count())
        .map(|start| {
            let mut rng = rng_for(&[seed, keys[start]]);
            let mut nodes = Vec::with_capacity(walk_length + 1);
            nodes.push(start);
            let mut cur = start;
            for _ in 0..walk_length {
                let nb = &ordered[cur];
                if nb.is_empty() {
                    break;
                }
                cur = nb[rng.random_range(0..nb.len())];
                nodes.push(cur);
            }
            Pathway { start, nodes }
        })
        .collect();
    Ok(PathwaySet {
        pathways,
        walk_length,
        seed,
    })
}

/// N×K matrix of k-step return probabilities, k = 1..=K.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionalEncoding {
    pub matrix: Tensor,
    pub steps: usize,
}

/// Random-walk structural encoding: entry `(i, k-1)` is the `i`-th diagonal
/// entry of `(D⁻¹A)^k`. Rows of isolated nodes are zero. `steps = 0` yields
/// an N×0 encoding.
pub fn rwse(graph: &Graph, steps: usize) -> PositionalEncoding {
    let n = graph.node_count();
    let mut p = Array2::<f64>::zeros((n, n));
    for v in 0..n {
        let d = graph.degree(v);
        for &w in graph.neighbors(v) {
            p[[v, w]] = 1.0 / d as f64;
        }
    }
    let mut out = Array2::<f64>::zeros((n, steps));
    let mut power = p.clone();
    for k in 0..steps {
        if k > 0 {
            power = power.dot(&p);
        }
        for i in 0..n {
            out[[i, k]] = power[[i, i]];
        }
    }
    PositionalEncoding {
        matrix: Tensor::from(out),
        steps,
    }
}

/// `x_i = [h_i ‖ p_i] · W` for every node, with `W` a (d+K)×d′ tape variable.
pub fn embed_inputs(
    tape: &mut Tape,
    features: &FeatureMatrix,
    pe: &PositionalEncoding,
    projection: Var,
) -> Result<Var> {
    if features.rows() != pe.matrix.rows() {
        return Err(Error::Config(format!(
            "{} feature rows but {} encoding rows",
            features.rows(),
            pe.matrix.rows()
        )));
    }
    let x = tape.constant(features.tensor().clone());
    let p = tape.constant(pe.matrix.clone());
    let joined = tape.concat_columns(&[x, p])?;
    Ok(tape.matmul(joined, projection)?)
}
