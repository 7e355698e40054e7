use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::dataset::{assemble_graph, Dataset};
use super::graph::RawGraph;
use crate::rng::rng_for;
use crate::{Error, Result};

/// Attempts per graph before generation gives up on a disconnected draw.
pub const MAX_REGENERATIONS: usize = 100;

/// Parameters of the planted-motif generator.
///
/// Each graph is an Erdős–Rényi background plus `motif_length` extra nodes
/// wired as a chain whose two ends attach to random background nodes. Motif
/// node features are shifted by `feature_signal` on a block of coordinates
/// that depends on the class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_graphs_per_class: usize,
    pub classes: usize,
    pub background_nodes: usize,
    pub background_edge_prob: f64,
    pub motif_length: usize,
    pub feature_dim: usize,
    pub feature_signal: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            num_graphs_per_class: 60,
            classes: 2,
            background_nodes: 24,
            background_edge_prob: 0.15,
            motif_length: 8,
            feature_dim: 8,
            feature_signal: 3.0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(format!("synthetic spec: {m}")));
        if self.num_graphs_per_class == 0 || self.classes == 0 {
            return fail("needs at least one class and one graph per class");
        }
        if self.feature_dim == 0 {
            return fail("feature_dim must be positive");
        }
        if !(self.background_edge_prob > 0.0 && self.background_edge_prob < 1.0) {
            return fail("background_edge_prob must lie in (0, 1)");
        }
        if self.motif_length < 2 {
            return fail("motif_length must be at least 2");
        }
        if self.motif_length > self.background_nodes {
            return fail("motif_length exceeds background_nodes");
        }
        if !(self.feature_signal >= 0.0 && self.feature_signal.is_finite()) {
            return fail("feature_signal must be finite and non-negative");
        }
        Ok(())
    }

    /// Feature coordinates shifted on motif nodes of class `class`.
    pub fn signal_coordinates(&self, class: usize) -> Vec<usize> {
        let width = (self.feature_dim / self.classes).max(1);
        (0..width)
            .map(|k| (class * width + k) % self.feature_dim)
            .collect()
    }
}

/// Generates `classes * num_graphs_per_class` graphs, class-major, with
/// ids `g0000`, `g0001`, ...; identical `(spec, seed)` yields an identical
/// dataset.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let mut graphs = Vec::with_capacity(spec.classes * spec.num_graphs_per_class);
    for class in 0..spec.classes {
        for k in 0..spec.num_graphs_per_class {
            let index = class * spec.num_graphs_per_class + k;
            graphs.push(generate_one(spec, seed, index, class)?);
        }
    }
    let class_names = (0..spec.classes).map(|c| format!("class{c}")).collect();
    Dataset::new(graphs, class_names, Some(seed))
}

fn generate_one(
    spec: &SyntheticSpec,
    seed: u64,
    index: usize,
    class: usize,
) -> Result<super::LabeledGraph> {
    let id = format!("g{index:04}");
    let mut rng = rng_for(&[seed, index as u64]);
    let bg = spec.background_nodes;
    let m = spec.motif_length;
    let n = bg + m;
    let signal_coords = spec.signal_coordinates(class);

    for _ in 0..MAX_REGENERATIONS {
        let mut edges = Vec::new();
        for u in 0..bg {
            for v in (u + 1)..bg {
                if rng.random::<f64>() < spec.background_edge_prob {
                    edges.push((u, v));
                }
            }
        }
        let motif: Vec<(usize, usize)> = (0..m - 1).map(|i| (bg + i, bg + i + 1)).collect();
        edges.extend(&motif);
        let head = rng.random_range(0..bg);
        let mut tail = rng.random_range(0..bg);
        if bg > 1 {
            while tail == head {
                tail = rng.random_range(0..bg);
            }
        }
        edges.push((head, bg));
        edges.push((tail, bg + m - 1));

        let mut features = Vec::with_capacity(n);
        for v in 0..n {
            let mut row: Vec<f64> = (0..spec.feature_dim)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            if v >= bg {
                for &c in &signal_coords {
                    row[c] += spec.feature_signal;
                }
            }
            features.push(row);
        }

        let raw = RawGraph {
            node_count: n,
            edges,
            node_names: None,
        };
        let (lg, _) = assemble_graph(&id, &raw, &features, Some(&motif), class)?;
        if lg.graph.is_connected() {
            return Ok(lg);
        }
    }
    Err(Error::Generation(format!(
        "graph {id} stayed disconnected after {MAX_REGENERATIONS} attempts; raise background_edge_prob"
    )))
}
