//! Pathway-level mask learning and explanation-subgraph extraction.
//!
//! Each sampled pathway owns one mask logit. An edge's soft weight is the
//! sigmoid of the largest logit among pathways that step across it, or of a
//! shared background logit when no pathway does. The mask is fitted so the
//! frozen classifier keeps its own prediction on the softly masked graph
//! while an L1 penalty on the sigmoids pushes the mask closed.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graphio::{FeatureMatrix, Graph};
use crate::ndtensor::{sigmoid_scalar, softmax, Optimizer, Tape, Tensor};
use crate::pathmamba::{Model, Prediction, Prepared};
use crate::pathsampler::{rwse, PathwaySet};
use crate::rng::rng_for;
use crate::{Error, Result};

/// Learned logits: one per pathway (aligned to the [`PathwaySet`]) plus the
/// background logit for untraversed edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathwayMask {
    pub logits: Vec<f64>,
    pub background_logit: f64,
    pub lambda: f64,
}

impl PathwayMask {
    pub fn uniform(pathways: usize, logit: f64, lambda: f64) -> Self {
        Self {
            logits: vec![logit; pathways],
            background_logit: logit,
            lambda,
        }
    }

    fn all_logits(&self) -> Vec<f64> {
        let mut v = self.logits.clone();
        v.push(self.background_logit);
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaskConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub init_logit: f64,
    /// Also scale each node's features by its mask score.
    pub mask_features: bool,
}

impl Default for MaskConfig {
    fn default() -> Self {
        Self {
            lambda: 0.005,
            epochs: 100,
            learning_rate: 0.01,
            init_logit: 2.0,
            mask_features: true,
        }
    }
}

impl MaskConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config("lambda must be finite and non-negative".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("mask learning rate must be positive".into()));
        }
        if !self.init_logit.is_finite() {
            return Err(Error::Config("initial mask logit must be finite".into()));
        }
        Ok(())
    }
}

/// For each edge, the index (into `logits`) of the highest-logit pathway
/// traversing it; `logits.len() - 1` (the background slot) when none does.
/// Ties go to the lower pathway index.
fn edge_assignment(graph: &Graph, paths: &PathwaySet, logits: &[f64]) -> Vec<usize> {
    let background = logits.len() - 1;
    let mut best = vec![background; graph.edge_count()];
    for (p, pathway) in paths.pathways.iter().enumerate() {
        for w in pathway.nodes.windows(2) {
            let e = graph.edge_index(w[0], w[1]).expect("pathway validated against graph");
            if best[e] == background || logits[p] > logits[best[e]] || (logits[p] == logits[best[e]] && p < best[e]) {
                best[e] = p;
            }
        }
    }
    best
}

/// For each node, the index of the highest-logit pathway visiting it (the
/// background slot when none does). Ties go to the lower pathway index.
fn node_assignment(paths: &PathwaySet, node_count: usize, logits: &[f64]) -> Vec<usize> {
    let background = logits.len() - 1;
    let mut best = vec![background; node_count];
    for (p, pathway) in paths.pathways.iter().enumerate() {
        for &v in &pathway.nodes {
            if best[v] == background || logits[p] > logits[best[v]] || (logits[p] == logits[best[v]] && p < best[v]) {
                best[v] = p;
            }
        }
    }
    best
}

/// Logit positions gathered into edge weights and, optionally, node weights.
pub(crate) struct MaskPositions {
    pub edges: Vec<usize>,
    pub nodes: Option<Vec<usize>>,
}

/// Soft adjacency `G ⊙ σ(M)` as a symmetric N×N matrix (zero off-edge).
pub fn apply_mask(graph: &Graph, paths: &PathwaySet, mask: &PathwayMask) -> Result<Tensor> {
    paths.validate_for(graph)?;
    if mask.logits.len() != paths.len() {
        return Err(Error::Dimension(format!(
            "{} mask logits for {} pathways",
            mask.logits.len(),
            paths.len()
        )));
    }
    let weights = edge_weights(graph, paths, mask);
    let n = graph.node_count();
    let mut adj = Tensor::zeros(n, n);
    for (&(u, v), w) in graph.edges().iter().zip(weights) {
        adj.set(u, v, w);
        adj.set(v, u, w);
    }
    Ok(adj)
}

/// Soft weight of every edge, aligned to `graph.edges()`.
pub fn edge_weights(graph: &Graph, paths: &PathwaySet, mask: &PathwayMask) -> Vec<f64> {
    let all = mask.all_logits();
    edge_assignment(graph, paths, &all)
        .into_iter()
        .map(|i| sigmoid_scalar(all[i]))
        .collect()
}

/// Per-node score: the largest pathway sigmoid among pathways that visit
/// the node, or the background sigmoid for unvisited nodes.
pub fn node_scores(paths: &PathwaySet, mask: &PathwayMask) -> Vec<f64> {
    let n = paths.len();
    let mut best: Vec<Option<f64>> = vec![None; n];
    for (p, pathway) in paths.pathways.iter().enumerate() {
        let s = sigmoid_scalar(mask.logits[p]);
        for &v in &pathway.nodes {
            best[v] = Some(best[v].map_or(s, |b: f64| b.max(s)));
        }
    }
    let bg = sigmoid_scalar(mask.background_logit);
    best.into_iter().map(|b| b.unwrap_or(bg)).collect()
}

/// Shared optimisation loop for mask explainers. `count` logits are
/// learned; `assign` maps current logit values to one logit position per
/// edge (and per node when features are masked). Returns the final logits.
pub(crate) fn optimize_mask(
    model: &Model,
    prep: &Prepared<'_>,
    count: usize,
    assign: &dyn Fn(&[f64]) -> MaskPositions,
    config: &MaskConfig,
    seed: u64,
) -> Result<Vec<f64>> {
    config.validate()?;
    let target = crate::pathmamba::argmax(&model.logits_value(prep)?);
    let mut rng = rng_for(&[seed, 0x3a5c]);
    let init: Vec<f64> = (0..count)
        .map(|_| config.init_logit + rng.random_range(-0.01..0.01))
        .collect();
    let mut logits = vec![Tensor::from_vec(1, count, init)?];
    let mut opt = Optimizer::adam(config.learning_rate, 0.0);
    let edges = prep.graph.edge_count();
    for epoch in 0..config.epochs {
        let current = logits[0].to_vec();
        let positions = assign(&current);
        let mut tape = Tape::new();
        let vars = model.params().bind(&mut tape, false);
        let m = tape.param(logits[0].clone());
        let s = tape.sigmoid(m)?;
        let w = tape.take(s, &positions.edges, (1, edges))?;
        let mut x = tape.constant(prep.features.tensor().clone());
        if let Some(nodes) = &positions.nodes {
            let keep = tape.take(s, nodes, (nodes.len(), 1))?;
            x = tape.mul(x, keep)?;
        }
        let out = model.logits(&mut tape, &vars, prep, x, Some(w));
        let loss = out.and_then(|out| {
            let ce = tape.softmax_cross_entropy(out, target)?;
            let l1 = tape.sum_all(s)?;
            let reg = tape.scale(l1, config.lambda)?;
            Ok(tape.add(ce, reg)?)
        });
        let loss = loss.map_err(|e| Error::Divergence {
            epoch,
            message: e.to_string(),
        })?;
        if !tape.scalar(loss).is_finite() {
            return Err(Error::Divergence {
                epoch,
                message: "non-finite mask loss".into(),
            });
        }
        let grads = tape.backward(loss)?;
        opt.step(&mut logits, &[grads.get(m)]).map_err(|e| Error::Divergence {
            epoch,
            message: e.to_string(),
        })?;
    }
    Ok(logits[0].to_vec())
}

/// Fits a pathway mask for `model`'s own prediction on the graph. `paths`
/// are the walks the masked forward pass uses.
pub fn learn_mask(
    model: &Model,
    graph: &Graph,
    features: &FeatureMatrix,
    paths: &PathwaySet,
    config: &MaskConfig,
    seed: u64,
) -> Result<PathwayMask> {
    let prep = Prepared::with_parts(graph, features, rwse(graph, model.config().pe_steps), paths.clone())?;
    if features.dim() != model.feature_dim() {
        return Err(Error::Dimension(format!(
            "model expects {} feature columns, got {}",
            model.feature_dim(),
            features.dim()
        )));
    }
    let n = paths.len();
    let masked = config.mask_features;
    let assign = |current: &[f64]| MaskPositions {
        edges: edge_assignment(graph, paths, current),
        nodes: masked.then(|| node_assignment(paths, graph.node_count(), current)),
    };
    let all = optimize_mask(model, &prep, n + 1, &assign, config, seed)?;
    Ok(PathwayMask {
        logits: all[..n].to_vec(),
        background_logit: all[n],
        lambda: config.lambda,
    })
}

/// Prediction on a softly weighted graph: edge weights scale neighbour sums
/// and walk transitions; node weights, when given, scale input features.
pub fn weighted_prediction(
    model: &Model,
    prep: &Prepared<'_>,
    edge_weights: &[f64],
    node_weights: Option<&[f64]>,
) -> Result<Prediction> {
    let graph = prep.graph;
    if edge_weights.len() != graph.edge_count() || node_weights.is_some_and(|w| w.len() != graph.node_count()) {
        return Err(Error::Dimension("weights do not match the graph".into()));
    }
    let mut tape = Tape::new();
    let vars = model.params().bind(&mut tape, false);
    let w = tape.constant(Tensor::from_vec(1, edge_weights.len(), edge_weights.to_vec())?);
    let mut x = tape.constant(prep.features.tensor().clone());
    if let Some(nw) = node_weights {
        let keep = tape.constant(Tensor::from_vec(nw.len(), 1, nw.to_vec())?);
        x = tape.mul(x, keep)?;
    }
    let out = model.logits(&mut tape, &vars, prep, x, Some(w))?;
    Ok(Prediction::from_probabilities(softmax(&tape.tensor(out).to_vec())))
}

/// Prediction on the graph masked by `mask` over `paths`.
pub fn masked_prediction(
    model: &Model,
    graph: &Graph,
    features: &FeatureMatrix,
    paths: &PathwaySet,
    mask: &PathwayMask,
    mask_features: bool,
) -> Result<Prediction> {
    let prep = Prepared::with_parts(graph, features, rwse(graph, model.config().pe_steps), paths.clone())?;
    let nodes = mask_features.then(|| node_scores(paths, mask));
    weighted_prediction(model, &prep, &edge_weights(graph, paths, mask), nodes.as_deref())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub edge_scores: Vec<f64>,
    pub node_scores: Vec<f64>,
    /// Kept nodes in descending score order.
    pub selected: Vec<usize>,
    /// Edges of the induced subgraph, in original node indices.
    pub subgraph_edges: Vec<(usize, usize)>,
    pub keep_ratio: f64,
}

impl Explanation {
    /// Induced subgraph reindexed to `selected` order.
    pub fn subgraph(&self, graph: &Graph) -> Result<Graph> {
        graph.induced_subgraph(&self.selected)
    }
}

/// Keeps the top `⌈keep_ratio·N⌉` nodes by score (ties by lower index) and
/// the edges among them.
pub fn extract_subgraph(graph: &Graph, node_scores: &[f64], edge_scores: &[f64], keep_ratio: f64) -> Result<Explanation> {
    if !(keep_ratio > 0.0 && keep_ratio <= 1.0) {
        return Err(Error::Config(format!("keep_ratio {keep_ratio} is outside (0, 1]")));
    }
    let n = graph.node_count();
    if node_scores.len() != n || edge_scores.len() != graph.edge_count() {
        return Err(Error::Dimension("score arrays do not match the graph".into()));
    }
    if node_scores.iter().chain(edge_scores).any(|v| !v.is_finite()) {
        return Err(Error::Config("explanation scores must be finite".into()));
    }
    let k = ((keep_ratio * n as f64).ceil() as usize).clamp(1, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| node_scores[b].total_cmp(&node_scores[a]).then(a.cmp(&b)));
    let selected = order[..k].to_vec();
    let mut inside = vec![false; n];
    for &v in &selected {
        inside[v] = true;
    }
    let subgraph_edges = graph
        .edges()
        .iter()
        .copied()
        .filter(|&(u, v)| inside[u] && inside[v])
        .collect();
    Ok(Explanation {
        edge_scores: edge_scores.to_vec(),
        node_scores: node_scores.to_vec(),
        selected,
        subgraph_edges,
        keep_ratio,
    })
}

/// Learns a mask on the model's inference walks and extracts the top
/// `keep_ratio` of nodes.
pub fn explain(
    model: &Model,
    graph: &Graph,
    features: &FeatureMatrix,
    config: &MaskConfig,
    keep_ratio: f64,
    seed: u64,
) -> Result<(PathwayMask, Explanation)> {
    let paths = model.inference_pathways(graph)?;
    let mask = learn_mask(model, graph, features, &paths, config, seed)?;
    let ex = extract_subgraph(graph, &node_scores(&paths, &mask), &edge_weights(graph, &paths, &mask), keep_ratio)?;
    Ok((mask, ex))
}
