//! Reference node rankings: random, PageRank, greedy dominating set,
//! gradient saliency and a per-edge mask explainer.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graphio::{FeatureMatrix, Graph};
use crate::ndtensor::{sigmoid_scalar, Tape};
use crate::pathexplainer::{optimize_mask, MaskConfig, MaskPositions};
use crate::pathmamba::{argmax, Model, Prepared};
use crate::pathsampler::rwse;
use crate::rng::rng_for;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineMethod {
    Rss,
    Ppr,
    Mds,
    Saliency,
    EdgeMask,
}

impl FromStr for BaselineMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rss" => Ok(Self::Rss),
            "ppr" => Ok(Self::Ppr),
            "mds" => Ok(Self::Mds),
            "saliency" => Ok(Self::Saliency),
            "edge-mask" | "edge_mask" => Ok(Self::EdgeMask),
            other => Err(Error::Usage(format!(
                "unknown baseline {other:?} (expected rss, ppr, mds, saliency or edge-mask)"
            ))),
        }
    }
}

impl fmt::Display for BaselineMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Rss => "rss",
            Self::Ppr => "ppr",
            Self::Mds => "mds",
            Self::Saliency => "saliency",
            Self::EdgeMask => "edge-mask",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRanking {
    pub method: BaselineMethod,
    pub scores: Vec<f64>,
    /// Per-edge scores for methods that produce them.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub edge_scores: Option<Vec<f64>>,
}

impl NodeRanking {
    fn new(method: BaselineMethod, scores: Vec<f64>) -> Self {
        Self {
            method,
            scores,
            edge_scores: None,
        }
    }
}

fn normalize(mut scores: Vec<f64>) -> Vec<f64> {
    let total: f64 = scores.iter().sum();
    if total > 0.0 {
        for s in &mut scores {
            *s /= total;
        }
    } else if !scores.is_empty() {
        let u = 1.0 / scores.len() as f64;
        scores.iter_mut().for_each(|s| *s = u);
    }
    scores
}

/// Independent uniform scores normalised to sum to 1.
pub fn rss(graph: &Graph, seed: u64) -> NodeRanking {
    let mut rng = rng_for(&[seed, 0x255]);
    let raw = (0..graph.node_count()).map(|_| rng.random::<f64>()).collect();
    NodeRanking::new(BaselineMethod::Rss, normalize(raw))
}

pub const PPR_MAX_ITERATIONS: usize = 10_000;

/// PageRank with restart distribution `restart` (uniform when `None`):
/// power iteration on `s ← (1−α)·r + α·Pᵀs` until the largest change is
/// below `tol`. Mass at isolated nodes returns through the restart vector.
pub fn ppr(graph: &Graph, damping: f64, tol: f64, restart: Option<&[f64]>) -> Result<NodeRanking> {
    let n = graph.node_count();
    if n == 0 {
        return Err(Error::InvalidGraph("PageRank on an empty graph".into()));
    }
    if !(0.0..1.0).contains(&damping) {
        return Err(Error::Config("damping must lie in [0, 1)".into()));
    }
    let r: Vec<f64> = match restart {
        Some(r) => {
            if r.len() != n || r.iter().any(|v| *v < 0.0 || !v.is_finite()) {
                return Err(Error::Config("restart vector must be N non-negative values".into()));
            }
            let total: f64 = r.iter().sum();
            if total <= 0.0 {
                return Err(Error::Config("restart vector sums to zero".into()));
            }
            r.iter().map(|v| v / total).collect()
        }
        None => vec![1.0 / n as f64; n],
    };
    let mut s = r.clone();
    for _ in 0..PPR_MAX_ITERATIONS {
        let mut next: Vec<f64> = r.iter().map(|v| (1.0 - damping) * v).collect();
        let mut dangling = 0.0;
        for (u, &su) in s.iter().enumerate() {
            let d = graph.degree(u);
            if d == 0 {
                dangling += su;
                continue;
            }
            let share = damping * su / d as f64;
            for &w in graph.neighbors(u) {
                next[w] += share;
            }
        }
        for (x, rv) in next.iter_mut().zip(&r) {
            *x += damping * dangling * rv;
        }
        let change = next.iter().zip(&s).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        s = next;
        if change < tol {
            return Ok(NodeRanking::new(BaselineMethod::Ppr, normalize(s)));
        }
    }
    Err(Error::Config(format!(
        "PageRank did not converge within {PPR_MAX_ITERATIONS} iterations"
    )))
}

/// Greedy dominating set: repeatedly takes the node whose closed
/// neighbourhood covers the most uncovered nodes (ties: lowest index).
pub fn dominating_set(graph: &Graph) -> Vec<usize> {
    let n = graph.node_count();
    let mut covered = vec![false; n];
    let mut left = n;
    let mut chosen = Vec::new();
    while left > 0 {
        let gain = |v: usize| usize::from(!covered[v]) + graph.neighbors(v).iter().filter(|&&w| !covered[w]).count();
        let best = (0..n).max_by(|&a, &b| gain(a).cmp(&gain(b)).then(b.cmp(&a))).expect("n > 0");
        chosen.push(best);
        for v in std::iter::once(best).chain(graph.neighbors(best).iter().copied()) {
            if !covered[v] {
                covered[v] = true;
                left -= 1;
            }
        }
    }
    chosen.sort_unstable();
    chosen
}

/// Members of the greedy dominating set score 1, others 0.
pub fn mds(graph: &Graph) -> NodeRanking {
    let mut scores = vec![0.0; graph.node_count()];
    for v in dominating_set(graph) {
        scores[v] = 1.0;
    }
    NodeRanking::new(BaselineMethod::Mds, scores)
}

/// Row-wise L2 norm of the gradient of the predicted-class logit with
/// respect to the input features, normalised to sum to 1 (uniform when all
/// gradients vanish). Uses the model's inference walks.
pub fn saliency(model: &Model, graph: &Graph, features: &FeatureMatrix) -> Result<NodeRanking> {
    saliency_with(model, &model.prepare(graph, features, model.inference_seed)?)
}

/// [`saliency`] on prepared input (caller-chosen walks).
pub fn saliency_with(model: &Model, prep: &Prepared<'_>) -> Result<NodeRanking> {
    let raw = saliency_gradient(model, prep)?;
    let norms = (0..raw.rows())
        .map(|i| raw.row(i).iter().map(|g| g * g).sum::<f64>().sqrt())
        .collect();
    Ok(NodeRanking::new(BaselineMethod::Saliency, normalize(norms)))
}

/// Gradient of the predicted-class logit with respect to the N×d features.
pub fn saliency_gradient(model: &Model, prep: &Prepared<'_>) -> Result<crate::ndtensor::Tensor> {
    if prep.features.dim() != model.feature_dim() {
        return Err(Error::Dimension(format!(
            "model expects {} feature columns, got {}",
            model.feature_dim(),
            prep.features.dim()
        )));
    }
    let mut tape = Tape::new();
    let vars = model.params().bind(&mut tape, false);
    let x = tape.param(prep.features.tensor().clone());
    let logits = model.logits(&mut tape, &vars, prep, x, None)?;
    let values = tape.tensor(logits).to_vec();
    let class = argmax(&values);
    let pick = tape.take(logits, &[class], (1, 1))?;
    let grads = tape.backward(pick)?;
    Ok(grads.get(x))
}

/// Per node, the highest-logit incident edge (ties: lower edge index);
/// isolated nodes map to the extra slot after the edges.
fn incident_argmax(graph: &Graph, logits: &[f64]) -> Vec<usize> {
    let spare = graph.edge_count();
    let mut best = vec![spare; graph.node_count()];
    for (i, &(u, v)) in graph.edges().iter().enumerate() {
        for w in [u, v] {
            if best[w] == spare || logits[i] > logits[best[w]] {
                best[w] = i;
            }
        }
    }
    best
}

/// Mask explainer with one free logit per edge, trained with the same loss
/// as the pathway mask (node features are scaled by the largest incident
/// edge score when masked). Node scores are the largest incident edge score.
pub fn edge_mask_explainer(
    model: &Model,
    graph: &Graph,
    features: &FeatureMatrix,
    config: &MaskConfig,
    seed: u64,
) -> Result<NodeRanking> {
    if features.dim() != model.feature_dim() {
        return Err(Error::Dimension(format!(
            "model expects {} feature columns, got {}",
            model.feature_dim(),
            features.dim()
        )));
    }
    let paths = model.inference_pathways(graph)?;
    let prep = Prepared::with_parts(graph, features, rwse(graph, model.config().pe_steps), paths)?;
    let e = graph.edge_count();
    let ident: Vec<usize> = (0..e).collect();
    let masked = config.mask_features;
    // slot `e` serves isolated nodes when features are masked
    let assign = |current: &[f64]| MaskPositions {
        edges: ident.clone(),
        nodes: masked.then(|| incident_argmax(graph, current)),
    };
    let mut logits = if e == 0 && !masked {
        Vec::new()
    } else {
        optimize_mask(model, &prep, e + 1, &assign, config, seed)?
    };
    logits.truncate(e);
    let edge_scores: Vec<f64> = logits.iter().map(|&l| sigmoid_scalar(l)).collect();
    let mut scores = vec![0.0f64; graph.node_count()];
    for (&(u, v), &s) in graph.edges().iter().zip(&edge_scores) {
        scores[u] = scores[u].max(s);
        scores[v] = scores[v].max(s);
    }
    Ok(NodeRanking {
        method: BaselineMethod::EdgeMask,
        scores,
        edge_scores: Some(edge_scores),
    })
}
