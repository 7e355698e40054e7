use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graphio::{FeatureMatrix, Graph};
use crate::pathmamba::{argmax, Model};
use crate::{Error, Result};

/// Anything that maps a featured graph to class probabilities.
pub trait GraphClassifier: Sync {
    fn predict_proba(&self, graph: &Graph, features: &FeatureMatrix) -> Result<Vec<f64>>;
}

impl GraphClassifier for Model {
    fn predict_proba(&self, graph: &Graph, features: &FeatureMatrix) -> Result<Vec<f64>> {
        Ok(self.predict(graph, features)?.probabilities)
    }
}

fn membership(n: usize, selected: &[usize]) -> Result<Vec<bool>> {
    let mut inside = vec![false; n];
    for &v in selected {
        if v >= n {
            return Err(Error::InvalidGraph(format!("selected node {v} out of range for {n} nodes")));
        }
        inside[v] = true;
    }
    Ok(inside)
}

/// `G∖S`: drops every edge touching `selected` and zeroes their features.
/// Node indices are unchanged.
pub fn remove_selection(graph: &Graph, features: &FeatureMatrix, selected: &[usize]) -> Result<(Graph, FeatureMatrix)> {
    let inside = membership(graph.node_count(), selected)?;
    let g = graph.filter_edges(|u, v| !inside[u] && !inside[v]);
    Ok((g, features.with_zeroed_rows(selected.iter().copied())))
}

/// `S` alone: keeps only edges among `selected` and zeroes every other
/// node's features. Node indices are unchanged.
pub fn keep_selection(graph: &Graph, features: &FeatureMatrix, selected: &[usize]) -> Result<(Graph, FeatureMatrix)> {
    let inside = membership(graph.node_count(), selected)?;
    let g = graph.filter_edges(|u, v| inside[u] && inside[v]);
    let others: Vec<usize> = (0..graph.node_count()).filter(|&v| !inside[v]).collect();
    Ok((g, features.with_zeroed_rows(others)))
}

/// Predicted-class probability on the full graph, without the selection,
/// and on the selection alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityTerm {
    pub full: f64,
    pub without: f64,
    pub only: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    /// Mean of `full − without`.
    pub fidelity_plus: f64,
    /// Mean of `only − full`.
    pub fidelity_minus: f64,
    pub per_graph: Vec<FidelityTerm>,
}

/// The class scored is the one predicted on the unmodified graph.
pub fn fidelity_term<M: GraphClassifier + ?Sized>(
    model: &M,
    graph: &Graph,
    features: &FeatureMatrix,
    selected: &[usize],
) -> Result<FidelityTerm> {
    let base = model.predict_proba(graph, features)?;
    let class = argmax(&base);
    let (g1, x1) = remove_selection(graph, features, selected)?;
    let (g2, x2) = keep_selection(graph, features, selected)?;
    Ok(FidelityTerm {
        full: base[class],
        without: model.predict_proba(&g1, &x1)?[class],
        only: model.predict_proba(&g2, &x2)?[class],
    })
}

/// One evaluated explanation: a graph, its features and the selected nodes.
pub type Explained<'a> = (&'a Graph, &'a FeatureMatrix, &'a [usize]);

pub fn fidelity<M: GraphClassifier + ?Sized>(model: &M, items: &[Explained<'_>]) -> Result<FidelityReport> {
    if items.is_empty() {
        return Err(Error::Config("fidelity over an empty explanation set".into()));
    }
    let per_graph = items
        .par_iter()
        .map(|(g, x, s)| fidelity_term(model, g, x, s))
        .collect::<Result<Vec<_>>>()?;
    let n = per_graph.len() as f64;
    Ok(FidelityReport {
        fidelity_plus: per_graph.iter().map(|t| t.full - t.without).sum::<f64>() / n,
        fidelity_minus: per_graph.iter().map(|t| t.only - t.full).sum::<f64>() / n,
        per_graph,
    })
}

pub fn fidelity_plus<M: GraphClassifier + ?Sized>(model: &M, items: &[Explained<'_>]) -> Result<f64> {
    Ok(fidelity(model, items)?.fidelity_plus)
}

pub fn fidelity_minus<M: GraphClassifier + ?Sized>(model: &M, items: &[Explained<'_>]) -> Result<f64> {
    Ok(fidelity(model, items)?.fidelity_minus)
}
