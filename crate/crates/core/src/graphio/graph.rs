use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Unvalidated edge list as read from disk. May hold self-loops, directed
/// duplicates and isolated nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawGraph {
    pub node_count: usize,
    pub edges: Vec<(usize, usize)>,
    pub node_names: Option<Vec<String>>,
}

/// Simple undirected graph. Edges are stored once as `(u, v)` with `u < v`,
/// sorted, with no self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    node_names: Option<Vec<String>>,
}

impl Graph {
    /// Builds a graph from unordered pairs. Self-loops, out-of-range indices
    /// and duplicate pairs (in either orientation) are rejected.
    pub fn new(node_count: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut canon = Vec::new();
        for (u, v) in edges {
            if u >= node_count || v >= node_count {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) out of range for {node_count} nodes"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop on node {u}")));
            }
            canon.push((u.min(v), u.max(v)));
        }
        canon.sort_unstable();
        if let Some(w) = canon.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!(
                "duplicate edge ({}, {})",
                w[0].0, w[0].1
            )));
        }
        let mut neighbors = vec![Vec::new(); node_count];
        for &(u, v) in &canon {
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for n in &mut neighbors {
            n.sort_unstable();
        }
        Ok(Self {
            node_count,
            edges: canon,
            neighbors,
            node_names: None,
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.node_count {
            return Err(Error::InvalidGraph(format!(
                "{} node names for {} nodes",
                names.len(),
                self.node_count
            )));
        }
        self.node_names = Some(names);
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    pub fn node_names(&self) -> Option<&[String]> {
        self.node_names.as_deref()
    }

    /// Display name of a node: its stored name, else its index.
    pub fn node_label(&self, v: usize) -> String {
        match &self.node_names {
            Some(names) => names[v].clone(),
            None => v.to_string(),
        }
    }

    /// Position of the unordered edge `{u, v}` in [`Graph::edges`].
    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        let key = (u.min(v), u.max(v));
        self.edges.binary_search(&key).ok()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edge_index(u, v).is_some()
    }

    pub fn to_raw(&self) -> RawGraph {
        RawGraph {
            node_count: self.node_count,
            edges: self.edges.clone(),
            node_names: self.node_names.clone(),
        }
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.node_count];
        let mut out = Vec::new();
        for start in 0..self.node_count {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &w in &self.neighbors[u] {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.node_count > 0 && self.components().len() == 1
    }

    /// Induced subgraph on `nodes`, reindexed in the given order. Node names
    /// carry over when present.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<Graph> {
        let mut pos = vec![usize::MAX; self.node_count];
        for (i, &v) in nodes.iter().enumerate() {
            if v >= self.node_count {
                return Err(Error::InvalidGraph(format!("node {v} out of range")));
            }
            if pos[v] != usize::MAX {
                return Err(Error::InvalidGraph(format!("node {v} listed twice")));
            }
            pos[v] = i;
        }
        let edges = self
            .edges
            .iter()
            .filter(|(u, v)| pos[*u] != usize::MAX && pos[*v] != usize::MAX)
            .map(|&(u, v)| (pos[u], pos[v]));
        let sub = Graph::new(nodes.len(), edges)?;
        match &self.node_names {
            Some(names) => sub.with_names(nodes.iter().map(|&v| names[v].clone()).collect()),
            None => Ok(sub),
        }
    }

    /// Same node set, keeping only edges for which `keep` holds.
    pub fn filter_edges(&self, keep: impl Fn(usize, usize) -> bool) -> Graph {
        let edges: Vec<_> = self.edges.iter().copied().filter(|&(u, v)| keep(u, v)).collect();
        let mut g = Graph::new(self.node_count, edges).expect("subset of a valid edge set");
        g.node_names = self.node_names.clone();
        g
    }

    /// Relabels node `v` as `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.node_count {
            return Err(Error::InvalidGraph("permutation length mismatch".into()));
        }
        let g = Graph::new(
            self.node_count,
            self.edges.iter().map(|&(u, v)| (perm[u], perm[v])),
        )?;
        match &self.node_names {
            Some(names) => {
                let mut renamed = vec![String::new(); names.len()];
                for (v, name) in names.iter().enumerate() {
                    renamed[perm[v]] = name.clone();
                }
                g.with_names(renamed)
            }
            None => Ok(g),
        }
    }
}

/// Result of [`preprocess_graph`]: the cleaned graph and the index map from
/// raw node ids to cleaned ids (`None` for dropped nodes).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Preprocessed {
    pub graph: Graph,
    pub old_to_new: Vec<Option<usize>>,
}

impl Preprocessed {
    /// For each cleaned node, the raw node it came from.
    pub fn new_to_old(&self) -> Vec<usize> {
        let mut out = vec![0; self.graph.node_count()];
        for (old, new) in self.old_to_new.iter().enumerate() {
            if let Some(n) = new {
                out[*n] = old;
            }
        }
        out
    }
}

/// Drops self-loops, merges directed and duplicate pairs into single
/// undirected edges, removes isolated nodes and reindexes densely.
pub fn preprocess_graph(raw: &RawGraph) -> Result<Preprocessed> {
    let mut pairs = BTreeSet::new();
    for &(u, v) in &raw.edges {
        if u >= raw.node_count || v >= raw.node_count {
            return Err(Error::InvalidGraph(format!(
                "edge ({u}, {v}) out of range for {} nodes",
                raw.node_count
            )));
        }
        if u != v {
            pairs.insert((u.min(v), u.max(v)));
        }
    }
    let mut used = vec![false; raw.node_count];
    for &(u, v) in &pairs {
        used[u] = true;
        used[v] = true;
    }
    let mut old_to_new = vec![None; raw.node_count];
    let mut next = 0;
    for (old, &u) in used.iter().enumerate() {
        if u {
            old_to_new[old] = Some(next);
            next += 1;
        }
    }
    if next == 0 {
        return Err(Error::NoStructure);
    }
    let edges = pairs
        .iter()
        .map(|&(u, v)| (old_to_new[u].unwrap(), old_to_new[v].unwrap()));
    let mut graph = Graph::new(next, edges)?;
    if let Some(names) = &raw.node_names {
        if names.len() != raw.node_count {
            return Err(Error::InvalidGraph(format!(
                "{} node names for {} nodes",
                names.len(),
                raw.node_count
            )));
        }
        let kept = names
            .iter()
            .zip(&used)
            .filter(|(_, &u)| u)
            .map(|(n, _)| n.clone())
            .collect();
        graph = graph.with_names(kept)?;
    }
    Ok(Preprocessed { graph, old_to_new })
}
