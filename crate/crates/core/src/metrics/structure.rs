use std::collections::VecDeque;

use crate::graphio::Graph;
use crate::{Error, Result};

/// Largest graph accepted by the exact longest-path search.
pub const MAX_EXACT_PATH_NODES: usize = 64;

/// Number of edges on the longest simple path, found by exhaustive DFS
/// with a reachability bound. Exponential in the worst case, hence the
/// size cap.
pub fn longest_simple_path(graph: &Graph) -> Result<usize> {
    let n = graph.node_count();
    if n > MAX_EXACT_PATH_NODES {
        return Err(Error::Config(format!(
            "longest-path search is exact and limited to {MAX_EXACT_PATH_NODES} nodes, got {n}; \
             evaluate a sample of smaller subgraphs instead"
        )));
    }
    let mut best = 0;
    for comp in graph.components() {
        if comp.len() <= best + 1 {
            continue;
        }
        for &start in &comp {
            let mut search = Search {
                graph,
                best,
                target: comp.len() - 1,
            };
            search.dfs(start, 1u64 << start, 0);
            best = search.best;
            if best == comp.len() - 1 {
                break;
            }
        }
    }
    Ok(best)
}

struct Search<'a> {
    graph: &'a Graph,
    best: usize,
    /// Path length that cannot be beaten within the component.
    target: usize,
}

impl Search<'_> {
    fn dfs(&mut self, v: usize, visited: u64, len: usize) {
        if len > self.best {
            self.best = len;
        }
        if self.best == self.target {
            return;
        }
        if len + self.reachable(v, visited) <= self.best {
            return;
        }
        for &w in self.graph.neighbors(v) {
            if visited & (1u64 << w) == 0 {
                self.dfs(w, visited | (1u64 << w), len + 1);
                if self.best == self.target {
                    return;
                }
            }
        }
    }

    /// Unvisited nodes reachable from `v` without revisiting the path.
    fn reachable(&self, v: usize, visited: u64) -> usize {
        let mut seen = visited;
        let mut stack = vec![v];
        let mut count = 0;
        while let Some(u) = stack.pop() {
            for &w in self.graph.neighbors(u) {
                if seen & (1u64 << w) == 0 {
                    seen |= 1u64 << w;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count
    }
}

/// Maximum of [`longest_simple_path`] over the subgraphs (0 when empty).
pub fn max_path_length(subgraphs: &[Graph]) -> Result<usize> {
    subgraphs
        .iter()
        .map(longest_simple_path)
        .try_fold(0, |acc, r| r.map(|v| acc.max(v)))
}

fn bfs_eccentricity(graph: &Graph, source: usize) -> usize {
    let mut dist = vec![usize::MAX; graph.node_count()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    let mut far = 0;
    while let Some(u) = queue.pop_front() {
        for &w in graph.neighbors(u) {
            if dist[w] == usize::MAX {
                dist[w] = dist[u] + 1;
                far = far.max(dist[w]);
                queue.push_back(w);
            }
        }
    }
    far
}

/// Diameter of the largest connected component (ties: the component with
/// the smallest node). Edgeless and empty graphs have diameter 0.
pub fn diameter(graph: &Graph) -> usize {
    let comps = graph.components();
    let Some(largest) = comps.iter().max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0]))) else {
        return 0;
    };
    largest.iter().map(|&v| bfs_eccentricity(graph, v)).max().unwrap_or(0)
}

/// Mean [`diameter`] over the subgraphs (0 when empty).
pub fn avg_diameter(subgraphs: &[Graph]) -> f64 {
    if subgraphs.is_empty() {
        return 0.0;
    }
    subgraphs.iter().map(|g| diameter(g) as f64).sum::<f64>() / subgraphs.len() as f64
}
