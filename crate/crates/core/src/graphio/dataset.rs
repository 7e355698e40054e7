use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::graph::{preprocess_graph, Graph, RawGraph};
use crate::ndtensor::Tensor;
use crate::{Error, Result};

pub const MANIFEST: &str = "manifest.tsv";

/// `N x d` node feature matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Tensor,
}

impl FeatureMatrix {
    pub fn new(values: Tensor) -> Result<Self> {
        let (rows, cols) = values.shape();
        for r in 0..rows {
            for c in 0..cols {
                if !values.get(r, c).is_finite() {
                    return Err(Error::Parse(format!(
                        "non-finite feature at row {r}, column {c}"
                    )));
                }
            }
        }
        Ok(Self { values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Tensor::from_rows(rows)?)
    }

    pub fn zeros(rows: usize, dim: usize) -> Self {
        Self {
            values: Tensor::zeros(rows, dim),
        }
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn dim(&self) -> usize {
        self.values.cols()
    }

    pub fn tensor(&self) -> &Tensor {
        &self.values
    }

    pub fn row(&self, r: usize) -> Vec<f64> {
        self.values.row(r)
    }

    /// Copy with the listed rows set to zero.
    pub fn with_zeroed_rows(&self, rows: impl IntoIterator<Item = usize>) -> Self {
        let mut values = self.values.clone();
        for r in rows {
            for c in 0..values.cols() {
                values.set(r, c, 0.0);
            }
        }
        Self { values }
    }

    /// Rows reordered so that new row `perm[v]` is old row `v`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut values = Tensor::zeros(self.rows(), self.dim());
        for (v, &p) in perm.iter().enumerate() {
            for c in 0..self.dim() {
                values.set(p, c, self.values.get(v, c));
            }
        }
        Self { values }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut values = Tensor::zeros(rows.len(), self.dim());
        for (i, &r) in rows.iter().enumerate() {
            for c in 0..self.dim() {
                values.set(i, c, self.values.get(r, c));
            }
        }
        Self { values }
    }
}

/// One graph of a dataset with its features and class label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGraph {
    pub id: String,
    pub graph: Graph,
    pub features: FeatureMatrix,
    pub label: usize,
    /// Ground-truth motif edges, when known (synthetic data).
    pub motif_edges: Option<Vec<(usize, usize)>>,
}

impl LabeledGraph {
    pub fn new(id: impl Into<String>, graph: Graph, features: FeatureMatrix, label: usize) -> Result<Self> {
        let id = id.into();
        if features.rows() != graph.node_count() {
            return Err(Error::Load {
                graph: id,
                message: format!(
                    "{} feature rows for {} nodes",
                    features.rows(),
                    graph.node_count()
                ),
            });
        }
        Ok(Self {
            id,
            graph,
            features,
            label,
            motif_edges: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graphs: Vec<LabeledGraph>,
    pub class_names: Vec<String>,
    pub rng_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCount {
    pub class: String,
    pub graphs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub graphs: usize,
    pub classes: Vec<ClassCount>,
    pub mean_nodes: f64,
    pub mean_edges: f64,
    pub feature_dim: usize,
}

impl Dataset {
    pub fn new(graphs: Vec<LabeledGraph>, class_names: Vec<String>, rng_seed: Option<u64>) -> Result<Self> {
        if graphs.is_empty() {
            return Err(Error::Config("dataset has no graphs".into()));
        }
        if class_names.is_empty() {
            return Err(Error::Config("dataset has no classes".into()));
        }
        let dim = graphs[0].features.dim();
        for g in &graphs {
            if g.label >= class_names.len() {
                return Err(Error::Load {
                    graph: g.id.clone(),
                    message: format!("label {} but only {} classes", g.label, class_names.len()),
                });
            }
            if g.features.dim() != dim {
                return Err(Error::Load {
                    graph: g.id.clone(),
                    message: format!("feature dimension {} differs from {}", g.features.dim(), dim),
                });
            }
        }
        Ok(Self {
            graphs,
            class_names,
            rng_seed,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.graphs[0].features.dim()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.graphs.iter().map(|g| g.label).collect()
    }

    pub fn get(&self, id: &str) -> Option<&LabeledGraph> {
        self.graphs.iter().find(|g| g.id == id)
    }

    pub fn summary(&self) -> DatasetSummary {
        let n = self.graphs.len() as f64;
        let mut counts = vec![0; self.num_classes()];
        for g in &self.graphs {
            counts[g.label] += 1;
        }
        DatasetSummary {
            graphs: self.graphs.len(),
            classes: self
                .class_names
                .iter()
                .zip(counts)
                .map(|(c, k)| ClassCount {
                    class: c.clone(),
                    graphs: k,
                })
                .collect(),
            mean_nodes: self.graphs.iter().map(|g| g.graph.node_count() as f64).sum::<f64>() / n,
            mean_edges: self.graphs.iter().map(|g| g.graph.edge_count() as f64).sum::<f64>() / n,
            feature_dim: self.feature_dim(),
        }
    }
}

fn read(path: &Path, graph: &str) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Load {
        graph: graph.to_string(),
        message: format!("cannot read {}: {e}", path.display()),
    })
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_edges(text: &str, graph: &str) -> Result<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    for (lineno, line) in content_lines(text) {
        let parts: Vec<&str> = line.split_whitespace().collect();
        let parsed = match parts.as_slice() {
            [u, v] => u.parse::<usize>().ok().zip(v.parse::<usize>().ok()),
            _ => None,
        };
        match parsed {
            Some(e) => edges.push(e),
            None => {
                return Err(Error::Load {
                    graph: graph.to_string(),
                    message: format!("edge line {lineno}: expected two node indices, got {line:?}"),
                })
            }
        }
    }
    Ok(edges)
}

fn parse_features(text: &str, graph: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in content_lines(text) {
        let row_idx = rows.len();
        let mut row = Vec::new();
        for (col, tok) in line.split_whitespace().enumerate() {
            let v: f64 = tok.parse().map_err(|_| Error::Load {
                graph: graph.to_string(),
                message: format!("feature line {lineno}: cannot parse {tok:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Load {
                    graph: graph.to_string(),
                    message: format!("non-finite feature at row {row_idx}, column {col}"),
                });
            }
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Load {
                    graph: graph.to_string(),
                    message: format!(
                        "dimension mismatch: feature row {row_idx} has {} values, row 0 has {}",
                        row.len(),
                        first.len()
                    ),
                });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

struct Manifest {
    class_names: Vec<String>,
    seed: Option<u64>,
    entries: Vec<(String, usize)>,
}

fn parse_manifest(text: &str) -> Result<Manifest> {
    let mut class_names = None;
    let mut seed = None;
    let mut entries = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        match fields[0] {
            "#classes" => class_names = Some(fields[1..].iter().map(|s| s.to_string()).collect::<Vec<_>>()),
            "#seed" => {
                seed = Some(
                    fields
                        .get(1)
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| Error::Parse(format!("manifest line {}: bad seed", i + 1)))?,
                )
            }
            f if f.starts_with('#') => {}
            _ => {
                let classes: &Vec<String> = class_names.as_ref().ok_or_else(|| {
                    Error::Parse("manifest must start with a #classes header line".into())
                })?;
                if fields.len() != 2 {
                    return Err(Error::Parse(format!(
                        "manifest line {}: expected graph_id<TAB>label",
                        i + 1
                    )));
                }
                let label = match fields[1].parse::<usize>() {
                    Ok(l) => l,
                    Err(_) => classes.iter().position(|c| c == fields[1]).ok_or_else(|| {
                        Error::Load {
                            graph: fields[0].to_string(),
                            message: format!("unknown class {:?}", fields[1]),
                        }
                    })?,
                };
                entries.push((fields[0].to_string(), label));
            }
        }
    }
    let class_names =
        class_names.ok_or_else(|| Error::Parse("manifest has no #classes header line".into()))?;
    Ok(Manifest {
        class_names,
        seed,
        entries,
    })
}

/// Reads one graph's raw files (`<id>.edges`, `<id>.features`, optional
/// `<id>.nodes`, optional `<id>.motif`).
pub fn load_raw_graph(root: &Path, id: &str) -> Result<(RawGraph, Vec<Vec<f64>>, Option<Vec<(usize, usize)>>)> {
    let edges = parse_edges(&read(&root.join(format!("{id}.edges")), id)?, id)?;
    let features = parse_features(&read(&root.join(format!("{id}.features")), id)?, id)?;
    let names_path = root.join(format!("{id}.nodes"));
    let node_names = if names_path.exists() {
        let names: Vec<String> = content_lines(&read(&names_path, id)?)
            .map(|(_, l)| l.to_string())
            .collect();
        if names.len() != features.len() {
            return Err(Error::Load {
                graph: id.to_string(),
                message: format!(
                    "dimension mismatch: {} node names but {} feature rows",
                    names.len(),
                    features.len()
                ),
            });
        }
        Some(names)
    } else {
        None
    };
    let motif_path = root.join(format!("{id}.motif"));
    let motif = if motif_path.exists() {
        Some(parse_edges(&read(&motif_path, id)?, id)?)
    } else {
        None
    };
    let node_count = features.len();
    for &(u, v) in edges.iter().chain(motif.iter().flatten()) {
        if u.max(v) >= node_count {
            return Err(Error::Load {
                graph: id.to_string(),
                message: format!(
                    "dimension mismatch: edge ({u}, {v}) references node {} but there are {node_count} feature rows",
                    u.max(v)
                ),
            });
        }
    }
    Ok((
        RawGraph {
            node_count,
            edges,
            node_names,
        },
        features,
        motif,
    ))
}

/// Builds a cleaned [`LabeledGraph`] from raw parts, remapping features and
/// motif edges through the preprocessing index map.
pub fn assemble_graph(
    id: &str,
    raw: &RawGraph,
    features: &[Vec<f64>],
    motif: Option<&[(usize, usize)]>,
    label: usize,
) -> Result<(LabeledGraph, Vec<usize>)> {
    let pre = preprocess_graph(raw).map_err(|e| Error::Load {
        graph: id.to_string(),
        message: e.to_string(),
    })?;
    let kept = pre.new_to_old();
    let rows: Vec<Vec<f64>> = kept.iter().map(|&old| features[old].clone()).collect();
    let features = FeatureMatrix::from_rows(&rows).map_err(|e| Error::Load {
        graph: id.to_string(),
        message: e.to_string(),
    })?;
    let mut lg = LabeledGraph::new(id, pre.graph, features, label)?;
    if let Some(m) = motif {
        let mut mapped = Vec::with_capacity(m.len());
        for &(u, v) in m {
            match (pre.old_to_new[u], pre.old_to_new[v]) {
                (Some(a), Some(b)) if lg.graph.has_edge(a, b) => mapped.push((a.min(b), a.max(b))),
                _ => {
                    return Err(Error::Load {
                        graph: id.to_string(),
                        message: format!("motif edge ({u}, {v}) is not an edge of the graph"),
                    })
                }
            }
        }
        mapped.sort_unstable();
        mapped.dedup();
        lg.motif_edges = Some(mapped);
    }
    Ok((lg, kept))
}

/// Loads a dataset directory: `manifest.tsv` plus per-graph files.
/// Every graph is cleaned with [`preprocess_graph`] on the way in.
pub fn load_dataset(root: &Path) -> Result<Dataset> {
    let manifest = parse_manifest(&fs::read_to_string(root.join(MANIFEST)).map_err(|e| {
        Error::io(root.join(MANIFEST), e)
    })?)?;
    let mut graphs = Vec::with_capacity(manifest.entries.len());
    for (id, label) in &manifest.entries {
        let (raw, features, motif) = load_raw_graph(root, id)?;
        let (lg, _) = assemble_graph(id, &raw, &features, motif.as_deref(), *label)?;
        graphs.push(lg);
    }
    Dataset::new(graphs, manifest.class_names, manifest.seed)
}

/// Lists manifest entries without loading graphs.
pub fn read_manifest(root: &Path) -> Result<(Vec<String>, Vec<(String, usize)>)> {
    let m = parse_manifest(&fs::read_to_string(root.join(MANIFEST)).map_err(|e| {
        Error::io(root.join(MANIFEST), e)
    })?)?;
    Ok((m.class_names, m.entries))
}

pub fn manifest_text(class_names: &[String], seed: Option<u64>, entries: &[(String, usize)]) -> String {
    let mut s = String::from("#classes");
    for c in class_names {
        s.push('\t');
        s.push_str(c);
    }
    s.push('\n');
    if let Some(seed) = seed {
        let _ = writeln!(s, "#seed\t{seed}");
    }
    for (id, label) in entries {
        let _ = writeln!(s, "{id}\t{label}");
    }
    s
}

pub fn edges_text(edges: &[(usize, usize)]) -> String {
    let mut s = String::new();
    for (u, v) in edges {
        let _ = writeln!(s, "{u} {v}");
    }
    s
}

pub fn features_text(features: &FeatureMatrix) -> String {
    let mut s = String::new();
    for r in 0..features.rows() {
        let row: Vec<String> = features.row(r).iter().map(|v| v.to_string()).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes a dataset in the directory layout read by [`load_dataset`].
pub fn save_dataset(dataset: &Dataset, root: &Path) -> Result<()> {
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let entries: Vec<(String, usize)> = dataset.graphs.iter().map(|g| (g.id.clone(), g.label)).collect();
    write(
        &root.join(MANIFEST),
        &manifest_text(&dataset.class_names, dataset.rng_seed, &entries),
    )?;
    for g in &dataset.graphs {
        write(&root.join(format!("{}.edges", g.id)), &edges_text(g.graph.edges()))?;
        write(&root.join(format!("{}.features", g.id)), &features_text(&g.features))?;
        if let Some(names) = g.graph.node_names() {
            write(&root.join(format!("{}.nodes", g.id)), &(names.join("\n") + "\n"))?;
        }
        if let Some(m) = &g.motif_edges {
            write(&root.join(format!("{}.motif", g.id)), &edges_text(m))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(dir: &Path, feature_rows: &str) {
        fs::write(dir.join(MANIFEST), "#classes\tA\tB\ng1\t0\n").unwrap();
        fs::write(dir.join("g1.edges"), "0 1\n1 2\n").unwrap();
        fs::write(dir.join("g1.features"), feature_rows).unwrap();
    }

    #[test]
    fn minimal_fixture_loads() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path(), "0.5 1\n2 3\n-1 0\n");
        let ds = load_dataset(dir.path()).unwrap();
        assert_eq!(ds.graphs.len(), 1);
        assert_eq!(ds.graphs[0].graph.node_count(), 3);
        assert_eq!(ds.graphs[0].graph.edge_count(), 2);
        assert_eq!(ds.graphs[0].label, 0);
        assert_eq!(ds.feature_dim(), 2);
    }

    #[test]
    fn short_feature_file_is_dimension_error() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path(), "0.5 1\n2 3\n");
        let err = load_dataset(dir.path()).unwrap_err().to_string();
        assert!(err.contains("g1") && err.contains("dimension mismatch"), "{err}");
    }

    #[test]
    fn ragged_features_name_the_row() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path(), "0.5 1\n2\n3 3\n");
        let err = load_dataset(dir.path()).unwrap_err().to_string();
        assert!(err.contains("row 1"), "{err}");
    }

    #[test]
    fn non_finite_reports_coordinates() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path(), "0.5 1\n2 NaN\n3 3\n");
        let err = load_dataset(dir.path()).unwrap_err().to_string();
        assert!(err.contains("row 1, column 1"), "{err}");
    }

    #[test]
    fn missing_file_names_graph() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(MANIFEST), "#classes\tA\nghost\t0\n").unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(matches!(&err, Error::Load { graph, .. } if graph == "ghost"), "{err}");
    }

    #[test]
    fn labels_by_name_and_isolated_rows_dropped() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(MANIFEST), "#classes\tA\tB\ng1\tB\n").unwrap();
        fs::write(dir.path().join("g1.edges"), "0 2\n2 0\n2 2\n").unwrap();
        fs::write(dir.path().join("g1.features"), "1\n2\n3\n").unwrap();
        let ds = load_dataset(dir.path()).unwrap();
        let g = &ds.graphs[0];
        assert_eq!(g.label, 1);
        assert_eq!(g.graph.node_count(), 2);
        assert_eq!(g.features.row(1), vec![3.0]);
    }

    #[test]
    fn save_then_load_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let graph = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let features = FeatureMatrix::from_rows(&[vec![0.1, -2.5], vec![1e-3, 4.0], vec![7.0, 0.0]]).unwrap();
        let mut lg = LabeledGraph::new("x", graph, features, 1).unwrap();
        lg.motif_edges = Some(vec![(0, 1)]);
        let ds = Dataset::new(vec![lg], vec!["a".into(), "b".into()], Some(9)).unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        assert_eq!(load_dataset(dir.path()).unwrap(), ds);
    }
}
