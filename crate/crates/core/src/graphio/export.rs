use std::fmt::Write as _;
use std::str::FromStr;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::graph::Graph;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Graphml,
    Dot,
    Json,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "graphml" => Ok(Self::Graphml),
            "dot" => Ok(Self::Dot),
            "json" => Ok(Self::Json),
            other => Err(Error::Usage(format!(
                "unknown export format {other:?} (expected graphml, dot or json)"
            ))),
        }
    }
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Graphml => "graphml",
            Self::Dot => "dot",
            Self::Json => "json",
        }
    }
}

/// A graph with one score per node and per edge (edges in
/// [`Graph::edges`] order).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredGraph {
    pub graph: Graph,
    pub node_scores: Vec<f64>,
    pub edge_scores: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct JsonNode {
    id: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    name: Option<String>,
    score: f64,
}

#[derive(Serialize, Deserialize)]
struct JsonEdge {
    source: usize,
    target: usize,
    score: f64,
}

#[derive(Serialize, Deserialize)]
struct JsonDoc {
    directed: bool,
    nodes: Vec<JsonNode>,
    edges: Vec<JsonEdge>,
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn xml_unescape(s: &str) -> String {
    s.replace("&quot;", "\"")
        .replace("&gt;", ">")
        .replace("&lt;", "<")
        .replace("&amp;", "&")
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn dot_unescape(s: &str) -> String {
    s.replace("\\\"", "\"").replace("\\\\", "\\")
}

/// Serialises a scored graph. Scores are written in shortest round-trip
/// decimal form.
pub fn export_subgraph(
    graph: &Graph,
    node_scores: &[f64],
    edge_scores: &[f64],
    format: ExportFormat,
) -> Result<Vec<u8>> {
    if node_scores.len() != graph.node_count() {
        return Err(Error::InvalidGraph(format!(
            "{} node scores for {} nodes",
            node_scores.len(),
            graph.node_count()
        )));
    }
    if edge_scores.len() != graph.edge_count() {
        return Err(Error::InvalidGraph(format!(
            "{} edge scores for {} edges",
            edge_scores.len(),
            graph.edge_count()
        )));
    }
    let names = graph.node_names();
    let mut out = String::new();
    match format {
        ExportFormat::Graphml => {
            out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
            out.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
            out.push_str("  <key id=\"ns\" for=\"node\" attr.name=\"score\" attr.type=\"double\"/>\n");
            out.push_str("  <key id=\"nn\" for=\"node\" attr.name=\"name\" attr.type=\"string\"/>\n");
            out.push_str("  <key id=\"es\" for=\"edge\" attr.name=\"score\" attr.type=\"double\"/>\n");
            let _ = writeln!(
                out,
                "  <graph id=\"G\" edgedefault=\"undirected\" parse.nodes=\"{}\" parse.edges=\"{}\">",
                graph.node_count(),
                graph.edge_count()
            );
            for (v, s) in node_scores.iter().enumerate() {
                let _ = write!(out, "    <node id=\"n{v}\"><data key=\"ns\">{s}</data>");
                if let Some(names) = names {
                    let _ = write!(out, "<data key=\"nn\">{}</data>", xml_escape(&names[v]));
                }
                out.push_str("</node>\n");
            }
            for (&(u, v), s) in graph.edges().iter().zip(edge_scores) {
                let _ = writeln!(
                    out,
                    "    <edge source=\"n{u}\" target=\"n{v}\"><data key=\"es\">{s}</data></edge>"
                );
            }
            out.push_str("  </graph>\n</graphml>\n");
        }
        ExportFormat::Dot => {
            out.push_str("graph G {\n");
            for (v, s) in node_scores.iter().enumerate() {
                match names {
                    Some(names) => {
                        let _ = writeln!(out, "  n{v} [label=\"{}\", score={s}];", dot_escape(&names[v]));
                    }
                    None => {
                        let _ = writeln!(out, "  n{v} [score={s}];");
                    }
                }
            }
            for (&(u, v), s) in graph.edges().iter().zip(edge_scores) {
                let _ = writeln!(out, "  n{u} -- n{v} [score={s}];");
            }
            out.push_str("}\n");
        }
        ExportFormat::Json => {
            let doc = JsonDoc {
                directed: false,
                nodes: node_scores
                    .iter()
                    .enumerate()
                    .map(|(v, &score)| JsonNode {
                        id: v,
                        name: names.map(|n| n[v].clone()),
                        score,
                    })
                    .collect(),
                edges: graph
                    .edges()
                    .iter()
                    .zip(edge_scores)
                    .map(|(&(source, target), &score)| JsonEdge {
                        source,
                        target,
                        score,
                    })
                    .collect(),
            };
            out = serde_json::to_string_pretty(&doc)?;
            out.push('\n');
        }
    }
    Ok(out.into_bytes())
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad score {s:?}")))
}

fn assemble(
    nodes: Vec<(usize, f64, Option<String>)>,
    edges: Vec<(usize, usize, f64)>,
) -> Result<ScoredGraph> {
    let n = nodes.len();
    let mut node_scores = vec![f64::NAN; n];
    let mut names: Vec<Option<String>> = vec![None; n];
    for (id, s, name) in nodes {
        if id >= n {
            return Err(Error::Parse(format!("node id {id} is not dense")));
        }
        node_scores[id] = s;
        names[id] = name;
    }
    let mut graph = Graph::new(n, edges.iter().map(|&(u, v, _)| (u, v)))?;
    if names.iter().all(Option::is_some) && n > 0 {
        graph = graph.with_names(names.into_iter().map(Option::unwrap).collect())?;
    }
    let mut edge_scores = vec![0.0; edges.len()];
    for (u, v, s) in edges {
        let idx = graph.edge_index(u, v).expect("edge inserted above");
        edge_scores[idx] = s;
    }
    Ok(ScoredGraph {
        graph,
        node_scores,
        edge_scores,
    })
}

/// Parses documents produced by [`export_subgraph`].
pub fn parse_export(bytes: &[u8], format: ExportFormat) -> Result<ScoredGraph> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))?;
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    match format {
        ExportFormat::Graphml => {
            let node_re = Regex::new(
                r#"<node id="n(\d+)"><data key="ns">([^<]*)</data>(?:<data key="nn">([^<]*)</data>)?</node>"#,
            )
            .expect("static regex");
            let edge_re = Regex::new(
                r#"<edge source="n(\d+)" target="n(\d+)"><data key="es">([^<]*)</data></edge>"#,
            )
            .expect("static regex");
            for c in node_re.captures_iter(text) {
                nodes.push((
                    c[1].parse().unwrap(),
                    parse_f64(&c[2])?,
                    c.get(3).map(|m| xml_unescape(m.as_str())),
                ));
            }
            for c in edge_re.captures_iter(text) {
                edges.push((c[1].parse().unwrap(), c[2].parse().unwrap(), parse_f64(&c[3])?));
            }
        }
        ExportFormat::Dot => {
            let node_re = Regex::new(r#"^\s*n(\d+) \[(?:label="((?:[^"\\]|\\.)*)", )?score=([^\]]+)\];\s*$"#)
                .expect("static regex");
            let edge_re = Regex::new(r"^\s*n(\d+) -- n(\d+) \[score=([^\]]+)\];\s*$").expect("static regex");
            for line in text.lines() {
                if let Some(c) = edge_re.captures(line) {
                    edges.push((c[1].parse().unwrap(), c[2].parse().unwrap(), parse_f64(&c[3])?));
                } else if let Some(c) = node_re.captures(line) {
                    nodes.push((
                        c[1].parse().unwrap(),
                        parse_f64(&c[3])?,
                        c.get(2).map(|m| dot_unescape(m.as_str())),
                    ));
                }
            }
        }
        ExportFormat::Json => {
            let doc: JsonDoc = serde_json::from_str(text)?;
            nodes = doc.nodes.into_iter().map(|n| (n.id, n.score, n.name)).collect();
            edges = doc.edges.into_iter().map(|e| (e.source, e.target, e.score)).collect();
        }
    }
    assemble(nodes, edges)
}
