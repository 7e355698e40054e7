//! Subcommand arguments, resolved settings and their implementations.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use log::info;
use pathwise::baselines::{edge_mask_explainer, mds, ppr, rss, saliency, BaselineMethod, NodeRanking};
use pathwise::graphio::{
    assemble_graph, export_subgraph, generate_synthetic, load_dataset, load_raw_graph, read_manifest, save_dataset,
    Dataset, ExportFormat, Graph, LabeledGraph, SyntheticSpec,
};
use pathwise::metrics::{
    auc, avg_diameter, classification_report, enrichment_report, fidelity, longest_simple_path, max_path_length,
    ClassificationReport, EnrichmentOptions, EnrichmentReport, FidelityReport, GoMapping,
};
use pathwise::pathexplainer::{self, extract_subgraph, Explanation, MaskConfig, PathwayMask};
use pathwise::pathmamba::{self, Model, ModelConfig, TrainConfig};
use pathwise::rng::derive_seed;
use pathwise::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::output::{read_json, OutputDir};
use crate::resolve::{required, resolve};
use crate::Common;

const DEFAULT_OUTPUT: &str = "pathwise-out";
const EXPLANATIONS: &str = "explanations";

fn default_output() -> PathBuf {
    PathBuf::from(DEFAULT_OUTPUT)
}

/// Dataset indices for the requested ids, or every graph when none is given.
fn select(ds: &Dataset, ids: &[String]) -> Result<Vec<usize>> {
    if ids.is_empty() {
        return Ok((0..ds.graphs.len()).collect());
    }
    ids.iter()
        .map(|id| {
            ds.graphs
                .iter()
                .position(|g| &g.id == id)
                .ok_or_else(|| Error::Usage(format!("graph {id:?} is not in the dataset")))
        })
        .collect()
}

fn load_model(path: &Option<PathBuf>) -> Result<Model> {
    Model::load(&required(path, "model")?)
}

fn load_data(path: &Option<PathBuf>) -> Result<Dataset> {
    load_dataset(&required(path, "data")?)
}

// ---------------------------------------------------------------- preprocess

#[derive(Args, Serialize)]
pub struct PreprocessArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Raw dataset directory (manifest plus per-graph files).
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
pub struct PreprocessSettings {
    pub input: Option<PathBuf>,
    pub output: PathBuf,
}

impl Default for PreprocessSettings {
    fn default() -> Self {
        Self {
            input: None,
            output: default_output(),
        }
    }
}

#[derive(Serialize)]
struct IndexMap<'a> {
    graph: &'a str,
    /// Raw node index of each cleaned node.
    kept: Vec<usize>,
}

pub fn preprocess(args: &PreprocessArgs) -> Result<()> {
    let s: PreprocessSettings = resolve(args, args.common.config.as_deref())?;
    let input = required(&s.input, "input")?;
    let (class_names, entries) = read_manifest(&input)?;
    let mut graphs = Vec::with_capacity(entries.len());
    let mut maps = Vec::with_capacity(entries.len());
    for (id, label) in &entries {
        let (raw, features, motif) = load_raw_graph(&input, id)?;
        let (lg, kept) = assemble_graph(id, &raw, &features, motif.as_deref(), *label)?;
        graphs.push(lg);
        maps.push(kept);
    }
    let ds = Dataset::new(graphs, class_names, None)?;
    let out = OutputDir::create(&s.output, "preprocess", &s)?;
    save_dataset(&ds, out.path())?;
    let index: Vec<IndexMap> = ds
        .graphs
        .iter()
        .zip(maps)
        .map(|(g, kept)| IndexMap { graph: &g.id, kept })
        .collect();
    out.json("index_map.json", &index)?;
    out.json("summary.json", &ds.summary())?;
    info!("preprocessed {} graphs into {}", ds.graphs.len(), s.output.display());
    Ok(())
}

// ---------------------------------------------------------------- synth

#[derive(Args, Serialize)]
pub struct SynthArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub num_graphs_per_class: Option<usize>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub background_nodes: Option<usize>,
    #[arg(long)]
    pub background_edge_prob: Option<f64>,
    #[arg(long)]
    pub motif_length: Option<usize>,
    #[arg(long)]
    pub feature_dim: Option<usize>,
    #[arg(long)]
    pub feature_signal: Option<f64>,
}

#[derive(Serialize, Deserialize)]
pub struct SynthSettings {
    pub seed: Option<u64>,
    pub output: PathBuf,
    #[serde(flatten)]
    pub spec: SyntheticSpec,
}

impl Default for SynthSettings {
    fn default() -> Self {
        Self {
            seed: None,
            output: default_output(),
            spec: SyntheticSpec::default(),
        }
    }
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let s: SynthSettings = resolve(args, args.common.config.as_deref())?;
    let seed = required(&s.seed, "seed")?;
    let ds = generate_synthetic(&s.spec, seed)?;
    let out = OutputDir::create(&s.output, "synth", &s)?;
    save_dataset(&ds, out.path())?;
    out.json("summary.json", &ds.summary())?;
    info!("wrote {} graphs to {}", ds.graphs.len(), s.output.display());
    Ok(())
}

// ---------------------------------------------------------------- train

#[derive(Args, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Dataset directory.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for cross-validation folds.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub num_layers: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub walk_length: Option<usize>,
    #[arg(long)]
    pub pe_steps: Option<usize>,
    #[arg(long)]
    pub d_state: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub use_global: Option<bool>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long, value_parser = ["adam", "sgd"])]
    pub optimizer: Option<String>,
}

#[derive(Serialize, Deserialize)]
pub struct TrainSettings {
    pub data: Option<PathBuf>,
    pub seed: Option<u64>,
    pub output: PathBuf,
    pub jobs: usize,
    #[serde(flatten)]
    pub model: ModelConfig,
    #[serde(flatten)]
    pub train: TrainConfig,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            data: None,
            seed: None,
            output: default_output(),
            jobs: 1,
            model: ModelConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let mut s: TrainSettings = resolve(args, args.common.config.as_deref())?;
    let seed = required(&s.seed, "seed")?;
    if s.jobs == 0 {
        return Err(Error::Usage("--jobs must be at least 1".into()));
    }
    let ds = load_data(&s.data)?;
    // the class count always comes from the data
    s.model.classes = ds.num_classes();
    info!(
        "training on {} graphs: {}-fold CV x {} repeats, {} jobs",
        ds.graphs.len(),
        s.train.folds,
        s.train.repeats,
        s.jobs
    );
    let (model, report) = pathmamba::train(&ds, &s.model, &s.train, seed, s.jobs)?;
    let out = OutputDir::create(&s.output, "train", &s)?;
    model.save(&out.path().join("model.json"))?;
    out.json("cv_report.json", &report)?;
    info!(
        "accuracy {:.4} ± {:.4}; model written to {}",
        report.accuracy.mean,
        report.accuracy.std,
        out.path().join("model.json").display()
    );
    Ok(())
}

// ---------------------------------------------------------------- predict

#[derive(Args, Serialize)]
pub struct PredictArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Model checkpoint written by `train`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Graph id to score; repeatable. Defaults to every graph.
    #[arg(long)]
    pub graph: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
pub struct PredictSettings {
    pub model: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub graph: Vec<String>,
    pub output: PathBuf,
}

impl Default for PredictSettings {
    fn default() -> Self {
        Self {
            model: None,
            data: None,
            graph: Vec::new(),
            output: default_output(),
        }
    }
}

#[derive(Serialize)]
struct PredictionRecord<'a> {
    graph: &'a str,
    label: usize,
    predicted: usize,
    probabilities: Vec<f64>,
}

pub fn predict(args: &PredictArgs) -> Result<()> {
    let s: PredictSettings = resolve(args, args.common.config.as_deref())?;
    let model = load_model(&s.model)?;
    let ds = load_data(&s.data)?;
    let mut records = Vec::new();
    for i in select(&ds, &s.graph)? {
        let g = &ds.graphs[i];
        let p = model.predict(&g.graph, &g.features)?;
        records.push(PredictionRecord {
            graph: &g.id,
            label: g.label,
            predicted: p.label,
            probabilities: p.probabilities,
        });
    }
    let out = OutputDir::create(&s.output, "predict", &s)?;
    out.json("predictions.json", &records)?;
    info!("scored {} graphs", records.len());
    Ok(())
}

// ---------------------------------------------------------------- explanations

/// One explained graph as written by `explain` and `baseline`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExplanationRecord {
    pub graph: String,
    pub method: String,
    /// Class the explanation is for (the model's prediction), when a model
    /// was involved.
    pub predicted: Option<usize>,
    pub explanation: Explanation,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mask: Option<PathwayMask>,
}

fn write_record(out: &OutputDir, record: &ExplanationRecord) -> Result<()> {
    out.json(Path::new(EXPLANATIONS).join(format!("{}.json", record.graph)), record)?;
    Ok(())
}

fn parse_format(format: &str) -> Result<ExportFormat> {
    format.parse()
}

/// Scored document for an explanation: the whole graph, or only the kept
/// subgraph with its nodes named after their original labels.
fn export_record(graph: &Graph, ex: &Explanation, format: ExportFormat, full: bool) -> Result<Vec<u8>> {
    if full {
        return export_subgraph(graph, &ex.node_scores, &ex.edge_scores, format);
    }
    let sel = &ex.selected;
    let sub = graph
        .induced_subgraph(sel)?
        .with_names(sel.iter().map(|&v| graph.node_label(v)).collect())?;
    let nodes: Vec<f64> = sel.iter().map(|&v| ex.node_scores[v]).collect();
    let edges = sub
        .edges()
        .iter()
        .map(|&(a, b)| {
            graph
                .edge_index(sel[a], sel[b])
                .map(|e| ex.edge_scores[e])
                .ok_or_else(|| Error::InvalidGraph("explanation does not match the graph".into()))
        })
        .collect::<Result<Vec<f64>>>()?;
    export_subgraph(&sub, &nodes, &edges, format)
}

#[derive(Args, Serialize)]
pub struct ExplainArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Graph id to explain; repeatable. Defaults to every graph.
    #[arg(long)]
    pub graph: Option<Vec<String>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fraction of nodes kept in the explanation subgraph.
    #[arg(long)]
    pub keep_ratio: Option<f64>,
    /// Sparsity weight on the mask.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Mask optimisation steps.
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub init_logit: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub mask_features: Option<bool>,
    /// Also write the sampled walks of each graph.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub dump_paths: Option<bool>,
    /// Also export each subgraph: graphml, dot or json.
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Serialize, Deserialize)]
pub struct ExplainSettings {
    pub model: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub graph: Vec<String>,
    pub seed: Option<u64>,
    pub output: PathBuf,
    pub keep_ratio: f64,
    #[serde(flatten)]
    pub mask: MaskConfig,
    pub dump_paths: bool,
    pub format: Option<String>,
}

impl Default for ExplainSettings {
    fn default() -> Self {
        Self {
            model: None,
            data: None,
            graph: Vec::new(),
            seed: None,
            output: default_output(),
            keep_ratio: 0.1,
            mask: MaskConfig::default(),
            dump_paths: false,
            format: None,
        }
    }
}

pub fn explain(args: &ExplainArgs) -> Result<()> {
    let s: ExplainSettings = resolve(args, args.common.config.as_deref())?;
    let seed = required(&s.seed, "seed")?;
    s.mask.validate()?;
    let format = s.format.as_deref().map(parse_format).transpose()?;
    let model = load_model(&s.model)?;
    let ds = load_data(&s.data)?;
    let chosen = select(&ds, &s.graph)?;
    let out = OutputDir::create(&s.output, "explain", &s)?;
    for i in chosen {
        let g = &ds.graphs[i];
        let predicted = model.predict(&g.graph, &g.features)?.label;
        let graph_seed = derive_seed(&[seed, i as u64]);
        let (mask, ex) = pathexplainer::explain(&model, &g.graph, &g.features, &s.mask, s.keep_ratio, graph_seed)?;
        if s.dump_paths {
            out.json(Path::new("paths").join(format!("{}.json", g.id)), &model.inference_pathways(&g.graph)?)?;
        }
        if let Some(f) = format {
            out.bytes(
                Path::new("subgraphs").join(format!("{}.{}", g.id, f.extension())),
                &export_record(&g.graph, &ex, f, false)?,
            )?;
        }
        info!("{}: kept {} of {} nodes", g.id, ex.selected.len(), g.graph.node_count());
        write_record(
            &out,
            &ExplanationRecord {
                graph: g.id.clone(),
                method: "pathway-mask".into(),
                predicted: Some(predicted),
                explanation: ex,
                mask: Some(mask),
            },
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------- baseline

#[derive(Args, Serialize)]
pub struct BaselineArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, value_parser = ["rss", "ppr", "mds", "saliency", "edge-mask"])]
    pub method: Option<String>,
    /// Model checkpoint; needed by saliency and edge-mask.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub graph: Option<Vec<String>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub keep_ratio: Option<f64>,
    /// PageRank damping factor.
    #[arg(long)]
    pub damping: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub init_logit: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub mask_features: Option<bool>,
}

#[derive(Serialize, Deserialize)]
pub struct BaselineSettings {
    pub method: Option<String>,
    pub model: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub graph: Vec<String>,
    pub seed: Option<u64>,
    pub output: PathBuf,
    pub keep_ratio: f64,
    pub damping: f64,
    #[serde(flatten)]
    pub mask: MaskConfig,
}

impl Default for BaselineSettings {
    fn default() -> Self {
        Self {
            method: None,
            model: None,
            data: None,
            graph: Vec::new(),
            seed: None,
            output: default_output(),
            keep_ratio: 0.1,
            damping: 0.85,
            mask: MaskConfig::default(),
        }
    }
}

/// Edge score for node-only rankings: the weaker endpoint.
fn endpoint_min(graph: &Graph, scores: &[f64]) -> Vec<f64> {
    graph.edges().iter().map(|&(u, v)| scores[u].min(scores[v])).collect()
}

pub fn baseline(args: &BaselineArgs) -> Result<()> {
    let s: BaselineSettings = resolve(args, args.common.config.as_deref())?;
    let method: BaselineMethod = required(&s.method, "method")?.parse()?;
    let seed = required(&s.seed, "seed")?;
    s.mask.validate()?;
    let model = match (method, &s.model) {
        (BaselineMethod::Saliency | BaselineMethod::EdgeMask, None) => {
            return Err(Error::Usage(format!("--model is required for {method}")))
        }
        (_, Some(p)) => Some(Model::load(p)?),
        (_, None) => None,
    };
    let ds = load_data(&s.data)?;
    let chosen = select(&ds, &s.graph)?;
    let out = OutputDir::create(&s.output, "baseline", &s)?;
    for i in chosen {
        let g = &ds.graphs[i];
        let graph_seed = derive_seed(&[seed, i as u64]);
        let ranking: NodeRanking = match method {
            BaselineMethod::Rss => rss(&g.graph, graph_seed),
            BaselineMethod::Ppr => ppr(&g.graph, s.damping, 1e-12, None)?,
            BaselineMethod::Mds => mds(&g.graph),
            BaselineMethod::Saliency => saliency(model.as_ref().expect("checked above"), &g.graph, &g.features)?,
            BaselineMethod::EdgeMask => edge_mask_explainer(
                model.as_ref().expect("checked above"),
                &g.graph,
                &g.features,
                &s.mask,
                graph_seed,
            )?,
        };
        let edges = ranking
            .edge_scores
            .clone()
            .unwrap_or_else(|| endpoint_min(&g.graph, &ranking.scores));
        let ex = extract_subgraph(&g.graph, &ranking.scores, &edges, s.keep_ratio)?;
        let predicted = model
            .as_ref()
            .map(|m| m.predict(&g.graph, &g.features).map(|p| p.label))
            .transpose()?;
        write_record(
            &out,
            &ExplanationRecord {
                graph: g.id.clone(),
                method: method.to_string(),
                predicted,
                explanation: ex,
                mask: None,
            },
        )?;
    }
    info!("{method} rankings written to {}", s.output.display());
    Ok(())
}

// ---------------------------------------------------------------- eval

#[derive(Args, Serialize)]
pub struct EvalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output directory of `explain`/`baseline`, or its explanations folder.
    #[arg(long)]
    pub explanations: Option<PathBuf>,
    /// Annotation file with `gene<TAB>term` lines.
    #[arg(long)]
    pub go: Option<PathBuf>,
    /// Optional gene universe, one gene per line.
    #[arg(long)]
    pub universe: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub benjamini_hochberg: Option<bool>,
    /// Top-scored fraction used for the per-gene enrichment score.
    #[arg(long)]
    pub enrichment_ratio: Option<f64>,
}

#[derive(Serialize, Deserialize)]
pub struct EvalSettings {
    pub model: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub explanations: Option<PathBuf>,
    pub go: Option<PathBuf>,
    pub universe: Option<PathBuf>,
    pub output: PathBuf,
    pub alpha: f64,
    pub benjamini_hochberg: bool,
    pub enrichment_ratio: f64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        let e = EnrichmentOptions::default();
        Self {
            model: None,
            data: None,
            explanations: None,
            go: None,
            universe: None,
            output: default_output(),
            alpha: e.alpha,
            benjamini_hochberg: e.benjamini_hochberg,
            enrichment_ratio: 0.1,
        }
    }
}

#[derive(Serialize)]
struct ExplanationMetrics {
    methods: Vec<String>,
    graphs: usize,
    fidelity: FidelityReport,
    max_path_length: usize,
    mean_path_length: f64,
    avg_diameter: f64,
    /// Ranking quality of edge scores against planted motif edges.
    motif_edge_auc: Option<f64>,
    enrichment: Option<EnrichmentReport>,
}

#[derive(Serialize)]
struct EvalReport {
    graphs: usize,
    class_names: Vec<String>,
    classification: ClassificationReport,
    explanations: Option<ExplanationMetrics>,
}

fn read_records(path: &Path) -> Result<Vec<ExplanationRecord>> {
    let dir = if path.join(EXPLANATIONS).is_dir() {
        path.join(EXPLANATIONS)
    } else {
        path.to_path_buf()
    };
    let mut files: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(|e| Error::Io {
            path: dir.clone(),
            source: e,
        })?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Config(format!("no explanation files in {}", dir.display())));
    }
    files.iter().map(|f| read_json(f)).collect()
}

fn explanation_metrics(model: &Model, ds: &Dataset, s: &EvalSettings, path: &Path) -> Result<ExplanationMetrics> {
    let records = read_records(path)?;
    let mut items: Vec<(&LabeledGraph, &ExplanationRecord)> = Vec::with_capacity(records.len());
    for r in &records {
        let g = ds
            .get(&r.graph)
            .ok_or_else(|| Error::Config(format!("explained graph {:?} is not in the dataset", r.graph)))?;
        items.push((g, r));
    }
    let triples: Vec<_> = items
        .iter()
        .map(|(g, r)| (&g.graph, &g.features, r.explanation.selected.as_slice()))
        .collect();
    let fid = fidelity(model, &triples)?;
    let subgraphs = items
        .iter()
        .map(|(g, r)| r.explanation.subgraph(&g.graph))
        .collect::<Result<Vec<_>>>()?;
    let lengths = subgraphs.iter().map(longest_simple_path).collect::<Result<Vec<_>>>()?;

    let (mut scores, mut positive) = (Vec::new(), Vec::new());
    for (g, r) in &items {
        if let Some(motif) = &g.motif_edges {
            let motif: BTreeSet<&(usize, usize)> = motif.iter().collect();
            for (e, &score) in g.graph.edges().iter().zip(&r.explanation.edge_scores) {
                scores.push(score);
                positive.push(motif.contains(e));
            }
        }
    }

    let enrichment = match &s.go {
        Some(go_path) => {
            let go = GoMapping::load(go_path, s.universe.as_deref())?;
            let entries: Vec<(Vec<String>, Vec<f64>, Vec<String>)> = items
                .iter()
                .map(|(g, r)| {
                    let genes = (0..g.graph.node_count()).map(|v| g.graph.node_label(v)).collect();
                    let kept = r.explanation.selected.iter().map(|&v| g.graph.node_label(v)).collect();
                    (genes, r.explanation.node_scores.clone(), kept)
                })
                .collect();
            let options = EnrichmentOptions {
                alpha: s.alpha,
                benjamini_hochberg: s.benjamini_hochberg,
            };
            Some(enrichment_report(&entries, &go, s.enrichment_ratio, options)?)
        }
        None => None,
    };

    let methods: BTreeSet<String> = records.iter().map(|r| r.method.clone()).collect();
    Ok(ExplanationMetrics {
        methods: methods.into_iter().collect(),
        graphs: records.len(),
        fidelity: fid,
        max_path_length: max_path_length(&subgraphs)?,
        mean_path_length: lengths.iter().sum::<usize>() as f64 / lengths.len() as f64,
        avg_diameter: avg_diameter(&subgraphs),
        motif_edge_auc: auc(&scores, &positive),
        enrichment,
    })
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let s: EvalSettings = resolve(args, args.common.config.as_deref())?;
    let model = load_model(&s.model)?;
    let ds = load_data(&s.data)?;
    let mut predictions = Vec::with_capacity(ds.graphs.len());
    for g in &ds.graphs {
        predictions.push(model.predict(&g.graph, &g.features)?.label);
    }
    let classification = classification_report(&predictions, &ds.labels(), ds.num_classes())?;
    let explanations = s
        .explanations
        .as_deref()
        .map(|p| explanation_metrics(&model, &ds, &s, p))
        .transpose()?;
    let report = EvalReport {
        graphs: ds.graphs.len(),
        class_names: ds.class_names.clone(),
        classification,
        explanations,
    };
    let out = OutputDir::create(&s.output, "eval", &s)?;
    out.json("report.json", &report)?;
    info!("accuracy {:.4} over {} graphs", report.classification.accuracy, report.graphs);
    Ok(())
}

// ---------------------------------------------------------------- export

#[derive(Args, Serialize)]
pub struct ExportArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Explanation file written by `explain` or `baseline`.
    #[arg(long)]
    pub explanation: Option<PathBuf>,
    /// graphml, dot or json.
    #[arg(long)]
    pub format: Option<String>,
    /// Export the whole scored graph instead of the kept subgraph.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub full: Option<bool>,
}

#[derive(Serialize, Deserialize)]
pub struct ExportSettings {
    pub data: Option<PathBuf>,
    pub explanation: Option<PathBuf>,
    pub format: String,
    pub full: bool,
    pub output: PathBuf,
}

impl Default for ExportSettings {
    fn default() -> Self {
        Self {
            data: None,
            explanation: None,
            format: "graphml".into(),
            full: false,
            output: default_output(),
        }
    }
}

pub fn export(args: &ExportArgs) -> Result<()> {
    let s: ExportSettings = resolve(args, args.common.config.as_deref())?;
    let format = parse_format(&s.format)?;
    let record: ExplanationRecord = read_json(&required(&s.explanation, "explanation")?)?;
    let ds = load_data(&s.data)?;
    let g = ds
        .get(&record.graph)
        .ok_or_else(|| Error::Config(format!("graph {:?} is not in the dataset", record.graph)))?;
    let bytes = export_record(&g.graph, &record.explanation, format, s.full)?;
    let out = OutputDir::create(&s.output, "export", &s)?;
    let path = out.bytes(format!("{}.{}", record.graph, format.extension()), &bytes)?;
    info!("wrote {}", path.display());
    Ok(())
}
