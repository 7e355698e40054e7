//! Graph containers, on-disk datasets, synthetic generation and export.

mod dataset;
mod export;
mod graph;
mod synth;

pub use dataset::{
    assemble_graph, edges_text, features_text, load_dataset, load_raw_graph, manifest_text, read_manifest,
    save_dataset, ClassCount, Dataset, DatasetSummary, FeatureMatrix, LabeledGraph, MANIFEST,
};
pub use export::{export_subgraph, parse_export, ExportFormat, ScoredGraph};
pub use graph::{preprocess_graph, Graph, Preprocessed, RawGraph};
pub use synth::{generate_synthetic, SyntheticSpec, MAX_REGENERATIONS};
