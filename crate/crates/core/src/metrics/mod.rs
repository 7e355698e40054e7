//! Evaluation arithmetic: fidelity, path preservation, classification
//! quality, enrichment and small rank statistics.

mod classification;
mod enrichment;
mod fidelity;
mod stats;
mod structure;

pub use classification::{classification_report, ClassMetrics, ClassificationReport};
pub use enrichment::{
    ebf, ecs, enrichment_report, hypergeom_enrich, hypergeom_tail, top_genes, EnrichedTerm, EnrichmentOptions,
    EnrichmentReport, GoMapping,
};
pub use fidelity::{
    fidelity, fidelity_minus, fidelity_plus, fidelity_term, keep_selection, remove_selection, Explained,
    FidelityReport, FidelityTerm, GraphClassifier,
};
pub use stats::{auc, sign_test, SignTest};
pub use structure::{avg_diameter, diameter, longest_simple_path, max_path_length, MAX_EXACT_PATH_NODES};
