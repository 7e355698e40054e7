//! Pathway-aware graph classification and subgraph explanation.
//!
//! The crate is organised bottom-up:
//!
//! * [`ndtensor`]: dense tensors and a reverse-mode tape used by every
//!   trainable component.
//! * [`graphio`]: graphs, feature matrices, datasets on disk, synthetic
//!   planted-motif data and scored-subgraph export.
//! * [`pathsampler`]: per-node random walks and random-walk return
//!   probability encodings.
//! * [`pathmamba`]: the GIN + pathway selective-scan classifier and its
//!   cross-validated training harness.
//! * [`pathexplainer`]: pathway-level mask learning and subgraph extraction.
//! * [`baselines`]: random, PageRank, dominating-set, saliency and
//!   edge-mask node rankings.
//! * [`metrics`]: fidelity, path preservation, classification and
//!   enrichment arithmetic.

pub mod baselines;
pub mod error;
pub mod graphio;
pub mod metrics;
pub mod ndtensor;
pub mod pathexplainer;
pub mod pathmamba;
pub mod pathsampler;
pub mod rng;

pub use error::{Error, Result};
