//! Daily mobility motifs from transit smart-card trips, the station networks
//! they aggregate into, node-importance rankings on those networks, and the
//! metrics that score the rankings against ground-truth importance.
//!
//! The pipeline runs `ingest` → `motif` → `netbuild` → `centrality` →
//! `eval`; `pipeline` wires the stages together and `synthgen` produces
//! corpora with planted importance for testing.

pub mod centrality;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod motif;
pub mod netbuild;
pub mod pipeline;
pub mod station;
pub mod synthgen;

pub use error::{Error, ErrorClass, Result};
pub use station::{StationId, StationUniverse};
