//! Venue stability analysis: diversity features over publication years,
//! co-authorship centralities, and an RBF-kernel SVM that separates
//! top-tier from non-top-tier venues.

pub mod classifier;
pub mod corpus;
pub mod error;
pub mod features;
pub mod graph;
pub mod io;
pub mod report;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
