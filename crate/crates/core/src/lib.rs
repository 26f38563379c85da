//! Rationale extraction from git commit messages.
//!
//! The pipeline cleans commit messages into sentences, labels each sentence
//! as Decision / Rationale / SupportingFact, builds a knowledge graph with
//! forward-chaining inference, and answers triple-pattern queries over it.

pub mod annotate;
pub mod error;
pub mod eval;
pub mod features;
pub mod fixtures;
pub mod ingest;
pub mod kgraph;
pub mod models;
pub mod pipeline;
pub mod query;

pub use error::{Error, Result};
