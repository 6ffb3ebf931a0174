//! Color-cognition probes for CLIP-style dual-encoder models.
//!
//! The crate synthesizes shape and Stroop stimulus corpora, runs zero-shot
//! color-label prediction over embeddings exported by a model adapter,
//! aggregates the outcome tables, and analyzes per-neuron color selectivity
//! from activation dumps.

pub mod activation;
pub mod config;
pub mod error;
pub mod exchange;
pub mod palette;
pub mod probe;
pub mod prompts;
pub mod report;
pub mod stimulus;

pub use error::{Error, Result};
