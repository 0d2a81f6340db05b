//! Football match outcome prediction stratified by bookmaker Kelly indices.

pub mod betting;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod ingest;
pub mod kelly;
pub mod models;
pub mod pipeline;
pub mod ratings;

pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use pipeline::{Pipeline, Stage};
