//! Batch harness for landmark-based emotion recognition: configuration,
//! manifest ingestion, the train/validate/test protocol and a synthetic
//! dataset generator.

use std::path::PathBuf;

pub mod config;
pub mod dataset;
pub mod manifest;
pub mod pipeline;
pub mod synth;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("duplicate sample id {0:?} in manifest")]
    DuplicateId(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("sample {id}: {message}")]
    Entry { id: String, message: String },
    #[error("sample {0} has no landmarks and neutral fallback is off")]
    AbsentLandmarks(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] landmark_emotion::Error),
}
