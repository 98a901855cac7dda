use std::io;
use std::path::{Path, PathBuf};

use lvse_core::bnn::BnnError;
use lvse_core::dataset::DatasetError;
use lvse_core::grid::GridError;
use lvse_core::metrics::MetricsError;
use lvse_core::qr::QrError;
use lvse_core::synth::SynthError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{path} was produced by config {found}, expected {expected}")]
    HashMismatch { path: PathBuf, expected: String, found: String },
    #[error("missing cells: {}", .0.join(", "))]
    MissingCells(Vec<String>),
    #[error("{failed} of {total} cells failed")]
    CellsFailed { failed: usize, total: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Bnn(#[from] BnnError),
    #[error(transparent)]
    Qr(#[from] QrError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl Error {
    pub fn io(path: &Path, source: io::Error) -> Self {
        Error::Io { path: path.to_path_buf(), source }
    }

    pub fn csv(path: &Path, source: csv::Error) -> Self {
        Error::Csv { path: path.to_path_buf(), source }
    }

    pub fn json(path: &Path, source: serde_json::Error) -> Self {
        Error::Json { path: path.to_path_buf(), source }
    }

    pub fn format(path: &Path, msg: impl Into<String>) -> Self {
        Error::Format { path: path.to_path_buf(), msg: msg.into() }
    }
}
