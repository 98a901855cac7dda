//! The four stages behind the command line: `generate`, `run_matrix`,
//! `uncertainty_study` and `report`.

mod generate;
mod matrix;
mod report;
mod study;

use std::path::{Path, PathBuf};

use lvse_core::dataset::{FeatureMatrix, FeatureSetId};
use lvse_core::grid::{NetworkModel, NetworkSpec};
use lvse_core::synth::ScenarioId;
use serde::{Deserialize, Serialize};

use crate::cells::Cell;
use crate::config::ExperimentConfig;
use crate::features::read_features;
use crate::table::read_json;
use crate::Error;

pub use generate::{generate, GenerateSummary};
pub use matrix::{run_matrix, CellStatus, LedgerEntry, RunLedger};
pub use report::{report, ReportSummary};
pub use study::{uncertainty_study, StudySummary, WeekRow};

/// Paths inside an output directory.
#[derive(Clone, Debug)]
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Workspace { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn network(&self) -> PathBuf {
        self.root.join("network.json")
    }

    pub fn scenario(&self, id: ScenarioId) -> PathBuf {
        self.root.join("data").join(id.as_str())
    }

    pub fn features(&self) -> PathBuf {
        self.root.join("features")
    }

    pub fn matrix(&self) -> PathBuf {
        self.root.join("matrix")
    }

    pub fn ledger(&self) -> PathBuf {
        self.matrix().join("ledger.json")
    }

    pub fn summary(&self) -> PathBuf {
        self.matrix().join("summary.csv")
    }

    pub fn cell(&self, cell: &Cell) -> PathBuf {
        self.matrix().join(cell.id())
    }

    pub fn study(&self) -> PathBuf {
        self.root.join("study")
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("report")
    }
}

pub fn feature_stem(s: ScenarioId, fs: FeatureSetId) -> String {
    format!("{s}_{fs}")
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetworkFile {
    pub config_hash: String,
    pub network: NetworkSpec,
}

fn load_network(ws: &Workspace) -> Result<NetworkModel, Error> {
    let file: NetworkFile = read_json(&ws.network())?;
    Ok(NetworkModel::try_from(file.network)?)
}

/// Generated features of one scenario and tier, checked against the data
/// settings of `cfg`.
fn load_features(ws: &Workspace, cfg: &ExperimentConfig, s: ScenarioId, fs: FeatureSetId) -> Result<FeatureMatrix, Error> {
    let stem = feature_stem(s, fs);
    let (fm, side) = read_features(&ws.features(), &stem)?;
    let expected = cfg.data_hash();
    if side.data_hash != expected {
        return Err(Error::HashMismatch {
            path: ws.features().join(format!("{stem}.json")),
            expected,
            found: side.data_hash,
        });
    }
    Ok(fm)
}
