use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use lvse_core::bnn::{BnnConfig, BnnModel};
use lvse_core::dataset::{FeatureMatrix, FeatureSetId};
use lvse_core::metrics::{quantile_grid, Estimates, MetricsReport};
use lvse_core::qr::{QrConfig, QrModel};
use lvse_core::synth::ScenarioId;
use log::{error, info};
use serde::{Deserialize, Serialize};

use super::{load_features, load_network, Workspace};
use crate::cells::{all_cells, Cell, CellFilter, ModelKind};
use crate::checkpoint::{save_bnn, save_qr};
use crate::config::ExperimentConfig;
use crate::reports::{read_metrics, write_metrics, write_summary, CellMetrics, Predictions, METRICS_JSON, PREDICTIONS_CSV};
use crate::table::{read_json, write_json};
use crate::Error;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellStatus {
    Completed { checkpoint: PathBuf, metrics: PathBuf, predictions: PathBuf },
    Failed { error: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub cell: Cell,
    #[serde(flatten)]
    pub status: CellStatus,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunLedger {
    pub config_hash: String,
    pub data_hash: String,
    pub entries: Vec<LedgerEntry>,
}

impl RunLedger {
    pub fn completed(&self) -> impl Iterator<Item = &LedgerEntry> {
        self.entries.iter().filter(|e| matches!(e.status, CellStatus::Completed { .. }))
    }

    pub fn failed(&self) -> usize {
        self.entries.len() - self.completed().count()
    }

    pub fn entry(&self, cell: &Cell) -> Option<&LedgerEntry> {
        self.entries.iter().find(|e| e.cell == *cell)
    }

    pub fn wall_time_s(&self) -> f64 {
        self.entries.iter().map(|e| e.wall_time_s).sum()
    }
}

/// Trains and scores every selected cell on the chronological test split.
/// Failed cells are recorded and the run continues. Entries of a previous
/// run under the same config are kept, so the matrix can be filled in
/// several invocations with `filter`.
pub fn run_matrix(cfg: &ExperimentConfig, ws: &Workspace, filter: &CellFilter) -> Result<RunLedger, Error> {
    cfg.validate()?;
    let config_hash = cfg.hash();
    let net = load_network(ws)?;
    let names: Vec<String> = net.monitored().iter().map(|&b| net.buses()[b].label.clone()).collect();
    let cells: Vec<Cell> =
        all_cells(&cfg.scenarios, &cfg.feature_sets, &cfg.models).into_iter().filter(|c| filter.matches(c)).collect();
    if cells.is_empty() {
        return Err(Error::InvalidConfig("the cell filter selects no cells".into()));
    }

    let mut previous: BTreeMap<Cell, LedgerEntry> = BTreeMap::new();
    if let Ok(old) = read_json::<RunLedger>(&ws.ledger()) {
        if old.config_hash == config_hash {
            previous.extend(old.entries.into_iter().map(|e| (e.cell, e)));
        }
    }

    let mut features: BTreeMap<(ScenarioId, FeatureSetId), FeatureMatrix> = BTreeMap::new();
    for cell in &cells {
        let key = (cell.scenario, cell.feature_set);
        if let std::collections::btree_map::Entry::Vacant(e) = features.entry(key) {
            e.insert(load_features(ws, cfg, key.0, key.1)?);
        }
        let fm = &features[&key];
        let start = Instant::now();
        let status = match run_cell(cfg, ws, cell, fm, &names, &config_hash) {
            Ok(status) => status,
            Err(e) => {
                error!("{cell}: {e}");
                CellStatus::Failed { error: e.to_string() }
            }
        };
        let wall_time_s = start.elapsed().as_secs_f64();
        info!("{cell}: {:.1} s", wall_time_s);
        previous.insert(*cell, LedgerEntry { cell: *cell, status, wall_time_s });
    }

    let ledger = RunLedger { config_hash: config_hash.clone(), data_hash: cfg.data_hash(), entries: previous.into_values().collect() };
    write_json(&ws.ledger(), &ledger)?;
    let done = ledger
        .completed()
        .map(|e| read_metrics(&ws.cell(&e.cell), &config_hash))
        .collect::<Result<Vec<_>, _>>()?;
    write_summary(&ws.summary(), &config_hash, &done)?;
    Ok(ledger)
}

fn bnn_config(cfg: &ExperimentConfig) -> BnnConfig {
    BnnConfig { seed: cfg.model_seed, ..cfg.bnn.clone() }
}

fn qr_config(cfg: &ExperimentConfig) -> QrConfig {
    QrConfig { seed: cfg.model_seed, ..cfg.qr.clone() }
}

fn run_cell(
    cfg: &ExperimentConfig,
    ws: &Workspace,
    cell: &Cell,
    fm: &FeatureMatrix,
    names: &[String],
    config_hash: &str,
) -> Result<CellStatus, Error> {
    let dir = ws.cell(cell);
    let (train, val, test) = fm.split(&cfg.split)?;
    let checkpoint = dir.join("checkpoint.json");
    let grid = quantile_grid();
    let (point, lower, upper, quantiles, components) = match cell.model {
        ModelKind::Bnn => {
            let model = BnnModel::fit(&train, &val, &bnn_config(cfg))?;
            save_bnn(&checkpoint, &model, config_hash)?;
            let s = model.predict(test.inputs(), cfg.n_sample, cfg.alpha, cfg.model_seed)?;
            let levels: Vec<Vec<f64>> = grid.iter().map(|&q| s.quantile(q)).collect();
            let quantiles: Vec<f64> = (0..s.mean.len()).flat_map(|i| levels.iter().map(move |l| l[i])).collect();
            (s.mean, s.lower, s.upper, quantiles, Some((s.epistemic, s.aleatoric)))
        }
        ModelKind::Qr => {
            let model = QrModel::fit(&train, &val, &qr_config(cfg))?;
            save_qr(&checkpoint, &model, config_hash)?;
            let p = model.predict_quantiles(test.inputs())?;
            let (lower, upper) = p.interval(cfg.alpha);
            (p.point(), lower, upper, p.values, None)
        }
    };
    let report = MetricsReport::evaluate(
        names,
        test.targets(),
        Estimates { point: &point, lower: &lower, upper: &upper, quantiles: &quantiles },
        Some(test.activation()),
        cfg.alpha,
    )?;
    write_metrics(&dir, &CellMetrics { config_hash: config_hash.into(), cell: *cell, test_rows: test.range(), report })?;
    let (epistemic, aleatoric) = components.unzip();
    let predictions = Predictions {
        timestamps: test.timestamps().to_vec(),
        activation: test.activation().to_vec(),
        buses: names.to_vec(),
        truth: test.targets().to_vec(),
        mean: point,
        lower,
        upper,
        epistemic,
        aleatoric,
    };
    predictions.write(&dir.join(PREDICTIONS_CSV), config_hash)?;
    // ledger paths are relative to the output directory
    let rel = PathBuf::from("matrix").join(cell.id());
    Ok(CellStatus::Completed {
        checkpoint: rel.join("checkpoint.json"),
        metrics: rel.join(METRICS_JSON),
        predictions: rel.join(PREDICTIONS_CSV),
    })
}
