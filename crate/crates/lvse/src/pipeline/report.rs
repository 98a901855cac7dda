use std::ops::Range;
use std::path::PathBuf;

use lvse_core::dataset::FeatureSetId;
use lvse_core::synth::ScenarioId;
use lvse_core::time::{STEPS_PER_HOUR, STEP_MINUTES};
use log::warn;

use super::{RunLedger, Workspace};
use crate::cells::{all_cells, Cell, ModelKind};
use crate::config::ExperimentConfig;
use crate::reports::{read_metrics, write_bars, write_excerpts, Excerpt, Predictions, PREDICTIONS_CSV};
use crate::table::{read_json, write_csv, Table};
use crate::Error;

#[derive(Clone, Debug, PartialEq)]
pub struct ReportSummary {
    pub cells: usize,
    /// Test rows shown in the excerpts.
    pub excerpt: Option<Range<usize>>,
    pub files: Vec<PathBuf>,
}

/// Builds the plot-data tables from a completed matrix (and the study, if
/// it ran). Every input must carry the hash of `cfg`.
pub fn report(cfg: &ExperimentConfig, ws: &Workspace) -> Result<ReportSummary, Error> {
    cfg.validate()?;
    let hash = cfg.hash();
    let ledger: RunLedger = read_json(&ws.ledger())?;
    if ledger.config_hash != hash {
        return Err(Error::HashMismatch { path: ws.ledger(), expected: hash, found: ledger.config_hash });
    }
    Table::read(&ws.summary())?.expect_meta("config_hash", &hash)?;
    let cells = all_cells(&cfg.scenarios, &cfg.feature_sets, &cfg.models);
    let missing: Vec<String> = cells
        .iter()
        .filter(|c| ledger.entry(c).is_none_or(|e| !matches!(e.status, super::CellStatus::Completed { .. })))
        .map(|c| c.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingCells(missing));
    }
    let metrics = cells.iter().map(|c| read_metrics(&ws.cell(c), &hash)).collect::<Result<Vec<_>, _>>()?;

    let out = ws.report();
    let mut files = Vec::new();
    let bars = out.join("bars.csv");
    write_bars(&bars, &hash, &metrics)?;
    files.push(bars);

    let excerpt = excerpts(cfg, ws, &hash, &mut files)?;

    let study = ws.study();
    if study.join("summary.json").exists() {
        for name in ["series", "weekly"] {
            let t = Table::read(&study.join(format!("{name}.csv")))?;
            t.expect_meta("config_hash", &hash)?;
            let meta: Vec<(&str, &str)> = t.meta.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
            let path = out.join(format!("fig6_{name}.csv"));
            write_csv(&path, &meta, &t.header, t.rows.iter())?;
            files.push(path);
        }
    } else {
        warn!("no uncertainty study under {}; skipping fig6 tables", study.display());
    }
    Ok(ReportSummary { cells: metrics.len(), excerpt, files })
}

fn excerpts(cfg: &ExperimentConfig, ws: &Workspace, hash: &str, files: &mut Vec<PathBuf>) -> Result<Option<Range<usize>>, Error> {
    let rc = &cfg.report;
    let bnn = |scenario: ScenarioId, feature_set: FeatureSetId| Cell { scenario, feature_set, model: ModelKind::Bnn };
    let anchor = bnn(rc.anchor_scenario, rc.anchor_feature_set);
    let have = |c: &Cell| {
        cfg.models.contains(&c.model) && cfg.scenarios.contains(&c.scenario) && cfg.feature_sets.contains(&c.feature_set)
    };
    if !have(&anchor) {
        warn!("anchor cell {anchor} is not part of the matrix; skipping excerpts");
        return Ok(None);
    }
    let load = |c: &Cell| Predictions::read(&ws.cell(c).join(PREDICTIONS_CSV), hash);
    let anchor_pred = load(&anchor)?;
    let bus = anchor_pred
        .bus_index(&rc.bus)
        .ok_or_else(|| Error::InvalidConfig(format!("bus {} is not estimated", rc.bus)))?;
    let range = busiest_window(&anchor_pred, rc.excerpt_hours as usize * STEPS_PER_HOUR);

    let figures: [(&str, Vec<(String, Cell)>); 2] = [
        (
            "fig2_feature_sets.csv",
            cfg.feature_sets.iter().map(|&fs| (fs.to_string(), bnn(rc.anchor_scenario, fs))).collect(),
        ),
        (
            "fig3_scenarios.csv",
            cfg.scenarios.iter().map(|&s| (s.to_string(), bnn(s, rc.anchor_feature_set))).collect(),
        ),
    ];
    for (name, series) in figures {
        let mut out = Vec::new();
        for (label, cell) in series {
            let p = load(&cell)?;
            if p.timestamps != anchor_pred.timestamps {
                return Err(Error::format(&ws.cell(&cell).join(PREDICTIONS_CSV), "test rows differ from the anchor cell"));
            }
            out.push(Excerpt::from_predictions(label, &p, bus, range.clone()));
        }
        let path = ws.report().join(name);
        write_excerpts(&path, &[("config_hash", hash)], &rc.bus, &out)?;
        files.push(path);
    }
    Ok(Some(range))
}

/// The contiguous window of `len` test rows with the most activation
/// flags; the earliest one wins ties.
fn busiest_window(p: &Predictions, len: usize) -> Range<usize> {
    let n = p.rows();
    let len = len.min(n);
    let contiguous = |s: usize| {
        p.timestamps[s + len - 1].minutes() - p.timestamps[s].minutes() == (len as u32 - 1) * STEP_MINUTES
    };
    let mut best: Option<(usize, usize)> = None;
    let mut count = p.activation[..len].iter().filter(|&&a| a).count();
    for s in 0..=n - len {
        if s > 0 {
            count = count + p.activation[s + len - 1] as usize - p.activation[s - 1] as usize;
        }
        if contiguous(s) && best.is_none_or(|(_, c)| count > c) {
            best = Some((s, count));
        }
    }
    let start = best.map_or(0, |b| b.0);
    start..start + len
}
