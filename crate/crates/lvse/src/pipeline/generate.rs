use lvse_core::dataset::build_features;
use lvse_core::grid::{build_reference_network, ground_truth_series};
use lvse_core::synth::{assemble_scenario, ScenarioId};
use log::info;

use super::{feature_stem, NetworkFile, Workspace};
use crate::config::ExperimentConfig;
use crate::features::write_features;
use crate::scenario_dir::write_scenario;
use crate::table::write_json;
use crate::Error;

#[derive(Clone, Debug, PartialEq)]
pub struct GenerateSummary {
    pub scenarios: Vec<ScenarioId>,
    pub steps: usize,
    /// Extremes of the monitored voltage magnitudes over every scenario.
    pub v_min: f64,
    pub v_max: f64,
}

/// Simulates every configured scenario, solves its power flows and writes
/// the scenario directories and feature matrices.
pub fn generate(cfg: &ExperimentConfig, ws: &Workspace) -> Result<GenerateSummary, Error> {
    cfg.validate()?;
    let (config_hash, data_hash) = (cfg.hash(), cfg.data_hash());
    let net = build_reference_network();
    write_json(&ws.network(), &NetworkFile { config_hash: config_hash.clone(), network: net.spec() })?;
    let mut summary =
        GenerateSummary { scenarios: cfg.scenarios.clone(), steps: 0, v_min: f64::INFINITY, v_max: f64::NEG_INFINITY };
    for &id in &cfg.scenarios {
        let scenario = assemble_scenario(id, &net, &cfg.scenario, cfg.data_seed)?;
        let truth = ground_truth_series(&net, &scenario.timestamps, &scenario.injections)?;
        for &v in &truth.magnitudes {
            summary.v_min = summary.v_min.min(v);
            summary.v_max = summary.v_max.max(v);
        }
        summary.steps = scenario.steps();
        write_scenario(&ws.scenario(id), &net, &cfg.scenario, &scenario, &truth, &data_hash, &config_hash)?;
        for &fs in &cfg.feature_sets {
            let fm = build_features(&net, &scenario, &truth, fs)?;
            write_features(&ws.features(), &feature_stem(id, fs), &fm, (id, fs), &cfg.split, &data_hash, &config_hash)?;
        }
        info!("{id}: {} steps, {} EVs", scenario.steps(), scenario.ev_counts.iter().map(|c| c.1).sum::<u32>());
    }
    Ok(summary)
}
