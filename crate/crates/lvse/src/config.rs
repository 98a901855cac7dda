//! Experiment configuration (JSON) and its content hash.

use std::fs;
use std::path::Path;

use lvse_core::bnn::BnnConfig;
use lvse_core::dataset::{FeatureSetId, SplitSpec};
use lvse_core::qr::QrConfig;
use lvse_core::synth::{ScenarioConfig, ScenarioId};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cells::ModelKind;
use crate::Error;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Seed of every synthetic generator.
    pub data_seed: u64,
    /// Seed of weight initialization and minibatch order.
    pub model_seed: u64,
    pub scenario: ScenarioConfig,
    pub scenarios: Vec<ScenarioId>,
    pub feature_sets: Vec<FeatureSetId>,
    pub models: Vec<ModelKind>,
    pub split: SplitSpec,
    pub bnn: BnnConfig,
    pub qr: QrConfig,
    /// Stochastic forward passes per BNN prediction.
    pub n_sample: usize,
    /// Miscoverage of the prediction intervals.
    pub alpha: f64,
    pub study: StudyConfig,
    pub report: ReportConfig,
}

/// Winter-trained uncertainty study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub scenario: ScenarioId,
    pub feature_set: FeatureSetId,
    /// Label of the studied bus.
    pub bus: String,
    /// Rows before this day of year are the training window.
    pub train_end_day: u32,
    /// Chronological share of the training window held out for validation.
    pub val_fraction: f64,
    /// Zero-based months counted as summer.
    pub summer_months: Vec<u32>,
    pub bnn: BnnConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Bus shown in the time-series excerpts.
    pub bus: String,
    /// Excerpt length in hours.
    pub excerpt_hours: u32,
    /// Scenario and feature set whose activations place the excerpt.
    pub anchor_scenario: ScenarioId,
    pub anchor_feature_set: FeatureSetId,
}

fn desk_bnn() -> BnnConfig {
    BnnConfig {
        hidden: vec![12, 12],
        epochs: 300,
        patience: Some(60),
        batch_size: 64,
        lr: 1e-3,
        mean_warmup_epochs: 100,
        refit: false,
        ..BnnConfig::default()
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data_seed: 7,
            model_seed: 1,
            scenario: ScenarioConfig::default(),
            scenarios: ScenarioId::ALL.to_vec(),
            feature_sets: FeatureSetId::ALL.to_vec(),
            models: ModelKind::ALL.to_vec(),
            split: SplitSpec::default(),
            bnn: desk_bnn(),
            qr: QrConfig {
                hidden: vec![12, 12],
                epochs: 150,
                patience: Some(40),
                batch_size: 64,
                lr: 1e-3,
                refit: false,
                ..QrConfig::default()
            },
            n_sample: 500,
            alpha: 0.1,
            study: StudyConfig::default(),
            report: ReportConfig::default(),
        }
    }
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            scenario: ScenarioId::S1,
            feature_set: FeatureSetId::FS2,
            bus: "N4".into(),
            train_end_day: 59,
            val_fraction: 0.1,
            summer_months: vec![5, 6, 7],
            bnn: desk_bnn(),
        }
    }
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            bus: "N4".into(),
            excerpt_hours: 14,
            anchor_scenario: ScenarioId::S3,
            anchor_feature_set: FeatureSetId::FS2,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.scenarios.is_empty() || self.feature_sets.is_empty() || self.models.is_empty() {
            return bad("scenario, feature-set and model lists must be non-empty");
        }
        if self.n_sample < 2 {
            return bad("n_sample must be at least 2");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        // quantile-regression intervals are read off the 1%..99% grid
        let tail = self.alpha * 50.0;
        if self.models.contains(&ModelKind::Qr) && (tail.round() - tail).abs() > 1e-9 {
            return bad("alpha/2 must be a whole percentage when QR is evaluated");
        }
        if self.report.excerpt_hours == 0 {
            return bad("excerpt_hours must be positive");
        }
        if !(self.study.val_fraction > 0.0 && self.study.val_fraction < 1.0) {
            return bad("study val_fraction must lie in (0, 1)");
        }
        if self.study.summer_months.iter().any(|&m| m > 11) {
            return bad("summer months are zero-based (0..=11)");
        }
        Ok(())
    }

    /// Overrides both seeds.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.data_seed = seed;
        self.model_seed = seed;
        self
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        digest(&serde_json::to_vec(self).expect("config serializes"))
    }

    /// Hash of the parts that determine the generated data.
    pub fn data_hash(&self) -> String {
        let key = serde_json::json!({ "data_seed": self.data_seed, "scenario": self.scenario });
        digest(&serde_json::to_vec(&key).expect("config serializes"))
    }
}

fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        assert_eq!(a.hash(), ExperimentConfig::default().hash());
        assert_eq!(a.hash().len(), 64);
        let b = a.clone().with_seed(99);
        assert_ne!(a.hash(), b.hash());
        assert_ne!(a.data_hash(), b.data_hash());
        let mut c = a.clone();
        c.bnn.epochs += 1;
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.data_hash(), c.data_hash());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"data_seed": 3, "bnn": {"epochs": 5}}"#).unwrap();
        assert_eq!(cfg.data_seed, 3);
        assert_eq!(cfg.bnn.epochs, 5);
        assert_eq!(cfg.scenarios.len(), 3);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"epochs": 5}"#).is_err());
    }

    #[test]
    fn rejects_invalid_values() {
        let cfg = ExperimentConfig { alpha: 1.5, ..ExperimentConfig::default() };
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
    }
}
