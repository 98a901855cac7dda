//! Model checkpoints as JSON: flat parameter vectors with an index map,
//! normalizer statistics, the training log and the producing config hash.

use std::path::Path;

use lvse_core::bnn::{BnnConfig, BnnModel, TrainingLog, VariationalParams};
use lvse_core::dataset::Normalizer;
use lvse_core::nn::{MlpSpec, ParamBlock};
use lvse_core::qr::{QrConfig, QrModel};
use serde::{Deserialize, Serialize};

use crate::table::{read_json, write_json};
use crate::Error;

pub const BNN_FORMAT: &str = "lvse-bnn-v1";
pub const QR_FORMAT: &str = "lvse-qr-v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub index: Vec<ParamBlock>,
    pub values: Vec<f64>,
}

impl ParamVector {
    pub fn new(spec: &MlpSpec, values: Vec<f64>) -> Self {
        ParamVector { index: spec.index_map(), values }
    }

    fn check(&self, spec: &MlpSpec, path: &Path) -> Result<(), Error> {
        if self.index != spec.index_map() || self.values.len() != spec.param_count() {
            return Err(Error::format(path, "parameter vector does not match the network shape"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::format(path, "non-finite parameter"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BnnCheckpoint {
    pub format: String,
    pub config_hash: String,
    pub spec: MlpSpec,
    pub mu: ParamVector,
    pub rho: ParamVector,
    pub normalizer: Normalizer,
    pub log: TrainingLog,
    pub config: BnnConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QrCheckpoint {
    pub format: String,
    pub config_hash: String,
    pub spec: MlpSpec,
    pub grid: Vec<f64>,
    pub params: ParamVector,
    pub normalizer: Normalizer,
    pub log: TrainingLog,
    pub config: QrConfig,
}

fn check_header(path: &Path, format: &str, expected: &str, hash: &str, want: Option<&str>) -> Result<(), Error> {
    if format != expected {
        return Err(Error::format(path, format!("expected format {expected}, found {format}")));
    }
    match want {
        Some(w) if w != hash => {
            Err(Error::HashMismatch { path: path.to_path_buf(), expected: w.into(), found: hash.into() })
        }
        _ => Ok(()),
    }
}

pub fn save_bnn(path: &Path, model: &BnnModel, config_hash: &str) -> Result<(), Error> {
    let ck = BnnCheckpoint {
        format: BNN_FORMAT.into(),
        config_hash: config_hash.into(),
        spec: model.spec.clone(),
        mu: ParamVector::new(&model.spec, model.params.mu.clone()),
        rho: ParamVector::new(&model.spec, model.params.rho.clone()),
        normalizer: model.normalizer.clone(),
        log: model.log.clone(),
        config: model.config.clone(),
    };
    write_json(path, &ck)
}

/// Loads a BNN checkpoint; with `config_hash`, rejects other configs.
pub fn load_bnn(path: &Path, config_hash: Option<&str>) -> Result<BnnModel, Error> {
    let ck: BnnCheckpoint = read_json(path)?;
    check_header(path, &ck.format, BNN_FORMAT, &ck.config_hash, config_hash)?;
    ck.mu.check(&ck.spec, path)?;
    ck.rho.check(&ck.spec, path)?;
    Ok(BnnModel {
        spec: ck.spec,
        params: VariationalParams { mu: ck.mu.values, rho: ck.rho.values },
        normalizer: ck.normalizer,
        log: ck.log,
        config: ck.config,
    })
}

pub fn save_qr(path: &Path, model: &QrModel, config_hash: &str) -> Result<(), Error> {
    let ck = QrCheckpoint {
        format: QR_FORMAT.into(),
        config_hash: config_hash.into(),
        spec: model.spec.clone(),
        grid: model.grid.clone(),
        params: ParamVector::new(&model.spec, model.params.clone()),
        normalizer: model.normalizer.clone(),
        log: model.log.clone(),
        config: model.config.clone(),
    };
    write_json(path, &ck)
}

pub fn load_qr(path: &Path, config_hash: Option<&str>) -> Result<QrModel, Error> {
    let ck: QrCheckpoint = read_json(path)?;
    check_header(path, &ck.format, QR_FORMAT, &ck.config_hash, config_hash)?;
    ck.params.check(&ck.spec, path)?;
    if ck.grid.is_empty() || !ck.spec.output_dim.is_multiple_of(ck.grid.len()) {
        return Err(Error::format(path, "quantile grid does not divide the output layer"));
    }
    Ok(QrModel {
        spec: ck.spec,
        params: ck.params.values,
        grid: ck.grid,
        normalizer: ck.normalizer,
        log: ck.log,
        config: ck.config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use lvse_core::dataset::ColumnStats;
    use lvse_core::metrics::quantile_grid;
    use lvse_core::rng::seeded;

    fn normalizer() -> Normalizer {
        Normalizer {
            inputs: ColumnStats { mean: vec![0.1, -3.0], std: vec![1.5, 0.0] },
            targets: ColumnStats { mean: vec![0.98], std: vec![0.013] },
            degenerate_inputs: vec![1],
        }
    }

    #[test]
    fn bnn_round_trip_is_exact() {
        let spec = MlpSpec::new(2, &[3], 2);
        let mut rng = seeded(4);
        let params = VariationalParams::init(&spec, 0.05, 0.01, &mut rng);
        let model = BnnModel {
            spec,
            params,
            normalizer: normalizer(),
            log: TrainingLog::default(),
            config: BnnConfig::default(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bnn.json");
        save_bnn(&path, &model, "abc").unwrap();
        assert_eq!(load_bnn(&path, Some("abc")).unwrap(), model);
        assert!(matches!(load_bnn(&path, Some("xyz")), Err(Error::HashMismatch { .. })));
        assert!(load_qr(&path, None).is_err());
    }

    #[test]
    fn qr_round_trip_and_shape_check() {
        let grid = quantile_grid();
        let spec = MlpSpec::new(2, &[4], grid.len());
        let params = spec.init_params(&mut seeded(1));
        let model =
            QrModel { spec, params, grid, normalizer: normalizer(), log: TrainingLog::default(), config: QrConfig::default() };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("qr.json");
        save_qr(&path, &model, "h").unwrap();
        assert_eq!(load_qr(&path, None).unwrap(), model);

        let mut ck: QrCheckpoint = read_json(&path).unwrap();
        ck.params.values.pop();
        write_json(&path, &ck).unwrap();
        assert!(matches!(load_qr(&path, None), Err(Error::Format { .. })));
    }
}
