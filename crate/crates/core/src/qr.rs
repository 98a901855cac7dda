//! Multi-quantile regression MLP trained on the pinball loss.
//!
//! Same trunk as the Bayesian model; the head has one output per
//! `(target, quantile)` pair, grouped by target. Predictions are sorted per
//! target so quantiles never cross.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bnn::{EpochRecord, TrainingLog};
use crate::dataset::{DatasetError, FeatureView, NormalizedSet, Normalizer};
use crate::metrics::quantile_grid;
use crate::nn::{backward, forward, Adam, MlpSpec, Tape};
use crate::rng::stream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QrError {
    #[error("non-finite loss {loss} at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize, loss: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

const STREAM_INIT: u64 = 1;
const STREAM_TRAIN: u64 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QrConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub patience: Option<usize>,
    pub batch_size: usize,
    pub lr: f64,
    pub refit: bool,
    pub seed: u64,
}

impl Default for QrConfig {
    fn default() -> Self {
        QrConfig { hidden: vec![12, 12], epochs: 2000, patience: None, batch_size: 64, lr: 1e-3, refit: true, seed: 0 }
    }
}

impl QrConfig {
    fn validate(&self) -> Result<(), QrError> {
        if self.epochs == 0 || self.batch_size == 0 || !(self.lr > 0.0) {
            return Err(QrError::InvalidConfig("epochs, batch_size and lr must be positive"));
        }
        if self.hidden.contains(&0) {
            return Err(QrError::InvalidConfig("hidden widths must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QrModel {
    pub spec: MlpSpec,
    pub params: Vec<f64>,
    pub grid: Vec<f64>,
    pub normalizer: Normalizer,
    pub log: TrainingLog,
    pub config: QrConfig,
}

/// Mean pinball loss over rows, targets and quantiles of raw head outputs
/// `out` (`rows x (k * grid)`), optionally writing `d loss / d out`.
fn pinball_batch(out: &[f64], y: &[f64], k: usize, grid: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
    let nq = grid.len();
    let rows = y.len() / k;
    let scale = 1.0 / (rows * k * nq) as f64;
    let mut total = 0.0;
    for r in 0..rows {
        for j in 0..k {
            let target = y[r * k + j];
            let base = r * k * nq + j * nq;
            for (qi, &q) in grid.iter().enumerate() {
                let e = target - out[base + qi];
                let (loss, d) = if e >= 0.0 { (q * e, -q) } else { ((q - 1.0) * e, 1.0 - q) };
                total += loss;
                if let Some(g) = grad.as_deref_mut() {
                    g[base + qi] = scale * d;
                }
            }
        }
    }
    total * scale
}

/// Mean pinball loss of `set` (normalized units).
pub fn dataset_pinball(spec: &MlpSpec, params: &[f64], grid: &[f64], set: &NormalizedSet) -> f64 {
    if set.rows() == 0 {
        return f64::NAN;
    }
    let mut tape = Tape::default();
    let out = forward(spec, params, &set.x, set.rows(), &mut tape);
    pinball_batch(out, &set.y, set.output_dim, grid, None)
}

struct Run {
    params: Vec<f64>,
    log: Vec<EpochRecord>,
    best_epoch: usize,
}

fn run_training(
    spec: &MlpSpec,
    grid: &[f64],
    train: &NormalizedSet,
    val: Option<&NormalizedSet>,
    cfg: &QrConfig,
    epochs: usize,
) -> Result<Run, QrError> {
    let n = train.rows();
    let (d, k) = (train.input_dim, train.output_dim);
    let mut params = spec.init_params(&mut stream(cfg.seed, STREAM_INIT));
    let mut rng = stream(cfg.seed, STREAM_TRAIN);
    let mut adam = Adam::new(params.len(), cfg.lr);
    let mut grads = vec![0.0; params.len()];
    let mut grad_out = Vec::new();
    let mut tape = Tape::default();
    let mut xb = Vec::with_capacity(cfg.batch_size * d);
    let mut yb = Vec::with_capacity(cfg.batch_size * k);
    let mut order: Vec<usize> = (0..n).collect();
    let mut log = Vec::with_capacity(epochs);
    let mut best: Option<(f64, usize, Vec<f64>)> = None;

    for epoch in 0..epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0;
        for (bi, chunk) in order.chunks(cfg.batch_size).enumerate() {
            xb.clear();
            yb.clear();
            for &i in chunk {
                xb.extend_from_slice(train.x_row(i));
                yb.extend_from_slice(train.y_row(i));
            }
            let out = forward(spec, &params, &xb, chunk.len(), &mut tape);
            grad_out.clear();
            grad_out.resize(out.len(), 0.0);
            let loss = pinball_batch(out, &yb, k, grid, Some(&mut grad_out));
            if !loss.is_finite() {
                return Err(QrError::NonFiniteLoss { epoch, batch: bi, loss });
            }
            grads.iter_mut().for_each(|g| *g = 0.0);
            backward(spec, &params, &mut tape, &grad_out, &mut grads);
            adam.step(&mut params, &grads);
            epoch_loss += loss;
            batches += 1;
        }
        let val_loss = val.map_or(f64::NAN, |v| dataset_pinball(spec, &params, grid, v));
        log.push(EpochRecord { epoch, train_loss: epoch_loss / batches as f64, val_loss });
        if val.is_some() {
            if !val_loss.is_finite() {
                return Err(QrError::NonFiniteLoss { epoch, batch: batches, loss: val_loss });
            }
            if best.as_ref().is_none_or(|b| val_loss < b.0) {
                best = Some((val_loss, epoch, params.clone()));
            } else if let (Some(pat), Some(b)) = (cfg.patience, best.as_ref()) {
                if epoch - b.1 >= pat {
                    break;
                }
            }
        }
    }
    Ok(match best {
        Some((_, best_epoch, params)) => Run { params, log, best_epoch },
        None => Run { best_epoch: log.len() - 1, params, log },
    })
}

impl QrModel {
    /// Trains on normalized data with the same validation-based selection
    /// and optional refit as the Bayesian model.
    pub fn train(
        train: &NormalizedSet,
        val: &NormalizedSet,
        normalizer: Normalizer,
        cfg: &QrConfig,
    ) -> Result<Self, QrError> {
        cfg.validate()?;
        if train.rows() == 0 {
            return Err(QrError::Dataset(DatasetError::TooFewSamples(0)));
        }
        if normalizer.input_dim() != train.input_dim || normalizer.output_dim() != train.output_dim {
            return Err(QrError::DimensionMismatch { expected: normalizer.input_dim(), got: train.input_dim });
        }
        let grid = quantile_grid();
        let spec = MlpSpec::new(train.input_dim, &cfg.hidden, train.output_dim * grid.len());
        let val = (val.rows() > 0).then_some(val);
        let run = run_training(&spec, &grid, train, val, cfg, cfg.epochs)?;
        let mut log = TrainingLog { epochs: run.log, best_epoch: run.best_epoch, refit_epochs: None };
        let params = if let Some(v) = val.filter(|_| cfg.refit) {
            let all = NormalizedSet::concat(train, v);
            let epochs = run.best_epoch + 1;
            log.refit_epochs = Some(epochs);
            run_training(&spec, &grid, &all, None, cfg, epochs)?.params
        } else {
            run.params
        };
        Ok(QrModel { spec, params, grid, normalizer, log, config: cfg.clone() })
    }

    pub fn fit(train: &FeatureView<'_>, val: &FeatureView<'_>, cfg: &QrConfig) -> Result<Self, QrError> {
        let normalizer = Normalizer::fit(train)?;
        let tr = normalizer.normalize(train)?;
        let va = normalizer.normalize(val)?;
        Self::train(&tr, &va, normalizer, cfg)
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim / self.grid.len()
    }

    /// Sorted quantiles of raw inputs, in target units.
    pub fn predict_quantiles(&self, x: &[f64]) -> Result<QuantilePrediction, QrError> {
        let d = self.input_dim();
        if !x.len().is_multiple_of(d) {
            return Err(QrError::DimensionMismatch { expected: d, got: x.len() % d });
        }
        let rows = x.len() / d;
        let k = self.output_dim();
        let nq = self.grid.len();
        let xn = self.normalizer.normalize_inputs(x);
        let mut tape = Tape::default();
        let mut values = forward(&self.spec, &self.params, &xn, rows, &mut tape).to_vec();
        for (i, block) in values.chunks_mut(nq).enumerate() {
            let j = i % k;
            let (m, s) = (self.normalizer.targets.mean[j], self.normalizer.targets.std[j]);
            block.sort_by(f64::total_cmp);
            for v in block.iter_mut() {
                *v = *v * s + m;
            }
        }
        Ok(QuantilePrediction { rows, outputs: k, grid: self.grid.clone(), values })
    }
}

/// `rows x outputs x grid` quantile values, non-decreasing along the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantilePrediction {
    pub rows: usize,
    pub outputs: usize,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl QuantilePrediction {
    pub fn quantiles(&self, row: usize, output: usize) -> &[f64] {
        let nq = self.grid.len();
        let base = (row * self.outputs + output) * nq;
        &self.values[base..base + nq]
    }

    /// Index of level `q` on the grid.
    pub fn level_index(&self, q: f64) -> Option<usize> {
        self.grid.iter().position(|&g| (g - q).abs() < 1e-9)
    }

    /// Row-major `rows x outputs` values at level `q`.
    pub fn at_level(&self, q: f64) -> Vec<f64> {
        let qi = self.level_index(q).expect("level on the grid");
        self.values.iter().skip(qi).step_by(self.grid.len()).copied().collect()
    }

    /// Median.
    pub fn point(&self) -> Vec<f64> {
        self.at_level(0.5)
    }

    /// Central interval at `1 - alpha` from the grid levels `alpha/2` and
    /// `1 - alpha/2`.
    pub fn interval(&self, alpha: f64) -> (Vec<f64>, Vec<f64>) {
        (self.at_level(alpha / 2.0), self.at_level(1.0 - alpha / 2.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ColumnStats;

    fn norm(d: usize, k: usize) -> Normalizer {
        Normalizer {
            inputs: ColumnStats { mean: vec![0.0; d], std: vec![1.0; d] },
            targets: ColumnStats { mean: vec![0.0; k], std: vec![1.0; k] },
            degenerate_inputs: Vec::new(),
        }
    }

    #[test]
    fn pinball_gradient_signs() {
        let grid = [0.1, 0.9];
        let mut g = [0.0; 2];
        let loss = pinball_batch(&[0.0, 0.0], &[1.0], 1, &grid, Some(&mut g));
        assert!((loss - 0.5).abs() < 1e-15);
        assert_eq!(g, [-0.05, -0.45]);
    }

    #[test]
    fn predictions_sorted_and_median_is_point() {
        let grid = quantile_grid();
        let spec = MlpSpec::new(3, &[5], 2 * grid.len());
        let params = spec.init_params(&mut crate::rng::seeded(2));
        let model = QrModel {
            spec,
            params,
            grid,
            normalizer: norm(3, 2),
            log: TrainingLog::default(),
            config: QrConfig::default(),
        };
        let x = [0.3, -1.0, 2.0, 1.0, 1.0, -0.5];
        let p = model.predict_quantiles(&x).unwrap();
        for r in 0..2 {
            for j in 0..2 {
                let q = p.quantiles(r, j);
                assert!(q.windows(2).all(|w| w[0] <= w[1]));
                assert_eq!(p.point()[r * 2 + j], q[49]);
                let (lo, hi) = p.interval(0.1);
                assert_eq!((lo[r * 2 + j], hi[r * 2 + j]), (q[4], q[94]));
            }
        }
        assert!(matches!(model.predict_quantiles(&x[..4]), Err(QrError::DimensionMismatch { .. })));
    }
}
