//! Mean-field variational Bayesian MLP with a heteroscedastic Gaussian head.
//!
//! The network outputs `2k` values per row: `k` predictive means followed by
//! `k` log-variances. Weights are drawn as `w = mu + softplus(rho) * eps`
//! and trained by Adam on the negative ELBO (Gaussian NLL plus the KL to a
//! standard normal prior, scaled by `kl_weight / n_train`).

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DatasetError, FeatureView, NormalizedSet, Normalizer};
use crate::nn::{backward, forward, Adam, MlpSpec, Tape};
use crate::rng::stream;
use crate::stats::{normal_quantile, sigmoid, softplus, softplus_inv};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BnnError {
    #[error("non-finite loss {loss} at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize, loss: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

// Stream ids inside a model seed.
const STREAM_INIT: u64 = 1;
const STREAM_TRAIN: u64 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationalParams {
    pub mu: Vec<f64>,
    pub rho: Vec<f64>,
}

impl VariationalParams {
    /// `mu` like a deterministic net, every `sigma = sigma0`, and the
    /// log-variance biases at `ln(s_bias_var)`.
    pub fn init<R: rand::Rng>(spec: &MlpSpec, sigma0: f64, s_bias_var: f64, rng: &mut R) -> Self {
        let mut mu = spec.init_params(rng);
        let k = spec.output_dim / 2;
        let last = *spec.layers().last().expect("at least one layer");
        for b in &mut mu[last.bias_offset + k..last.bias_offset + 2 * k] {
            *b = s_bias_var.ln();
        }
        let rho = vec![softplus_inv(sigma0); mu.len()];
        VariationalParams { mu, rho }
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn sigma(&self) -> Vec<f64> {
        self.rho.iter().map(|&r| softplus(r)).collect()
    }
}

/// `w = mu + softplus(rho) * noise`.
pub fn sample_weights(vp: &VariationalParams, noise: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; vp.len()];
    sample_weights_into(vp, noise, &mut w);
    w
}

fn sample_weights_into(vp: &VariationalParams, noise: &[f64], w: &mut [f64]) {
    assert_eq!(noise.len(), vp.len(), "noise length");
    for i in 0..w.len() {
        w[i] = vp.mu[i] + softplus(vp.rho[i]) * noise[i];
    }
}

/// KL(q || N(0, I)) of a factorized Gaussian.
pub fn kl_to_standard_normal(vp: &VariationalParams) -> f64 {
    vp.mu
        .iter()
        .zip(&vp.rho)
        .map(|(&m, &r)| {
            let s = softplus(r);
            0.5 * (m * m + s * s - 1.0 - 2.0 * s.ln())
        })
        .sum()
}

/// Gaussian negative log-likelihood (without the constant), averaged over
/// outputs, with the variance given as `s = ln(var)`.
pub fn nll_loss(y: &[f64], yhat: &[f64], s: &[f64]) -> f64 {
    let k = y.len();
    y.iter().zip(yhat).zip(s).map(|((y, m), s)| 0.5 * (-s).exp() * (y - m) * (y - m) + 0.5 * s).sum::<f64>() / k as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BnnConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    /// Stop after this many epochs without validation improvement.
    pub patience: Option<usize>,
    pub batch_size: usize,
    pub lr: f64,
    pub kl_weight: f64,
    pub init_sigma: f64,
    /// Initial predicted variance in normalized units.
    pub init_variance: f64,
    /// Leading epochs that fit the means only, with the variance head
    /// frozen; they are not eligible for model selection.
    pub mean_warmup_epochs: usize,
    /// Retrain on train + validation for the selected number of epochs.
    pub refit: bool,
    pub seed: u64,
}

impl Default for BnnConfig {
    fn default() -> Self {
        BnnConfig {
            hidden: vec![12, 12],
            epochs: 2000,
            patience: None,
            batch_size: 64,
            lr: 1e-3,
            kl_weight: 1.0,
            init_sigma: 0.05,
            init_variance: 0.01,
            mean_warmup_epochs: 0,
            refit: true,
            seed: 0,
        }
    }
}

impl BnnConfig {
    fn validate(&self) -> Result<(), BnnError> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(BnnError::InvalidConfig("epochs and batch_size must be positive"));
        }
        if !(self.lr > 0.0 && self.init_sigma > 0.0 && self.init_variance > 0.0 && self.kl_weight >= 0.0) {
            return Err(BnnError::InvalidConfig("non-positive rate or scale"));
        }
        if self.hidden.contains(&0) {
            return Err(BnnError::InvalidConfig("hidden widths must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// NLL at the posterior means; NaN without validation rows.
    pub val_loss: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    /// Zero-based epoch whose parameters were kept.
    pub best_epoch: usize,
    /// Epochs of the train + validation refit, if one ran.
    pub refit_epochs: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BnnModel {
    pub spec: MlpSpec,
    pub params: VariationalParams,
    pub normalizer: Normalizer,
    pub log: TrainingLog,
    pub config: BnnConfig,
}

/// Negative ELBO of one batch under frozen noise and its gradients with
/// respect to `mu` and `rho` (added to `grad_mu` / `grad_rho`).
#[allow(clippy::too_many_arguments)]
pub fn elbo_loss_and_grad(
    spec: &MlpSpec,
    vp: &VariationalParams,
    noise: &[f64],
    x: &[f64],
    y: &[f64],
    rows: usize,
    kl_scale: f64,
    grad_mu: &mut [f64],
    grad_rho: &mut [f64],
) -> f64 {
    let mut ws = Workspace::new(vp.len());
    ws.elbo(spec, vp, noise, x, y, rows, kl_scale, grad_mu, grad_rho)
}

struct Workspace {
    /// Ignore the variance head and fit the means with unit variance.
    unit_variance: bool,
    w: Vec<f64>,
    gw: Vec<f64>,
    grad_out: Vec<f64>,
    tape: Tape,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace { unit_variance: false, w: vec![0.0; n], gw: vec![0.0; n], grad_out: Vec::new(), tape: Tape::default() }
    }

    #[allow(clippy::too_many_arguments)]
    fn elbo(
        &mut self,
        spec: &MlpSpec,
        vp: &VariationalParams,
        noise: &[f64],
        x: &[f64],
        y: &[f64],
        rows: usize,
        kl_scale: f64,
        grad_mu: &mut [f64],
        grad_rho: &mut [f64],
    ) -> f64 {
        let k = spec.output_dim / 2;
        sample_weights_into(vp, noise, &mut self.w);
        let out = forward(spec, &self.w, x, rows, &mut self.tape);
        self.grad_out.clear();
        self.grad_out.resize(rows * 2 * k, 0.0);
        let scale = 1.0 / (rows * k) as f64;
        let mut data = 0.0;
        for r in 0..rows {
            let o = &out[r * 2 * k..(r + 1) * 2 * k];
            let g = &mut self.grad_out[r * 2 * k..(r + 1) * 2 * k];
            for j in 0..k {
                let e = y[r * k + j] - o[j];
                if self.unit_variance {
                    data += 0.5 * e * e;
                    g[j] = -scale * e;
                    continue;
                }
                let s = o[k + j];
                let inv = (-s).exp();
                data += 0.5 * inv * e * e + 0.5 * s;
                g[j] = -scale * inv * e;
                g[k + j] = scale * 0.5 * (1.0 - inv * e * e);
            }
        }
        self.gw.iter_mut().for_each(|g| *g = 0.0);
        backward(spec, &self.w, &mut self.tape, &self.grad_out, &mut self.gw);
        let mut kl = 0.0;
        for i in 0..vp.len() {
            let (m, r) = (vp.mu[i], vp.rho[i]);
            let sigma = softplus(r);
            kl += 0.5 * (m * m + sigma * sigma - 1.0 - 2.0 * sigma.ln());
            grad_mu[i] += self.gw[i] + kl_scale * m;
            grad_rho[i] += (self.gw[i] * noise[i] + kl_scale * (sigma - 1.0 / sigma)) * sigmoid(r);
        }
        data * scale + kl_scale * kl
    }
}

/// Mean NLL of `set` using the posterior-mean weights.
pub fn mean_weight_nll(spec: &MlpSpec, mu: &[f64], set: &NormalizedSet) -> f64 {
    let k = set.output_dim;
    let rows = set.rows();
    if rows == 0 {
        return f64::NAN;
    }
    let mut tape = Tape::default();
    let out = forward(spec, mu, &set.x, rows, &mut tape);
    let mut total = 0.0;
    for r in 0..rows {
        let o = &out[r * 2 * k..(r + 1) * 2 * k];
        total += nll_loss(set.y_row(r), &o[..k], &o[k..]);
    }
    total / rows as f64
}

struct Run {
    params: VariationalParams,
    log: Vec<EpochRecord>,
    best_epoch: usize,
}

fn run_training(
    spec: &MlpSpec,
    train: &NormalizedSet,
    val: Option<&NormalizedSet>,
    cfg: &BnnConfig,
    epochs: usize,
) -> Result<Run, BnnError> {
    let n = train.rows();
    let p = spec.param_count();
    let mut init_rng = stream(cfg.seed, STREAM_INIT);
    let mut vp = VariationalParams::init(spec, cfg.init_sigma, cfg.init_variance, &mut init_rng);
    let mut rng = stream(cfg.seed, STREAM_TRAIN);
    let mut adam = Adam::new(2 * p, cfg.lr);
    let mut theta = vec![0.0; 2 * p];
    let mut grads = vec![0.0; 2 * p];
    let mut noise = vec![0.0; p];
    let mut ws = Workspace::new(p);
    let (d, k) = (train.input_dim, train.output_dim);
    let mut xb = Vec::with_capacity(cfg.batch_size * d);
    let mut yb = Vec::with_capacity(cfg.batch_size * k);
    let kl_scale = cfg.kl_weight / n as f64;
    let mut order: Vec<usize> = (0..n).collect();
    let mut log = Vec::with_capacity(epochs);
    let mut best: Option<(f64, usize, VariationalParams)> = None;

    for epoch in 0..epochs {
        order.shuffle(&mut rng);
        ws.unit_variance = epoch < cfg.mean_warmup_epochs;
        let mut epoch_loss = 0.0;
        let mut batches = 0;
        for (bi, chunk) in order.chunks(cfg.batch_size).enumerate() {
            xb.clear();
            yb.clear();
            for &i in chunk {
                xb.extend_from_slice(train.x_row(i));
                yb.extend_from_slice(train.y_row(i));
            }
            for e in noise.iter_mut() {
                *e = rng.sample(StandardNormal);
            }
            grads.iter_mut().for_each(|g| *g = 0.0);
            let (gm, gr) = grads.split_at_mut(p);
            let loss = ws.elbo(spec, &vp, &noise, &xb, &yb, chunk.len(), kl_scale, gm, gr);
            if !loss.is_finite() || gm.iter().chain(gr.iter()).any(|g| !g.is_finite()) {
                return Err(BnnError::NonFiniteLoss { epoch, batch: bi, loss });
            }
            epoch_loss += loss;
            batches += 1;
            theta[..p].copy_from_slice(&vp.mu);
            theta[p..].copy_from_slice(&vp.rho);
            adam.step(&mut theta, &grads);
            vp.mu.copy_from_slice(&theta[..p]);
            vp.rho.copy_from_slice(&theta[p..]);
        }
        let val_loss = val.map_or(f64::NAN, |v| mean_weight_nll(spec, &vp.mu, v));
        log.push(EpochRecord { epoch, train_loss: epoch_loss / batches as f64, val_loss });
        if val.is_some() && !ws.unit_variance {
            if !val_loss.is_finite() {
                return Err(BnnError::NonFiniteLoss { epoch, batch: batches, loss: val_loss });
            }
            let improved = best.as_ref().is_none_or(|b| val_loss < b.0);
            if improved {
                best = Some((val_loss, epoch, vp.clone()));
            } else if let (Some(pat), Some(b)) = (cfg.patience, best.as_ref()) {
                if epoch - b.1 >= pat {
                    break;
                }
            }
        }
    }
    Ok(match best {
        Some((_, best_epoch, params)) => Run { params, log, best_epoch },
        None => Run { best_epoch: log.len() - 1, params: vp, log },
    })
}

impl BnnModel {
    /// Trains on normalized data. Model selection keeps the epoch with the
    /// lowest validation NLL; with `refit`, a fresh model is then trained on
    /// train + validation for that many epochs.
    pub fn train(
        train: &NormalizedSet,
        val: &NormalizedSet,
        normalizer: Normalizer,
        cfg: &BnnConfig,
    ) -> Result<Self, BnnError> {
        cfg.validate()?;
        if train.rows() == 0 {
            return Err(BnnError::Dataset(DatasetError::TooFewSamples(0)));
        }
        if normalizer.input_dim() != train.input_dim || normalizer.output_dim() != train.output_dim {
            return Err(BnnError::DimensionMismatch { expected: normalizer.input_dim(), got: train.input_dim });
        }
        let spec = MlpSpec::new(train.input_dim, &cfg.hidden, 2 * train.output_dim);
        let val = (val.rows() > 0).then_some(val);
        let run = run_training(&spec, train, val, cfg, cfg.epochs)?;
        let mut log = TrainingLog { epochs: run.log, best_epoch: run.best_epoch, refit_epochs: None };
        let params = if let Some(v) = val.filter(|_| cfg.refit) {
            let all = NormalizedSet::concat(train, v);
            let epochs = run.best_epoch + 1;
            let refit = run_training(&spec, &all, None, cfg, epochs)?;
            log.refit_epochs = Some(epochs);
            refit.params
        } else {
            run.params
        };
        Ok(BnnModel { spec, params, normalizer, log, config: cfg.clone() })
    }

    /// Fits the normalizer on `train` and trains.
    pub fn fit(train: &FeatureView<'_>, val: &FeatureView<'_>, cfg: &BnnConfig) -> Result<Self, BnnError> {
        let normalizer = Normalizer::fit(train)?;
        let tr = normalizer.normalize(train)?;
        let va = normalizer.normalize(val)?;
        Self::train(&tr, &va, normalizer, cfg)
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim / 2
    }

    /// Monte-Carlo predictive summary of raw (unnormalized) inputs, in
    /// target units.
    pub fn predict(&self, x: &[f64], n_sample: usize, alpha: f64, seed: u64) -> Result<PredictiveSummary, BnnError> {
        let d = self.input_dim();
        if !x.len().is_multiple_of(d) {
            return Err(BnnError::DimensionMismatch { expected: d, got: x.len() % d });
        }
        if n_sample < 2 {
            return Err(BnnError::InvalidConfig("n_sample must be at least 2"));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(BnnError::InvalidConfig("alpha outside (0, 1)"));
        }
        let rows = x.len() / d;
        let k = self.output_dim();
        let xn = self.normalizer.normalize_inputs(x);
        let mut acc = MomentAccumulator::new(rows * k);
        let mut rng = stream(seed, 0);
        let mut noise = vec![0.0; self.params.len()];
        let mut w = vec![0.0; self.params.len()];
        let mut tape = Tape::default();
        let mut means = vec![0.0; rows * k];
        let mut vars = vec![0.0; rows * k];
        for _ in 0..n_sample {
            for e in noise.iter_mut() {
                *e = rng.sample(StandardNormal);
            }
            sample_weights_into(&self.params, &noise, &mut w);
            let out = forward(&self.spec, &w, &xn, rows, &mut tape);
            for r in 0..rows {
                let o = &out[r * 2 * k..(r + 1) * 2 * k];
                means[r * k..(r + 1) * k].copy_from_slice(&o[..k]);
                for j in 0..k {
                    vars[r * k + j] = o[k + j].exp();
                }
            }
            acc.push(&means, &vars);
        }
        let (mean_n, epistemic_n, aleatoric_n) = acc.finish();
        let mean = self.normalizer.denormalize_targets(&mean_n);
        let scale2: Vec<f64> = self.normalizer.targets.std.iter().map(|s| s * s).collect();
        let rescale = |v: Vec<f64>| -> Vec<f64> { v.iter().enumerate().map(|(i, x)| x * scale2[i % k]).collect() };
        Ok(PredictiveSummary::new(rows, k, mean, rescale(epistemic_n), rescale(aleatoric_n), alpha, n_sample))
    }
}

/// Streaming per-output moments across stochastic passes. Deviations are
/// taken from the first pass so identical passes give exactly zero spread.
#[derive(Clone, Debug)]
pub struct MomentAccumulator {
    n: usize,
    shift: Vec<f64>,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    var_sum: Vec<f64>,
}

impl MomentAccumulator {
    pub fn new(len: usize) -> Self {
        MomentAccumulator {
            n: 0,
            shift: vec![0.0; len],
            sum: vec![0.0; len],
            sum_sq: vec![0.0; len],
            var_sum: vec![0.0; len],
        }
    }

    pub fn push(&mut self, means: &[f64], vars: &[f64]) {
        if self.n == 0 {
            self.shift.copy_from_slice(means);
        }
        for i in 0..self.shift.len() {
            let d = means[i] - self.shift[i];
            self.sum[i] += d;
            self.sum_sq[i] += d * d;
            self.var_sum[i] += vars[i];
        }
        self.n += 1;
    }

    pub fn passes(&self) -> usize {
        self.n
    }

    /// `(mean, epistemic, aleatoric)`: the average predicted mean, the
    /// spread of predicted means across passes and the average predicted
    /// variance.
    pub fn finish(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.n as f64;
        let mut mean = Vec::with_capacity(self.shift.len());
        let mut epi = Vec::with_capacity(self.shift.len());
        let mut ale = Vec::with_capacity(self.shift.len());
        for i in 0..self.shift.len() {
            let m = self.sum[i] / n;
            mean.push(self.shift[i] + m);
            epi.push((self.sum_sq[i] / n - m * m).max(0.0));
            ale.push(self.var_sum[i] / n);
        }
        (mean, epi, ale)
    }
}

/// Epistemic and aleatoric variance from per-pass means and variances
/// (`passes x outputs`, each inner slice one pass).
pub fn decompose(means: &[Vec<f64>], vars: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    assert!(!means.is_empty() && means.len() == vars.len(), "need matching passes");
    let mut acc = MomentAccumulator::new(means[0].len());
    for (m, v) in means.iter().zip(vars) {
        acc.push(m, v);
    }
    let (_, e, a) = acc.finish();
    (e, a)
}

/// Per-row, per-output predictive distribution summary (row-major).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictiveSummary {
    pub rows: usize,
    pub outputs: usize,
    pub mean: Vec<f64>,
    pub epistemic: Vec<f64>,
    pub aleatoric: Vec<f64>,
    pub total: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub alpha: f64,
    pub n_sample: usize,
}

impl PredictiveSummary {
    /// Gaussian interval `mean ± z(1 - alpha/2) * sqrt(total)`.
    pub fn new(
        rows: usize,
        outputs: usize,
        mean: Vec<f64>,
        epistemic: Vec<f64>,
        aleatoric: Vec<f64>,
        alpha: f64,
        n_sample: usize,
    ) -> Self {
        let total: Vec<f64> = epistemic.iter().zip(&aleatoric).map(|(e, a)| e + a).collect();
        let z = normal_quantile(1.0 - alpha / 2.0);
        let lower = mean.iter().zip(&total).map(|(m, t)| m - z * t.sqrt()).collect();
        let upper = mean.iter().zip(&total).map(|(m, t)| m + z * t.sqrt()).collect();
        PredictiveSummary { rows, outputs, mean, epistemic, aleatoric, total, lower, upper, alpha, n_sample }
    }

    /// Gaussian quantile `mean + Phi^-1(q) * sqrt(total)` per entry.
    pub fn quantile(&self, q: f64) -> Vec<f64> {
        assert!(q > 0.0 && q < 1.0, "quantile level outside (0, 1)");
        if q == 0.5 {
            return self.mean.clone();
        }
        let z = normal_quantile(q);
        self.mean.iter().zip(&self.total).map(|(m, t)| m + z * t.sqrt()).collect()
    }

    /// Column `j` of a row-major field.
    pub fn column(field: &[f64], outputs: usize, j: usize) -> Vec<f64> {
        field.iter().skip(j).step_by(outputs).copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn reparameterization_centre_and_collapse() {
        let vp = VariationalParams { mu: vec![0.3, -1.0], rho: vec![0.2, -0.4] };
        assert_eq!(sample_weights(&vp, &[0.0, 0.0]), vp.mu);
        let collapsed = VariationalParams { mu: vec![0.3, -1.0], rho: vec![-800.0, -800.0] };
        assert_eq!(sample_weights(&collapsed, &[2.5, -7.0]), collapsed.mu);
    }

    #[test]
    fn sample_mean_converges() {
        let vp = VariationalParams { mu: vec![0.5, -2.0, 0.0], rho: vec![0.0, -1.0, 1.5] };
        let sigma = vp.sigma();
        let n = 100_000;
        let mut rng = seeded(3);
        let mut sum = [0.0; 3];
        for _ in 0..n {
            let eps: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
            for (s, w) in sum.iter_mut().zip(sample_weights(&vp, &eps)) {
                *s += w;
            }
        }
        for i in 0..3 {
            assert!((sum[i] / n as f64 - vp.mu[i]).abs() <= 3.0 * sigma[i] / (n as f64).sqrt());
        }
    }

    #[test]
    fn kl_closed_form_cases() {
        let one = softplus_inv(1.0);
        let prior = VariationalParams { mu: vec![0.0; 4], rho: vec![one; 4] };
        assert!(kl_to_standard_normal(&prior).abs() < 1e-14);
        let single = VariationalParams { mu: vec![1.0], rho: vec![one] };
        assert!((kl_to_standard_normal(&single) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn nll_cases() {
        assert_eq!(nll_loss(&[1.0], &[1.0], &[0.0]), 0.0);
        assert_eq!(nll_loss(&[1.0], &[0.0], &[0.0]), 0.5);
        assert!((nll_loss(&[2.0], &[0.0], &[2f64.ln()]) - 1.3465735902799727).abs() < 1e-12);
    }

    #[test]
    fn decomposition_hand_case() {
        let (e, a) = decompose(&[vec![1.0], vec![3.0]], &[vec![0.5], vec![1.5]]);
        assert_eq!(e, vec![1.0]);
        assert_eq!(a, vec![1.0]);
        let s = PredictiveSummary::new(1, 1, vec![2.0], e, a, 0.1, 2);
        assert_eq!(s.total, vec![2.0]);
        let (e, a) = decompose(&vec![vec![0.7, 0.1]; 5], &vec![vec![0.0, 0.0]; 5]);
        assert_eq!(e, vec![0.0, 0.0]);
        assert_eq!(a, vec![0.0, 0.0]);
    }

    #[test]
    fn interval_and_quantiles() {
        let s = PredictiveSummary::new(1, 1, vec![1.0], vec![0.004], vec![0.006], 0.1, 500);
        assert!((s.upper[0] - 1.0 - 1.6448536269514722 * 0.1).abs() < 1e-12);
        assert!((1.0 - s.lower[0] - 1.6448536269514722 * 0.1).abs() < 1e-12);
        let q = PredictiveSummary::new(1, 1, vec![1.0], vec![0.0], vec![0.0004], 0.1, 500);
        assert_eq!(q.quantile(0.5), vec![1.0]);
        assert!((q.quantile(0.95)[0] - 1.0328970725390294).abs() < 1e-12);
        let sum = q.quantile(0.2)[0] + q.quantile(0.8)[0];
        assert!((sum - 2.0).abs() < 1e-12);
    }

    #[test]
    fn predict_matches_decompose() {
        // identical weights on every pass: zero epistemic spread
        let spec = MlpSpec::new(2, &[3], 2);
        let mut rng = seeded(9);
        let mut vp = VariationalParams::init(&spec, 0.05, 0.01, &mut rng);
        vp.rho.iter_mut().for_each(|r| *r = -1e4);
        let mut fm_norm = dummy_normalizer(2, 1);
        fm_norm.targets.std = vec![2.0];
        let model = BnnModel {
            spec,
            params: vp,
            normalizer: fm_norm,
            log: TrainingLog::default(),
            config: BnnConfig::default(),
        };
        let s = model.predict(&[0.1, 0.2, -1.0, 3.0], 20, 0.1, 1).unwrap();
        assert_eq!(s.epistemic, vec![0.0, 0.0]);
        for i in 0..2 {
            assert_eq!(s.total[i], s.epistemic[i] + s.aleatoric[i]);
            assert!(s.lower[i] <= s.mean[i] && s.mean[i] <= s.upper[i]);
        }
        assert!(matches!(model.predict(&[0.1, 0.2, 0.3], 20, 0.1, 1), Err(BnnError::DimensionMismatch { .. })));
    }

    fn dummy_normalizer(d: usize, k: usize) -> Normalizer {
        use crate::dataset::ColumnStats;
        Normalizer {
            inputs: ColumnStats { mean: vec![0.0; d], std: vec![1.0; d] },
            targets: ColumnStats { mean: vec![0.0; k], std: vec![1.0; k] },
            degenerate_inputs: Vec::new(),
        }
    }
}
