//! Feature matrices for the three observability tiers, chronological
//! splits and z-score normalization.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{GroundTruth, NetworkModel};
use crate::synth::ScenarioDataset;
use crate::time::{Timestamp, MINUTES_PER_DAY, STEPS_PER_DAY};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("inputs are not time-aligned: {0}")]
    Alignment(String),
    #[error("need at least 10 samples to split, got {0}")]
    TooFewSamples(usize),
    #[error("invalid split fractions")]
    InvalidSplit,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Observability tier. Each tier adds columns to the previous one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FeatureSetId {
    /// Day-old smart-meter data, weather, calendar and retail price.
    FS1,
    /// FS1 plus real-time primary-substation P, Q.
    FS2,
    /// FS2 plus real-time secondary-substation P, Q and voltage.
    FS3,
}

impl FeatureSetId {
    pub const ALL: [FeatureSetId; 3] = [FeatureSetId::FS1, FeatureSetId::FS2, FeatureSetId::FS3];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSetId::FS1 => "FS1",
            FeatureSetId::FS2 => "FS2",
            FeatureSetId::FS3 => "FS3",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|id| id.as_str().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for FeatureSetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where an input column comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    LaggedSmartMeter,
    Weather,
    Calendar,
    Price,
    PrimarySubstation,
    SecondarySubstation,
    /// Caller-supplied columns (toy problems, tests).
    External,
}

impl Provenance {
    /// Measured inside the network at the estimation timestep.
    pub fn is_realtime_network(self) -> bool {
        matches!(self, Provenance::PrimarySubstation | Provenance::SecondarySubstation)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub provenance: Provenance,
    /// How old the value is at the estimation timestep.
    pub lag_minutes: u32,
}

impl Column {
    fn new(name: impl Into<String>, provenance: Provenance, lag_minutes: u32) -> Self {
        Column { name: name.into(), provenance, lag_minutes }
    }
}

/// Row-major inputs and targets with per-row timestamps and an activation
/// annotation (flexibility active in the estimated feeder) that is not an
/// input.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    columns: Vec<Column>,
    target_names: Vec<String>,
    inputs: Vec<f64>,
    targets: Vec<f64>,
    timestamps: Vec<Timestamp>,
    activation: Vec<bool>,
}

impl FeatureMatrix {
    pub fn new(
        columns: Vec<Column>,
        target_names: Vec<String>,
        inputs: Vec<f64>,
        targets: Vec<f64>,
        timestamps: Vec<Timestamp>,
        activation: Option<Vec<bool>>,
    ) -> Result<Self, DatasetError> {
        let n = timestamps.len();
        let (d, k) = (columns.len(), target_names.len());
        if d == 0 || k == 0 || inputs.len() != n * d || targets.len() != n * k {
            return Err(DatasetError::DimensionMismatch(format!(
                "{n} rows, {d} inputs, {k} targets vs {} / {} values",
                inputs.len(),
                targets.len()
            )));
        }
        if inputs.iter().chain(&targets).any(|v| !v.is_finite()) {
            return Err(DatasetError::DimensionMismatch("non-finite entry".into()));
        }
        let activation = activation.unwrap_or_else(|| alloc::vec![false; n]);
        if activation.len() != n {
            return Err(DatasetError::DimensionMismatch("activation length".into()));
        }
        Ok(FeatureMatrix { columns, target_names, inputs, targets, timestamps, activation })
    }

    pub fn rows(&self) -> usize {
        self.timestamps.len()
    }

    pub fn input_dim(&self) -> usize {
        self.columns.len()
    }

    pub fn output_dim(&self) -> usize {
        self.target_names.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn target_names(&self) -> &[String] {
        &self.target_names
    }

    pub fn timestamps(&self) -> &[Timestamp] {
        &self.timestamps
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn activation(&self) -> &[bool] {
        &self.activation
    }

    pub fn view(&self, rows: Range<usize>) -> FeatureView<'_> {
        assert!(rows.end <= self.rows(), "view out of range");
        FeatureView { fm: self, rows }
    }

    pub fn all(&self) -> FeatureView<'_> {
        self.view(0..self.rows())
    }

    pub fn split(&self, spec: &SplitSpec) -> Result<(FeatureView<'_>, FeatureView<'_>, FeatureView<'_>), DatasetError> {
        let s = split(self.rows(), spec)?;
        Ok((self.view(s.train), self.view(s.val), self.view(s.test)))
    }
}

/// Borrowed contiguous row range of a [`FeatureMatrix`].
#[derive(Clone, Debug)]
pub struct FeatureView<'a> {
    fm: &'a FeatureMatrix,
    rows: Range<usize>,
}

impl<'a> FeatureView<'a> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn range(&self) -> Range<usize> {
        self.rows.clone()
    }

    pub fn matrix(&self) -> &'a FeatureMatrix {
        self.fm
    }

    pub fn input_dim(&self) -> usize {
        self.fm.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.fm.output_dim()
    }

    pub fn inputs(&self) -> &'a [f64] {
        let d = self.fm.input_dim();
        &self.fm.inputs[self.rows.start * d..self.rows.end * d]
    }

    pub fn targets(&self) -> &'a [f64] {
        let k = self.fm.output_dim();
        &self.fm.targets[self.rows.start * k..self.rows.end * k]
    }

    pub fn timestamps(&self) -> &'a [Timestamp] {
        &self.fm.timestamps[self.rows.clone()]
    }

    pub fn activation(&self) -> &'a [bool] {
        &self.fm.activation[self.rows.clone()]
    }

    /// Sub-range relative to this view.
    pub fn slice(&self, rows: Range<usize>) -> FeatureView<'a> {
        assert!(rows.end <= self.len(), "slice out of range");
        FeatureView { fm: self.fm, rows: self.rows.start + rows.start..self.rows.start + rows.end }
    }
}

/// Chronological train/validation/test fractions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { train: 0.8, val: 0.1 }
    }
}

impl SplitSpec {
    pub fn test(&self) -> f64 {
        1.0 - self.train - self.val
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

/// Contiguous segments of `⌊train·n⌋`, `⌊val·n⌋` and the remaining rows.
pub fn split(n: usize, spec: &SplitSpec) -> Result<SplitIndices, DatasetError> {
    if !(spec.train > 0.0 && spec.val >= 0.0 && spec.test() >= -1e-12) {
        return Err(DatasetError::InvalidSplit);
    }
    if n < 10 {
        return Err(DatasetError::TooFewSamples(n));
    }
    // fractions like 0.8 are not exact in binary; nudge before flooring
    let floor = |f: f64| ((f * n as f64) + 1e-9).floor() as usize;
    let n_train = floor(spec.train);
    let n_val = floor(spec.val).min(n - n_train);
    Ok(SplitIndices { train: 0..n_train, val: n_train..n_train + n_val, test: n_train + n_val..n })
}

/// Builds the feature matrix of tier `fs`.
///
/// Smart-meter columns are the per-bus demand 24 h earlier for each
/// monitored bus and each aggregated substation; rows whose lagged value
/// falls outside the horizon are dropped. Weather, price and calendar enter
/// at the estimation timestep. FS2 adds the primary-substation P, Q and FS3
/// the secondary-substation P, Q and voltage, all at the estimation timestep.
pub fn build_features(
    net: &NetworkModel,
    scenario: &ScenarioDataset,
    truth: &GroundTruth,
    fs: FeatureSetId,
) -> Result<FeatureMatrix, DatasetError> {
    if scenario.timestamps != truth.timestamps {
        return Err(DatasetError::Alignment("scenario and ground-truth timestamps differ".into()));
    }
    if truth.monitored != net.monitored() {
        return Err(DatasetError::Alignment("ground truth monitors a different bus set".into()));
    }
    if scenario.buses() != net.len() {
        return Err(DatasetError::Alignment("scenario built for a different network".into()));
    }
    let lagged: Vec<usize> = net.monitored().into_iter().chain(net.aggregates()).collect();
    let feeder = net.subtree(net.substation());
    let activation_all = scenario.activation(&feeder);

    let mut columns = Vec::new();
    for &b in &lagged {
        let label = &net.buses()[b].label;
        columns.push(Column::new(format!("sm_p_lag24_{label}"), Provenance::LaggedSmartMeter, MINUTES_PER_DAY));
        columns.push(Column::new(format!("sm_q_lag24_{label}"), Provenance::LaggedSmartMeter, MINUTES_PER_DAY));
    }
    columns.push(Column::new("temperature", Provenance::Weather, 0));
    columns.push(Column::new("solar_radiation", Provenance::Weather, 0));
    columns.push(Column::new("price", Provenance::Price, 0));
    columns.push(Column::new("tod_sin", Provenance::Calendar, 0));
    columns.push(Column::new("tod_cos", Provenance::Calendar, 0));
    columns.push(Column::new("weekend", Provenance::Calendar, 0));
    if fs >= FeatureSetId::FS2 {
        columns.push(Column::new("subp_p", Provenance::PrimarySubstation, 0));
        columns.push(Column::new("subp_q", Provenance::PrimarySubstation, 0));
    }
    if fs >= FeatureSetId::FS3 {
        columns.push(Column::new("subs_p", Provenance::SecondarySubstation, 0));
        columns.push(Column::new("subs_q", Provenance::SecondarySubstation, 0));
        columns.push(Column::new("subs_v", Provenance::SecondarySubstation, 0));
    }

    let target_names: Vec<String> = truth.monitored.iter().map(|&b| net.buses()[b].label.to_string()).collect();
    let ts = &scenario.timestamps;
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    let mut timestamps = Vec::new();
    let mut activation = Vec::new();
    for (i, &t) in ts.iter().enumerate() {
        let lag = match t.minus_minutes(MINUTES_PER_DAY) {
            Some(prev) if i >= STEPS_PER_DAY && ts[i - STEPS_PER_DAY] == prev => i - STEPS_PER_DAY,
            _ => continue,
        };
        for &b in &lagged {
            let s = scenario.injections.get(lag, b);
            inputs.push(s.re);
            inputs.push(s.im);
        }
        let angle = 2.0 * core::f64::consts::PI * t.minute_of_day() as f64 / MINUTES_PER_DAY as f64;
        inputs.extend_from_slice(&[
            scenario.weather.temperature[i],
            scenario.weather.solar[i],
            scenario.prices.price[i],
            angle.sin(),
            angle.cos(),
            if t.is_weekend() { 1.0 } else { 0.0 },
        ]);
        if fs >= FeatureSetId::FS2 {
            inputs.push(truth.primary_power[i].re);
            inputs.push(truth.primary_power[i].im);
        }
        if fs >= FeatureSetId::FS3 {
            inputs.push(truth.secondary_power[i].re);
            inputs.push(truth.secondary_power[i].im);
            inputs.push(truth.secondary_voltage[i]);
        }
        targets.extend_from_slice(truth.row(i));
        timestamps.push(t);
        activation.push(activation_all[i]);
    }
    FeatureMatrix::new(columns, target_names, inputs, targets, timestamps, Some(activation))
}

/// Per-column mean and standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: Vec<f64>,
    /// Scale used for normalization; 0 marks a degenerate input column.
    pub std: Vec<f64>,
}

fn column_stats(values: &[f64], width: usize) -> (Vec<f64>, Vec<f64>) {
    let n = values.len() / width;
    let mut mean = alloc::vec![0.0; width];
    for row in values.chunks_exact(width) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = alloc::vec![0.0; width];
    for row in values.chunks_exact(width) {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std = var.iter().map(|s| (s / n as f64).sqrt()).collect();
    (mean, std)
}

fn degenerate(std: f64, mean: f64) -> bool {
    !(std > 1e-12 * (1.0 + mean.abs()))
}

/// Z-score statistics fitted on training rows only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub inputs: ColumnStats,
    pub targets: ColumnStats,
    /// Input columns with zero variance on the training rows.
    pub degenerate_inputs: Vec<usize>,
}

/// Normalized copy of a view.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedSet {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub input_dim: usize,
    pub output_dim: usize,
}

impl NormalizedSet {
    pub fn rows(&self) -> usize {
        self.x.len() / self.input_dim
    }

    pub fn x_row(&self, i: usize) -> &[f64] {
        &self.x[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn y_row(&self, i: usize) -> &[f64] {
        &self.y[i * self.output_dim..(i + 1) * self.output_dim]
    }

    /// Rows `a` followed by rows `b` (same dimensions).
    pub fn concat(a: &NormalizedSet, b: &NormalizedSet) -> NormalizedSet {
        let mut x = a.x.clone();
        x.extend_from_slice(&b.x);
        let mut y = a.y.clone();
        y.extend_from_slice(&b.y);
        NormalizedSet { x, y, input_dim: a.input_dim, output_dim: a.output_dim }
    }
}

impl Normalizer {
    /// Fits on `train`. Degenerate input columns get scale 0 (they normalize
    /// to 0, with a warning); degenerate targets keep scale 1 so they only
    /// get centred.
    pub fn fit(train: &FeatureView<'_>) -> Result<Self, DatasetError> {
        if train.is_empty() {
            return Err(DatasetError::TooFewSamples(0));
        }
        let (mean, mut std) = column_stats(train.inputs(), train.input_dim());
        let mut degenerate_inputs = Vec::new();
        for (j, s) in std.iter_mut().enumerate() {
            if degenerate(*s, mean[j]) {
                log::warn!("input column {} is constant on the training rows; mapped to 0", train.matrix().columns()[j].name);
                *s = 0.0;
                degenerate_inputs.push(j);
            }
        }
        let (tmean, mut tstd) = column_stats(train.targets(), train.output_dim());
        for (j, s) in tstd.iter_mut().enumerate() {
            if degenerate(*s, tmean[j]) {
                log::warn!("target {} is constant on the training rows", train.matrix().target_names()[j]);
                *s = 1.0;
            }
        }
        Ok(Normalizer {
            inputs: ColumnStats { mean, std },
            targets: ColumnStats { mean: tmean, std: tstd },
            degenerate_inputs,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.targets.mean.len()
    }

    pub fn normalize_inputs(&self, x: &[f64]) -> Vec<f64> {
        let d = self.input_dim();
        let mut out = Vec::with_capacity(x.len());
        for row in x.chunks_exact(d) {
            for ((v, m), s) in row.iter().zip(&self.inputs.mean).zip(&self.inputs.std) {
                out.push(if *s == 0.0 { 0.0 } else { (v - m) / s });
            }
        }
        out
    }

    pub fn normalize_targets(&self, y: &[f64]) -> Vec<f64> {
        let k = self.output_dim();
        let mut out = Vec::with_capacity(y.len());
        for row in y.chunks_exact(k) {
            for ((v, m), s) in row.iter().zip(&self.targets.mean).zip(&self.targets.std) {
                out.push((v - m) / s);
            }
        }
        out
    }

    pub fn denormalize_targets(&self, z: &[f64]) -> Vec<f64> {
        let k = self.output_dim();
        let mut out = Vec::with_capacity(z.len());
        for row in z.chunks_exact(k) {
            for ((v, m), s) in row.iter().zip(&self.targets.mean).zip(&self.targets.std) {
                out.push(v * s + m);
            }
        }
        out
    }

    pub fn normalize(&self, view: &FeatureView<'_>) -> Result<NormalizedSet, DatasetError> {
        if view.input_dim() != self.input_dim() || view.output_dim() != self.output_dim() {
            return Err(DatasetError::DimensionMismatch("normalizer fitted on other columns".into()));
        }
        Ok(NormalizedSet {
            x: self.normalize_inputs(view.inputs()),
            y: self.normalize_targets(view.targets()),
            input_dim: self.input_dim(),
            output_dim: self.output_dim(),
        })
    }
}
