//! Per-cell metrics and predictions, the matrix summary and the plot-data
//! tables derived from them.

use std::ops::Range;
use std::path::Path;

use lvse_core::metrics::{BusMetrics, MetricsReport};
use lvse_core::time::Timestamp;
use serde::{Deserialize, Serialize};

use crate::cells::Cell;
use crate::table::{flag, format_timestamp, num, opt_num, read_json, write_csv, write_json, Table};
use crate::Error;

pub const METRICS_JSON: &str = "metrics.json";
pub const METRICS_CSV: &str = "metrics.csv";
pub const PREDICTIONS_CSV: &str = "predictions.csv";

pub const METRIC_COLUMNS: [&str; 7] =
    ["rmse", "pinball", "winkler", "coverage", "mean_width", "width_active", "width_inactive"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub config_hash: String,
    pub cell: Cell,
    /// Rows of the feature matrix scored as the test split.
    pub test_rows: Range<usize>,
    pub report: MetricsReport,
}

fn metric_fields(m: &BusMetrics) -> Vec<String> {
    vec![
        num(m.rmse),
        num(m.pinball),
        num(m.winkler),
        num(m.coverage),
        num(m.mean_width),
        opt_num(m.width_active),
        opt_num(m.width_inactive),
    ]
}

fn metric_header(first: &[&str]) -> Vec<String> {
    first.iter().chain(METRIC_COLUMNS.iter()).map(|s| s.to_string()).collect()
}

/// Writes `metrics.json` and `metrics.csv` (one row per bus, then the
/// `avg`, `min` and `max` rows).
pub fn write_metrics(dir: &Path, m: &CellMetrics) -> Result<(), Error> {
    write_json(&dir.join(METRICS_JSON), m)?;
    let rows = m.report.rows().map(|b| {
        let mut row = vec![b.bus.clone()];
        row.extend(metric_fields(b));
        row
    });
    let id = m.cell.id();
    let meta = [("config_hash", m.config_hash.as_str()), ("cell", id.as_str())];
    write_csv(&dir.join(METRICS_CSV), &meta, &metric_header(&["bus"]), rows)
}

/// Reads `metrics.json`, rejecting other config hashes.
pub fn read_metrics(dir: &Path, config_hash: &str) -> Result<CellMetrics, Error> {
    let path = dir.join(METRICS_JSON);
    let m: CellMetrics = read_json(&path)?;
    if m.config_hash != config_hash {
        return Err(Error::HashMismatch { path, expected: config_hash.into(), found: m.config_hash });
    }
    Ok(m)
}

/// Test-split estimates of one cell, row-major `rows x buses`.
#[derive(Clone, Debug, PartialEq)]
pub struct Predictions {
    pub timestamps: Vec<Timestamp>,
    pub activation: Vec<bool>,
    pub buses: Vec<String>,
    pub truth: Vec<f64>,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Variance components, BNN only.
    pub epistemic: Option<Vec<f64>>,
    pub aleatoric: Option<Vec<f64>>,
}

impl Predictions {
    pub fn rows(&self) -> usize {
        self.timestamps.len()
    }

    pub fn bus_index(&self, label: &str) -> Option<usize> {
        self.buses.iter().position(|b| b == label)
    }

    /// Column `j` of a row-major field.
    pub fn column(&self, field: &[f64], j: usize) -> Vec<f64> {
        field.iter().skip(j).step_by(self.buses.len()).copied().collect()
    }

    fn fields(&self) -> Vec<(&'static str, &[f64])> {
        let mut f: Vec<(&str, &[f64])> =
            vec![("truth", &self.truth), ("mean", &self.mean), ("lower", &self.lower), ("upper", &self.upper)];
        if let (Some(e), Some(a)) = (&self.epistemic, &self.aleatoric) {
            f.push(("epistemic", e));
            f.push(("aleatoric", a));
        }
        f
    }

    pub fn write(&self, path: &Path, config_hash: &str) -> Result<(), Error> {
        let fields = self.fields();
        let mut header = vec!["timestamp".to_string(), "activation".to_string()];
        for b in &self.buses {
            header.extend(fields.iter().map(|(name, _)| format!("{name}_{b}")));
        }
        let k = self.buses.len();
        let rows = (0..self.rows()).map(|r| {
            let mut row = vec![format_timestamp(self.timestamps[r]), flag(self.activation[r]).to_string()];
            for j in 0..k {
                row.extend(fields.iter().map(|(_, v)| num(v[r * k + j])));
            }
            row
        });
        write_csv(path, &[("config_hash", config_hash)], &header, rows)
    }

    pub fn read(path: &Path, config_hash: &str) -> Result<Self, Error> {
        let t = Table::read(path)?;
        t.expect_meta("config_hash", config_hash)?;
        let buses: Vec<String> =
            t.header.iter().filter_map(|h| h.strip_prefix("truth_")).map(String::from).collect();
        if buses.is_empty() {
            return Err(Error::format(path, "no truth_<bus> columns"));
        }
        let has_components = t.column_index(&format!("epistemic_{}", buses[0])).is_ok();
        let field = |name: &str| -> Result<Vec<f64>, Error> {
            let cols: Vec<Vec<f64>> = buses
                .iter()
                .map(|b| t.f64_column(t.column_index(&format!("{name}_{b}"))?))
                .collect::<Result<_, _>>()?;
            Ok((0..t.len()).flat_map(|r| cols.iter().map(move |c| c[r])).collect())
        };
        Ok(Predictions {
            timestamps: t.timestamps()?,
            activation: t.bool_column(t.column_index("activation")?)?,
            truth: field("truth")?,
            mean: field("mean")?,
            lower: field("lower")?,
            upper: field("upper")?,
            epistemic: has_components.then(|| field("epistemic")).transpose()?,
            aleatoric: has_components.then(|| field("aleatoric")).transpose()?,
            buses,
        })
    }
}

/// One row per cell and aggregate (`avg`, `min`, `max`).
pub fn write_summary(path: &Path, config_hash: &str, cells: &[CellMetrics]) -> Result<(), Error> {
    let header = metric_header(&["scenario", "feature_set", "model", "stat"]);
    let rows = cells.iter().flat_map(|m| {
        [&m.report.avg, &m.report.min, &m.report.max].into_iter().map(move |b| {
            let c = m.cell;
            let mut row = vec![c.scenario.to_string(), c.feature_set.to_string(), c.model.to_string(), b.bus.clone()];
            row.extend(metric_fields(b));
            row
        })
    });
    write_csv(path, &[("config_hash", config_hash)], &header, rows)
}

pub const BAR_METRICS: [&str; 3] = ["rmse", "pinball", "winkler"];

fn pick(m: &BusMetrics, metric: &str) -> f64 {
    match metric {
        "rmse" => m.rmse,
        "pinball" => m.pinball,
        _ => m.winkler,
    }
}

/// Bar-chart data: avg/min/max over buses of RMSE, pinball and Winkler per
/// cell. The `scaled` columns divide by the largest cell average of that
/// metric, so the worst cell sits at 1.
pub fn write_bars(path: &Path, config_hash: &str, cells: &[CellMetrics]) -> Result<(), Error> {
    let header: Vec<String> = [
        "scenario", "feature_set", "model", "metric", "avg", "min", "max", "scale", "avg_scaled", "min_scaled",
        "max_scaled",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut rows = Vec::new();
    for metric in BAR_METRICS {
        let scale = cells.iter().map(|m| pick(&m.report.avg, metric)).fold(0.0, f64::max);
        let scale = if scale > 0.0 { scale } else { 1.0 };
        for m in cells {
            let c = m.cell;
            let (avg, min, max) = (pick(&m.report.avg, metric), pick(&m.report.min, metric), pick(&m.report.max, metric));
            rows.push(vec![
                c.scenario.to_string(),
                c.feature_set.to_string(),
                c.model.to_string(),
                metric.to_string(),
                num(avg),
                num(min),
                num(max),
                num(scale),
                num(avg / scale),
                num(min / scale),
                num(max / scale),
            ]);
        }
    }
    write_csv(path, &[("config_hash", config_hash)], &header, rows)
}

/// A labelled time-series excerpt of one bus.
pub struct Excerpt {
    pub label: String,
    pub timestamps: Vec<Timestamp>,
    pub truth: Vec<f64>,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub activation: Vec<bool>,
}

impl Excerpt {
    /// Rows `range` of bus `bus` in `p`.
    pub fn from_predictions(label: String, p: &Predictions, bus: usize, range: Range<usize>) -> Self {
        let col = |f: &[f64]| p.column(f, bus)[range.clone()].to_vec();
        Excerpt {
            label,
            timestamps: p.timestamps[range.clone()].to_vec(),
            truth: col(&p.truth),
            mean: col(&p.mean),
            lower: col(&p.lower),
            upper: col(&p.upper),
            activation: p.activation[range.clone()].to_vec(),
        }
    }
}

/// Long format: one row per series and timestep.
pub fn write_excerpts(path: &Path, meta: &[(&str, &str)], bus: &str, series: &[Excerpt]) -> Result<(), Error> {
    let header: Vec<String> =
        ["series", "timestamp", "bus", "truth", "mean", "lower", "upper", "width", "activation_flag"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    let rows = series.iter().flat_map(|e| {
        (0..e.timestamps.len()).map(move |i| {
            vec![
                e.label.clone(),
                format_timestamp(e.timestamps[i]),
                bus.to_string(),
                num(e.truth[i]),
                num(e.mean[i]),
                num(e.lower[i]),
                num(e.upper[i]),
                num(e.upper[i] - e.lower[i]),
                flag(e.activation[i]).to_string(),
            ]
        })
    });
    write_csv(path, meta, &header, rows)
}
