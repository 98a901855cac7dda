//! Point and probabilistic scores: RMSE, pinball, Winkler, interval coverage
//! and width.

use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("empty series")]
    EmptySeries,
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("quantile levels must be 0.01, 0.02, ..., 0.99")]
    GridMismatch,
    #[error("lower bound above upper bound at index {0}")]
    InvalidInterval(usize),
}

pub const QUANTILE_LEVELS: usize = 99;

/// Levels 0.01, 0.02, ..., 0.99.
pub fn quantile_grid() -> Vec<f64> {
    (1..=QUANTILE_LEVELS).map(|i| i as f64 / 100.0).collect()
}

fn check_grid(grid: &[f64]) -> Result<(), MetricsError> {
    let ok = grid.len() == QUANTILE_LEVELS
        && grid.iter().enumerate().all(|(i, &q)| (q - (i + 1) as f64 / 100.0).abs() < 1e-9);
    if ok {
        Ok(())
    } else {
        Err(MetricsError::GridMismatch)
    }
}

fn check_len(a: usize, b: usize) -> Result<(), MetricsError> {
    if a == 0 {
        Err(MetricsError::EmptySeries)
    } else if a != b {
        Err(MetricsError::LengthMismatch(a, b))
    } else {
        Ok(())
    }
}

pub fn rmse(y: &[f64], yhat: &[f64]) -> Result<f64, MetricsError> {
    check_len(y.len(), yhat.len())?;
    let sse: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sse / y.len() as f64).sqrt())
}

/// Pinball loss of a single quantile prediction `yq` at level `q`.
pub fn pinball_loss(y: f64, yq: f64, q: f64) -> f64 {
    if y >= yq {
        (y - yq) * q
    } else {
        (yq - y) * (1.0 - q)
    }
}

/// Pinball loss averaged over time and the 99 levels. `quantiles` is
/// `len(y) x 99`, row-major.
pub fn pinball(y: &[f64], quantiles: &[f64], grid: &[f64]) -> Result<f64, MetricsError> {
    check_grid(grid)?;
    check_len(y.len(), quantiles.len() / grid.len())?;
    if !quantiles.len().is_multiple_of(grid.len()) {
        return Err(MetricsError::LengthMismatch(quantiles.len(), y.len() * grid.len()));
    }
    let total: f64 = y
        .iter()
        .zip(quantiles.chunks_exact(grid.len()))
        .map(|(&yt, qs)| qs.iter().zip(grid).map(|(&v, &q)| pinball_loss(yt, v, q)).sum::<f64>())
        .sum();
    Ok(total / (y.len() * grid.len()) as f64)
}

/// Winkler interval score averaged over time.
pub fn winkler(y: &[f64], lower: &[f64], upper: &[f64], alpha: f64) -> Result<f64, MetricsError> {
    check_len(y.len(), lower.len())?;
    check_len(y.len(), upper.len())?;
    let mut total = 0.0;
    for (i, ((&yt, &lo), &hi)) in y.iter().zip(lower).zip(upper).enumerate() {
        if lo > hi {
            return Err(MetricsError::InvalidInterval(i));
        }
        let width = hi - lo;
        total += if yt < lo {
            width + 2.0 * (lo - yt) / alpha
        } else if yt > hi {
            width + 2.0 * (yt - hi) / alpha
        } else {
            width
        };
    }
    Ok(total / y.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageWidth {
    pub coverage: f64,
    pub mean_width: f64,
    /// Mean width over flagged steps; `None` without flags or flagged steps.
    pub width_active: Option<f64>,
    pub width_inactive: Option<f64>,
}

pub fn coverage_and_width(
    y: &[f64],
    lower: &[f64],
    upper: &[f64],
    flags: Option<&[bool]>,
) -> Result<CoverageWidth, MetricsError> {
    check_len(y.len(), lower.len())?;
    check_len(y.len(), upper.len())?;
    if let Some(f) = flags {
        check_len(y.len(), f.len())?;
    }
    let n = y.len() as f64;
    let inside = y.iter().zip(lower).zip(upper).filter(|((&v, &lo), &hi)| lo <= v && v <= hi).count();
    let widths: Vec<f64> = lower.iter().zip(upper).map(|(lo, hi)| hi - lo).collect();
    let conditional = |want: bool| -> Option<f64> {
        let f = flags?;
        let (sum, count) = widths
            .iter()
            .zip(f)
            .filter(|(_, &fl)| fl == want)
            .fold((0.0, 0usize), |(s, c), (w, _)| (s + w, c + 1));
        (count > 0).then(|| sum / count as f64)
    };
    Ok(CoverageWidth {
        coverage: inside as f64 / n,
        mean_width: widths.iter().sum::<f64>() / n,
        width_active: conditional(true),
        width_inactive: conditional(false),
    })
}

/// Scores of one estimated bus, or an aggregate row (`avg`, `min`, `max`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BusMetrics {
    pub bus: String,
    pub rmse: f64,
    pub pinball: f64,
    pub winkler: f64,
    pub coverage: f64,
    pub mean_width: f64,
    pub width_active: Option<f64>,
    pub width_inactive: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub alpha: f64,
    pub buses: Vec<BusMetrics>,
    pub avg: BusMetrics,
    pub min: BusMetrics,
    pub max: BusMetrics,
}

/// Model outputs to score, all row-major `rows x buses` except `quantiles`
/// (`rows x buses x 99`).
#[derive(Clone, Copy, Debug)]
pub struct Estimates<'a> {
    pub point: &'a [f64],
    pub lower: &'a [f64],
    pub upper: &'a [f64],
    pub quantiles: &'a [f64],
}

fn column(values: &[f64], width: usize, j: usize) -> Vec<f64> {
    values.iter().skip(j).step_by(width).copied().collect()
}

impl MetricsReport {
    /// Scores every bus against `truth` (`rows x buses`).
    pub fn evaluate(
        names: &[String],
        truth: &[f64],
        est: Estimates<'_>,
        flags: Option<&[bool]>,
        alpha: f64,
    ) -> Result<Self, MetricsError> {
        let k = names.len();
        if k == 0 || truth.is_empty() {
            return Err(MetricsError::EmptySeries);
        }
        let grid = quantile_grid();
        let rows = truth.len() / k;
        check_len(truth.len(), est.point.len())?;
        check_len(truth.len(), est.quantiles.len() / grid.len())?;
        let mut buses = Vec::with_capacity(k);
        for (j, name) in names.iter().enumerate() {
            let y = column(truth, k, j);
            let lo = column(est.lower, k, j);
            let hi = column(est.upper, k, j);
            let mut q = Vec::with_capacity(rows * grid.len());
            for r in 0..rows {
                let base = (r * k + j) * grid.len();
                q.extend_from_slice(&est.quantiles[base..base + grid.len()]);
            }
            let cw = coverage_and_width(&y, &lo, &hi, flags)?;
            buses.push(BusMetrics {
                bus: name.clone(),
                rmse: rmse(&y, &column(est.point, k, j))?,
                pinball: pinball(&y, &q, &grid)?,
                winkler: winkler(&y, &lo, &hi, alpha)?,
                coverage: cw.coverage,
                mean_width: cw.mean_width,
                width_active: cw.width_active,
                width_inactive: cw.width_inactive,
            });
        }
        Ok(Self::from_buses(buses, alpha))
    }

    pub fn from_buses(buses: Vec<BusMetrics>, alpha: f64) -> Self {
        let agg = |label: &str, f: fn(&[f64]) -> f64| {
            let pick = |g: fn(&BusMetrics) -> f64| f(&buses.iter().map(g).collect::<Vec<_>>());
            let pick_opt = |g: fn(&BusMetrics) -> Option<f64>| {
                let v: Vec<f64> = buses.iter().filter_map(g).collect();
                (!v.is_empty()).then(|| f(&v))
            };
            BusMetrics {
                bus: label.into(),
                rmse: pick(|b| b.rmse),
                pinball: pick(|b| b.pinball),
                winkler: pick(|b| b.winkler),
                coverage: pick(|b| b.coverage),
                mean_width: pick(|b| b.mean_width),
                width_active: pick_opt(|b| b.width_active),
                width_inactive: pick_opt(|b| b.width_inactive),
            }
        };
        let avg = agg("avg", |v| v.iter().sum::<f64>() / v.len() as f64);
        let min = agg("min", |v| v.iter().copied().fold(f64::INFINITY, f64::min));
        let max = agg("max", |v| v.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        MetricsReport { alpha, buses, avg, min, max }
    }

    /// Per-bus rows followed by the `avg`, `min` and `max` rows.
    pub fn rows(&self) -> impl Iterator<Item = &BusMetrics> {
        self.buses.iter().chain([&self.avg, &self.min, &self.max])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rmse_cases() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 3.5355339059327378).abs() < 1e-12);
        assert_eq!(rmse(&[], &[]), Err(MetricsError::EmptySeries));
        assert_eq!(rmse(&[1.0], &[1.0, 2.0]), Err(MetricsError::LengthMismatch(1, 2)));
    }

    #[test]
    fn pinball_cases() {
        assert!((pinball_loss(1.0, 0.8, 0.9) - 0.18).abs() < 1e-12);
        assert!((pinball_loss(1.0, 1.2, 0.9) - 0.02).abs() < 1e-12);
        let grid = quantile_grid();
        assert_eq!(pinball(&[1.0], &[1.0; 99], &grid).unwrap(), 0.0);
        assert_eq!(pinball(&[1.0], &[1.0; 98], &grid[..98]), Err(MetricsError::GridMismatch));
    }

    #[test]
    fn winkler_cases() {
        assert!((winkler(&[1.0], &[0.95], &[1.05], 0.1).unwrap() - 0.1).abs() < 1e-12);
        assert!((winkler(&[0.90], &[0.95], &[1.05], 0.1).unwrap() - 1.1).abs() < 1e-12);
        assert!((winkler(&[1.10], &[0.95], &[1.05], 0.1).unwrap() - 1.1).abs() < 1e-12);
        assert_eq!(winkler(&[1.0, 1.0], &[0.9, 1.1], &[1.1, 1.0], 0.1), Err(MetricsError::InvalidInterval(1)));
    }

    #[test]
    fn coverage_cases() {
        let y = [1.0, 2.0, 3.0];
        let cw = coverage_and_width(&y, &y, &y, None).unwrap();
        assert_eq!((cw.coverage, cw.mean_width), (1.0, 0.0));
        let cw = coverage_and_width(&y, &[5.0; 3], &[6.0; 3], None).unwrap();
        assert_eq!(cw.coverage, 0.0);
        let cw = coverage_and_width(
            &[0.0, 1.0, 2.0, 3.0],
            &[-1.0, 0.0, 1.0, 3.5],
            &[1.0, 2.0, 3.0, 4.0],
            Some(&[true, false, false, true]),
        )
        .unwrap();
        assert_eq!(cw.coverage, 0.75);
        assert_eq!(cw.width_active, Some(1.25));
        assert_eq!(cw.width_inactive, Some(2.0));
    }

    #[test]
    fn report_aggregates_are_ordered() {
        let names = vec![String::from("a"), String::from("b")];
        let truth = [1.0, 2.0, 1.5, 2.5];
        let point = [1.1, 1.8, 1.4, 2.9];
        let lower = [0.9, 1.9, 1.3, 2.0];
        let upper = [1.2, 2.1, 1.6, 2.8];
        let quantiles: Vec<f64> = point.iter().flat_map(|&p| quantile_grid().into_iter().map(move |q| p + q - 0.5)).collect();
        let est = Estimates { point: &point, lower: &lower, upper: &upper, quantiles: &quantiles };
        let r = MetricsReport::evaluate(&names, &truth, est, Some(&[true, false]), 0.1).unwrap();
        assert_eq!(r.rows().count(), 5);
        for f in [|b: &BusMetrics| b.rmse, |b: &BusMetrics| b.winkler, |b: &BusMetrics| b.pinball] {
            assert!(f(&r.min) <= f(&r.avg) && f(&r.avg) <= f(&r.max));
        }
        assert_eq!(r.buses[0].rmse, rmse(&[1.0, 1.5], &[1.1, 1.4]).unwrap());
    }
}
