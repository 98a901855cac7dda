//! Backward-forward sweep for radial networks.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::{GridError, InjectionSeries, NetworkModel};
use crate::time::Timestamp;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Per-bus complex power mismatch threshold, pu.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tolerance: 1e-8, max_iterations: 100 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerFlowSolution {
    /// Complex bus voltages, pu, indexed by bus id.
    pub voltages: Vec<Complex64>,
    pub iterations: usize,
    pub max_mismatch: f64,
}

impl PowerFlowSolution {
    /// Current flowing from the parent of `bus` into `bus`.
    pub fn line_current(&self, net: &NetworkModel, bus: usize) -> Option<Complex64> {
        net.parent(bus).map(|(p, z)| (self.voltages[p] - self.voltages[bus]) / z)
    }

    /// Complex power delivered into `bus` by its supply line, measured at
    /// `bus` (what a meter on the receiving side of the line reads).
    pub fn received_power(&self, net: &NetworkModel, bus: usize) -> Option<Complex64> {
        self.line_current(net, bus).map(|i| self.voltages[bus] * i.conj())
    }

    /// Total power drawn from the slack bus.
    pub fn slack_power(&self, net: &NetworkModel) -> Complex64 {
        let s = net.slack();
        net.children(s)
            .iter()
            .map(|&c| self.voltages[s] * self.line_current(net, c).unwrap_or_default().conj())
            .sum()
    }
}

pub fn solve_power_flow(
    net: &NetworkModel,
    injections: &[Complex64],
) -> Result<PowerFlowSolution, GridError> {
    solve_power_flow_with(net, injections, &SolverOptions::default())
}

/// Runs the sweep until every non-slack bus satisfies
/// `|S_i - V_i conj(I_i)| < tolerance`, where `I_i` is the net current
/// withdrawn at bus `i` by the network currents of the last sweep.
pub fn solve_power_flow_with(
    net: &NetworkModel,
    injections: &[Complex64],
    opts: &SolverOptions,
) -> Result<PowerFlowSolution, GridError> {
    let n = net.len();
    if injections.len() != n {
        return Err(GridError::DimensionMismatch { expected: n, got: injections.len() });
    }
    let slack = net.slack();
    let order = net.order();
    let mut v = vec![Complex64::new(1.0, 0.0); n];
    let mut load_current = vec![Complex64::default(); n];
    let mut branch = vec![Complex64::default(); n];
    let mut mismatch = f64::INFINITY;

    for iteration in 1..=opts.max_iterations {
        for b in 0..n {
            load_current[b] =
                if b == slack { Complex64::default() } else { (injections[b] / v[b]).conj() };
        }
        // backward: accumulate branch currents from the leaves
        for &b in order.iter().rev() {
            let downstream: Complex64 = net.children(b).iter().map(|&c| branch[c]).sum();
            branch[b] = load_current[b] + downstream;
        }
        // forward: voltage drops from the slack
        for &b in order.iter().skip(1) {
            let (p, z) = net.parent(b).expect("non-slack bus has a parent");
            v[b] = v[p] - z * branch[b];
        }

        mismatch = 0.0;
        for b in 0..n {
            if b == slack {
                continue;
            }
            let m = (injections[b] - v[b] * load_current[b].conj()).norm();
            if !m.is_finite() {
                mismatch = f64::INFINITY;
                break;
            }
            mismatch = mismatch.max(m);
        }
        if !mismatch.is_finite() {
            return Err(GridError::NonConvergent { iterations: iteration, mismatch });
        }
        if mismatch < opts.tolerance {
            return Ok(PowerFlowSolution { voltages: v, iterations: iteration, max_mismatch: mismatch });
        }
    }
    Err(GridError::NonConvergent { iterations: opts.max_iterations, mismatch })
}

/// Per-timestep power-flow results: monitored voltage magnitudes plus the
/// substation telemetry a DSO could meter in real time.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub timestamps: Vec<Timestamp>,
    /// Monitored bus ids; column order of `magnitudes`.
    pub monitored: Vec<usize>,
    /// Row-major `steps x monitored.len()`, pu.
    pub magnitudes: Vec<f64>,
    /// Power drawn at the primary substation, pu.
    pub primary_power: Vec<Complex64>,
    /// Power delivered to the expanded secondary substation's LV busbar, pu.
    pub secondary_power: Vec<Complex64>,
    /// Voltage magnitude at the expanded secondary substation's LV busbar, pu.
    pub secondary_voltage: Vec<f64>,
}

impl GroundTruth {
    pub fn steps(&self) -> usize {
        self.timestamps.len()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let m = self.monitored.len();
        &self.magnitudes[t * m..(t + 1) * m]
    }
}

/// Solves every snapshot in order, failing on the first one that does not
/// converge.
pub fn ground_truth_series(
    net: &NetworkModel,
    timestamps: &[Timestamp],
    injections: &InjectionSeries,
) -> Result<GroundTruth, GridError> {
    if injections.steps() != timestamps.len() {
        return Err(GridError::DimensionMismatch { expected: timestamps.len(), got: injections.steps() });
    }
    let monitored = net.monitored();
    let subs = net.substation();
    let steps = timestamps.len();
    let mut truth = GroundTruth {
        timestamps: timestamps.to_vec(),
        monitored: monitored.clone(),
        magnitudes: Vec::with_capacity(steps * monitored.len()),
        primary_power: Vec::with_capacity(steps),
        secondary_power: Vec::with_capacity(steps),
        secondary_voltage: Vec::with_capacity(steps),
    };
    for t in 0..steps {
        let sol = solve_power_flow(net, injections.row(t)).map_err(|e| match e {
            GridError::NonConvergent { iterations, mismatch } => {
                GridError::NonConvergentAt { step: t, iterations, mismatch }
            }
            other => other,
        })?;
        truth.magnitudes.extend(monitored.iter().map(|&b| sol.voltages[b].norm()));
        truth.primary_power.push(sol.slack_power(net));
        truth.secondary_power.push(sol.received_power(net, subs).unwrap_or_default());
        truth.secondary_voltage.push(sol.voltages[subs].norm());
    }
    Ok(truth)
}
