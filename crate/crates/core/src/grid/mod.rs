//! Radial MV/LV network model and AC power flow.
//!
//! Load convention throughout: a positive injection `P + jQ` is consumption
//! at the bus. All quantities are per unit on the base in [`reference`].

mod flow;
pub mod reference;

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use flow::{
    ground_truth_series, solve_power_flow, solve_power_flow_with, GroundTruth, PowerFlowSolution,
    SolverOptions,
};
pub use reference::build_reference_network;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("expected {expected} bus injections, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("power flow did not converge after {iterations} iterations (mismatch {mismatch:e} pu)")]
    NonConvergent { iterations: usize, mismatch: f64 },
    #[error("power flow did not converge at timestep {step} after {iterations} iterations (mismatch {mismatch:e} pu)")]
    NonConvergentAt { step: usize, iterations: usize, mismatch: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusKind {
    Slack,
    MvAggregate,
    LvNode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    pub label: String,
    pub kind: BusKind,
    pub monitored: bool,
    /// Share of the customer population connected here (customers at the
    /// default population size).
    pub customer_slots: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from_bus: usize,
    pub to_bus: usize,
    /// Series resistance, pu.
    pub r: f64,
    /// Series reactance, pu.
    pub x: f64,
}

impl Line {
    pub fn impedance(&self) -> Complex64 {
        Complex64::new(self.r, self.x)
    }
}

/// Radial network rooted at the single slack bus.
///
/// Bus ids are their positions in `buses`. Construction validates the
/// topology and caches the tree traversal used by the sweep solver.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "NetworkSpec", into = "NetworkSpec")]
pub struct NetworkModel {
    buses: Vec<Bus>,
    lines: Vec<Line>,
    substation: usize,
    slack: usize,
    /// Parent bus and impedance of the line to it; `None` for the slack.
    parent: Vec<Option<(usize, Complex64)>>,
    children: Vec<Vec<usize>>,
    /// Breadth-first order from the slack.
    order: Vec<usize>,
}

/// Serialized form of a [`NetworkModel`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub base_kva: f64,
    /// Slack voltage magnitude, pu.
    pub base_voltage: f64,
    /// Bus id of the expanded secondary substation (LV busbar).
    pub substation: usize,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
}

impl TryFrom<NetworkSpec> for NetworkModel {
    type Error = GridError;

    fn try_from(spec: NetworkSpec) -> Result<Self, GridError> {
        if (spec.base_voltage - 1.0).abs() > 0.0 {
            return Err(GridError::InvalidNetwork("slack voltage must be 1.0 pu".into()));
        }
        if (spec.base_kva - reference::BASE_KVA).abs() > 0.0 {
            return Err(GridError::InvalidNetwork("unsupported power base".into()));
        }
        NetworkModel::new(spec.buses, spec.lines, spec.substation)
    }
}

impl From<NetworkModel> for NetworkSpec {
    fn from(net: NetworkModel) -> Self {
        NetworkSpec {
            base_kva: reference::BASE_KVA,
            base_voltage: 1.0,
            substation: net.substation,
            buses: net.buses,
            lines: net.lines,
        }
    }
}

fn invalid(msg: &str) -> GridError {
    GridError::InvalidNetwork(msg.into())
}

impl NetworkModel {
    pub fn new(buses: Vec<Bus>, lines: Vec<Line>, substation: usize) -> Result<Self, GridError> {
        let n = buses.len();
        if n == 0 {
            return Err(invalid("no buses"));
        }
        if buses.iter().enumerate().any(|(i, b)| b.id != i) {
            return Err(invalid("bus ids must equal their positions"));
        }
        let slacks: Vec<usize> =
            buses.iter().filter(|b| b.kind == BusKind::Slack).map(|b| b.id).collect();
        if slacks.len() != 1 {
            return Err(invalid("exactly one slack bus required"));
        }
        let slack = slacks[0];
        if buses.iter().any(|b| b.monitored && b.kind != BusKind::LvNode) {
            return Err(invalid("only LV nodes can be monitored"));
        }
        if lines.len() + 1 != n {
            return Err(invalid("radial network needs |lines| = |buses| - 1"));
        }
        if substation >= n || buses[substation].kind != BusKind::LvNode {
            return Err(invalid("substation must be an LV node"));
        }

        let mut adjacency: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); n];
        for l in &lines {
            if l.from_bus >= n || l.to_bus >= n || l.from_bus == l.to_bus {
                return Err(invalid("line endpoints out of range"));
            }
            if !(l.r > 0.0) || !l.x.is_finite() {
                return Err(invalid("line resistance must be strictly positive"));
            }
            adjacency[l.from_bus].push((l.to_bus, l.impedance()));
            adjacency[l.to_bus].push((l.from_bus, l.impedance()));
        }

        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        let mut seen = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut queue = VecDeque::from([slack]);
        seen[slack] = true;
        while let Some(b) = queue.pop_front() {
            order.push(b);
            for &(nb, z) in &adjacency[b] {
                if !seen[nb] {
                    seen[nb] = true;
                    parent[nb] = Some((b, z));
                    children[b].push(nb);
                    queue.push_back(nb);
                }
            }
        }
        if order.len() != n {
            return Err(invalid("network is not connected"));
        }

        Ok(NetworkModel { buses, lines, substation, slack, parent, children, order })
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn len(&self) -> usize {
        self.buses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buses.is_empty()
    }

    pub fn slack(&self) -> usize {
        self.slack
    }

    /// LV busbar of the expanded secondary substation.
    pub fn substation(&self) -> usize {
        self.substation
    }

    pub fn parent(&self, bus: usize) -> Option<(usize, Complex64)> {
        self.parent[bus]
    }

    pub fn children(&self, bus: usize) -> &[usize] {
        &self.children[bus]
    }

    pub(crate) fn order(&self) -> &[usize] {
        &self.order
    }

    /// Monitored bus ids in ascending order.
    pub fn monitored(&self) -> Vec<usize> {
        self.buses.iter().filter(|b| b.monitored).map(|b| b.id).collect()
    }

    /// Aggregated secondary substations adjacent to the expanded one.
    pub fn aggregates(&self) -> Vec<usize> {
        self.buses.iter().filter(|b| b.kind == BusKind::MvAggregate).map(|b| b.id).collect()
    }

    /// `bus` and every bus below it.
    pub fn subtree(&self, bus: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![bus];
        while let Some(b) = stack.pop() {
            out.push(b);
            stack.extend(self.children[b].iter().rev());
        }
        out.sort_unstable();
        out
    }

    /// Buses that host customers.
    pub fn load_buses(&self) -> Vec<usize> {
        self.buses.iter().filter(|b| b.customer_slots > 0).map(|b| b.id).collect()
    }

    pub fn spec(&self) -> NetworkSpec {
        self.clone().into()
    }
}

/// Time-indexed complex injections, one row per timestep and one column
/// per bus (the slack column is ignored by the solver).
#[derive(Clone, Debug, PartialEq)]
pub struct InjectionSeries {
    buses: usize,
    values: Vec<Complex64>,
}

impl InjectionSeries {
    pub fn zeros(steps: usize, buses: usize) -> Self {
        InjectionSeries { buses, values: vec![Complex64::new(0.0, 0.0); steps * buses] }
    }

    pub fn from_rows(buses: usize, values: Vec<Complex64>) -> Result<Self, GridError> {
        if buses == 0 || !values.len().is_multiple_of(buses) {
            return Err(GridError::DimensionMismatch { expected: buses, got: values.len() });
        }
        Ok(InjectionSeries { buses, values })
    }

    pub fn steps(&self) -> usize {
        self.values.len() / self.buses
    }

    pub fn buses(&self) -> usize {
        self.buses
    }

    pub fn row(&self, t: usize) -> &[Complex64] {
        &self.values[t * self.buses..(t + 1) * self.buses]
    }

    pub fn row_mut(&mut self, t: usize) -> &mut [Complex64] {
        &mut self.values[t * self.buses..(t + 1) * self.buses]
    }

    pub fn get(&self, t: usize, bus: usize) -> Complex64 {
        self.values[t * self.buses + bus]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.values
    }
}
