use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{
    customer_profile, gen_ev_schedule, gen_prices, gen_weather, EvFleetParams, PriceSeries, SynthError,
    WeatherSeries, TAG_ASSIGN,
};
use crate::grid::{reference::BASE_KVA, InjectionSeries, NetworkModel};
use crate::rng::{stream, stream_id};
use crate::time::{Horizon, Timestamp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ScenarioId {
    /// Residential load only.
    S1,
    /// S1 plus smart-charging EV fleets at the adjacent substations.
    S2,
    /// S2 plus one smart-charging EV per customer below the expanded substation.
    S3,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 3] = [ScenarioId::S1, ScenarioId::S2, ScenarioId::S3];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioId::S1 => "S1",
            ScenarioId::S2 => "S2",
            ScenarioId::S3 => "S3",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|id| id.as_str().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub horizon: Horizon,
    pub customers: u32,
    /// EVs at each adjacent (aggregated) substation in S2 and S3.
    pub adjacent_evs_per_substation: u32,
    /// Charger and behaviour template; its `counts` field is ignored.
    pub ev: EvFleetParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            horizon: Horizon::desk_default(),
            customers: crate::grid::reference::DEFAULT_CUSTOMERS,
            adjacent_evs_per_substation: 12,
            ev: EvFleetParams::default(),
        }
    }
}

/// Aligned inputs of one flexibility scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioDataset {
    pub id: ScenarioId,
    pub seed: u64,
    pub horizon: Horizon,
    pub timestamps: Vec<Timestamp>,
    /// Per-bus demand, pu, load convention.
    pub injections: InjectionSeries,
    /// Row-major `steps x buses` EV charging power, kW.
    pub ev_kw: Vec<f64>,
    /// Row-major `steps x buses`; true exactly where `ev_kw > 0`.
    pub flags: Vec<bool>,
    pub prices: PriceSeries,
    pub weather: WeatherSeries,
    /// Bus of each customer.
    pub assignment: Vec<usize>,
    /// `(bus, EVs)` of the fleets present in this scenario.
    pub ev_counts: Vec<(usize, u32)>,
    pub ev_energy_kwh: f64,
}

impl ScenarioDataset {
    pub fn steps(&self) -> usize {
        self.timestamps.len()
    }

    pub fn buses(&self) -> usize {
        self.injections.buses()
    }

    pub fn flag(&self, t: usize, bus: usize) -> bool {
        self.flags[t * self.buses() + bus]
    }

    /// True where any EV charges on one of `buses` (e.g. a feeder subtree).
    pub fn activation(&self, buses: &[usize]) -> Vec<bool> {
        (0..self.steps()).map(|t| buses.iter().any(|&b| self.flag(t, b))).collect()
    }
}

/// Randomly assigns `count` customers to buses in proportion to their
/// customer slots (largest-remainder quotas, then a seeded shuffle).
pub fn assign_customers(net: &NetworkModel, count: u32, seed: u64) -> Result<Vec<usize>, SynthError> {
    if count == 0 {
        return Err(SynthError::NoCustomers);
    }
    let slots: Vec<(usize, u64)> =
        net.buses().iter().filter(|b| b.customer_slots > 0).map(|b| (b.id, b.customer_slots as u64)).collect();
    let total: u64 = slots.iter().map(|s| s.1).sum();
    if total == 0 {
        return Err(SynthError::InvalidParameter("network has no customer slots"));
    }
    let mut quotas: Vec<(usize, u64, u64)> = slots
        .iter()
        .map(|&(b, w)| (b, w * count as u64 / total, w * count as u64 % total))
        .collect();
    let assigned: u64 = quotas.iter().map(|q| q.1).sum();
    let mut by_remainder: Vec<usize> = (0..quotas.len()).collect();
    by_remainder.sort_by(|&a, &b| quotas[b].2.cmp(&quotas[a].2).then(a.cmp(&b)));
    for &k in by_remainder.iter().take((count as u64 - assigned) as usize) {
        quotas[k].1 += 1;
    }
    let mut out: Vec<usize> =
        quotas.iter().flat_map(|&(b, q, _)| core::iter::repeat_n(b, q as usize)).collect();
    out.shuffle(&mut stream(seed, stream_id(TAG_ASSIGN, 0, 0)));
    Ok(out)
}

/// Builds scenario `id`. With the same seed, the three scenarios share
/// weather, prices, customers and their placement; S2 and S3 share the
/// adjacent-substation fleets.
pub fn assemble_scenario(
    id: ScenarioId,
    net: &NetworkModel,
    cfg: &ScenarioConfig,
    seed: u64,
) -> Result<ScenarioDataset, SynthError> {
    let horizon = &cfg.horizon;
    let steps = horizon.len();
    let n_bus = net.len();
    let weather = gen_weather(horizon, seed);
    let prices = gen_prices(horizon, seed);
    let assignment = assign_customers(net, cfg.customers, seed)?;

    let mut injections = InjectionSeries::zeros(steps, n_bus);
    for (c, &bus) in assignment.iter().enumerate() {
        let profile = customer_profile(c as u32, &weather, horizon, seed);
        for t in 0..steps {
            injections.row_mut(t)[bus] += Complex64::new(profile.p[t], profile.q[t]) / BASE_KVA;
        }
    }

    let mut ev_counts: Vec<(usize, u32)> = Vec::new();
    if id >= ScenarioId::S2 {
        ev_counts.extend(net.aggregates().into_iter().map(|b| (b, cfg.adjacent_evs_per_substation)));
    }
    if id >= ScenarioId::S3 {
        for b in net.subtree(net.substation()) {
            let n = assignment.iter().filter(|&&a| a == b).count() as u32;
            if n > 0 {
                ev_counts.push((b, n));
            }
        }
    }
    ev_counts.retain(|&(_, n)| n > 0);

    let mut ev_kw = vec![0.0; steps * n_bus];
    let mut flags = vec![false; steps * n_bus];
    let mut ev_energy_kwh = 0.0;
    if !ev_counts.is_empty() {
        let fleet = EvFleetParams { counts: ev_counts.clone(), ..cfg.ev.clone() };
        let schedule = gen_ev_schedule(horizon, &prices, &fleet, seed)?;
        for (k, &bus) in schedule.buses.iter().enumerate() {
            for t in 0..steps {
                let p = schedule.power_kw[k][t];
                if p > 0.0 {
                    ev_kw[t * n_bus + bus] += p;
                    injections.row_mut(t)[bus] += Complex64::new(p / BASE_KVA, 0.0);
                }
            }
        }
        for (f, p) in flags.iter_mut().zip(&ev_kw) {
            *f = *p > 0.0;
        }
        ev_energy_kwh = schedule.delivered_kwh;
    }

    Ok(ScenarioDataset {
        id,
        seed,
        horizon: horizon.clone(),
        timestamps: horizon.timestamps(),
        injections,
        ev_kw,
        flags,
        prices,
        weather,
        assignment,
        ev_counts,
        ev_energy_kwh,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_reference_network;
    use crate::time::STEPS_PER_HOUR;

    fn small() -> ScenarioConfig {
        ScenarioConfig { horizon: Horizon::contiguous(20, 6).unwrap(), customers: 120, ..Default::default() }
    }

    #[test]
    fn assignment_respects_slots() {
        let net = build_reference_network();
        let a = assign_customers(&net, 564, 3).unwrap();
        for b in net.buses() {
            assert_eq!(a.iter().filter(|&&x| x == b.id).count() as u32, b.customer_slots);
        }
        let small = assign_customers(&net, 50, 3).unwrap();
        assert_eq!(small.len(), 50);
        assert_ne!(assign_customers(&net, 564, 4).unwrap(), a);
    }

    #[test]
    fn scenario_nesting() {
        let net = build_reference_network();
        let cfg = small();
        let s1 = assemble_scenario(ScenarioId::S1, &net, &cfg, 5).unwrap();
        let s2 = assemble_scenario(ScenarioId::S2, &net, &cfg, 5).unwrap();
        let s3 = assemble_scenario(ScenarioId::S3, &net, &cfg, 5).unwrap();
        let feeder = net.subtree(net.substation());

        assert!(s1.flags.iter().all(|f| !f));
        assert!(s2.activation(&feeder).iter().all(|f| !f));
        assert!(s3.activation(&feeder).iter().any(|&f| f));
        for t in 0..s1.steps() {
            for &b in &feeder {
                assert_eq!(s1.injections.get(t, b), s2.injections.get(t, b));
            }
        }
        let agg = net.aggregates();
        assert!(agg.iter().any(|&b| (0..s1.steps()).any(|t| s1.injections.get(t, b) != s2.injections.get(t, b))));
        for t in 0..s1.steps() {
            for &b in &agg {
                assert_eq!(s2.injections.get(t, b), s3.injections.get(t, b));
            }
        }

        // energy bookkeeping below the expanded substation
        let kwh = |s: &ScenarioDataset| -> f64 {
            (0..s.steps())
                .map(|t| feeder.iter().map(|&b| s.injections.get(t, b).re).sum::<f64>())
                .sum::<f64>()
                * BASE_KVA
                / STEPS_PER_HOUR as f64
        };
        let fleet_kwh: f64 = (0..s3.steps())
            .map(|t| feeder.iter().map(|&b| s3.ev_kw[t * s3.buses() + b]).sum::<f64>())
            .sum::<f64>()
            / STEPS_PER_HOUR as f64;
        assert!(fleet_kwh > 0.0);
        let extra = kwh(&s3) - kwh(&s1);
        assert!((extra - fleet_kwh).abs() <= 1e-3 * fleet_kwh);
    }

    #[test]
    fn injections_conserve_customer_and_ev_load() {
        let net = build_reference_network();
        let cfg = ScenarioConfig { horizon: Horizon::contiguous(100, 2).unwrap(), customers: 40, ..Default::default() };
        let s = assemble_scenario(ScenarioId::S3, &net, &cfg, 9).unwrap();
        let mut expected = InjectionSeries::zeros(s.steps(), s.buses());
        for (c, &bus) in s.assignment.iter().enumerate() {
            let prof = customer_profile(c as u32, &s.weather, &cfg.horizon, 9);
            for t in 0..s.steps() {
                expected.row_mut(t)[bus] += Complex64::new(prof.p[t], prof.q[t]) / BASE_KVA;
            }
        }
        for t in 0..s.steps() {
            for b in 0..s.buses() {
                let ev = s.ev_kw[t * s.buses() + b];
                if ev > 0.0 {
                    expected.row_mut(t)[b] += Complex64::new(ev / BASE_KVA, 0.0);
                }
                assert_eq!(s.flag(t, b), ev > 0.0);
            }
        }
        assert_eq!(expected, s.injections);
    }

    #[test]
    fn seeded() {
        let net = build_reference_network();
        let cfg = ScenarioConfig { horizon: Horizon::contiguous(0, 2).unwrap(), customers: 30, ..Default::default() };
        let a = assemble_scenario(ScenarioId::S3, &net, &cfg, 1).unwrap();
        let b = assemble_scenario(ScenarioId::S3, &net, &cfg, 1).unwrap();
        assert_eq!(a, b);
    }
}
