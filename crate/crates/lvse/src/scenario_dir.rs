//! Scenario directories: one CSV per series plus `manifest.json`.
//!
//! Injections are per unit on the network power base with positive values
//! meaning consumption. Every file shares the `timestamp` column.

use std::path::Path;

use lvse_core::grid::{GroundTruth, InjectionSeries, NetworkModel};
use lvse_core::grid::reference::BASE_KVA;
use lvse_core::synth::{PriceSeries, ScenarioConfig, ScenarioDataset, ScenarioId, WeatherSeries};
use lvse_core::time::{Horizon, Timestamp};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::table::{flag, format_timestamp, num, read_json, write_csv, write_json, Table};
use crate::Error;

pub const MANIFEST: &str = "manifest.json";
pub const FILES: [&str; 7] =
    ["injections.csv", "prices.csv", "weather.csv", "flags.csv", "ev_power.csv", "voltages.csv", "telemetry.csv"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvFleet {
    pub bus: usize,
    pub label: String,
    pub evs: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: ScenarioId,
    pub seed: u64,
    pub data_hash: String,
    pub config_hash: String,
    pub steps: usize,
    pub power_base_kva: f64,
    pub parameters: ScenarioConfig,
    pub ev_fleets: Vec<EvFleet>,
    pub ev_energy_kwh: f64,
    /// Bus of each customer.
    pub assignment: Vec<usize>,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn has_evs_at(&self, bus: usize) -> bool {
        self.ev_fleets.iter().any(|f| f.bus == bus && f.evs > 0)
    }
}

fn stamps(ts: &[Timestamp]) -> Vec<String> {
    ts.iter().map(|&t| format_timestamp(t)).collect()
}

fn header(first: &[&str], rest: impl IntoIterator<Item = String>) -> Vec<String> {
    first.iter().map(|s| s.to_string()).chain(rest).collect()
}

pub fn write_scenario(
    dir: &Path,
    net: &NetworkModel,
    cfg: &ScenarioConfig,
    scenario: &ScenarioDataset,
    truth: &GroundTruth,
    data_hash: &str,
    config_hash: &str,
) -> Result<Manifest, Error> {
    let labels: Vec<&str> = net.buses().iter().map(|b| b.label.as_str()).collect();
    let ts = stamps(&scenario.timestamps);
    let n = net.len();
    let meta = [("config_hash", config_hash), ("data_hash", data_hash)];

    let h = header(&["timestamp"], labels.iter().flat_map(|l| [format!("p_{l}"), format!("q_{l}")]));
    write_csv(
        &dir.join(FILES[0]),
        &meta,
        &h,
        ts.iter().enumerate().map(|(t, stamp)| {
            let mut row = vec![stamp.clone()];
            for s in scenario.injections.row(t) {
                row.push(num(s.re));
                row.push(num(s.im));
            }
            row
        }),
    )?;
    write_csv(
        &dir.join(FILES[1]),
        &meta,
        &header(&["timestamp", "price"], []),
        ts.iter().zip(&scenario.prices.price).map(|(s, p)| vec![s.clone(), num(*p)]),
    )?;
    write_csv(
        &dir.join(FILES[2]),
        &meta,
        &header(&["timestamp", "temperature_c", "solar_w_m2"], []),
        ts.iter().enumerate().map(|(t, s)| {
            vec![s.clone(), num(scenario.weather.temperature[t]), num(scenario.weather.solar[t])]
        }),
    )?;
    let per_bus = header(&["timestamp"], labels.iter().map(|l| l.to_string()));
    write_csv(
        &dir.join(FILES[3]),
        &meta,
        &per_bus,
        ts.iter().enumerate().map(|(t, s)| {
            let mut row = vec![s.clone()];
            row.extend((0..n).map(|b| flag(scenario.flag(t, b)).to_string()));
            row
        }),
    )?;
    write_csv(
        &dir.join(FILES[4]),
        &meta,
        &per_bus,
        ts.iter().enumerate().map(|(t, s)| {
            let mut row = vec![s.clone()];
            row.extend(scenario.ev_kw[t * n..(t + 1) * n].iter().map(|&p| num(p)));
            row
        }),
    )?;
    write_csv(
        &dir.join(FILES[5]),
        &meta,
        &header(&["timestamp"], truth.monitored.iter().map(|&b| labels[b].to_string())),
        ts.iter().enumerate().map(|(t, s)| {
            let mut row = vec![s.clone()];
            row.extend(truth.row(t).iter().map(|&v| num(v)));
            row
        }),
    )?;
    write_csv(
        &dir.join(FILES[6]),
        &meta,
        &header(&["timestamp", "subp_p", "subp_q", "subs_p", "subs_q", "subs_v"], []),
        ts.iter().enumerate().map(|(t, s)| {
            let (p, q) = (truth.primary_power[t], truth.secondary_power[t]);
            vec![s.clone(), num(p.re), num(p.im), num(q.re), num(q.im), num(truth.secondary_voltage[t])]
        }),
    )?;

    let manifest = Manifest {
        scenario: scenario.id,
        seed: scenario.seed,
        data_hash: data_hash.into(),
        config_hash: config_hash.into(),
        steps: scenario.steps(),
        power_base_kva: BASE_KVA,
        parameters: cfg.clone(),
        ev_fleets: scenario
            .ev_counts
            .iter()
            .map(|&(bus, evs)| EvFleet { bus, label: labels[bus].to_string(), evs })
            .collect(),
        ev_energy_kwh: scenario.ev_energy_kwh,
        assignment: scenario.assignment.clone(),
        files: FILES.iter().map(|f| f.to_string()).collect(),
    };
    write_json(&dir.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

fn check_stamps(table: &Table, expected: &[Timestamp], path: &Path) -> Result<(), Error> {
    if table.timestamps()? != expected {
        return Err(Error::format(path, "timestamps do not match the manifest horizon"));
    }
    Ok(())
}

/// Reads a scenario directory back. Fails if it was generated from other
/// data settings than `data_hash`.
pub fn read_scenario(
    dir: &Path,
    net: &NetworkModel,
    data_hash: &str,
) -> Result<(ScenarioDataset, GroundTruth, Manifest), Error> {
    let mpath = dir.join(MANIFEST);
    let manifest: Manifest = read_json(&mpath)?;
    if manifest.data_hash != data_hash {
        return Err(Error::HashMismatch { path: mpath, expected: data_hash.into(), found: manifest.data_hash });
    }
    let horizon: Horizon = manifest.parameters.horizon.clone();
    let timestamps = horizon.timestamps();
    let steps = timestamps.len();
    let n = net.len();
    let labels: Vec<&str> = net.buses().iter().map(|b| b.label.as_str()).collect();
    let load = |name: &str| -> Result<(Table, std::path::PathBuf), Error> {
        let path = dir.join(name);
        let t = Table::read(&path)?;
        t.expect_meta("data_hash", data_hash)?;
        check_stamps(&t, &timestamps, &path)?;
        Ok((t, path))
    };

    let (inj, _) = load(FILES[0])?;
    let mut values = Vec::with_capacity(steps * n);
    let cols: Vec<(Vec<f64>, Vec<f64>)> = labels
        .iter()
        .map(|l| {
            let p = inj.f64_column(inj.column_index(&format!("p_{l}"))?)?;
            let q = inj.f64_column(inj.column_index(&format!("q_{l}"))?)?;
            Ok((p, q))
        })
        .collect::<Result<_, Error>>()?;
    for t in 0..steps {
        values.extend(cols.iter().map(|(p, q)| Complex64::new(p[t], q[t])));
    }
    let injections = InjectionSeries::from_rows(n, values)?;

    let (pr, _) = load(FILES[1])?;
    let prices = PriceSeries { timestamps: timestamps.clone(), price: pr.f64_column(pr.column_index("price")?)? };
    let (we, _) = load(FILES[2])?;
    let weather = WeatherSeries {
        timestamps: timestamps.clone(),
        temperature: we.f64_column(we.column_index("temperature_c")?)?,
        solar: we.f64_column(we.column_index("solar_w_m2")?)?,
    };

    let per_bus_f64 = |t: &Table| -> Result<Vec<Vec<f64>>, Error> {
        labels.iter().map(|l| t.f64_column(t.column_index(l)?)).collect()
    };
    let (fl, _) = load(FILES[3])?;
    let flag_cols: Vec<Vec<bool>> =
        labels.iter().map(|l| fl.bool_column(fl.column_index(l)?)).collect::<Result<_, _>>()?;
    let (ev, _) = load(FILES[4])?;
    let ev_cols = per_bus_f64(&ev)?;
    let mut flags = Vec::with_capacity(steps * n);
    let mut ev_kw = Vec::with_capacity(steps * n);
    for t in 0..steps {
        flags.extend(flag_cols.iter().map(|c| c[t]));
        ev_kw.extend(ev_cols.iter().map(|c| c[t]));
    }

    let monitored = net.monitored();
    let (vo, _) = load(FILES[5])?;
    let vcols: Vec<Vec<f64>> =
        monitored.iter().map(|&b| vo.f64_column(vo.column_index(labels[b])?)).collect::<Result<_, _>>()?;
    let magnitudes = (0..steps).flat_map(|t| vcols.iter().map(move |c| c[t])).collect();
    let (te, _) = load(FILES[6])?;
    let col = |name: &str| te.column_index(name).and_then(|i| te.f64_column(i));
    let (pp, pq, sp, sq) = (col("subp_p")?, col("subp_q")?, col("subs_p")?, col("subs_q")?);
    let truth = GroundTruth {
        timestamps: timestamps.clone(),
        monitored,
        magnitudes,
        primary_power: pp.iter().zip(&pq).map(|(&p, &q)| Complex64::new(p, q)).collect(),
        secondary_power: sp.iter().zip(&sq).map(|(&p, &q)| Complex64::new(p, q)).collect(),
        secondary_voltage: col("subs_v")?,
    };

    let scenario = ScenarioDataset {
        id: manifest.scenario,
        seed: manifest.seed,
        horizon,
        timestamps,
        injections,
        ev_kw,
        flags,
        prices,
        weather,
        assignment: manifest.assignment.clone(),
        ev_counts: manifest.ev_fleets.iter().map(|f| (f.bus, f.evs)).collect(),
        ev_energy_kwh: manifest.ev_energy_kwh,
    };
    Ok((scenario, truth, manifest))
}
