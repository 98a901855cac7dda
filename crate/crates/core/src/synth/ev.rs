use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{PriceSeries, SynthError, TAG_EV};
use crate::rng::{stream, stream_id};
use crate::time::{Horizon, STEPS_PER_DAY, STEPS_PER_HOUR};

/// EV fleet description. Arrival is on the evening of a simulated day and
/// departure on the next morning; sessions are only drawn for days whose
/// following day is simulated too.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvFleetParams {
    /// `(bus id, number of EVs)`.
    pub counts: Vec<(usize, u32)>,
    pub charger_kw: f64,
    /// Median of the lognormal daily energy requirement; 0 disables charging.
    pub energy_median_kwh: f64,
    pub energy_log_sd: f64,
    pub arrival_mean_h: f64,
    pub arrival_sd_h: f64,
    pub departure_mean_h: f64,
    pub departure_sd_h: f64,
    /// Probability that an EV charges on a given night.
    pub charge_probability: f64,
    pub max_redraws: u32,
}

impl Default for EvFleetParams {
    fn default() -> Self {
        EvFleetParams {
            counts: Vec::new(),
            charger_kw: 11.0,
            energy_median_kwh: 8.0,
            energy_log_sd: 0.5,
            arrival_mean_h: 18.0,
            arrival_sd_h: 1.5,
            departure_mean_h: 7.0,
            departure_sd_h: 0.75,
            charge_probability: 0.6,
            max_redraws: 20,
        }
    }
}

impl EvFleetParams {
    fn validate(&self) -> Result<(), SynthError> {
        if !(self.charger_kw > 0.0) {
            return Err(SynthError::InvalidParameter("charger_kw must be positive"));
        }
        if !(0.0..=1.0).contains(&self.charge_probability) {
            return Err(SynthError::InvalidParameter("charge_probability outside [0, 1]"));
        }
        if self.energy_median_kwh < 0.0 || self.energy_log_sd < 0.0 {
            return Err(SynthError::InvalidParameter("negative energy distribution parameter"));
        }
        Ok(())
    }

    /// Energy delivered by one fully-occupied 5-minute slot, kWh.
    pub fn slot_kwh(&self) -> f64 {
        self.charger_kw / STEPS_PER_HOUR as f64
    }
}

/// Charging power per fleet bus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvSchedule {
    pub buses: Vec<usize>,
    /// One series (kW) per entry of `buses`, aligned with the price series.
    pub power_kw: Vec<Vec<f64>>,
    /// `true` exactly where the matching power entry is positive.
    pub flags: Vec<Vec<bool>>,
    /// Energy actually delivered over the horizon, kWh.
    pub delivered_kwh: f64,
    pub sessions: Vec<ChargingSession>,
}

/// One EV-night. Window bounds are horizon indices, `end` exclusive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChargingSession {
    pub bus: usize,
    pub ev: u32,
    pub day: u32,
    pub window_start: usize,
    pub window_end: usize,
    pub slots: usize,
}

/// Indices of the `count` cheapest entries of `prices`, ties broken by
/// earliest index, returned in ascending order.
pub fn cheapest_slots(prices: &[f64], count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..prices.len()).collect();
    idx.sort_by(|&a, &b| prices[a].total_cmp(&prices[b]).then(a.cmp(&b)));
    idx.truncate(count);
    idx.sort_unstable();
    idx
}

fn clamp(x: f64, lo: f64, hi: f64) -> f64 {
    x.max(lo).min(hi)
}

struct Session {
    /// Window start and end relative to the start of the arrival day.
    start: usize,
    end: usize,
    slots: usize,
}

fn draw_session(
    fleet: &EvFleetParams,
    rng: &mut crate::rng::Rng,
) -> Option<Session> {
    let arrival = clamp(fleet.arrival_mean_h + fleet.arrival_sd_h * rng.sample::<f64, _>(StandardNormal), 14.0, 23.5);
    let departure =
        clamp(fleet.departure_mean_h + fleet.departure_sd_h * rng.sample::<f64, _>(StandardNormal), 4.0, 10.0);
    let energy = if fleet.energy_median_kwh > 0.0 {
        fleet.energy_median_kwh * (fleet.energy_log_sd * rng.sample::<f64, _>(StandardNormal)).exp()
    } else {
        0.0
    };
    let start = (arrival * STEPS_PER_HOUR as f64).round() as usize;
    let end = STEPS_PER_DAY + (departure * STEPS_PER_HOUR as f64).round() as usize;
    let slots = (energy / fleet.slot_kwh()).ceil() as usize;
    (slots <= end - start).then_some(Session { start, end, slots })
}

/// Price-responsive smart charging: each EV-night fills the cheapest
/// 5-minute slots of its plug window at full charger power until the
/// energy requirement is covered (greedy by price, earliest slot first on
/// ties). A drawn requirement that does not fit its window is redrawn up
/// to `max_redraws` times.
pub fn gen_ev_schedule(
    horizon: &Horizon,
    prices: &PriceSeries,
    fleet: &EvFleetParams,
    seed: u64,
) -> Result<EvSchedule, SynthError> {
    fleet.validate()?;
    if prices.len() != horizon.len() {
        return Err(SynthError::InvalidParameter("prices do not cover the horizon"));
    }
    let n = horizon.len();
    let mut schedule = EvSchedule {
        buses: fleet.counts.iter().map(|&(b, _)| b).collect(),
        power_kw: vec![vec![0.0; n]; fleet.counts.len()],
        flags: vec![vec![false; n]; fleet.counts.len()],
        delivered_kwh: 0.0,
        sessions: Vec::new(),
    };
    for (k, &(bus, count)) in fleet.counts.iter().enumerate() {
        let power = &mut schedule.power_kw[k];
        for ev in 0..count {
            let mut offset = 0;
            for seg in horizon.segments() {
                // the last day of a segment has no next morning inside the horizon
                for day in seg.start_day..seg.start_day + seg.days - 1 {
                    let id = ((bus as u32) << 12) | ev;
                    let mut rng = stream(seed, stream_id(TAG_EV, id, day));
                    if rng.random::<f64>() >= fleet.charge_probability {
                        continue;
                    }
                    let mut drawn = None;
                    for _ in 0..=fleet.max_redraws {
                        drawn = draw_session(fleet, &mut rng);
                        if drawn.is_some() {
                            break;
                        }
                    }
                    let session = drawn.ok_or(SynthError::InfeasibleRequirement {
                        bus,
                        ev,
                        day,
                        attempts: fleet.max_redraws + 1,
                    })?;
                    if session.slots == 0 {
                        continue;
                    }
                    let base = offset + (day - seg.start_day) as usize * STEPS_PER_DAY;
                    let window = &prices.price[base + session.start..base + session.end];
                    for slot in cheapest_slots(window, session.slots) {
                        power[base + session.start + slot] += fleet.charger_kw;
                    }
                    schedule.delivered_kwh += session.slots as f64 * fleet.slot_kwh();
                    schedule.sessions.push(ChargingSession {
                        bus,
                        ev,
                        day,
                        window_start: base + session.start,
                        window_end: base + session.end,
                        slots: session.slots,
                    });
                }
                offset += seg.steps();
            }
        }
        for (f, p) in schedule.flags[k].iter_mut().zip(power.iter()) {
            *f = *p > 0.0;
        }
    }
    Ok(schedule)
}
