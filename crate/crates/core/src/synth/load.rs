use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{SynthError, WeatherSeries, TAG_CUSTOMER, TAG_LOAD};
use crate::rng::{stream, stream_id};
use crate::time::{Horizon, STEPS_PER_DAY};

/// Temperature below which space heating kicks in, °C.
const HEATING_BASE_C: f64 = 17.0;
/// Heating degrees at which the heating share of load equals its nominal share.
const HEATING_REFERENCE_DEGREES: f64 = 11.0;
const MEDIAN_ANNUAL_KWH: f64 = 4000.0;
/// AR(1) coefficient of the slow log-noise at 5-minute steps.
const NOISE_PERSISTENCE: f64 = 0.97;
const SLOW_NOISE_SD: f64 = 0.35;
const FAST_NOISE_SD: f64 = 0.25;

/// Per-customer constants drawn once from the customer's own stream.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CustomerParams {
    pub mean_kw: f64,
    pub heating_share: f64,
    pub power_factor: f64,
    pub morning_shift_h: f64,
    pub evening_shift_h: f64,
}

impl CustomerParams {
    pub fn draw(seed: u64, customer: u32) -> Self {
        let mut rng = stream(seed, stream_id(TAG_CUSTOMER, customer, 0));
        let annual = MEDIAN_ANNUAL_KWH * (0.35 * rng.sample::<f64, _>(StandardNormal)).exp();
        CustomerParams {
            mean_kw: annual / 8760.0,
            heating_share: rng.random_range(0.1..0.6),
            power_factor: rng.random_range(0.9..0.98),
            morning_shift_h: 0.5 * rng.sample::<f64, _>(StandardNormal),
            evening_shift_h: 0.75 * rng.sample::<f64, _>(StandardNormal),
        }
    }

    pub fn q_ratio(&self) -> f64 {
        self.power_factor.acos().tan()
    }
}

/// Active (kW) and reactive (kvar) demand of one customer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CustomerProfile {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub heating_share: f64,
}

fn bump(h: f64, centre: f64, width: f64) -> f64 {
    let z = (h - centre) / width;
    (-0.5 * z * z).exp()
}

/// Relative daily demand shape: morning and (larger) evening peaks over a
/// base level, with a later, flatter morning and a daytime plateau on
/// weekends.
fn daily_shape(params: &CustomerParams, hour: f64, weekend: bool) -> f64 {
    let (morning, morning_at, daytime) = if weekend { (0.35, 8.75, 0.3) } else { (0.55, 7.25, 0.1) };
    0.45 + morning * bump(hour, morning_at + params.morning_shift_h, 0.9)
        + 1.1 * bump(hour, 18.75 + params.evening_shift_h, 1.6)
        + daytime * bump(hour, 13.0, 2.5)
}

fn heating_factor(share: f64, temperature: f64) -> f64 {
    (1.0 - share) + share * (HEATING_BASE_C - temperature).max(0.0) / HEATING_REFERENCE_DEGREES
}

/// Demand of customer `customer` over the horizon: daily double-peak shape
/// times a temperature-coupled heating factor times lognormal noise (a
/// persistent AR(1) part and a white part). Reactive power follows the
/// customer's fixed power factor.
pub fn customer_profile(
    customer: u32,
    weather: &WeatherSeries,
    horizon: &Horizon,
    seed: u64,
) -> CustomerProfile {
    let params = CustomerParams::draw(seed, customer);
    let n = horizon.len();
    let mut p = Vec::with_capacity(n);
    let q_ratio = params.q_ratio();
    let innovation = Normal::new(0.0, SLOW_NOISE_SD * (1.0 - NOISE_PERSISTENCE * NOISE_PERSISTENCE).sqrt())
        .expect("finite sd");
    let bias = 0.5 * (SLOW_NOISE_SD * SLOW_NOISE_SD + FAST_NOISE_SD * FAST_NOISE_SD);
    let mut offset = 0;
    for seg in horizon.segments() {
        let mut rng = stream(seed, stream_id(TAG_LOAD, customer, seg.start_day));
        let mut slow = SLOW_NOISE_SD * rng.sample::<f64, _>(StandardNormal);
        for day in seg.day_range() {
            let weekend = day % 7 >= 5;
            for step in 0..STEPS_PER_DAY {
                let i = offset + (day - seg.start_day) as usize * STEPS_PER_DAY + step;
                let hour = weather.timestamps[i].hour_of_day();
                slow = NOISE_PERSISTENCE * slow + innovation.sample(&mut rng);
                let fast = FAST_NOISE_SD * rng.sample::<f64, _>(StandardNormal);
                let value = params.mean_kw
                    * daily_shape(&params, hour, weekend)
                    * heating_factor(params.heating_share, weather.temperature[i])
                    * (slow + fast - bias).exp();
                p.push(value);
            }
        }
        offset += seg.steps();
    }
    let q = p.iter().map(|&x| x * q_ratio).collect();
    CustomerProfile { p, q, heating_share: params.heating_share }
}

/// Profiles for customers `0..customer_count`.
pub fn gen_base_load(
    customer_count: u32,
    weather: &WeatherSeries,
    horizon: &Horizon,
    seed: u64,
) -> Result<Vec<CustomerProfile>, SynthError> {
    if customer_count == 0 {
        return Err(SynthError::NoCustomers);
    }
    if weather.timestamps.len() != horizon.len() {
        return Err(SynthError::InvalidParameter("weather does not cover the horizon"));
    }
    Ok((0..customer_count).map(|c| customer_profile(c, weather, horizon, seed)).collect())
}
