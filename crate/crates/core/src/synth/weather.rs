use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::TAG_WEATHER;
use crate::rng::{stream, stream_id};
use crate::time::{Horizon, Timestamp, DAYS_PER_YEAR, STEPS_PER_DAY};

/// Latitude of the synthetic site, degrees north.
const LATITUDE_DEG: f64 = 55.1;
const ANNUAL_MEAN_C: f64 = 8.5;
const ANNUAL_AMPLITUDE_C: f64 = 8.5;
/// Day of year of the coldest seasonal point.
const COLDEST_DAY: f64 = 20.0;
const PEAK_IRRADIANCE: f64 = 1000.0;

/// Ambient temperature (°C) and global horizontal irradiance (W/m²).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeatherSeries {
    pub timestamps: Vec<Timestamp>,
    pub temperature: Vec<f64>,
    pub solar: Vec<f64>,
}

fn seasonal_temperature(day: f64) -> f64 {
    ANNUAL_MEAN_C - ANNUAL_AMPLITUDE_C * (2.0 * PI * (day - COLDEST_DAY) / DAYS_PER_YEAR as f64).cos()
}

/// Sine of the solar elevation at local solar time.
fn solar_elevation_sin(day: f64, hour: f64) -> f64 {
    let lat = LATITUDE_DEG.to_radians();
    let decl = 23.44f64.to_radians() * (2.0 * PI * (284.0 + day + 1.0) / DAYS_PER_YEAR as f64).sin();
    let hour_angle = (15.0 * (hour - 12.0)).to_radians();
    lat.sin() * decl.sin() + lat.cos() * decl.cos() * hour_angle.cos()
}

/// Annual sinusoidal temperature with a daily cycle and persistent daily
/// anomalies; clear-sky irradiance scaled by a daily cloud cover and a
/// short-term flicker. Irradiance is exactly zero whenever the sun is below
/// the horizon.
pub fn gen_weather(horizon: &Horizon, seed: u64) -> WeatherSeries {
    let n = horizon.len();
    let mut out = WeatherSeries {
        timestamps: horizon.timestamps(),
        temperature: Vec::with_capacity(n),
        solar: Vec::with_capacity(n),
    };
    for seg in horizon.segments() {
        let mut rng = stream(seed, stream_id(TAG_WEATHER, seg.start_day, 0));
        let mut anomaly = 2.0 * rng.sample::<f64, _>(StandardNormal);
        let mut fast = 0.0f64;
        let mut flicker = 0.0f64;
        for day in seg.day_range() {
            anomaly = 0.7 * anomaly + 2.0 * rng.sample::<f64, _>(StandardNormal);
            let cloud: f64 = rng.random::<f64>();
            let d = day as f64;
            let base = seasonal_temperature(d);
            // summer days swing more than winter days
            let swing = 2.0 + 1.5 * (1.0 - (2.0 * PI * (d - COLDEST_DAY) / DAYS_PER_YEAR as f64).cos());
            for step in 0..STEPS_PER_DAY {
                let t = Timestamp::from_day_step(day, step);
                let h = t.hour_of_day();
                fast = 0.98 * fast + 0.06 * rng.sample::<f64, _>(StandardNormal);
                flicker = 0.9 * flicker + 0.1 * rng.sample::<f64, _>(StandardNormal);
                let daily = -(2.0 * PI * (h - 3.0) / 24.0).cos();
                out.temperature.push(base + anomaly + 0.5 * swing * daily + fast);

                let s = solar_elevation_sin(d, h);
                let g = if s > 0.0 {
                    let clear = PEAK_IRRADIANCE * s.powf(1.15);
                    let transmit = (1.0 - 0.75 * cloud * cloud) * (1.0 + 0.5 * cloud * flicker);
                    (clear * transmit).max(0.0)
                } else {
                    0.0
                };
                out.solar.push(g);
            }
        }
    }
    debug_assert_eq!(out.solar.len(), n);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::STEPS_PER_HOUR;

    #[test]
    fn radiation_zero_at_midnight_and_nonnegative() {
        let w = gen_weather(&Horizon::full_year(), 3);
        for (i, t) in w.timestamps.iter().enumerate() {
            assert!(w.solar[i] >= 0.0);
            if t.minute_of_day() == 0 {
                assert_eq!(w.solar[i], 0.0);
            }
        }
    }

    #[test]
    fn july_warmer_than_january() {
        let w = gen_weather(&Horizon::full_year(), 11);
        let mean_month = |m| {
            let v: Vec<f64> = w
                .timestamps
                .iter()
                .zip(&w.temperature)
                .filter(|(t, _)| t.month() == m)
                .map(|(_, x)| *x)
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!(mean_month(6) > mean_month(0) + 8.0);
    }

    #[test]
    fn daily_irradiance_centred_on_solar_noon() {
        let w = gen_weather(&Horizon::full_year(), 5);
        for day in 0..365usize {
            let slice = &w.solar[day * STEPS_PER_DAY..(day + 1) * STEPS_PER_DAY];
            let total: f64 = slice.iter().sum();
            assert!(total > 0.0);
            let centre: f64 =
                slice.iter().enumerate().map(|(i, g)| i as f64 / STEPS_PER_HOUR as f64 * g).sum::<f64>() / total;
            assert!((centre - 12.0).abs() <= 1.0, "day {day} centred at {centre}");
        }
    }

    #[test]
    fn seeded() {
        let h = Horizon::contiguous(100, 3).unwrap();
        assert_eq!(gen_weather(&h, 1), gen_weather(&h, 1));
        assert_ne!(gen_weather(&h, 1).temperature, gen_weather(&h, 2).temperature);
    }
}
