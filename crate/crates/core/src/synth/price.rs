use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::TAG_PRICE;
use crate::rng::{stream, stream_id};
use crate::time::{Horizon, Timestamp, DAYS_PER_YEAR, STEPS_PER_DAY, STEPS_PER_HOUR};

/// Hourly shape offsets (currency/kWh) around the daily level: night valley,
/// morning and evening ridges.
const HOURLY_SHAPE: [f64; 24] = [
    -0.030, -0.055, -0.062, -0.065, -0.060, -0.050, -0.020, 0.030, 0.045, 0.035, 0.015, 0.010,
    0.005, 0.000, 0.000, 0.010, 0.030, 0.060, 0.075, 0.065, 0.040, 0.015, 0.000, -0.015,
];
const MIN_PRICE: f64 = 0.02;

/// Retail price at 5-minute resolution, constant within each clock hour.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    pub timestamps: Vec<Timestamp>,
    pub price: Vec<f64>,
}

impl PriceSeries {
    pub fn len(&self) -> usize {
        self.price.len()
    }

    pub fn is_empty(&self) -> bool {
        self.price.is_empty()
    }
}

/// Day-ahead style retail prices. Each day draws its own level and hourly
/// perturbations from a stream keyed by the day, so a given day's prices do
/// not depend on which other days are simulated.
pub fn gen_prices(horizon: &Horizon, seed: u64) -> PriceSeries {
    let mut price = Vec::with_capacity(horizon.len());
    for day in horizon.days() {
        let mut rng = stream(seed, stream_id(TAG_PRICE, day, 0));
        let season = 0.04 * (2.0 * PI * day as f64 / DAYS_PER_YEAR as f64).cos();
        let level = 0.30 + season + 0.025 * rng.sample::<f64, _>(StandardNormal);
        let weekend = day % 7 >= 5;
        let ridge_scale = if weekend { 0.6 } else { 1.0 } * (1.0 + 0.3 * rng.sample::<f64, _>(StandardNormal)).max(0.2);
        for hour in 0..24 {
            let shape = HOURLY_SHAPE[hour];
            let shape = if shape > 0.0 { shape * ridge_scale } else { shape };
            let p = (level + shape + 0.008 * rng.sample::<f64, _>(StandardNormal)).max(MIN_PRICE);
            price.extend(core::iter::repeat_n(p, STEPS_PER_HOUR));
        }
    }
    debug_assert_eq!(price.len() % STEPS_PER_DAY, 0);
    PriceSeries { timestamps: horizon.timestamps(), price }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hourly_blocks_and_positive() {
        let p = gen_prices(&Horizon::contiguous(0, 30).unwrap(), 9);
        for block in p.price.chunks(STEPS_PER_HOUR) {
            assert!(block.iter().all(|&x| x == block[0]));
        }
        assert!(p.price.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn nightly_minimum_between_one_and_five() {
        let p = gen_prices(&Horizon::full_year(), 21);
        let mut hits = 0;
        for day in p.price.chunks(STEPS_PER_DAY) {
            let hourly: Vec<f64> = day.chunks(STEPS_PER_HOUR).map(|b| b[0]).collect();
            let argmin = (0..24).min_by(|&a, &b| hourly[a].partial_cmp(&hourly[b]).unwrap()).unwrap();
            if (1..5).contains(&argmin) {
                hits += 1;
            }
        }
        assert!(hits as f64 >= 0.9 * 365.0, "{hits}");
    }

    #[test]
    fn seeds_differ() {
        let h = Horizon::contiguous(0, 2).unwrap();
        assert_ne!(gen_prices(&h, 1).price, gen_prices(&h, 2).price);
    }

    #[test]
    fn day_prices_independent_of_horizon() {
        let a = gen_prices(&Horizon::contiguous(10, 5).unwrap(), 4);
        let b = gen_prices(&Horizon::contiguous(12, 1).unwrap(), 4);
        assert_eq!(&a.price[2 * STEPS_PER_DAY..3 * STEPS_PER_DAY], &b.price[..]);
    }
}
