//! Synthetic weather, retail prices, residential load and price-driven EV
//! charging, assembled into the three flexibility scenarios.
//!
//! Every generator is a pure function of its parameters and seed.

mod ev;
mod load;
mod price;
mod scenario;
mod weather;

pub use ev::{cheapest_slots, gen_ev_schedule, ChargingSession, EvFleetParams, EvSchedule};
pub use load::{customer_profile, gen_base_load, CustomerParams, CustomerProfile};
pub use price::{gen_prices, PriceSeries};
pub use scenario::{assemble_scenario, assign_customers, ScenarioConfig, ScenarioDataset, ScenarioId};
pub use weather::{gen_weather, WeatherSeries};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("customer count must be at least 1")]
    NoCustomers,
    #[error("EV {ev} at bus {bus} on day {day}: energy requirement exceeds plug window after {attempts} draws")]
    InfeasibleRequirement { bus: usize, ev: u32, day: u32, attempts: u32 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error(transparent)]
    Grid(#[from] crate::grid::GridError),
}

// Stream tags, one per generator.
const TAG_WEATHER: u8 = 1;
const TAG_PRICE: u8 = 2;
const TAG_CUSTOMER: u8 = 3;
const TAG_LOAD: u8 = 4;
const TAG_EV: u8 = 5;
const TAG_ASSIGN: u8 = 6;
