//! Probabilistic low-voltage state estimation.
//!
//! A synthetic MV/LV reference network and AC power flow provide ground
//! truth voltages for three flexibility scenarios. Feature sets with
//! increasing DSO observability feed two probabilistic estimators: a
//! mean-field variational Bayesian neural network with a heteroscedastic
//! output head, and a multi-quantile regression network. Both are scored
//! with RMSE, Pinball and Winkler metrics.
//!
//! The crate is `no_std` (it needs `alloc`); file formats, orchestration and
//! the command line live in the companion `lvse` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bnn;
pub mod dataset;
pub mod grid;
pub mod metrics;
pub mod nn;
pub mod qr;
pub mod rng;
pub mod stats;
pub mod synth;
pub mod time;
