#![allow(dead_code)]

use lvse::config::ExperimentConfig;
use lvse_core::time::{Horizon, Segment};

/// Five simulated days (three in January, two in July) and a few epochs:
/// exercises every stage in seconds.
pub fn tiny_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.scenario.horizon =
        Horizon::new(vec![Segment { start_day: 0, days: 3 }, Segment { start_day: 182, days: 2 }]).unwrap();
    cfg.bnn.epochs = 4;
    cfg.bnn.mean_warmup_epochs = 2;
    cfg.qr.epochs = 3;
    cfg.n_sample = 20;
    cfg.study.bnn = cfg.bnn.clone();
    cfg
}
