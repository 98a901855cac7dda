//! File formats and experiment orchestration on top of `lvse-core`.
//!
//! Output layout under the `--out` directory:
//!
//! ```text
//! network.json
//! data/S1/        manifest.json injections.csv prices.csv weather.csv flags.csv
//!                 ev_power.csv voltages.csv telemetry.csv
//! features/       S1_FS1.csv + S1_FS1.json ...
//! matrix/         ledger.json summary.csv S1_FS1_BNN/ ...
//! study/          series.csv weekly.csv summary.json checkpoint.json
//! report/         fig2_feature_sets.csv fig3_scenarios.csv bars.csv fig6_*.csv
//! ```

pub mod cells;
pub mod checkpoint;
pub mod config;
mod error;
pub mod features;
pub mod pipeline;
pub mod reports;
pub mod scenario_dir;
pub mod table;

pub use error::Error;
