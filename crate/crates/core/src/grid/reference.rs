//! Synthetic reference network: every electrical constant lives here.
//!
//! One 60/10 kV primary substation (slack, 1.0 pu) feeds six 10/0.4 kV
//! secondary substations over two MV feeders. Five of them are aggregate PQ
//! buses. The sixth is expanded into its LV busbar and two radial 0.4 kV
//! feeders with six monitored nodes and two side branches:
//!
//! ```text
//!  SubP ─┬─ SS1 ─┬─ SS2
//!        │       └─ SubS ─┬─ N1 ─┬─ N2 ── N3
//!        │                │      └─ B1
//!        │                └─ N4 ── N5 ─┬─ N6
//!        │                             └─ B2
//!        └─ SS3 ── SS4 ── SS5
//! ```
//!
//! Power base 100 kVA. LV impedance base 0.4² / 0.1 = 1.6 Ω, MV base
//! 10² / 0.1 = 1000 Ω. LV cables are 240 mm² Al with R = 0.16 Ω/km and
//! X = 0.07 Ω/km (R/X ≈ 2.3).

use alloc::string::ToString;
use alloc::vec::Vec;

use super::{Bus, BusKind, Line, NetworkModel};

pub const BASE_KVA: f64 = 100.0;

/// LV cable resistance per metre, pu.
const LV_R_PER_M: f64 = 0.16e-3 / 1.6;
/// LV cable reactance per metre, pu.
const LV_X_PER_M: f64 = 0.07e-3 / 1.6;

/// Primary transformer (16 MVA, uk = 10 %, X/R = 8) plus the first MV section.
const PRIMARY_FEEDER: (f64, f64) = (0.0012, 0.0068);
/// Short MV sections between adjacent secondary substations.
const MV_SECTION: (f64, f64) = (0.0004, 0.0003);
/// 630 kVA secondary transformer (uk = 4 %, ukr = 1 %) plus its MV tap.
const SUBS_TRANSFORMER: (f64, f64) = (0.0020, 0.0066);

/// Customers per adjacent substation and per expanded LV node at the
/// default population of 564 customers.
const AGGREGATE_SLOTS: [u32; 5] = [104, 102, 106, 100, 104];
const LV_NODE_SLOTS: u32 = 6;

pub const DEFAULT_CUSTOMERS: u32 = 564;

fn lv(from: usize, to: usize, metres: f64) -> Line {
    Line { from_bus: from, to_bus: to, r: LV_R_PER_M * metres, x: LV_X_PER_M * metres }
}

fn mv(from: usize, to: usize, (r, x): (f64, f64)) -> Line {
    Line { from_bus: from, to_bus: to, r, x }
}

/// Deterministic synthetic MV/LV reference network.
pub fn build_reference_network() -> NetworkModel {
    use BusKind::*;
    // (label, kind, monitored, customer slots)
    let table: [(&str, BusKind, bool, u32); 15] = [
        ("SubP", Slack, false, 0),
        ("SS1", MvAggregate, false, AGGREGATE_SLOTS[0]),
        ("SS2", MvAggregate, false, AGGREGATE_SLOTS[1]),
        ("SubS", LvNode, false, 0),
        ("SS3", MvAggregate, false, AGGREGATE_SLOTS[2]),
        ("SS4", MvAggregate, false, AGGREGATE_SLOTS[3]),
        ("SS5", MvAggregate, false, AGGREGATE_SLOTS[4]),
        ("N1", LvNode, true, LV_NODE_SLOTS),
        ("N2", LvNode, true, LV_NODE_SLOTS),
        ("N3", LvNode, true, LV_NODE_SLOTS),
        ("N4", LvNode, true, LV_NODE_SLOTS),
        ("N5", LvNode, true, LV_NODE_SLOTS),
        ("N6", LvNode, true, LV_NODE_SLOTS),
        ("B1", LvNode, false, LV_NODE_SLOTS),
        ("B2", LvNode, false, LV_NODE_SLOTS),
    ];
    let buses: Vec<Bus> = table
        .iter()
        .enumerate()
        .map(|(id, &(label, kind, monitored, slots))| Bus {
            id,
            label: label.to_string(),
            kind,
            monitored,
            customer_slots: slots,
        })
        .collect();

    let lines = alloc::vec![
        mv(0, 1, PRIMARY_FEEDER),
        mv(1, 2, MV_SECTION),
        mv(1, 3, SUBS_TRANSFORMER),
        mv(0, 4, PRIMARY_FEEDER),
        mv(4, 5, MV_SECTION),
        mv(5, 6, MV_SECTION),
        lv(3, 7, 120.0),
        lv(7, 8, 100.0),
        lv(8, 9, 90.0),
        lv(3, 10, 140.0),
        lv(10, 11, 100.0),
        lv(11, 12, 80.0),
        lv(7, 13, 80.0),
        lv(11, 14, 70.0),
    ];

    NetworkModel::new(buses, lines, 3).expect("reference network is valid")
}
