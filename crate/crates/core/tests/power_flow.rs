mod support;

use std::time::Instant;

use lvse_core::grid::{build_reference_network, ground_truth_series, solve_power_flow, InjectionSeries};
use lvse_core::rng::seeded;
use lvse_core::time::Timestamp;
use num_complex::Complex64;
use support::{newton_raphson, random_loads};

#[test]
fn sweep_agrees_with_newton_on_random_loads() {
    let net = build_reference_network();
    let mut rng = seeded(2024);
    let start = Instant::now();
    let mut worst_v = 0.0f64;
    for _ in 0..200 {
        let loads = random_loads(&net, &mut rng);
        let sol = solve_power_flow(&net, &loads).unwrap();
        assert!(sol.max_mismatch < 1e-8);
        assert_eq!(sol.voltages[net.slack()], Complex64::new(1.0, 0.0));
        let oracle = newton_raphson(&net, &loads);
        for (a, b) in sol.voltages.iter().zip(&oracle) {
            worst_v = worst_v.max((a.norm() - b.norm()).abs());
        }
        // residual re-derived from the returned voltages and the line currents
        for b in 0..net.len() {
            if b == net.slack() {
                continue;
            }
            let inflow = sol.line_current(&net, b).unwrap();
            let outflow: Complex64 = net.children(b).iter().map(|&c| sol.line_current(&net, c).unwrap()).sum();
            let drawn = sol.voltages[b] * (inflow - outflow).conj();
            assert!((drawn - loads[b]).norm() < 1e-8, "bus {b}");
        }
    }
    assert!(worst_v < 1e-6, "max |V| gap {worst_v:e}");
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn heavier_leaf_load_lowers_its_voltage() {
    let net = build_reference_network();
    let mut rng = seeded(8);
    for _ in 0..20 {
        let mut loads = random_loads(&net, &mut rng);
        for &leaf in &[9usize, 12] {
            let before = solve_power_flow(&net, &loads).unwrap().voltages[leaf].norm();
            loads[leaf] *= 2.0;
            let after = solve_power_flow(&net, &loads).unwrap();
            assert!(after.voltages[leaf].norm() <= before);
            let oracle = newton_raphson(&net, &loads)[leaf].norm();
            assert!((oracle - after.voltages[leaf].norm()).abs() < 1e-6);
        }
    }
}

#[test]
fn series_matches_snapshots_and_is_deterministic() {
    let net = build_reference_network();
    let mut rng = seeded(3);
    let rows: Vec<Vec<Complex64>> = (0..4).map(|_| random_loads(&net, &mut rng)).collect();
    let series = InjectionSeries::from_rows(net.len(), rows.concat()).unwrap();
    let ts: Vec<Timestamp> = (0..4).map(|i| Timestamp(5 * i)).collect();
    let truth = ground_truth_series(&net, &ts, &series).unwrap();
    for (t, loads) in rows.iter().enumerate() {
        let sol = solve_power_flow(&net, loads).unwrap();
        let expect: Vec<f64> = net.monitored().iter().map(|&b| sol.voltages[b].norm()).collect();
        assert_eq!(truth.row(t), expect.as_slice());
    }
    assert_eq!(ground_truth_series(&net, &ts, &series).unwrap(), truth);
}
