mod support;

use std::time::Instant;

use lvse_core::rng::seeded;
use support::{elbo_gradcheck, mlp_gradcheck};

#[test]
fn mlp_gradients_match_finite_differences() {
    let mut rng = seeded(101);
    let start = Instant::now();
    let worst = (0..50).map(|_| mlp_gradcheck(&mut rng)).fold(0.0, f64::max);
    assert!(worst < 1e-4, "max relative error {worst:e}");
    assert!(start.elapsed().as_secs_f64() < 30.0);
}

#[test]
fn elbo_gradients_match_finite_differences() {
    let mut rng = seeded(202);
    let worst = (0..50).map(|_| elbo_gradcheck(&mut rng)).fold(0.0, f64::max);
    assert!(worst < 1e-4, "max relative error {worst:e}");
}
