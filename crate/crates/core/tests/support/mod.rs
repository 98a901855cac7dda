//! Oracles shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

use lvse_core::bnn::{elbo_loss_and_grad, kl_to_standard_normal, BnnConfig, BnnModel, VariationalParams};
use lvse_core::dataset::{Column, FeatureMatrix, Provenance, SplitSpec};
use lvse_core::grid::{BusKind, NetworkModel};
use lvse_core::nn::{backward, forward, MlpSpec, Tape};
use lvse_core::rng::{seeded, Rng};
use lvse_core::stats::{pearson, softplus};
use lvse_core::time::Timestamp;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::StandardNormal;

/// Newton-Raphson in rectangular coordinates on the full bus admittance
/// matrix. Returns bus voltages with the slack at 1.0.
pub fn newton_raphson(net: &NetworkModel, loads: &[Complex64]) -> Vec<Complex64> {
    let n = net.len();
    let slack = net.slack();
    let mut y = vec![vec![Complex64::default(); n]; n];
    for l in net.lines() {
        let g = 1.0 / l.impedance();
        y[l.from_bus][l.from_bus] += g;
        y[l.to_bus][l.to_bus] += g;
        y[l.from_bus][l.to_bus] -= g;
        y[l.to_bus][l.from_bus] -= g;
    }
    let unknown: Vec<usize> = (0..n).filter(|&b| b != slack).collect();
    let m = unknown.len();
    let mut v = vec![Complex64::new(1.0, 0.0); n];
    for _ in 0..50 {
        let current: Vec<Complex64> = (0..n).map(|i| (0..n).map(|j| y[i][j] * v[j]).sum()).collect();
        // injected power must equal minus the load
        let mut f = DVector::zeros(2 * m);
        for (r, &i) in unknown.iter().enumerate() {
            let s = v[i] * current[i].conj() + loads[i];
            f[r] = s.re;
            f[m + r] = s.im;
        }
        if f.amax() < 1e-13 {
            break;
        }
        let mut jac = DMatrix::zeros(2 * m, 2 * m);
        for (r, &i) in unknown.iter().enumerate() {
            for (c, &j) in unknown.iter().enumerate() {
                let own = if i == j { current[i].conj() } else { Complex64::default() };
                let de = own + v[i] * y[i][j].conj();
                let df = Complex64::i() * own - Complex64::i() * v[i] * y[i][j].conj();
                jac[(r, c)] = de.re;
                jac[(m + r, c)] = de.im;
                jac[(r, m + c)] = df.re;
                jac[(m + r, m + c)] = df.im;
            }
        }
        let step = jac.lu().solve(&f).expect("non-singular Jacobian");
        for (c, &j) in unknown.iter().enumerate() {
            v[j] -= Complex64::new(step[c], step[m + c]);
        }
    }
    v
}

/// Random but feasible loads on the reference network: aggregate
/// substations up to 3 pu, LV nodes up to 0.6 pu, lagging power factor.
pub fn random_loads(net: &NetworkModel, rng: &mut Rng) -> Vec<Complex64> {
    net.buses()
        .iter()
        .map(|b| {
            let pmax = match b.kind {
                BusKind::Slack => return Complex64::default(),
                BusKind::MvAggregate => 3.0,
                BusKind::LvNode => 0.6,
            };
            let p = rng.random_range(0.0..pmax);
            Complex64::new(p, p * rng.random_range(0.0..0.5))
        })
        .collect()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn random_spec(rng: &mut Rng, output_dim: usize) -> MlpSpec {
    let d = rng.random_range(1..=6);
    let hidden: Vec<usize> = (0..2).map(|_| rng.random_range(2..=12)).collect();
    MlpSpec::new(d, &hidden, output_dim)
}

/// Max relative error between backprop and central differences of a
/// squared-error loss for one random network.
pub fn mlp_gradcheck(rng: &mut Rng) -> f64 {
    let k = rng.random_range(1..=4);
    let spec = random_spec(rng, k);
    let mut p = spec.init_params(rng);
    p.iter_mut().for_each(|w| *w += rng.random_range(-0.2..0.2));
    let rows = rng.random_range(1..=8);
    let x: Vec<f64> = (0..rows * spec.input_dim).map(|_| rng.random_range(-2.0..2.0)).collect();
    let t: Vec<f64> = (0..rows * k).map(|_| rng.random_range(-1.0..1.0)).collect();
    let loss = |p: &[f64]| -> f64 {
        let mut tape = Tape::default();
        forward(&spec, p, &x, rows, &mut tape).iter().zip(&t).map(|(a, b)| 0.5 * (a - b) * (a - b)).sum()
    };
    let mut tape = Tape::default();
    let out = forward(&spec, &p, &x, rows, &mut tape).to_vec();
    let up: Vec<f64> = out.iter().zip(&t).map(|(a, b)| a - b).collect();
    let mut g = vec![0.0; p.len()];
    backward(&spec, &p, &mut tape, &up, &mut g);
    max_fd_error(&p, &g, loss)
}

fn max_fd_error(p: &[f64], g: &[f64], f: impl Fn(&[f64]) -> f64) -> f64 {
    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut q = p.to_vec();
    for i in 0..p.len() {
        q[i] = p[i] + h;
        let up = f(&q);
        q[i] = p[i] - h;
        let down = f(&q);
        q[i] = p[i];
        worst = worst.max(rel_err((up - down) / (2.0 * h), g[i]));
    }
    worst
}

/// Same check for the negative ELBO with frozen noise, over both `mu` and
/// `rho`.
pub fn elbo_gradcheck(rng: &mut Rng) -> f64 {
    let k = rng.random_range(1..=3);
    let spec = random_spec(rng, 2 * k);
    let mut vp = VariationalParams::init(&spec, 0.05, 0.01, rng);
    vp.rho.iter_mut().for_each(|r| *r += rng.random_range(-1.0..1.0));
    let noise: Vec<f64> = (0..vp.len()).map(|_| rng.sample(StandardNormal)).collect();
    let rows = rng.random_range(1..=8);
    let x: Vec<f64> = (0..rows * spec.input_dim).map(|_| rng.random_range(-2.0..2.0)).collect();
    let y: Vec<f64> = (0..rows * k).map(|_| rng.random_range(-1.0..1.0)).collect();
    let kl_scale = rng.random_range(0.0..0.1);
    let n = vp.len();
    let eval = |theta: &[f64], gm: &mut [f64], gr: &mut [f64]| {
        let v = VariationalParams { mu: theta[..n].to_vec(), rho: theta[n..].to_vec() };
        elbo_loss_and_grad(&spec, &v, &noise, &x, &y, rows, kl_scale, gm, gr)
    };
    let theta: Vec<f64> = vp.mu.iter().chain(&vp.rho).copied().collect();
    let mut g = vec![0.0; 2 * n];
    let (gm, gr) = g.split_at_mut(n);
    eval(&theta, gm, gr);
    max_fd_error(&theta, &g, |t| eval(t, &mut vec![0.0; n], &mut vec![0.0; n]))
}

/// Relative error of the closed-form KL against a Monte-Carlo estimate
/// with `samples` draws, for one random vector of `dim` parameters.
pub fn kl_mc_error(rng: &mut Rng, dim: usize, samples: usize) -> f64 {
    let mu: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect();
    let rho: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..1.0)).collect();
    let vp = VariationalParams { mu, rho };
    let sigma: Vec<f64> = vp.rho.iter().map(|&r| softplus(r)).collect();
    let exact = kl_to_standard_normal(&vp);
    let mut total = 0.0;
    for _ in 0..samples {
        // log q(w) - log p(w) at w = mu + sigma * eps
        let mut diff = 0.0;
        for i in 0..dim {
            let e: f64 = rng.sample(StandardNormal);
            let w = vp.mu[i] + sigma[i] * e;
            diff += -sigma[i].ln() - 0.5 * e * e + 0.5 * w * w;
        }
        total += diff;
    }
    let estimate = total / samples as f64;
    (estimate - exact).abs() / exact
}

pub fn toy_matrix(x: Vec<f64>, d: usize, y: Vec<f64>, k: usize) -> FeatureMatrix {
    let n = y.len() / k;
    let columns = (0..d)
        .map(|i| Column { name: format!("x{i}"), provenance: Provenance::External, lag_minutes: 0 })
        .collect();
    let names = (0..k).map(|j| format!("y{j}")).collect();
    let ts = (0..n as u32).map(|i| Timestamp(5 * i)).collect();
    FeatureMatrix::new(columns, names, x, y, ts, None).expect("valid toy matrix")
}

/// y = sin(2 pi x) + (0.05 + 0.25 x) eps with x uniform on [0, 1]; rows are
/// shuffled so the chronological split is a random one.
pub fn heteroscedastic_toy(n: usize, seed: u64) -> (FeatureMatrix, Vec<f64>) {
    let mut rng = seeded(seed);
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let sd: Vec<f64> = x.iter().map(|x| 0.05 + 0.25 * x).collect();
    let y: Vec<f64> = x
        .iter()
        .zip(&sd)
        .map(|(x, s)| (2.0 * std::f64::consts::PI * x).sin() + s * rng.sample::<f64, _>(StandardNormal))
        .collect();
    (toy_matrix(x, 1, y, 1), sd)
}

pub struct ToyOutcome {
    pub coverage: f64,
    pub sigma_pearson: f64,
}

/// Trains the BNN on the heteroscedastic toy and scores the test split.
pub fn heteroscedastic_calibration() -> ToyOutcome {
    let (fm, sd) = heteroscedastic_toy(4000, 11);
    let (train, val, test) = fm.split(&SplitSpec::default()).expect("enough rows");
    let cfg = BnnConfig {
        hidden: vec![12, 12],
        epochs: 300,
        patience: Some(60),
        lr: 3e-3,
        mean_warmup_epochs: 50,
        refit: false,
        seed: 5,
        ..BnnConfig::default()
    };
    let model = BnnModel::fit(&train, &val, &cfg).expect("training succeeds");
    let s = model.predict(test.inputs(), 500, 0.1, 21).expect("predict");
    let y = test.targets();
    let inside = (0..y.len()).filter(|&i| s.lower[i] <= y[i] && y[i] <= s.upper[i]).count();
    let sigma_hat: Vec<f64> = s.aleatoric.iter().map(|v| v.sqrt()).collect();
    let truth = &sd[test.range()];
    ToyOutcome { coverage: inside as f64 / y.len() as f64, sigma_pearson: pearson(&sigma_hat, truth) }
}
