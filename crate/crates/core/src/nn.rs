//! Dense tanh MLP over a flat parameter vector, with batched backprop and
//! Adam.
//!
//! Parameters are laid out layer by layer: the weight matrix (`out x in`,
//! row-major) followed by the bias vector.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NnError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub output_dim: usize,
}

/// Position of one layer inside the flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerLayout {
    pub inputs: usize,
    pub outputs: usize,
    pub weight_offset: usize,
    pub bias_offset: usize,
}

/// Named block of the parameter vector, for serialized index maps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamBlock {
    pub name: String,
    pub offset: usize,
    pub shape: Vec<usize>,
}

impl MlpSpec {
    pub fn new(input_dim: usize, hidden: &[usize], output_dim: usize) -> Self {
        MlpSpec { input_dim, hidden: hidden.to_vec(), output_dim }
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim];
        w.extend_from_slice(&self.hidden);
        w.push(self.output_dim);
        w
    }

    pub fn layers(&self) -> Vec<LayerLayout> {
        let widths = self.widths();
        let mut offset = 0;
        widths
            .windows(2)
            .map(|w| {
                let layout = LayerLayout {
                    inputs: w[0],
                    outputs: w[1],
                    weight_offset: offset,
                    bias_offset: offset + w[0] * w[1],
                };
                offset += w[0] * w[1] + w[1];
                layout
            })
            .collect()
    }

    /// Validates a parameter vector and an input length.
    pub fn check(&self, params: &[f64], input_len: usize) -> Result<(), NnError> {
        if params.len() != self.param_count() {
            return Err(NnError::DimensionMismatch { expected: self.param_count(), got: params.len() });
        }
        if input_len != self.input_dim {
            return Err(NnError::DimensionMismatch { expected: self.input_dim, got: input_len });
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.widths().windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn index_map(&self) -> Vec<ParamBlock> {
        self.layers()
            .iter()
            .enumerate()
            .flat_map(|(i, l)| {
                [
                    ParamBlock { name: format!("layer{i}.weight"), offset: l.weight_offset, shape: vec![l.outputs, l.inputs] },
                    ParamBlock { name: format!("layer{i}.bias"), offset: l.bias_offset, shape: vec![l.outputs] },
                ]
            })
            .collect()
    }

    /// Uniform `±1/sqrt(fan_in)` weights, zero biases.
    pub fn init_params<R: rand::Rng>(&self, rng: &mut R) -> Vec<f64> {
        let mut p = vec![0.0; self.param_count()];
        for l in self.layers() {
            let bound = 1.0 / (l.inputs as f64).sqrt();
            for w in &mut p[l.weight_offset..l.bias_offset] {
                *w = rng.random_range(-bound..bound);
            }
        }
        p
    }
}

/// Activations kept from the last forward pass, plus scratch buffers.
#[derive(Clone, Debug, Default)]
pub struct Tape {
    rows: usize,
    /// `acts[0]` is the input batch, `acts[l]` the output of layer `l-1`.
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
    /// Transposed (`in x out`) weights or weight gradients of one layer.
    wt: Vec<f64>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        self.acts.last().map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
}

// The kernels below work on `in x out` transposed weights so the innermost
// loops run over contiguous output vectors.
fn transpose_into(w: &[f64], outputs: usize, inputs: usize, wt: &mut Vec<f64>) {
    wt.clear();
    wt.resize(w.len(), 0.0);
    for o in 0..outputs {
        for i in 0..inputs {
            wt[i * outputs + o] = w[o * inputs + i];
        }
    }
}

const TILE: usize = 64;

/// Dot product with four independent partial sums.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Forward pass of `rows` inputs (row-major in `x`); hidden layers use tanh,
/// the output layer is linear. Returns the `rows x output_dim` outputs.
pub fn forward<'t>(spec: &MlpSpec, params: &[f64], x: &[f64], rows: usize, tape: &'t mut Tape) -> &'t [f64] {
    debug_assert_eq!(params.len(), spec.param_count());
    debug_assert_eq!(x.len(), rows * spec.input_dim);
    let layers = spec.layers();
    tape.rows = rows;
    tape.acts.resize_with(layers.len() + 1, Vec::new);
    tape.acts[0].clear();
    tape.acts[0].extend_from_slice(x);
    let last = layers.len() - 1;
    for (li, l) in layers.iter().enumerate() {
        transpose_into(&params[l.weight_offset..l.bias_offset], l.outputs, l.inputs, &mut tape.wt);
        let wt = &tape.wt;
        let (before, after) = tape.acts.split_at_mut(li + 1);
        let input = &before[li];
        let out = &mut after[0];
        out.clear();
        out.resize(rows * l.outputs, 0.0);
        let b = &params[l.bias_offset..l.bias_offset + l.outputs];
        for (xi, yo) in input.chunks_exact(l.inputs).zip(out.chunks_exact_mut(l.outputs)) {
            yo.copy_from_slice(b);
            for (&xv, wrow) in xi.iter().zip(wt.chunks_exact(l.outputs)) {
                for (y, w) in yo.iter_mut().zip(wrow) {
                    *y += xv * w;
                }
            }
        }
        if li != last {
            out.iter_mut().for_each(|y| *y = y.tanh());
        }
    }
    tape.output()
}

/// Checked single-input forward pass.
pub fn predict_one(spec: &MlpSpec, params: &[f64], x: &[f64]) -> Result<Vec<f64>, NnError> {
    spec.check(params, x.len())?;
    let mut tape = Tape::default();
    Ok(forward(spec, params, x, 1, &mut tape).to_vec())
}

/// Backward pass for the batch on `tape`: adds `d loss / d params` to
/// `grads` given `grad_out = d loss / d outputs`.
pub fn backward(spec: &MlpSpec, params: &[f64], tape: &mut Tape, grad_out: &[f64], grads: &mut [f64]) {
    backward_impl(spec, params, tape, grad_out, grads, false);
}

/// Like [`backward`], also returning `d loss / d inputs` (`rows x input_dim`).
pub fn backward_with_input(
    spec: &MlpSpec,
    params: &[f64],
    tape: &mut Tape,
    grad_out: &[f64],
    grads: &mut [f64],
) -> Vec<f64> {
    backward_impl(spec, params, tape, grad_out, grads, true);
    tape.delta.clone()
}

fn backward_impl(spec: &MlpSpec, params: &[f64], tape: &mut Tape, grad_out: &[f64], grads: &mut [f64], want_input: bool) {
    let layers = spec.layers();
    let rows = tape.rows;
    debug_assert_eq!(grad_out.len(), rows * spec.output_dim);
    let Tape { acts, delta, delta_prev, wt, .. } = tape;
    delta.clear();
    delta.extend_from_slice(grad_out);
    for (li, l) in layers.iter().enumerate().rev() {
        let input = &acts[li];
        // weight gradient, accumulated transposed
        wt.clear();
        wt.resize(l.inputs * l.outputs, 0.0);
        let gb = &mut grads[l.bias_offset..l.bias_offset + l.outputs];
        for d in delta.chunks_exact(l.outputs) {
            for (g, dv) in gb.iter_mut().zip(d) {
                *g += dv;
            }
        }
        // tiled over outputs so the accumulator block stays in cache
        for lo in (0..l.outputs).step_by(TILE) {
            let hi = (lo + TILE).min(l.outputs);
            for (xi, d) in input.chunks_exact(l.inputs).zip(delta.chunks_exact(l.outputs)) {
                for (&xv, grow) in xi.iter().zip(wt.chunks_exact_mut(l.outputs)) {
                    for (g, dv) in grow[lo..hi].iter_mut().zip(&d[lo..hi]) {
                        *g += xv * dv;
                    }
                }
            }
        }
        let gw = &mut grads[l.weight_offset..l.bias_offset];
        for o in 0..l.outputs {
            for i in 0..l.inputs {
                gw[o * l.inputs + i] += wt[i * l.outputs + o];
            }
        }
        if li == 0 && !want_input {
            break;
        }
        delta_prev.clear();
        delta_prev.resize(rows * l.inputs, 0.0);
        transpose_into(&params[l.weight_offset..l.bias_offset], l.outputs, l.inputs, wt);
        for (d, dp) in delta.chunks_exact(l.outputs).zip(delta_prev.chunks_exact_mut(l.inputs)) {
            for (p, wrow) in dp.iter_mut().zip(wt.chunks_exact(l.outputs)) {
                *p = dot(d, wrow);
            }
        }
        // the input of a non-first layer is a tanh output
        if li > 0 {
            for (p, a) in delta_prev.iter_mut().zip(input.iter()) {
                *p *= 1.0 - a * a;
            }
        }
        core::mem::swap(delta, delta_prev);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn steps(&self) -> u32 {
        self.t
    }

    /// One bias-corrected update of `params` in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        debug_assert_eq!(params.len(), self.m.len());
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}
