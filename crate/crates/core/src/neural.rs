//! MLP policy from a demand history window to split ratios.
//!
//! Input is the off-diagonal entries of `h` demand matrices in time order,
//! divided by `input_scale`. Hidden layers use ReLU, the output layer a
//! logistic sigmoid, and each SD group is then normalized to sum to one.
//!
//! The training loss for a target matrix `D` is
//! `MLU(r, D) + gamma * sum_sd w_sd * S_sd^max(r)` with
//! `w_sd = var_sd / sum var`. Both maxima are differentiated through their
//! argmax only (lowest index wins ties).

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::rng::{seeded, TeRng};
use crate::te::{self, TeConfig, TeError};
use crate::topology::{Incidence, PathSets};
use crate::traffic::{compute_stats, DemandMatrix, TrafficStats, TrafficTrace};

pub const DEFAULT_HIDDEN: [usize; 5] = [128; 5];

/// Groups whose sigmoid outputs sum below this fall back to a uniform split.
const MIN_GROUP_SUM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NeuralError {
    #[error("expected {expected} for {what}, got {got}")]
    Shape { what: &'static str, expected: usize, got: usize },
    #[error("trace of length {len} is too short for window {h} (need more than h + 2 snapshots)")]
    InsufficientData { len: usize, h: usize },
    #[error("invalid option: {0}")]
    InvalidOption(&'static str),
    #[error(transparent)]
    Te(#[from] TeError),
}

/// Dense layer: `out = weights * in + bias`, weights row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs, weights: vec![0.0; inputs * outputs], bias: vec![0.0; outputs] }
    }

    fn xavier(inputs: usize, outputs: usize, rng: &mut TeRng) -> Self {
        let a = libm::sqrt(6.0 / (inputs + outputs) as f64);
        let weights = (0..inputs * outputs).map(|_| rng.random_range(-a..a)).collect();
        Self { inputs, outputs, weights, bias: vec![0.0; outputs] }
    }

    fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.inputs..(o + 1) * self.inputs]
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend((0..self.outputs).map(|o| dot(self.row(o), x) + self.bias[o]));
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn sigmoid(z: f64) -> f64 {
    let s = 1.0 / (1.0 + libm::exp(-z));
    if s.is_nan() {
        0.0
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub h: usize,
    pub num_nodes: usize,
    pub input_scale: f64,
    pub gamma: f64,
    pub layers: Vec<Layer>,
    /// Path offsets of each SD group, length `num_sd + 1`.
    groups: Vec<usize>,
}

/// Per-layer activations kept for backpropagation.
struct Activations {
    /// `acts[0]` is the scaled input, `acts[i]` the ReLU output of hidden layer `i`.
    acts: Vec<Vec<f64>>,
    sig: Vec<f64>,
    ratios: Vec<f64>,
    group_sums: Vec<f64>,
}

impl Mlp {
    /// Xavier-uniform weights and zero biases drawn from `seed`.
    pub fn new(ps: &PathSets, h: usize, hidden: &[usize], seed: u64) -> Result<Self, NeuralError> {
        Self::init(ps, h, hidden, &mut seeded(seed))
    }

    fn init(ps: &PathSets, h: usize, hidden: &[usize], rng: &mut TeRng) -> Result<Self, NeuralError> {
        if h == 0 {
            return Err(NeuralError::InvalidOption("window length must be at least 1"));
        }
        if hidden.contains(&0) {
            return Err(NeuralError::InvalidOption("hidden layer widths must be positive"));
        }
        let n = ps.num_nodes();
        let mut dims = vec![h * n * (n - 1)];
        dims.extend_from_slice(hidden);
        dims.push(ps.num_paths());
        let layers = dims.windows(2).map(|w| Layer::xavier(w[0], w[1], rng)).collect();
        Ok(Self { h, num_nodes: n, input_scale: 1.0, gamma: 0.0, layers, groups: group_offsets(ps) })
    }

    /// Rebuilds a model from stored parameters, checking them against `ps`.
    pub fn from_layers(
        h: usize,
        num_nodes: usize,
        input_scale: f64,
        gamma: f64,
        layers: Vec<Layer>,
        ps: &PathSets,
    ) -> Result<Self, NeuralError> {
        if num_nodes != ps.num_nodes() {
            return Err(NeuralError::Shape { what: "model nodes", expected: ps.num_nodes(), got: num_nodes });
        }
        if !(input_scale > 0.0 && input_scale.is_finite()) || !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(NeuralError::InvalidOption("input_scale must be positive and gamma nonnegative"));
        }
        if layers.is_empty() {
            return Err(NeuralError::InvalidOption("model has no layers"));
        }
        let mut expected = h * num_nodes * num_nodes.saturating_sub(1);
        for l in &layers {
            if l.inputs != expected {
                return Err(NeuralError::Shape { what: "layer inputs", expected, got: l.inputs });
            }
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(NeuralError::Shape { what: "layer weights", expected: l.inputs * l.outputs, got: l.weights.len() });
            }
            if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(NeuralError::InvalidOption("non-finite parameter"));
            }
            expected = l.outputs;
        }
        if expected != ps.num_paths() {
            return Err(NeuralError::Shape { what: "model outputs", expected: ps.num_paths(), got: expected });
        }
        Ok(Self { h, num_nodes, input_scale, gamma, layers, groups: group_offsets(ps) })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn num_paths(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    fn input_vector(&self, window: &[DemandMatrix]) -> Result<Vec<f64>, NeuralError> {
        if window.len() != self.h {
            return Err(NeuralError::Shape { what: "window length", expected: self.h, got: window.len() });
        }
        let n = self.num_nodes;
        let mut x = Vec::with_capacity(self.input_dim());
        for dm in window {
            if dm.num_nodes() != n {
                return Err(NeuralError::Shape { what: "window matrix nodes", expected: n, got: dm.num_nodes() });
            }
            x.extend(dm.off_diagonal().map(|v| v / self.input_scale));
        }
        Ok(x)
    }

    fn run(&self, x: Vec<f64>) -> Activations {
        let last = self.layers.len() - 1;
        let mut acts = Vec::with_capacity(self.layers.len());
        acts.push(x);
        let mut z = Vec::new();
        for layer in &self.layers[..last] {
            layer.apply(&acts[acts.len() - 1], &mut z);
            acts.push(z.iter().map(|&v| v.max(0.0)).collect());
        }
        self.layers[last].apply(&acts[acts.len() - 1], &mut z);
        let sig: Vec<f64> = z.iter().map(|&v| sigmoid(v)).collect();
        let mut ratios = vec![0.0; sig.len()];
        let mut group_sums = Vec::with_capacity(self.groups.len() - 1);
        for g in self.groups.windows(2) {
            let sum: f64 = sig[g[0]..g[1]].iter().sum();
            group_sums.push(sum);
            if sum < MIN_GROUP_SUM {
                let u = 1.0 / (g[1] - g[0]) as f64;
                ratios[g[0]..g[1]].iter_mut().for_each(|r| *r = u);
            } else {
                for p in g[0]..g[1] {
                    ratios[p] = sig[p] / sum;
                }
            }
        }
        Activations { acts, sig, ratios, group_sums }
    }

    pub fn forward(&self, window: &[DemandMatrix]) -> Result<TeConfig, NeuralError> {
        let x = self.input_vector(window)?;
        Ok(TeConfig::from_ratios_unchecked(self.run(x).ratios))
    }

    /// Backpropagates `d_ratios` (dL/dr) and accumulates parameter gradients into `grads`.
    fn accumulate(&self, a: &Activations, d_ratios: &[f64], scale: f64, grads: &mut [Layer]) {
        // Through group normalization and the sigmoid.
        let mut delta = vec![0.0; d_ratios.len()];
        for (gi, g) in self.groups.windows(2).enumerate() {
            let sum = a.group_sums[gi];
            if sum < MIN_GROUP_SUM {
                continue;
            }
            let mean: f64 = (g[0]..g[1]).map(|p| d_ratios[p] * a.ratios[p]).sum();
            for p in g[0]..g[1] {
                let s = a.sig[p];
                delta[p] = scale * (d_ratios[p] - mean) / sum * s * (1.0 - s);
            }
        }
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let input = &a.acts[li];
            let grad = &mut grads[li];
            for (o, &d) in delta.iter().enumerate() {
                if d != 0.0 {
                    axpy(d, input, &mut grad.weights[o * layer.inputs..(o + 1) * layer.inputs]);
                    grad.bias[o] += d;
                }
            }
            if li == 0 {
                break;
            }
            let mut prev = vec![0.0; layer.inputs];
            for (o, &d) in delta.iter().enumerate() {
                if d != 0.0 {
                    axpy(d, layer.row(o), &mut prev);
                }
            }
            // ReLU: zero where the activation was clamped.
            for (p, &act) in prev.iter_mut().zip(input) {
                if act <= 0.0 {
                    *p = 0.0;
                }
            }
            delta = prev;
        }
    }

    fn zero_grads(&self) -> Vec<Layer> {
        self.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect()
    }
}

fn group_offsets(ps: &PathSets) -> Vec<usize> {
    let mut offsets: Vec<usize> = ps.groups().map(|g| g.start).collect();
    offsets.push(ps.num_paths());
    offsets
}

/// Variance weights over SD pairs in path-set order, normalized to sum to 1
/// (all zero when every variance is zero).
pub fn loss_weights(stats: &TrafficStats, ps: &PathSets) -> Vec<f64> {
    let var: Vec<f64> = ps.sd_pairs().iter().map(|&(s, d)| stats.variance_of(s, d)).collect();
    let total: f64 = var.iter().sum();
    if total > 0.0 {
        var.iter().map(|v| v / total).collect()
    } else {
        vec![0.0; var.len()]
    }
}

/// Loss of `ratios` on `dm`; writes dL/dr into `grad`.
fn loss_and_grad(
    ratios: &[f64],
    dm: &DemandMatrix,
    weights: &[f64],
    gamma: f64,
    inc: &Incidence,
    ps: &PathSets,
    flow: &mut Vec<f64>,
    grad: &mut [f64],
) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    flow.resize(inc.num_constraints(), 0.0);
    te::constraint_flows(ratios, dm, inc, flow);
    let util: Vec<f64> = flow.iter().zip(inc.capacity()).map(|(f, c)| f / c).collect();
    let (e_star, mlu) = te::argmax(&util);
    let demand = dm.values();
    if !util.is_empty() {
        let inv_c = 1.0 / inc.capacity()[e_star];
        for p in 0..ratios.len() {
            if inc.path_constraints(p).contains(&e_star) {
                grad[p] = demand[inc.sd_demand_index()[inc.path_sd()[p]]] * inv_c;
            }
        }
    }
    let mut penalty = 0.0;
    if gamma != 0.0 {
        for (sd, g) in ps.groups().enumerate() {
            let w = weights[sd];
            if w == 0.0 {
                continue;
            }
            let sens: Vec<f64> = g.clone().map(|p| ratios[p] / ps.paths()[p].capacity).collect();
            let (i, s) = te::argmax(&sens);
            let p = g.start + i;
            penalty += w * s;
            grad[p] += gamma * w / ps.paths()[p].capacity;
        }
    }
    mlu + gamma * penalty
}

/// `MLU(config, dm) + gamma * sum_sd w_sd * S_sd^max` with normalized variance weights.
pub fn loss(
    config: &TeConfig,
    dm: &DemandMatrix,
    stats: &TrafficStats,
    gamma: f64,
    inc: &Incidence,
    ps: &PathSets,
) -> Result<f64, NeuralError> {
    check_shapes(config.ratios().len(), dm, inc, ps)?;
    let weights = loss_weights(stats, ps);
    let mut grad = vec![0.0; ps.num_paths()];
    Ok(loss_and_grad(config.ratios(), dm, &weights, gamma, inc, ps, &mut Vec::new(), &mut grad))
}

fn check_shapes(paths: usize, dm: &DemandMatrix, inc: &Incidence, ps: &PathSets) -> Result<(), NeuralError> {
    if paths != ps.num_paths() || inc.num_paths() != ps.num_paths() {
        return Err(NeuralError::Shape { what: "path count", expected: ps.num_paths(), got: paths });
    }
    if dm.num_nodes() != inc.num_nodes() {
        return Err(NeuralError::Shape { what: "demand matrix nodes", expected: inc.num_nodes(), got: dm.num_nodes() });
    }
    Ok(())
}

/// Loss of the model's output on `dm` and its subgradient with respect to every parameter.
pub fn backward(
    model: &Mlp,
    window: &[DemandMatrix],
    dm: &DemandMatrix,
    stats: &TrafficStats,
    gamma: f64,
    inc: &Incidence,
    ps: &PathSets,
) -> Result<(f64, Vec<Layer>), NeuralError> {
    check_shapes(model.num_paths(), dm, inc, ps)?;
    let weights = loss_weights(stats, ps);
    let a = model.run(model.input_vector(window)?);
    let mut d_ratios = vec![0.0; model.num_paths()];
    let l = loss_and_grad(&a.ratios, dm, &weights, gamma, inc, ps, &mut Vec::new(), &mut d_ratios);
    let mut grads = model.zero_grads();
    model.accumulate(&a, &d_ratios, 1.0, &mut grads);
    Ok((l, grads))
}

/// Smallest distance to a kink of the loss at this point: the relative gap
/// between the top two utilizations, between the top two sensitivities of any
/// penalized SD pair, and the smallest |pre-activation| of a hidden unit.
/// Finite-difference checks are only meaningful when this is comfortably
/// larger than the probe step.
pub fn kink_margin(
    model: &Mlp,
    window: &[DemandMatrix],
    dm: &DemandMatrix,
    stats: &TrafficStats,
    gamma: f64,
    inc: &Incidence,
    ps: &PathSets,
) -> Result<f64, NeuralError> {
    check_shapes(model.num_paths(), dm, inc, ps)?;
    let x = model.input_vector(window)?;
    let mut margin = f64::INFINITY;
    let mut act = x;
    let mut z = Vec::new();
    for layer in &model.layers[..model.layers.len() - 1] {
        layer.apply(&act, &mut z);
        margin = z.iter().fold(margin, |m, v| m.min(v.abs()));
        act = z.iter().map(|&v| v.max(0.0)).collect();
    }
    let config = model.forward(window)?;
    let load = te::evaluate(&config, dm, inc)?;
    margin = margin.min(top_two_gap(&load.utilization));
    if gamma != 0.0 {
        let weights = loss_weights(stats, ps);
        let sens = te::sensitivities(&config, ps);
        for (sd, g) in ps.groups().enumerate() {
            if weights[sd] > 0.0 {
                margin = margin.min(top_two_gap(&sens[g]));
            }
        }
    }
    Ok(margin)
}

fn top_two_gap(values: &[f64]) -> f64 {
    let (i, top) = te::argmax(values);
    let second = values.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v).fold(f64::NEG_INFINITY, f64::max);
    if second == f64::NEG_INFINITY || top == 0.0 {
        f64::INFINITY
    } else {
        (top - second) / top.abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Layer>,
    pub v: Vec<Layer>,
    pub t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(model: &Mlp, lr: f64) -> Self {
        Self { m: model.zero_grads(), v: model.zero_grads(), t: 0, lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }

    pub fn step(&mut self, model: &mut Mlp, grads: &[Layer]) {
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - libm::pow(b1, self.t as f64);
        let c2 = 1.0 - libm::pow(b2, self.t as f64);
        for (((layer, g), m), v) in model.layers.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            let params = layer.weights.iter_mut().chain(layer.bias.iter_mut());
            let gs = g.weights.iter().chain(&g.bias);
            let ms = m.weights.iter_mut().chain(m.bias.iter_mut());
            let vs = v.weights.iter_mut().chain(v.bias.iter_mut());
            for (((p, &gi), mi), vi) in params.zip(gs).zip(ms).zip(vs) {
                *mi = b1 * *mi + (1.0 - b1) * gi;
                *vi = b2 * *vi + (1.0 - b2) * gi * gi;
                *p -= self.lr * (*mi / c1) / (libm::sqrt(*vi / c2) + self.eps);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub h: usize,
    pub gamma: f64,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub seed: u64,
    /// Fraction of the trace used for training; the rest is held out.
    pub split: f64,
    pub hidden: Vec<usize>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self { h: 12, gamma: 0.0, epochs: 100, batch: 32, lr: 1e-3, seed: 0, split: 0.75, hidden: DEFAULT_HIDDEN.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingLog {
    /// Mean per-sample loss of each epoch, measured while the epoch ran.
    pub epoch_loss: Vec<f64>,
}

/// End of the training range for a trace of `len` snapshots.
pub fn split_point(len: usize, split: f64) -> usize {
    libm::floor(split * len as f64) as usize
}

/// Trains on the first `split` fraction of `trace`.
pub fn train(trace: &TrafficTrace, ps: &PathSets, inc: &Incidence, opts: &TrainOptions) -> Result<(Mlp, TrainingLog), NeuralError> {
    if !(opts.split > 0.0 && opts.split < 1.0) {
        return Err(NeuralError::InvalidOption("split must lie in (0, 1)"));
    }
    if trace.len() <= opts.h + 2 {
        return Err(NeuralError::InsufficientData { len: trace.len(), h: opts.h });
    }
    train_range(trace, 0..split_point(trace.len(), opts.split), ps, inc, opts)
}

/// Trains on snapshots `range` only: targets are `D_t` for `t` in
/// `range.start + h .. range.end`, statistics and input scale come from `range`.
pub fn train_range(
    trace: &TrafficTrace,
    range: Range<usize>,
    ps: &PathSets,
    inc: &Incidence,
    opts: &TrainOptions,
) -> Result<(Mlp, TrainingLog), NeuralError> {
    if opts.batch == 0 || !(opts.lr > 0.0) || !(opts.gamma >= 0.0 && opts.gamma.is_finite()) {
        return Err(NeuralError::InvalidOption("batch must be positive, lr positive, gamma nonnegative"));
    }
    if range.end > trace.len() || range.end < range.start + opts.h + 1 || range.len() < 2 {
        return Err(NeuralError::InsufficientData { len: range.len(), h: opts.h });
    }
    if trace.num_nodes() != ps.num_nodes() {
        return Err(NeuralError::Shape { what: "trace nodes", expected: ps.num_nodes(), got: trace.num_nodes() });
    }
    let snaps = trace.snapshots();
    let stats = compute_stats(trace, range.clone()).map_err(|_| NeuralError::InsufficientData { len: range.len(), h: opts.h })?;
    let weights = loss_weights(&stats, ps);

    let mut rng = seeded(opts.seed);
    let mut model = Mlp::init(ps, opts.h, &opts.hidden, &mut rng)?;
    model.gamma = opts.gamma;
    let max = snaps[range.clone()].iter().map(DemandMatrix::max_entry).fold(0.0, f64::max);
    model.input_scale = if max > 0.0 { max } else { 1.0 };

    let mut adam = AdamState::new(&model, opts.lr);
    let mut order: Vec<usize> = (range.start + opts.h..range.end).collect();
    let mut log = TrainingLog::default();
    let mut grads = model.zero_grads();
    let mut d_ratios = vec![0.0; model.num_paths()];
    let mut flow = Vec::new();
    for _ in 0..opts.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(opts.batch) {
            grads.iter_mut().for_each(|g| {
                g.weights.iter_mut().for_each(|v| *v = 0.0);
                g.bias.iter_mut().for_each(|v| *v = 0.0);
            });
            let scale = 1.0 / batch.len() as f64;
            for &t in batch {
                let x = model.input_vector(&snaps[t - opts.h..t])?;
                let a = model.run(x);
                total += loss_and_grad(&a.ratios, &snaps[t], &weights, opts.gamma, inc, ps, &mut flow, &mut d_ratios);
                model.accumulate(&a, &d_ratios, scale, &mut grads);
            }
            adam.step(&mut model, &grads);
        }
        log.epoch_loss.push(total / order.len() as f64);
    }
    Ok((model, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use crate::optimize::{omniscient, SolveOptions};
    use crate::te::fixtures::*;
    use crate::topology::{build_incidence, build_path_sets, fixtures::ring};
    use proptest::prelude::*;

    fn constant_trace(dm: DemandMatrix, len: usize) -> TrafficTrace {
        TrafficTrace::new(3, vec![dm; len]).unwrap()
    }

    fn small_opts(h: usize, gamma: f64, epochs: usize) -> TrainOptions {
        TrainOptions { h, gamma, epochs, batch: 8, lr: 1e-3, seed: 3, split: 0.75, hidden: vec![16, 16] }
    }

    #[test]
    fn zero_model_is_uniform() {
        let t = triangle_setup();
        let mut m = Mlp::new(&t.ps, 2, &[4], 1).unwrap();
        for l in &mut m.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        let out = m.forward(&[dm(1., 2., 3.), dm(3., 2., 1.)]).unwrap();
        assert_eq!(out, TeConfig::uniform(&t.ps));
    }

    #[test]
    fn forward_shape_errors() {
        let t = triangle_setup();
        let m = Mlp::new(&t.ps, 2, &[4], 1).unwrap();
        assert!(matches!(m.forward(&[dm(1., 1., 1.)]), Err(NeuralError::Shape { what: "window length", .. })));
        let big = DemandMatrix::zeros(4);
        assert!(matches!(m.forward(&[big.clone(), big]), Err(NeuralError::Shape { .. })));
        assert_eq!(m.input_dim(), 12);
        assert_eq!(m.num_paths(), 12);
    }

    #[test]
    fn loss_examples() {
        let t = triangle_setup();
        let cfg = scheme3(&t);
        let normal = dm(1., 1., 1.);
        let mut var = vec![0.0; 9];
        var[1 * 3 + 2] = 1.0;
        let stats = TrafficStats::from_variance(3, var);
        assert_eq!(loss(&cfg, &normal, &stats, 1.0, &t.inc, &t.ps).unwrap(), 1.0);
        assert_eq!(loss(&cfg, &normal, &stats, 0.0, &t.inc, &t.ps).unwrap(), 0.6875);
        let flat = TrafficStats::from_variance(3, vec![0.0; 9]);
        assert_eq!(loss(&cfg, &normal, &flat, 5.0, &t.inc, &t.ps).unwrap(), te::mlu(&cfg, &normal, &t.inc).unwrap());
    }

    #[test]
    fn single_path_gradient_vanishes() {
        let g = crate::topology::Graph::new(2, true, vec![crate::topology::Edge { src: 0, dst: 1, capacity: 1.0 }]).unwrap();
        let ps = build_path_sets(&g, 2).unwrap();
        let inc = build_incidence(&g, &ps);
        let m = Mlp::new(&ps, 1, &[3], 5).unwrap();
        let d = DemandMatrix::new(2, vec![0., 2., 0., 0.]).unwrap();
        let stats = TrafficStats::from_variance(2, vec![0.0; 4]);
        let (l, grads) = backward(&m, &[d.clone()], &d, &stats, 0.0, &inc, &ps).unwrap();
        assert_eq!(l, 2.0);
        assert!(grads.iter().all(|g| g.weights.iter().chain(&g.bias).all(|&v| v == 0.0)));
    }

    /// Central-difference check of `backward` on every parameter of a small model.
    fn finite_difference_error(m: &Mlp, window: &[DemandMatrix], target: &DemandMatrix, stats: &TrafficStats, gamma: f64, inc: &Incidence, ps: &PathSets) -> f64 {
        let (_, grads) = backward(m, window, target, stats, gamma, inc, ps).unwrap();
        let eval = |model: &Mlp| loss(&model.forward(window).unwrap(), target, stats, gamma, inc, ps).unwrap();
        let mut worst: f64 = 0.0;
        for li in 0..m.layers.len() {
            let nw = m.layers[li].weights.len();
            for k in 0..nw + m.layers[li].bias.len() {
                let mut probe = m.clone();
                let theta = get_param(m, li, k);
                let h = 1e-5 * theta.abs().max(1.0);
                set_param(&mut probe, li, k, theta + h);
                let up = eval(&probe);
                set_param(&mut probe, li, k, theta - h);
                let down = eval(&probe);
                let fd = (up - down) / (2.0 * h);
                let an = if k < nw { grads[li].weights[k] } else { grads[li].bias[k - nw] };
                let err = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-7);
                worst = worst.max(err);
            }
        }
        worst
    }

    fn get_param(m: &Mlp, li: usize, k: usize) -> f64 {
        let l = &m.layers[li];
        if k < l.weights.len() { l.weights[k] } else { l.bias[k - l.weights.len()] }
    }

    fn set_param(m: &mut Mlp, li: usize, k: usize, v: f64) {
        let l = &mut m.layers[li];
        let nw = l.weights.len();
        if k < nw { l.weights[k] = v } else { l.bias[k - nw] = v }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let g = ring(4);
        let ps = build_path_sets(&g, 2).unwrap();
        let inc = build_incidence(&g, &ps);
        let mut checked = 0;
        for seed in 0..40u64 {
            let mut rng = seeded(seed);
            let mk = |rng: &mut TeRng| {
                let vals = (0..16).map(|i| if i % 5 == 0 { 0.0 } else { rng.random_range(0.1..2.0) }).collect();
                DemandMatrix::new(4, vals).unwrap()
            };
            let window = [mk(&mut rng), mk(&mut rng)];
            let target = mk(&mut rng);
            let stats = TrafficStats::from_variance(4, (0..16).map(|i| if i % 5 == 0 { 0.0 } else { rng.random_range(0.0..1.0) }).collect());
            let gamma = [0.0, 0.5, 3.0][seed as usize % 3];
            let mut m = Mlp::new(&ps, 2, &[6, 5], seed).unwrap();
            m.input_scale = 2.0;
            for l in &mut m.layers {
                l.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.2..0.2));
            }
            if kink_margin(&m, &window, &target, &stats, gamma, &inc, &ps).unwrap() <= 1e-6 {
                continue;
            }
            let err = finite_difference_error(&m, &window, &target, &stats, gamma, &inc, &ps);
            assert!(err <= 1e-4, "seed {seed}: relative error {err}");
            checked += 1;
        }
        assert!(checked >= 10, "only {checked} non-degenerate fixtures");
    }

    #[test]
    fn constant_trace_is_learnable() {
        let t = triangle_setup();
        let d = dm(1.0, 1.0, 1.6);
        let trace = constant_trace(d.clone(), 40);
        let (m, log) = train(&trace, &t.ps, &t.inc, &TrainOptions { epochs: 200, lr: 3e-3, ..small_opts(2, 0.0, 200) }).unwrap();
        let opt = omniscient(&d, &t.ps, &t.inc, &SolveOptions::default()).unwrap().mlu;
        let got = te::mlu(&m.forward(&[d.clone(), d.clone()]).unwrap(), &d, &t.inc).unwrap();
        assert!(got <= 1.05 * opt, "learned {got}, optimum {opt}");
        assert_eq!(log.epoch_loss.len(), 200);
    }

    #[test]
    fn small_lr_loss_is_monotone() {
        // 0->3 has routes via 1 and via 2; the 2->3 link also carries a heavy
        // single-path demand, so it stays the bottleneck for every split and
        // the optimum (everything via 1) is not a kink of the MLU.
        let g = crate::topology::Graph::new(
            4,
            true,
            [(0, 1), (1, 3), (0, 2), (2, 3)].iter().map(|&(src, dst)| crate::topology::Edge { src, dst, capacity: 1.0 }).collect(),
        )
        .unwrap();
        let ps = build_path_sets(&g, 2).unwrap();
        let inc = build_incidence(&g, &ps);
        let mut vals = vec![0.0; 16];
        vals[3] = 1.0;
        vals[2 * 4 + 3] = 5.0;
        let trace = TrafficTrace::new(4, vec![DemandMatrix::new(4, vals).unwrap(); 40]).unwrap();
        let (_, log) = train(&trace, &ps, &inc, &TrainOptions { lr: 1e-4, ..small_opts(2, 0.0, 100) }).unwrap();
        for w in log.epoch_loss[5..].windows(2) {
            assert!(w[1] <= w[0] + 1e-6, "{:?}", w);
        }
        assert!(log.epoch_loss[99] < log.epoch_loss[0]);
    }

    #[test]
    fn training_is_deterministic() {
        let t = triangle_setup();
        let trace = TrafficTrace::new(3, (0..30).map(|i| dm(1.0 + (i % 3) as f64, 1.0, 0.5 + (i % 5) as f64 * 0.3)).collect()).unwrap();
        let a = train(&trace, &t.ps, &t.inc, &small_opts(3, 0.5, 5)).unwrap();
        let b = train(&trace, &t.ps, &t.inc, &small_opts(3, 0.5, 5)).unwrap();
        assert_eq!(a, b);
        let c = train(&trace, &t.ps, &t.inc, &TrainOptions { seed: 4, ..small_opts(3, 0.5, 5) }).unwrap();
        assert_ne!(a.1, c.1);
    }

    #[test]
    fn huge_gamma_lowers_bursty_sensitivity() {
        let t = triangle_setup();
        // B->C alternates between quiet and bursting; the rest is steady.
        let trace = TrafficTrace::new(3, (0..60).map(|i| dm(1.0, 1.0, if i % 4 == 0 { 3.0 } else { 0.5 })).collect()).unwrap();
        let window: Vec<DemandMatrix> = trace.snapshots()[40..42].to_vec();
        let bc = t.ps.sd_index(1, 2).unwrap();
        let smax = |gamma: f64| {
            let (m, _) = train(&trace, &t.ps, &t.inc, &TrainOptions { lr: 3e-3, ..small_opts(2, gamma, 60) }).unwrap();
            te::max_sensitivity_per_sd(&m.forward(&window).unwrap(), &t.ps)[bc]
        };
        let (plain, penalized) = (smax(0.0), smax(1e6));
        assert!(penalized < plain, "gamma 1e6 gave {penalized}, gamma 0 gave {plain}");
    }

    #[test]
    fn input_scaling_is_invariant() {
        let t = triangle_setup();
        let mut m = Mlp::new(&t.ps, 2, &[8], 9).unwrap();
        m.input_scale = 3.0;
        let w = [dm(1., 2., 3.), dm(0.5, 0.1, 2.)];
        let a = m.forward(&w).unwrap();
        m.input_scale = 12.0;
        let scaled: Vec<DemandMatrix> = w.iter().map(|d| d.scaled(4.0)).collect();
        assert_eq!(a, m.forward(&scaled).unwrap());
    }

    #[test]
    fn insufficient_data() {
        let t = triangle_setup();
        let trace = constant_trace(dm(1., 1., 1.), 5);
        assert!(matches!(train(&trace, &t.ps, &t.inc, &small_opts(3, 0.0, 1)), Err(NeuralError::InsufficientData { .. })));
    }

    #[test]
    fn from_layers_checks_dimensions() {
        let t = triangle_setup();
        let m = Mlp::new(&t.ps, 2, &[4], 1).unwrap();
        let back = Mlp::from_layers(m.h, m.num_nodes, m.input_scale, m.gamma, m.layers.clone(), &t.ps).unwrap();
        assert_eq!(back, m);
        let other = build_path_sets(&t.graph, 1).unwrap();
        assert!(matches!(
            Mlp::from_layers(m.h, m.num_nodes, m.input_scale, m.gamma, m.layers.clone(), &other),
            Err(NeuralError::Shape { what: "model outputs", .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn forward_is_always_valid(vals in proptest::collection::vec(0.0f64..1e12, 6), seed in 0u64..1000) {
            let t = triangle_setup();
            let m = Mlp::new(&t.ps, 1, &[5, 5], seed).unwrap();
            let cfg = m.forward(&[dm(vals[0], vals[1], vals[2])]).unwrap();
            prop_assert!(cfg.validate(&t.ps).is_ok());
        }
    }
}
