//! Demand matrices, traces and the statistics and perturbations built on them.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::rng;
use crate::topology::Graph;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrafficError {
    #[error("expected {expected} demand values, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("demand ({src},{dst}) = {value} is negative or not finite")]
    InvalidDemand { src: usize, dst: usize, value: f64 },
    #[error("diagonal demand ({node},{node}) = {value} must be zero")]
    NonzeroDiagonal { node: usize, value: f64 },
    #[error("snapshot {index} has {got} nodes, trace has {expected}")]
    NodeCountMismatch { index: usize, expected: usize, got: usize },
    #[error("range {start}..{end} invalid for trace of length {len} (need at least 2 snapshots)")]
    Range { start: usize, end: usize, len: usize },
    #[error("expected {expected} node weights, got {got}")]
    Weights { expected: usize, got: usize },
    #[error("node weights and total must be positive and finite")]
    NonPositiveWeight,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 observations, got {0}")]
    TooShort(usize),
}

/// A `|V| x |V|` nonnegative demand snapshot with zero diagonal, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DemandMatrix {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self, TrafficError> {
        if values.len() != n * n {
            return Err(TrafficError::Shape { expected: n * n, got: values.len() });
        }
        for (i, &v) in values.iter().enumerate() {
            let (s, d) = (i / n, i % n);
            if !(v >= 0.0) || !v.is_finite() {
                return Err(TrafficError::InvalidDemand { src: s, dst: d, value: v });
            }
            if s == d && v != 0.0 {
                return Err(TrafficError::NonzeroDiagonal { node: s, value: v });
            }
        }
        Ok(Self { n, values })
    }

    /// Like [`DemandMatrix::new`] but zeroes nonzero diagonal entries instead of
    /// rejecting them. Returns whether any diagonal entry was changed.
    pub fn with_forced_diagonal(n: usize, mut values: Vec<f64>) -> Result<(Self, bool), TrafficError> {
        if values.len() != n * n {
            return Err(TrafficError::Shape { expected: n * n, got: values.len() });
        }
        let mut forced = false;
        for i in 0..n {
            let v = values[i * n + i];
            if v != 0.0 {
                if !v.is_finite() || v < 0.0 {
                    return Err(TrafficError::InvalidDemand { src: i, dst: i, value: v });
                }
                values[i * n + i] = 0.0;
                forced = true;
            }
        }
        Self::new(n, values).map(|m| (m, forced))
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, values: vec![0.0; n * n] }
    }

    /// Builds a matrix from `f(s, d)` on off-diagonal entries; values are not validated.
    pub(crate) fn from_fn_unchecked(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = vec![0.0; n * n];
        for s in 0..n {
            for d in 0..n {
                if s != d {
                    values[s * n + d] = f(s, d);
                }
            }
        }
        Self { n, values }
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn get(&self, s: usize, d: usize) -> f64 {
        self.values[s * self.n + d]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { n: self.n, values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn max_entry(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Elementwise maximum over a nonempty list of matrices.
    pub fn elementwise_max<'a>(mut ms: impl Iterator<Item = &'a DemandMatrix>) -> Option<DemandMatrix> {
        let mut acc = ms.next()?.clone();
        for m in ms {
            for (a, &b) in acc.values.iter_mut().zip(&m.values) {
                *a = a.max(b);
            }
        }
        Some(acc)
    }

    /// Off-diagonal entries in row-major order.
    pub fn off_diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n;
        self.values.iter().enumerate().filter(move |(i, _)| i / n != i % n).map(|(_, &v)| v)
    }
}

/// Time-ordered demand snapshots over a fixed node set.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficTrace {
    num_nodes: usize,
    snapshots: Vec<DemandMatrix>,
    /// Snapshot interval label, metadata only.
    pub interval: Option<String>,
}

impl TrafficTrace {
    pub fn new(num_nodes: usize, snapshots: Vec<DemandMatrix>) -> Result<Self, TrafficError> {
        for (index, m) in snapshots.iter().enumerate() {
            if m.num_nodes() != num_nodes {
                return Err(TrafficError::NodeCountMismatch { index, expected: num_nodes, got: m.num_nodes() });
            }
        }
        Ok(Self { num_nodes, snapshots, interval: None })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn snapshots(&self) -> &[DemandMatrix] {
        &self.snapshots
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            num_nodes: self.num_nodes,
            snapshots: self.snapshots.iter().map(|m| m.scaled(c)).collect(),
            interval: self.interval.clone(),
        }
    }

    pub fn max_entry(&self) -> f64 {
        self.snapshots.iter().map(DemandMatrix::max_entry).fold(0.0, f64::max)
    }
}

/// Gravity-model trace: `D_ij = total * w_i * w_j / sum_{a != b} w_a * w_b`,
/// each entry of each snapshot scaled independently by `max(0, 1 + jitter * u)`
/// with `u` standard normal.
pub fn gravity_synthesize(
    g: &Graph,
    weights: &[f64],
    total: f64,
    count: usize,
    jitter: f64,
    seed: u64,
) -> Result<TrafficTrace, TrafficError> {
    let n = g.node_count();
    if weights.len() != n {
        return Err(TrafficError::Weights { expected: n, got: weights.len() });
    }
    if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) || !(total > 0.0) || !total.is_finite() {
        return Err(TrafficError::NonPositiveWeight);
    }
    let sum_w: f64 = weights.iter().sum();
    let sum_sq: f64 = weights.iter().map(|w| w * w).sum();
    let denom = sum_w * sum_w - sum_sq;
    let base = DemandMatrix::from_fn_unchecked(n, |s, d| total * weights[s] * weights[d] / denom);
    let mut rng = rng::seeded(seed);
    let snapshots = (0..count)
        .map(|_| {
            if jitter == 0.0 {
                return base.clone();
            }
            DemandMatrix::from_fn_unchecked(n, |s, d| {
                let u: f64 = rng.sample(StandardNormal);
                base.get(s, d) * (1.0 + jitter * u).max(0.0)
            })
        })
        .collect();
    TrafficTrace::new(n, snapshots)
}

/// Per-SD mean and population variance over a snapshot range.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficStats {
    num_nodes: usize,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub range: (usize, usize),
}

impl TrafficStats {
    /// Stats from explicit per-SD variances (row-major, `n * n`); means are zero.
    pub fn from_variance(num_nodes: usize, variance: Vec<f64>) -> Self {
        assert_eq!(variance.len(), num_nodes * num_nodes);
        Self { num_nodes, mean: vec![0.0; variance.len()], variance, range: (0, 0) }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn variance_of(&self, s: usize, d: usize) -> f64 {
        self.variance[s * self.num_nodes + d]
    }

    pub fn std_devs(&self) -> Vec<f64> {
        self.variance.iter().map(|&v| libm::sqrt(v)).collect()
    }
}

pub fn compute_stats(trace: &TrafficTrace, range: Range<usize>) -> Result<TrafficStats, TrafficError> {
    let len = trace.len();
    if range.end > len || range.end < range.start + 2 {
        return Err(TrafficError::Range { start: range.start, end: range.end, len });
    }
    let n = trace.num_nodes();
    let window = &trace.snapshots()[range.clone()];
    let count = window.len() as f64;
    let mut mean = vec![0.0; n * n];
    for m in window {
        for (a, v) in mean.iter_mut().zip(m.values()) {
            *a += v;
        }
    }
    mean.iter_mut().for_each(|a| *a /= count);
    let mut variance = vec![0.0; n * n];
    for m in window {
        for ((a, v), mu) in variance.iter_mut().zip(m.values()).zip(&mean) {
            *a += (v - mu) * (v - mu);
        }
    }
    variance.iter_mut().for_each(|a| *a /= count);
    Ok(TrafficStats { num_nodes: n, mean, variance, range: (range.start, range.end) })
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (libm::sqrt(na) * libm::sqrt(nb))).clamp(0.0, 1.0)
}

/// For each `t >= window`, the highest cosine similarity between snapshot `t`
/// and the `window` snapshots before it. Entry `i` corresponds to `t = window + i`.
pub fn cosine_profile(trace: &TrafficTrace, window: usize) -> Vec<f64> {
    let snaps = trace.snapshots();
    if window == 0 || snaps.len() <= window {
        return Vec::new();
    }
    (window..snaps.len())
        .map(|t| {
            snaps[t - window..t]
                .iter()
                .map(|h| cosine(snaps[t].values(), h.values()))
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Adds `alpha * sigma_sd * u` (u standard normal, clamped at zero demand) to
/// every off-diagonal entry of the snapshots in `snapshots`. `sigma` is
/// row-major `n * n`. One normal draw is consumed per off-diagonal entry, so
/// the noise stream is independent of the sigma values.
pub fn perturb(
    trace: &TrafficTrace,
    sigma: &[f64],
    alpha: f64,
    snapshots: Range<usize>,
    seed: u64,
) -> TrafficTrace {
    let n = trace.num_nodes();
    assert_eq!(sigma.len(), n * n, "sigma map must be n*n");
    if alpha == 0.0 {
        return trace.clone();
    }
    let mut rng = rng::seeded(seed);
    let mut out = trace.clone();
    let end = snapshots.end.min(trace.len());
    for m in &mut out.snapshots[snapshots.start.min(end)..end] {
        for s in 0..n {
            for d in 0..n {
                if s == d {
                    continue;
                }
                let u: f64 = rng.sample(StandardNormal);
                let v = &mut m.values[s * n + d];
                *v = (*v + alpha * sigma[s * n + d] * u).max(0.0);
            }
        }
    }
    out
}

/// Gaussian fluctuation with per-SD standard deviation taken from `stats`.
pub fn inject_fluctuation(trace: &TrafficTrace, stats: &TrafficStats, alpha: f64, seed: u64) -> TrafficTrace {
    perturb(trace, &stats.std_devs(), alpha, 0..trace.len(), seed)
}

/// Reassigns values so the entry with the `r`-th smallest value receives the
/// `r`-th largest. Ties keep index order.
pub fn reverse_rank_assign(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut out = vec![0.0; values.len()];
    let last = values.len().saturating_sub(1);
    for (rank, &i) in order.iter().enumerate() {
        out[i] = values[order[last - rank]];
    }
    out
}

/// Worst-case sigma map: SD pairs with the smallest variance get the largest
/// standard deviation and vice versa. Returned row-major `n * n`, zero diagonal.
pub fn worst_case_reorder(stats: &TrafficStats) -> Vec<f64> {
    let n = stats.num_nodes();
    let off: Vec<usize> = (0..n * n).filter(|i| i / n != i % n).collect();
    let variances: Vec<f64> = off.iter().map(|&i| stats.variance[i]).collect();
    let swapped = reverse_rank_assign(&variances);
    let mut sigma = vec![0.0; n * n];
    for (&i, v) in off.iter().zip(swapped) {
        sigma[i] = libm::sqrt(v);
    }
    sigma
}

/// Burst injection parameters, see [`inject_bursts`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bursts {
    /// Share of off-diagonal SD pairs that burst.
    pub fraction: f64,
    /// Gaussian factor applied to the burst standard deviation.
    pub alpha: f64,
    /// Burst standard deviation as a multiple of the pair's mean demand.
    pub sigma_scale: f64,
    /// Probability that a bursty pair bursts in a given snapshot.
    pub rate: f64,
}

/// Injects Gaussian bursts into a random subset of SD pairs: `round(fraction * N)`
/// off-diagonal pairs are chosen, each with standard deviation
/// `sigma_scale * mean_sd` (mean over the whole trace). In every snapshot a
/// chosen pair bursts with probability `rate`, becoming
/// `max(0, D + alpha * sigma * u)`. Returns the new trace and the chosen pairs
/// in ascending row-major order.
pub fn inject_bursts(trace: &TrafficTrace, b: &Bursts, seed: u64) -> (TrafficTrace, Vec<(usize, usize)>) {
    let n = trace.num_nodes();
    let off: Vec<usize> = (0..n * n).filter(|i| i / n != i % n).collect();
    let count = libm::round(b.fraction.clamp(0.0, 1.0) * off.len() as f64) as usize;
    let mut rng = rng::seeded(seed);
    let mut chosen: Vec<usize> = index::sample(&mut rng, off.len(), count).into_iter().map(|j| off[j]).collect();
    chosen.sort_unstable();
    let pairs = chosen.iter().map(|&i| (i / n, i % n)).collect();
    if trace.len() == 0 || b.alpha == 0.0 {
        return (trace.clone(), pairs);
    }
    let len = trace.len() as f64;
    let sigma: Vec<f64> = chosen
        .iter()
        .map(|&i| b.sigma_scale * trace.snapshots().iter().map(|m| m.values()[i]).sum::<f64>() / len)
        .collect();
    let rate = b.rate.clamp(0.0, 1.0);
    let mut out = trace.clone();
    for m in &mut out.snapshots {
        for (&i, &sd) in chosen.iter().zip(&sigma) {
            let fires = rate >= 1.0 || rng.random::<f64>() < rate;
            let u: f64 = rng.sample(StandardNormal);
            if fires {
                m.values[i] = (m.values[i] + b.alpha * sd * u).max(0.0);
            }
        }
    }
    (out, pairs)
}

/// Average ranks (1-based) with ties sharing the mean of their positions.
fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties. A constant input
/// has no rank association and yields 0.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, TrafficError> {
    if x.len() != y.len() {
        return Err(TrafficError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(TrafficError::TooShort(x.len()));
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let m = (x.len() as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - m) * (b - m);
        sxx += (a - m) * (a - m);
        syy += (b - m) * (b - m);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}
