//! Sensitivity-bounded MLU minimization and the classical TE baselines.
//!
//! The solver minimizes a log-sum-exp smoothing of the MLU by projected
//! gradient descent while the smoothing temperature anneals toward zero. Each
//! SD group is projected onto the capped simplex
//! `{r >= 0, r_p <= u_p, sum r = 1}` where `u_p` comes from the sensitivity
//! bound. The best iterate under the exact (unsmoothed) MLU is returned.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::te::{self, TeConfig, TeError};
use crate::topology::{Incidence, PathSets};
use crate::traffic::{DemandMatrix, TrafficStats};

/// Slack allowed in the bound feasibility check `sum_p min(1, cap * C_p) >= 1`.
const FEASIBILITY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error("sensitivity bound infeasible for SD pair ({src},{dst}): capped ratios sum to at most {reachable}")]
    Infeasible { src: usize, dst: usize, reachable: f64 },
    #[error("invalid sensitivity bound: {0}")]
    InvalidBound(&'static str),
    #[error("expected {expected} values for {what}, got {got}")]
    Shape { what: &'static str, expected: usize, got: usize },
    #[error("demand window is empty")]
    EmptyWindow,
    #[error(transparent)]
    Te(#[from] TeError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundKind {
    Unbounded,
    Uniform { cap: f64 },
    /// Caps fall linearly from `max` (lowest variance) to `min` (highest).
    Linear { min: f64, max: f64 },
    /// Pairs whose variance rank fraction is below `breakpoint` get `max`, the rest `min`.
    Piecewise { min: f64, max: f64, breakpoint: f64 },
}

impl BoundKind {
    fn validate(&self) -> Result<(), OptimizeError> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        match *self {
            BoundKind::Unbounded => Ok(()),
            BoundKind::Uniform { cap } if positive(cap) => Ok(()),
            BoundKind::Uniform { .. } => Err(OptimizeError::InvalidBound("uniform cap must be positive and finite")),
            BoundKind::Linear { min, max } | BoundKind::Piecewise { min, max, .. } if !(positive(min) && positive(max)) => {
                Err(OptimizeError::InvalidBound("min and max must be positive and finite"))
            }
            BoundKind::Linear { min, max } | BoundKind::Piecewise { min, max, .. } if min > max => {
                Err(OptimizeError::InvalidBound("min must not exceed max"))
            }
            BoundKind::Piecewise { breakpoint, .. } if !(breakpoint > 0.0 && breakpoint < 1.0) => {
                Err(OptimizeError::InvalidBound("breakpoint must lie in (0, 1)"))
            }
            _ => Ok(()),
        }
    }
}

/// Per-SD sensitivity caps.
///
/// Caps are expressed in a normalized capacity scale where
/// `reference_capacity` counts as 1: the constraint on path `p` of SD pair
/// `sd` is `r_p / (C_p / reference_capacity) <= caps[sd]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityBound {
    pub kind: BoundKind,
    caps: Vec<f64>,
    reference_capacity: f64,
}

impl SensitivityBound {
    pub fn unbounded(ps: &PathSets) -> Self {
        Self { kind: BoundKind::Unbounded, caps: vec![f64::INFINITY; ps.num_sd()], reference_capacity: 1.0 }
    }

    /// Explicit caps with an explicit capacity scale; checks positivity and feasibility.
    pub fn from_caps(kind: BoundKind, caps: Vec<f64>, reference_capacity: f64, ps: &PathSets) -> Result<Self, OptimizeError> {
        if caps.len() != ps.num_sd() {
            return Err(OptimizeError::Shape { what: "caps", expected: ps.num_sd(), got: caps.len() });
        }
        if caps.iter().any(|&c| !(c > 0.0)) {
            return Err(OptimizeError::InvalidBound("caps must be strictly positive"));
        }
        if !(reference_capacity > 0.0 && reference_capacity.is_finite()) {
            return Err(OptimizeError::InvalidBound("reference capacity must be positive"));
        }
        let bound = Self { kind, caps, reference_capacity };
        let upper = bound.path_upper_bounds(ps);
        for (sd, g) in ps.groups().enumerate() {
            let reachable: f64 = upper[g].iter().sum();
            if reachable < 1.0 - FEASIBILITY_SLACK {
                let (src, dst) = ps.sd_pairs()[sd];
                return Err(OptimizeError::Infeasible { src, dst, reachable });
            }
        }
        Ok(bound)
    }

    pub fn caps(&self) -> &[f64] {
        &self.caps
    }

    pub fn reference_capacity(&self) -> f64 {
        self.reference_capacity
    }

    /// Upper limit on each path's split ratio: `min(1, cap_sd * C_p / reference)`.
    pub fn path_upper_bounds(&self, ps: &PathSets) -> Vec<f64> {
        ps.paths()
            .iter()
            .enumerate()
            .map(|(p, path)| {
                let cap = self.caps[ps.sd_of_path(p)];
                if cap.is_infinite() {
                    1.0
                } else {
                    (cap * path.capacity / self.reference_capacity).min(1.0)
                }
            })
            .collect()
    }
}

/// Resolves a bound kind to per-SD caps. Pairs are ranked by ascending
/// variance (ties by SD order); capacities are normalized so the smallest edge
/// capacity of the topology equals 1.
pub fn resolve_bound(kind: BoundKind, stats: &TrafficStats, ps: &PathSets) -> Result<SensitivityBound, OptimizeError> {
    kind.validate()?;
    if let BoundKind::Unbounded = kind {
        return Ok(SensitivityBound::unbounded(ps));
    }
    if stats.num_nodes() != ps.num_nodes() {
        return Err(OptimizeError::Shape { what: "stats nodes", expected: ps.num_nodes(), got: stats.num_nodes() });
    }
    let n = ps.num_sd();
    let variance: Vec<f64> = ps.sd_pairs().iter().map(|&(s, d)| stats.variance_of(s, d)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| variance[a].total_cmp(&variance[b]).then(a.cmp(&b)));
    let mut caps = vec![0.0; n];
    for (rank, &sd) in order.iter().enumerate() {
        caps[sd] = match kind {
            BoundKind::Unbounded => f64::INFINITY,
            BoundKind::Uniform { cap } => cap,
            BoundKind::Linear { min, max } => {
                if n == 1 {
                    max
                } else {
                    max - (max - min) * rank as f64 / (n - 1) as f64
                }
            }
            BoundKind::Piecewise { min, max, breakpoint } => {
                if (rank as f64) / (n as f64) < breakpoint {
                    max
                } else {
                    min
                }
            }
        };
    }
    SensitivityBound::from_caps(kind, caps, ps.min_edge_capacity(), ps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub max_iters: usize,
    /// Relative exact-MLU improvement below which the search counts as stalled.
    pub tolerance: f64,
    /// Initial temperature as a fraction of the starting MLU.
    pub temperature: f64,
    /// Temperature multiplier applied every `decay_every` iterations (continuously).
    pub decay: f64,
    pub decay_every: f64,
    /// Initial projected-gradient step on the MLU-normalized objective.
    pub step: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { max_iters: 5000, tolerance: 1e-3, temperature: 0.1, decay: 0.97, decay_every: 10.0, step: 1.0 }
    }
}

impl SolveOptions {
    fn validate(&self) -> Result<(), OptimizeError> {
        if self.max_iters == 0 || !(self.tolerance > 0.0) || !(self.temperature > 0.0) {
            return Err(OptimizeError::InvalidBound("solver needs max_iters >= 1, tolerance > 0, temperature > 0"));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) || !(self.decay_every > 0.0) || !(self.step > 0.0) {
            return Err(OptimizeError::InvalidBound("solver decay must lie in (0, 1], decay_every and step positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub config: TeConfig,
    /// Exact MLU of `config` on the solved demand matrix.
    pub mlu: f64,
    pub iterations: usize,
    /// False when `max_iters` ran out before the stall criterion was met.
    pub converged: bool,
}

/// Euclidean projection of `y` onto `{x : 0 <= x <= upper, sum x = 1}`.
///
/// The solution is `x = clamp(y - lambda, 0, upper)`. The sum is piecewise
/// linear and nonincreasing in `lambda` with kinks at `y_i - u_i` and `y_i`,
/// so bisection over the sorted kinks brackets the root and linear
/// interpolation inside the bracket finds it exactly. Requires `sum upper >= 1`.
pub fn project_capped_simplex(y: &[f64], upper: &[f64], out: &mut [f64]) {
    let mut scratch = Vec::new();
    project_into(y, upper, out, &mut scratch);
}

fn project_into(y: &[f64], upper: &[f64], out: &mut [f64], kinks: &mut Vec<f64>) {
    debug_assert_eq!(y.len(), upper.len());
    if y.len() == 1 {
        out[0] = 1.0;
        return;
    }
    let total = |lambda: f64| -> f64 { y.iter().zip(upper).map(|(&v, &u)| (v - lambda).clamp(0.0, u)).sum() };
    kinks.clear();
    for (&v, &u) in y.iter().zip(upper) {
        kinks.push(v - u);
        kinks.push(v);
    }
    kinks.sort_unstable_by(f64::total_cmp);
    // Invariant: total(kinks[lo]) >= 1 > total(kinks[hi]).
    let (mut lo, mut hi) = (0, kinks.len() - 1);
    let s_lo = total(kinks[lo]);
    if s_lo <= 1.0 {
        // Upper bounds sum to 1 (within rounding): everything sits at its cap.
        out.copy_from_slice(upper);
        return;
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if total(kinks[mid]) >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (a, b) = (kinks[lo], kinks[hi]);
    let (sa, sb) = (total(a), total(b));
    let lambda = if sa == sb { a } else { a + (sa - 1.0) / (sa - sb) * (b - a) };
    for ((o, &v), &u) in out.iter_mut().zip(y).zip(upper) {
        *o = (v - lambda).clamp(0.0, u);
    }
}

fn project_all(ps: &PathSets, y: &[f64], upper: &[f64], out: &mut [f64], kinks: &mut Vec<f64>) {
    for g in ps.groups() {
        project_into(&y[g.clone()], &upper[g.clone()], &mut out[g], kinks);
    }
}

/// Scratch state for the smoothed objective.
struct Smoothed<'a> {
    inc: &'a Incidence,
    /// Demand carried per unit ratio on each path, divided by the MLU scale.
    path_demand: Vec<f64>,
    inv_capacity: Vec<f64>,
    log_m: f64,
    util: Vec<f64>,
    weights: Vec<f64>,
}

impl<'a> Smoothed<'a> {
    fn new(dm: &DemandMatrix, inc: &'a Incidence, scale: f64) -> Self {
        let demand = dm.values();
        let path_demand = inc.path_sd().iter().map(|&sd| demand[inc.sd_demand_index()[sd]] / scale).collect();
        let m = inc.num_constraints();
        Self {
            inc,
            path_demand,
            inv_capacity: inc.capacity().iter().map(|c| 1.0 / c).collect(),
            log_m: libm::log(m.max(1) as f64),
            util: vec![0.0; m],
            weights: vec![0.0; m],
        }
    }

    /// Normalized utilization of every constraint; returns the exact maximum.
    fn utilization(&mut self, x: &[f64]) -> f64 {
        self.util.iter_mut().for_each(|u| *u = 0.0);
        for (p, (&r, &dp)) in x.iter().zip(&self.path_demand).enumerate() {
            let v = r * dp;
            if v != 0.0 {
                for &e in self.inc.path_constraints(p) {
                    self.util[e] += v;
                }
            }
        }
        let mut max = 0.0f64;
        for (u, ic) in self.util.iter_mut().zip(&self.inv_capacity) {
            *u *= ic;
            max = max.max(*u);
        }
        max
    }

    /// Smoothed max `tau * ln sum exp(u / tau)`; fills softmax weights.
    fn value(&mut self, x: &[f64], tau: f64) -> (f64, f64) {
        let max = self.utilization(x);
        let mut sum = 0.0;
        for (w, &u) in self.weights.iter_mut().zip(&self.util) {
            *w = libm::exp((u - max) / tau);
            sum += *w;
        }
        self.weights.iter_mut().for_each(|w| *w /= sum);
        (max + tau * libm::log(sum), max)
    }

    fn gradient(&self, grad: &mut [f64]) {
        for (p, (g, &dp)) in grad.iter_mut().zip(&self.path_demand).enumerate() {
            *g = if dp == 0.0 {
                0.0
            } else {
                dp * self.inc.path_constraints(p).iter().map(|&e| self.weights[e] * self.inv_capacity[e]).sum::<f64>()
            };
        }
    }
}

/// Minimizes the exact MLU of `dm` subject to per-path ratio limits `upper`
/// (each group's limits must sum to at least 1). The search starts from the
/// best of the uniform split and `hints` after projection, and the best
/// iterate seen, hints included, is returned.
pub fn solve_with_limits(
    dm: &DemandMatrix,
    ps: &PathSets,
    inc: &Incidence,
    upper: &[f64],
    opts: &SolveOptions,
    hints: &[&TeConfig],
) -> Result<Solution, OptimizeError> {
    opts.validate()?;
    let n = ps.num_paths();
    if upper.len() != n {
        return Err(OptimizeError::Shape { what: "path limits", expected: n, got: upper.len() });
    }
    if inc.num_paths() != n {
        return Err(OptimizeError::Shape { what: "incidence paths", expected: n, got: inc.num_paths() });
    }
    if dm.num_nodes() != inc.num_nodes() {
        return Err(TeError::Shape { what: "demand matrix nodes", expected: inc.num_nodes(), got: dm.num_nodes() }.into());
    }
    for h in hints {
        if h.ratios().len() != n {
            return Err(OptimizeError::Shape { what: "hint ratios", expected: n, got: h.ratios().len() });
        }
    }

    let mut x = vec![0.0; n];
    let mut candidate = vec![0.0; n];
    let mut kinks = Vec::new();
    project_all(ps, TeConfig::uniform(ps).ratios(), upper, &mut x, &mut kinks);
    let mut unit = Smoothed::new(dm, inc, 1.0);
    let mut start_mlu = unit.utilization(&x);
    for h in hints {
        project_all(ps, h.ratios(), upper, &mut candidate, &mut kinks);
        let m = unit.utilization(&candidate);
        if m < start_mlu {
            start_mlu = m;
            x.copy_from_slice(&candidate);
        }
    }
    if !(start_mlu > 0.0) || !start_mlu.is_finite() {
        return Ok(Solution { config: TeConfig::from_ratios_unchecked(x), mlu: start_mlu, iterations: 0, converged: true });
    }

    // Work in units of the starting MLU so temperatures and steps are scale free.
    let mut obj = Smoothed::new(dm, inc, start_mlu);
    let mut best = x.clone();
    let mut best_mlu = 1.0f64;
    let mut grad = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut step = opts.step;
    let mut history: Vec<f64> = Vec::with_capacity(opts.max_iters + 1);
    history.push(best_mlu);
    let stall_window = 200usize;
    let mut converged = false;
    let mut iterations = 0;

    for k in 0..opts.max_iters {
        iterations = k + 1;
        let tau = opts.temperature * libm::pow(opts.decay, k as f64 / opts.decay_every);
        let (fx, _) = obj.value(&x, tau);
        obj.gradient(&mut grad);
        // Backtracking on the quadratic upper model of the smoothed objective.
        loop {
            for i in 0..n {
                candidate[i] = x[i] - step * grad[i];
            }
            project_all(ps, &candidate, upper, &mut trial, &mut kinks);
            let mut lin = 0.0;
            let mut sq = 0.0;
            for i in 0..n {
                let d = trial[i] - x[i];
                lin += grad[i] * d;
                sq += d * d;
            }
            let (ft, _) = obj.value(&trial, tau);
            if ft <= fx + lin + sq / (2.0 * step) + 1e-15 * fx.abs() || step < 1e-14 {
                break;
            }
            step *= 0.5;
        }
        core::mem::swap(&mut x, &mut trial);
        step = (step * 1.25).min(opts.step * 1e6);

        let exact = obj.utilization(&x);
        if exact < best_mlu {
            best_mlu = exact;
            best.copy_from_slice(&x);
        }
        history.push(best_mlu);
        let smoothing_gap = tau * obj.log_m;
        if k >= stall_window && smoothing_gap <= opts.tolerance * best_mlu {
            let before = history[history.len() - 1 - stall_window];
            if before - best_mlu <= opts.tolerance * best_mlu {
                converged = true;
                break;
            }
        }
    }

    let config = TeConfig::from_ratios_unchecked(best);
    let mlu = te::mlu(&config, dm, inc)?;
    Ok(Solution { config, mlu, iterations, converged })
}

/// Minimizes MLU on `dm` under a sensitivity bound.
pub fn solve_mlu(
    dm: &DemandMatrix,
    ps: &PathSets,
    inc: &Incidence,
    bound: &SensitivityBound,
    opts: &SolveOptions,
) -> Result<Solution, OptimizeError> {
    if bound.caps().len() != ps.num_sd() {
        return Err(OptimizeError::Shape { what: "caps", expected: ps.num_sd(), got: bound.caps().len() });
    }
    solve_with_limits(dm, ps, inc, &bound.path_upper_bounds(ps), opts, &[])
}

/// Unbounded optimum on the actual demand matrix.
pub fn omniscient(dm: &DemandMatrix, ps: &PathSets, inc: &Incidence, opts: &SolveOptions) -> Result<Solution, OptimizeError> {
    solve_mlu(dm, ps, inc, &SensitivityBound::unbounded(ps), opts)
}

/// Optimizes for the most recent snapshot of the window, unbounded.
pub fn prediction_te(
    window: &[DemandMatrix],
    ps: &PathSets,
    inc: &Incidence,
    opts: &SolveOptions,
) -> Result<Solution, OptimizeError> {
    let last = window.last().ok_or(OptimizeError::EmptyWindow)?;
    omniscient(last, ps, inc, opts)
}

/// Optimizes for the elementwise peak of the window under `bound`.
pub fn desensitization_te(
    window: &[DemandMatrix],
    bound: &SensitivityBound,
    ps: &PathSets,
    inc: &Incidence,
    opts: &SolveOptions,
) -> Result<Solution, OptimizeError> {
    let peak = DemandMatrix::elementwise_max(window.iter()).ok_or(OptimizeError::EmptyWindow)?;
    solve_mlu(&peak, ps, inc, bound, opts)
}
