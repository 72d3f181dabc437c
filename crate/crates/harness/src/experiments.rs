//! Experiment drivers: evaluation, gamma tuning, failures, perturbation,
//! interpretability, traffic characterization and timing.

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::index;
use rand::Rng;
use rte_core::neural::{split_point, train_range, Mlp, TrainOptions, TrainingLog};
use rte_core::optimize::{resolve_bound, solve_with_limits, SolveOptions, Solution};
use rte_core::rng::seeded;
use rte_core::te::{self, TeConfig};
use rte_core::topology::{build_incidence, build_path_sets, Graph, Incidence, PathSets};
use rte_core::traffic::{
    compute_stats, cosine_profile, gravity_synthesize, inject_bursts, perturb, spearman, worst_case_reorder, DemandMatrix,
    TrafficStats, TrafficTrace,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, GammaSpec, Purpose, SchemeSpec, TrafficSource};
use crate::error::{HarnessError, Result};
use crate::formats::{self, write_file, write_json};
use crate::metrics::{percentile, Summary};
use crate::schemes::{History, Net, Policy, Scheme};

/// Snapshots whose omniscient MLU is at or below this are skipped.
pub const MIN_REFERENCE_MLU: f64 = 1e-12;

/// Slack allowed below 1 for a normalized MLU before it counts as a solver failure.
pub const NORMALIZATION_SLACK: f64 = 1e-6;

/// Loaded topology, path sets and traffic for one config.
pub struct Experiment {
    pub cfg: ExperimentConfig,
    pub graph: Graph,
    pub ps: PathSets,
    pub inc: Incidence,
    pub trace: TrafficTrace,
    /// SD pairs that received injected bursts (synthesized traffic only).
    pub bursty: Vec<(usize, usize)>,
    pub path_time: Duration,
}

/// Gravity weights defaulting to the summed capacity of each node's edges.
pub fn default_weights(g: &Graph) -> Vec<f64> {
    let mut w = vec![0.0; g.node_count()];
    for e in g.edges() {
        w[e.src] += e.capacity;
        w[e.dst] += e.capacity;
    }
    w
}

/// Loads or synthesizes the configured trace.
pub fn load_traffic(cfg: &ExperimentConfig, g: &Graph) -> Result<(TrafficTrace, Vec<(usize, usize)>)> {
    match &cfg.traffic {
        TrafficSource::Trace(path) => Ok((formats::read_trace(path, g.node_count())?, Vec::new())),
        TrafficSource::Gravity(spec) => {
            let weights = spec.weights.clone().unwrap_or_else(|| default_weights(g));
            let base = gravity_synthesize(g, &weights, spec.total, spec.count, spec.jitter, cfg.seeds.for_purpose(Purpose::Synth))
                .map_err(|e| HarnessError::Config(format!("gravity spec: {e}")))?;
            Ok(match &spec.bursts {
                Some(b) => inject_bursts(&base, &b.bursts(), cfg.seeds.for_purpose(Purpose::Bursts)),
                None => (base, Vec::new()),
            })
        }
    }
}

impl Experiment {
    pub fn prepare(cfg: ExperimentConfig) -> Result<Self> {
        let graph = formats::read_topology(&cfg.topology)?;
        let (trace, bursty) = load_traffic(&cfg, &graph)?;
        Self::from_parts(cfg, graph, trace, bursty)
    }

    pub fn from_parts(cfg: ExperimentConfig, graph: Graph, trace: TrafficTrace, bursty: Vec<(usize, usize)>) -> Result<Self> {
        cfg.validate()?;
        if trace.num_nodes() != graph.node_count() {
            return Err(HarnessError::Data(format!(
                "trace has {} nodes, topology has {}",
                trace.num_nodes(),
                graph.node_count()
            )));
        }
        let start = Instant::now();
        let ps = build_path_sets(&graph, cfg.k)?;
        let inc = build_incidence(&graph, &ps);
        let path_time = start.elapsed();
        if !ps.unreachable().is_empty() {
            log::warn!("{} SD pair(s) have no path and are ignored", ps.unreachable().len());
        }
        let exp = Self { cfg, graph, ps, inc, trace, bursty, path_time };
        if exp.train_end() < 2 || exp.test_range().is_empty() {
            return Err(HarnessError::Data(format!("trace of {} snapshots leaves an empty training or test range", exp.trace.len())));
        }
        Ok(exp)
    }

    pub fn train_end(&self) -> usize {
        split_point(self.trace.len(), self.cfg.split)
    }

    pub fn test_range(&self) -> Range<usize> {
        self.train_end()..self.trace.len()
    }

    pub fn train_stats(&self) -> Result<TrafficStats> {
        Ok(compute_stats(&self.trace, 0..self.train_end())?)
    }

    pub fn solver(&self) -> SolveOptions {
        self.cfg.solver.options()
    }

    fn train_options(&self, gamma: f64) -> TrainOptions {
        let t = &self.cfg.training;
        TrainOptions {
            h: self.cfg.h,
            gamma,
            epochs: t.epochs,
            batch: t.batch,
            lr: t.lr,
            seed: self.cfg.seeds.for_purpose(Purpose::Train),
            split: self.cfg.split,
            hidden: t.hidden.clone(),
        }
    }
}

/// Unbounded optimum on `dm` over paths whose limit is 1 (failed paths get 0),
/// searched from the uniform split and from every hint.
pub fn reference_solution(
    dm: &DemandMatrix,
    net: Net<'_>,
    limits: &[f64],
    hints: &[&TeConfig],
) -> Result<Solution> {
    Ok(solve_with_limits(dm, net.ps, net.inc, limits, net.solver, hints)?)
}

fn normalized(mlu: f64, reference: f64, scheme: &str, t: usize) -> Result<f64> {
    let v = mlu / reference;
    if v < 1.0 - NORMALIZATION_SLACK {
        return Err(HarnessError::Numerical(format!(
            "scheme {scheme:?} beats the omniscient reference at snapshot {t} ({mlu} < {reference})"
        )));
    }
    Ok(v)
}

#[derive(Debug, Clone, Serialize)]
pub struct TuningRow {
    pub gamma: f64,
    pub mean: f64,
    pub p90: f64,
    pub p99: f64,
    pub severe_fraction: f64,
}

pub struct TrainedModel {
    pub name: String,
    pub model: Mlp,
    pub log: TrainingLog,
    pub tuning: Vec<TuningRow>,
    pub seconds: f64,
}

/// Picks gamma from validation rows: among candidates whose mean normalized
/// MLU exceeds the reference (gamma = 0 when swept, else the best mean) by at
/// most the relative `tolerance`, the lowest severe-congestion fraction wins, then the lower 99th
/// percentile, then the lower mean, then the smaller gamma.
pub fn select_gamma(rows: &[TuningRow], tolerance: f64) -> f64 {
    let reference = rows
        .iter()
        .find(|r| r.gamma == 0.0)
        .map(|r| r.mean)
        .unwrap_or_else(|| rows.iter().map(|r| r.mean).fold(f64::INFINITY, f64::min));
    rows.iter()
        .filter(|r| r.mean <= (1.0 + tolerance) * reference)
        .min_by(|a, b| {
            a.severe_fraction
                .total_cmp(&b.severe_fraction)
                .then(a.p99.total_cmp(&b.p99))
                .then(a.mean.total_cmp(&b.mean))
                .then(a.gamma.total_cmp(&b.gamma))
        })
        .map_or(0.0, |r| r.gamma)
}

/// Candidate models of a gamma sweep with their validation scores.
pub struct Sweep {
    pub rows: Vec<TuningRow>,
    pub models: Vec<(Mlp, TrainingLog)>,
}

impl Sweep {
    pub fn model(&self, gamma: f64) -> Option<&Mlp> {
        self.rows.iter().position(|r| r.gamma == gamma).map(|i| &self.models[i].0)
    }
}

/// Trains one model per candidate on the head of the training range and
/// scores it on the held-out tail.
pub fn tune_gamma(exp: &Experiment, candidates: &[f64]) -> Result<Sweep> {
    let end = exp.train_end();
    let held_out = (exp.cfg.training.validation_fraction * end as f64).round() as usize;
    let fit_end = end - held_out;
    let h = exp.cfg.h;
    if fit_end <= h + 2 || held_out == 0 {
        return Err(HarnessError::Data(format!("training range of {end} snapshots is too short to hold out a validation tail")));
    }
    let mut models = Vec::with_capacity(candidates.len());
    for &gamma in candidates {
        let trained = train_range(&exp.trace, 0..fit_end, &exp.ps, &exp.inc, &exp.train_options(gamma))?;
        log::info!("gamma {gamma}: trained on snapshots 0..{fit_end}");
        models.push(trained);
    }
    let solver = exp.solver();
    let net = Net { ps: &exp.ps, inc: &exp.inc, solver: &solver };
    let ones = vec![1.0; exp.ps.num_paths()];
    let snaps = exp.trace.snapshots();
    let mut values = vec![Vec::new(); candidates.len()];
    for t in fit_end.max(h)..end {
        let configs = models.iter().map(|(m, _)| m.forward(&snaps[t - h..t])).collect::<Result<Vec<_>, _>>()?;
        let hints: Vec<&TeConfig> = configs.iter().collect();
        let reference = reference_solution(&snaps[t], net, &ones, &hints)?;
        if reference.mlu <= MIN_REFERENCE_MLU {
            continue;
        }
        for (i, c) in configs.iter().enumerate() {
            values[i].push(normalized(te::mlu(c, &snaps[t], &exp.inc)?, reference.mlu, "candidate", t)?);
        }
    }
    let rows = candidates
        .iter()
        .zip(values)
        .map(|(&gamma, v)| {
            let s = Summary::of(&v);
            TuningRow { gamma, mean: s.mean, p90: s.p(90), p99: s.p(99), severe_fraction: s.severe_fraction }
        })
        .collect();
    Ok(Sweep { rows, models })
}

/// Trains a model for a neural scheme, tuning gamma first when requested.
/// A tuned model is retrained on the whole training range when
/// `training.refit` is set; otherwise the validated candidate is kept.
pub fn train_model(exp: &Experiment, name: &str, gamma: GammaSpec) -> Result<TrainedModel> {
    let start = Instant::now();
    let full = |gamma| train_range(&exp.trace, 0..exp.train_end(), &exp.ps, &exp.inc, &exp.train_options(gamma));
    let (model, log, tuning) = match gamma {
        GammaSpec::Value(g) => {
            let (m, l) = full(g)?;
            (m, l, Vec::new())
        }
        GammaSpec::Auto => {
            let mut sweep = tune_gamma(exp, &exp.cfg.training.gamma_candidates)?;
            let g = select_gamma(&sweep.rows, exp.cfg.training.mean_tolerance);
            log::info!("{name}: selected gamma {g}");
            let (m, l) = if exp.cfg.training.refit {
                full(g)?
            } else {
                let i = sweep.rows.iter().position(|r| r.gamma == g).expect("selected gamma is a candidate");
                sweep.models.swap_remove(i)
            };
            (m, l, sweep.rows)
        }
    };
    Ok(TrainedModel { name: name.to_string(), model, log, tuning, seconds: start.elapsed().as_secs_f64() })
}

/// Instantiates every configured scheme, training neural models that have no model file.
pub fn build_schemes(exp: &Experiment) -> Result<(Vec<Scheme>, Vec<TrainedModel>)> {
    let stats = exp.train_stats()?;
    let mut schemes = Vec::new();
    let mut trained = Vec::new();
    for spec in &exp.cfg.schemes {
        let name = spec.name();
        let policy = match spec {
            SchemeSpec::Omniscient { .. } => Policy::Omniscient,
            SchemeSpec::Prediction { .. } => Policy::Prediction,
            SchemeSpec::Desensitization { bound, window, .. } => Policy::Desensitization {
                bound: resolve_bound((*bound).into(), &stats, &exp.ps)?,
                window: window.unwrap_or(exp.cfg.h),
            },
            SchemeSpec::Neural { gamma, model, .. } => match model {
                Some(path) => Policy::Neural(Box::new(formats::load_model(path, &exp.ps)?)),
                None => {
                    let t = train_model(exp, &name, *gamma)?;
                    let m = t.model.clone();
                    trained.push(t);
                    Policy::Neural(Box::new(m))
                }
            },
        };
        schemes.push(Scheme { name, policy });
    }
    Ok((schemes, trained))
}

fn check_history(exp: &Experiment, schemes: &[Scheme]) -> Result<()> {
    let need = schemes.iter().map(Scheme::history_needed).max().unwrap_or(0);
    if exp.train_end() < need {
        return Err(HarnessError::Config(format!(
            "test range starts at snapshot {} but schemes need {need} snapshots of history",
            exp.train_end()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalRow {
    pub t: usize,
    pub omniscient_mlu: f64,
    pub normalized: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NamedSummary {
    pub scheme: String,
    #[serde(flatten)]
    pub summary: Summary,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub schemes: Vec<String>,
    pub rows: Vec<EvalRow>,
    pub skipped: Vec<usize>,
}

impl EvalReport {
    pub fn series(&self, scheme: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.normalized[scheme]).collect()
    }

    pub fn summary(&self, scheme: usize) -> Summary {
        Summary::of(&self.series(scheme))
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.schemes.iter().position(|s| s == name)
    }

    pub fn summaries(&self) -> Vec<NamedSummary> {
        (0..self.schemes.len()).map(|i| NamedSummary { scheme: self.schemes[i].clone(), summary: self.summary(i) }).collect()
    }

    pub fn write(&self, dir: &Path, prefix: &str) -> Result<()> {
        let mut csv = format!("t,omniscient_mlu,{}\n", self.schemes.join(","));
        for r in &self.rows {
            let vals: Vec<String> = r.normalized.iter().map(f64::to_string).collect();
            csv.push_str(&format!("{},{},{}\n", r.t, r.omniscient_mlu, vals.join(",")));
        }
        write_file(&dir.join(format!("{prefix}_normalized.csv")), csv.as_bytes())?;
        #[derive(Serialize)]
        struct Out<'a> {
            schemes: Vec<NamedSummary>,
            skipped: usize,
            skipped_snapshots: &'a [usize],
        }
        write_json(
            &dir.join(format!("{prefix}_summary.json")),
            &Out { schemes: self.summaries(), skipped: self.skipped.len(), skipped_snapshots: &self.skipped },
        )
    }
}

/// Normalized MLU of every scheme on every test snapshot of `trace`.
pub fn run_eval(exp: &Experiment, schemes: &[Scheme], trace: &TrafficTrace) -> Result<EvalReport> {
    check_history(exp, schemes)?;
    let solver = exp.solver();
    let net = Net { ps: &exp.ps, inc: &exp.inc, solver: &solver };
    let ones = vec![1.0; exp.ps.num_paths()];
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for t in exp.test_range() {
        let history = History::before(trace, t);
        let decisions = schemes.iter().map(|s| s.decide(&history, net)).collect::<Result<Vec<_>>>()?;
        let dm = &trace.snapshots()[t];
        let hints: Vec<&TeConfig> = decisions.iter().flatten().collect();
        let reference = reference_solution(dm, net, &ones, &hints)?;
        if reference.mlu <= MIN_REFERENCE_MLU {
            skipped.push(t);
            continue;
        }
        let mut values = Vec::with_capacity(schemes.len());
        for (s, d) in schemes.iter().zip(&decisions) {
            values.push(match d {
                None => 1.0,
                Some(c) => normalized(te::mlu(c, dm, &exp.inc)?, reference.mlu, &s.name, t)?,
            });
        }
        rows.push(EvalRow { t, omniscient_mlu: reference.mlu, normalized: values });
    }
    if !skipped.is_empty() {
        log::info!("skipped {} snapshot(s) with near-zero omniscient MLU", skipped.len());
    }
    Ok(EvalReport { schemes: schemes.iter().map(|s| s.name.clone()).collect(), rows, skipped })
}

#[derive(Debug, Clone, Serialize)]
pub struct FailureTrial {
    pub trial: usize,
    pub t: usize,
    pub failed: Vec<usize>,
    pub oracle_mlu: f64,
    pub normalized: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct FailureReport {
    pub schemes: Vec<String>,
    pub num_failed: usize,
    pub trials: Vec<FailureTrial>,
    /// Trials skipped because an SD pair lost every path.
    pub disconnected: usize,
    pub skipped_zero: usize,
}

impl FailureReport {
    pub fn summary(&self, scheme: usize) -> Summary {
        Summary::of(&self.trials.iter().map(|t| t.normalized[scheme]).collect::<Vec<_>>())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut csv = format!("trial,t,failed,oracle_mlu,{}\n", self.schemes.join(","));
        for r in &self.trials {
            let failed: Vec<String> = r.failed.iter().map(usize::to_string).collect();
            let vals: Vec<String> = r.normalized.iter().map(f64::to_string).collect();
            csv.push_str(&format!("{},{},{},{},{}\n", r.trial, r.t, failed.join(";"), r.oracle_mlu, vals.join(",")));
        }
        write_file(&dir.join(format!("failures_{}.csv", self.num_failed)), csv.as_bytes())?;
        #[derive(Serialize)]
        struct Out {
            num_failed: usize,
            evaluated: usize,
            disconnected: usize,
            skipped_zero: usize,
            schemes: Vec<NamedSummary>,
        }
        let schemes = (0..self.schemes.len())
            .map(|i| NamedSummary { scheme: self.schemes[i].clone(), summary: self.summary(i) })
            .collect();
        write_json(
            &dir.join(format!("failures_{}_summary.json", self.num_failed)),
            &Out {
                num_failed: self.num_failed,
                evaluated: self.trials.len(),
                disconnected: self.disconnected,
                skipped_zero: self.skipped_zero,
                schemes,
            },
        )
    }
}

/// Per trial: a random test snapshot and `num_failed` random failed links.
/// Schemes decide from history, their configs are rerouted around the
/// failure, and the oracle solves on the surviving precomputed paths.
pub fn run_failures(exp: &Experiment, schemes: &[Scheme], num_failed: usize, trials: usize, seed: u64) -> Result<FailureReport> {
    check_history(exp, schemes)?;
    let m = exp.inc.num_constraints();
    if num_failed >= m {
        return Err(HarnessError::Config(format!("cannot fail {num_failed} of {m} links")));
    }
    let solver = exp.solver();
    let net = Net { ps: &exp.ps, inc: &exp.inc, solver: &solver };
    let test = exp.test_range();
    let mut rng = seeded(seed);
    let mut report = FailureReport {
        schemes: schemes.iter().map(|s| s.name.clone()).collect(),
        num_failed,
        trials: Vec::new(),
        disconnected: 0,
        skipped_zero: 0,
    };
    for trial in 0..trials {
        let t = rng.random_range(test.clone());
        let mut failed = index::sample(&mut rng, m, num_failed).into_vec();
        failed.sort_unstable();
        if !te::disconnected_groups(&exp.ps, &failed).is_empty() {
            report.disconnected += 1;
            continue;
        }
        let history = History::before(&exp.trace, t);
        let dm = &exp.trace.snapshots()[t];
        let mut rerouted = Vec::with_capacity(schemes.len());
        for s in schemes {
            rerouted.push(match s.decide(&history, net)? {
                Some(c) => Some(te::reroute_on_failure(&c, &exp.ps, &failed)?),
                None => None,
            });
        }
        let limits: Vec<f64> = te::failed_paths(&exp.ps, &failed).iter().map(|&f| if f { 0.0 } else { 1.0 }).collect();
        let hints: Vec<&TeConfig> = rerouted.iter().flatten().collect();
        let oracle = reference_solution(dm, net, &limits, &hints)?;
        if oracle.mlu <= MIN_REFERENCE_MLU {
            report.skipped_zero += 1;
            continue;
        }
        let mut values = Vec::with_capacity(schemes.len());
        for (s, c) in schemes.iter().zip(&rerouted) {
            values.push(match c {
                None => 1.0,
                Some(c) => normalized(te::mlu(c, dm, &exp.inc)?, oracle.mlu, &s.name, t)?,
            });
        }
        report.trials.push(FailureTrial { trial, t, failed, oracle_mlu: oracle.mlu, normalized: values });
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbMode {
    Aligned,
    WorstCase,
}

impl PerturbMode {
    pub fn label(self) -> &'static str {
        match self {
            PerturbMode::Aligned => "aligned",
            PerturbMode::WorstCase => "worst_case",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PerturbRow {
    pub alpha: f64,
    pub scheme: String,
    pub mean: f64,
    pub p90: f64,
    pub severe_fraction: f64,
    /// Relative change against the unperturbed run.
    pub mean_degradation: f64,
    pub p90_degradation: f64,
}

#[derive(Debug, Clone)]
pub struct PerturbReport {
    pub mode: PerturbMode,
    pub rows: Vec<PerturbRow>,
}

impl PerturbReport {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut csv = String::from("alpha,scheme,mean,p90,severe_fraction,mean_degradation,p90_degradation\n");
        for r in &self.rows {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.alpha, r.scheme, r.mean, r.p90, r.severe_fraction, r.mean_degradation, r.p90_degradation
            ));
        }
        write_file(&dir.join(format!("perturb_{}.csv", self.mode.label())), csv.as_bytes())
    }
}

/// Sigma map for perturbing: training-range standard deviations, or their
/// rank-reversed assignment in worst-case mode.
pub fn perturbation_sigma(stats: &TrafficStats, mode: PerturbMode) -> Vec<f64> {
    match mode {
        PerturbMode::Aligned => stats.std_devs(),
        PerturbMode::WorstCase => worst_case_reorder(stats),
    }
}

/// Re-evaluates every scheme with Gaussian fluctuation of scale `alpha * sigma`
/// added to the test snapshots. The same noise stream is used for each alpha.
pub fn run_perturbation(exp: &Experiment, schemes: &[Scheme], alphas: &[f64], mode: PerturbMode, seed: u64) -> Result<PerturbReport> {
    let base = run_eval(exp, schemes, &exp.trace)?;
    let sigma = perturbation_sigma(&exp.train_stats()?, mode);
    let mut rows = Vec::new();
    for &alpha in alphas {
        if !(alpha >= 0.0) {
            return Err(HarnessError::Config(format!("alpha must be nonnegative, got {alpha}")));
        }
        let trace = perturb(&exp.trace, &sigma, alpha, exp.test_range(), seed);
        let report = run_eval(exp, schemes, &trace)?;
        for (i, name) in report.schemes.iter().enumerate() {
            let (b, p) = (base.summary(i), report.summary(i));
            rows.push(PerturbRow {
                alpha,
                scheme: name.clone(),
                mean: p.mean,
                p90: p.p(90),
                severe_fraction: p.severe_fraction,
                mean_degradation: p.mean / b.mean - 1.0,
                p90_degradation: p.p(90) / b.p(90) - 1.0,
            });
        }
    }
    Ok(PerturbReport { mode, rows })
}

#[derive(Debug, Clone)]
pub struct InterpretReport {
    pub schemes: Vec<String>,
    pub sd_pairs: Vec<(usize, usize)>,
    /// Training-range variance per SD pair, scaled so the largest is 1.
    pub variance: Vec<f64>,
    /// `[scheme][sd]` mean maximum path sensitivity in normalized capacity units.
    pub mean_smax: Vec<Vec<f64>>,
}

impl InterpretReport {
    pub fn spearman(&self, scheme: usize) -> Option<f64> {
        spearman(&self.variance, &self.mean_smax[scheme]).ok()
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut csv = format!("sd_src,sd_dst,variance,{}\n", self.schemes.join(","));
        for (sd, &(s, d)) in self.sd_pairs.iter().enumerate() {
            let vals: Vec<String> = self.mean_smax.iter().map(|v| v[sd].to_string()).collect();
            csv.push_str(&format!("{s},{d},{},{}\n", self.variance[sd], vals.join(",")));
        }
        write_file(&dir.join("interpret.csv"), csv.as_bytes())?;
        let spearman: BTreeMap<&str, Option<f64>> =
            self.schemes.iter().enumerate().map(|(i, n)| (n.as_str(), self.spearman(i))).collect();
        write_json(&dir.join("interpret_summary.json"), &spearman)
    }
}

/// Per-SD training variance against each scheme's mean maximum path
/// sensitivity over the test snapshots.
pub fn run_interpret(exp: &Experiment, schemes: &[Scheme]) -> Result<InterpretReport> {
    check_history(exp, schemes)?;
    let stats = exp.train_stats()?;
    let solver = exp.solver();
    let net = Net { ps: &exp.ps, inc: &exp.inc, solver: &solver };
    let ones = vec![1.0; exp.ps.num_paths()];
    let reference_capacity = exp.ps.min_edge_capacity();
    let mut sums = vec![vec![0.0; exp.ps.num_sd()]; schemes.len()];
    let test = exp.test_range();
    for t in test.clone() {
        let history = History::before(&exp.trace, t);
        for (s, acc) in schemes.iter().zip(&mut sums) {
            let config = match s.decide(&history, net)? {
                Some(c) => c,
                None => reference_solution(&exp.trace.snapshots()[t], net, &ones, &[])?.config,
            };
            for (a, v) in acc.iter_mut().zip(te::max_sensitivity_per_sd(&config, &exp.ps)) {
                *a += v * reference_capacity;
            }
        }
    }
    let n = test.len() as f64;
    let raw: Vec<f64> = exp.ps.sd_pairs().iter().map(|&(s, d)| stats.variance_of(s, d)).collect();
    let max = raw.iter().copied().fold(0.0, f64::max);
    Ok(InterpretReport {
        schemes: schemes.iter().map(|s| s.name.clone()).collect(),
        sd_pairs: exp.ps.sd_pairs().to_vec(),
        variance: raw.iter().map(|v| if max > 0.0 { v / max } else { 0.0 }).collect(),
        mean_smax: sums.into_iter().map(|acc| acc.into_iter().map(|v| v / n).collect()).collect(),
    })
}

#[derive(Debug, Clone)]
pub struct CharacterizeReport {
    pub window: usize,
    pub cosine: Vec<f64>,
    pub stats: TrafficStats,
}

impl CharacterizeReport {
    pub fn quartiles(&self) -> [f64; 3] {
        let mut s = self.cosine.clone();
        s.sort_by(f64::total_cmp);
        [percentile(&s, 25.0), percentile(&s, 50.0), percentile(&s, 75.0)]
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut csv = String::from("t,similarity\n");
        for (i, v) in self.cosine.iter().enumerate() {
            csv.push_str(&format!("{},{v}\n", self.window + i));
        }
        write_file(&dir.join("cosine.csv"), csv.as_bytes())?;
        formats::write_stats(&dir.join("variance.csv"), &self.stats)
    }
}

pub fn run_characterize(trace: &TrafficTrace, window: usize) -> Result<CharacterizeReport> {
    if window == 0 {
        return Err(HarnessError::Config("window must be at least 1".into()));
    }
    Ok(CharacterizeReport { window, cosine: cosine_profile(trace, window), stats: compute_stats(trace, 0..trace.len())? })
}

#[derive(Debug, Clone, Serialize)]
pub struct TimingReport {
    /// One-time work in seconds: path enumeration and model training.
    pub precompute: BTreeMap<String, f64>,
    /// Mean wall-clock seconds per decision; the oracle is timed on its solve.
    pub per_snapshot: BTreeMap<String, f64>,
    pub snapshots: usize,
}

impl TimingReport {
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("timing.json"), self)
    }
}

/// Times each scheme's decisions over (at most `limit`) test snapshots, one scheme at a time.
pub fn run_timing(exp: &Experiment, schemes: &[Scheme], trained: &[TrainedModel], limit: usize) -> Result<TimingReport> {
    check_history(exp, schemes)?;
    let solver = exp.solver();
    let net = Net { ps: &exp.ps, inc: &exp.inc, solver: &solver };
    let ones = vec![1.0; exp.ps.num_paths()];
    let test = exp.test_range();
    let ts: Vec<usize> = test.take(limit.max(1)).collect();
    let mut precompute = BTreeMap::new();
    precompute.insert("paths".to_string(), exp.path_time.as_secs_f64());
    for t in trained {
        precompute.insert(format!("train_{}", t.name), t.seconds);
    }
    let mut per_snapshot = BTreeMap::new();
    for s in schemes {
        let start = Instant::now();
        for &t in &ts {
            let history = History::before(&exp.trace, t);
            if s.decide(&history, net)?.is_none() {
                reference_solution(&exp.trace.snapshots()[t], net, &ones, &[])?;
            }
        }
        per_snapshot.insert(s.name.clone(), start.elapsed().as_secs_f64() / ts.len() as f64);
    }
    Ok(TimingReport { precompute, per_snapshot, snapshots: ts.len() })
}

/// Writes a trained model, its loss log and, if tuned, the gamma sweep.
pub fn write_trained(dir: &Path, t: &TrainedModel) -> Result<()> {
    formats::save_model(&dir.join(format!("model_{}.json", t.name)), &t.model)?;
    let mut csv = String::from("epoch,loss\n");
    for (i, l) in t.log.epoch_loss.iter().enumerate() {
        csv.push_str(&format!("{},{l}\n", i + 1));
    }
    write_file(&dir.join(format!("train_log_{}.csv", t.name)), csv.as_bytes())?;
    if !t.tuning.is_empty() {
        let mut csv = String::from("gamma,mean,p90,p99,severe_fraction,selected\n");
        for r in &t.tuning {
            csv.push_str(&format!("{},{},{},{},{},{}\n", r.gamma, r.mean, r.p90, r.p99, r.severe_fraction, r.gamma == t.model.gamma));
        }
        write_file(&dir.join(format!("gamma_tuning_{}.csv", t.name)), csv.as_bytes())?;
    }
    Ok(())
}
