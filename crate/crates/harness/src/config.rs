//! Experiment configuration (JSON).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rte_core::neural::DEFAULT_HIDDEN;
use rte_core::optimize::{BoundKind, SolveOptions};
use rte_core::traffic::Bursts;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::formats::read_json;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub topology: PathBuf,
    pub traffic: TrafficSource,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_h")]
    pub h: usize,
    #[serde(default = "default_split")]
    pub split: f64,
    pub schemes: Vec<SchemeSpec>,
    #[serde(default)]
    pub training: TrainingSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_k() -> usize {
    3
}
fn default_h() -> usize {
    12
}
fn default_split() -> f64 {
    0.75
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TrafficSource {
    /// Headerless CSV, one snapshot of `n * n` values per row.
    Trace(PathBuf),
    Gravity(GravitySpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GravitySpec {
    /// Node weights; defaults to the summed capacity of each node's edges.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    pub total: f64,
    pub count: usize,
    #[serde(default)]
    pub jitter: f64,
    #[serde(default)]
    pub bursts: Option<BurstSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BurstSpec {
    pub fraction: f64,
    pub alpha: f64,
    #[serde(default = "one")]
    pub sigma_scale: f64,
    /// Per-snapshot burst probability.
    #[serde(default = "one")]
    pub rate: f64,
}

impl BurstSpec {
    pub fn bursts(&self) -> Bursts {
        Bursts { fraction: self.fraction, alpha: self.alpha, sigma_scale: self.sigma_scale, rate: self.rate }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SchemeSpec {
    Omniscient {
        #[serde(default)]
        name: Option<String>,
    },
    Prediction {
        #[serde(default)]
        name: Option<String>,
    },
    Desensitization {
        #[serde(default)]
        name: Option<String>,
        bound: BoundSpec,
        /// Peak window length; defaults to `h`.
        #[serde(default)]
        window: Option<usize>,
    },
    Neural {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        gamma: GammaSpec,
        /// Pretrained model file; trained from the config when absent.
        #[serde(default)]
        model: Option<PathBuf>,
    },
}

impl SchemeSpec {
    pub fn name(&self) -> String {
        let (name, kind) = match self {
            SchemeSpec::Omniscient { name } => (name, "omniscient"),
            SchemeSpec::Prediction { name } => (name, "prediction"),
            SchemeSpec::Desensitization { name, .. } => (name, "desensitization"),
            SchemeSpec::Neural { name, .. } => (name, "neural"),
        };
        name.clone().unwrap_or_else(|| kind.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundSpec {
    Unbounded,
    Uniform { cap: f64 },
    Linear { min: f64, max: f64 },
    Piecewise { min: f64, max: f64, breakpoint: f64 },
}

impl From<BoundSpec> for BoundKind {
    fn from(b: BoundSpec) -> Self {
        match b {
            BoundSpec::Unbounded => BoundKind::Unbounded,
            BoundSpec::Uniform { cap } => BoundKind::Uniform { cap },
            BoundSpec::Linear { min, max } => BoundKind::Linear { min, max },
            BoundSpec::Piecewise { min, max, breakpoint } => BoundKind::Piecewise { min, max, breakpoint },
        }
    }
}

/// Either a fixed loss weight or `"auto"` for a validation sweep over
/// `training.gamma_candidates`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum GammaSpec {
    #[default]
    Auto,
    Value(f64),
}

impl Serialize for GammaSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            GammaSpec::Auto => s.serialize_str("auto"),
            GammaSpec::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for GammaSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(GammaSpec::Value(v)),
            Raw::Str(s) if s == "auto" => Ok(GammaSpec::Auto),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("gamma must be a number or \"auto\", got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSpec {
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub hidden: Vec<usize>,
    pub gamma_candidates: Vec<f64>,
    /// Tail fraction of the training range held out when tuning gamma.
    pub validation_fraction: f64,
    /// Largest relative rise in validation mean normalized MLU a tuned gamma may cost.
    pub mean_tolerance: f64,
    /// Retrain the selected gamma on the whole training range after tuning.
    pub refit: bool,
}

impl Default for TrainingSpec {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch: 32,
            lr: 1e-3,
            hidden: DEFAULT_HIDDEN.to_vec(),
            gamma_candidates: vec![0.0, 0.1, 1.0, 10.0],
            validation_fraction: 0.2,
            mean_tolerance: 0.02,
            refit: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub max_iters: usize,
    pub tolerance: f64,
    pub temperature: f64,
    pub decay: f64,
    pub decay_every: f64,
    pub step: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let o = SolveOptions::default();
        Self {
            max_iters: o.max_iters,
            tolerance: o.tolerance,
            temperature: o.temperature,
            decay: o.decay,
            decay_every: o.decay_every,
            step: o.step,
        }
    }
}

impl SolverSpec {
    pub fn options(&self) -> SolveOptions {
        SolveOptions {
            max_iters: self.max_iters,
            tolerance: self.tolerance,
            temperature: self.temperature,
            decay: self.decay,
            decay_every: self.decay_every,
            step: self.step,
        }
    }
}

/// One seed per purpose. Unset purposes derive from `base`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub base: u64,
    pub synth: Option<u64>,
    pub bursts: Option<u64>,
    pub train: Option<u64>,
    pub failures: Option<u64>,
    pub perturb: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Synth,
    Bursts,
    Train,
    Failures,
    Perturb,
}

impl Seeds {
    pub fn for_purpose(&self, p: Purpose) -> u64 {
        let (explicit, offset) = match p {
            Purpose::Synth => (self.synth, 0),
            Purpose::Bursts => (self.bursts, 1),
            Purpose::Train => (self.train, 2),
            Purpose::Failures => (self.failures, 3),
            Purpose::Perturb => (self.perturb, 4),
        };
        explicit.unwrap_or(self.base.wrapping_add(offset))
    }
}

impl ExperimentConfig {
    /// Reads a config and resolves relative file paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = read_json(path).map_err(|e| match e {
            HarnessError::Data(msg) => HarnessError::Config(msg),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.topology);
        if let TrafficSource::Trace(p) = &mut self.traffic {
            fix(p);
        }
        for s in &mut self.schemes {
            if let SchemeSpec::Neural { model: Some(p), .. } = s {
                fix(p);
            }
        }
        fix(&mut self.output);
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.h == 0 {
            return bad("h must be at least 1".into());
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return bad(format!("split must lie in (0, 1), got {}", self.split));
        }
        if self.schemes.is_empty() {
            return bad("no schemes configured".into());
        }
        let mut names = BTreeSet::new();
        for s in &self.schemes {
            if !names.insert(s.name()) {
                return bad(format!("duplicate scheme name {:?}", s.name()));
            }
            match s {
                SchemeSpec::Desensitization { window: Some(0), .. } => return bad("desensitization window must be at least 1".into()),
                SchemeSpec::Neural { gamma: GammaSpec::Value(g), .. } if !(*g >= 0.0 && g.is_finite()) => {
                    return bad(format!("gamma must be nonnegative, got {g}"))
                }
                _ => {}
            }
        }
        let t = &self.training;
        if t.batch == 0 || !(t.lr > 0.0) || t.hidden.contains(&0) {
            return bad("training needs batch >= 1, lr > 0 and positive hidden widths".into());
        }
        if t.gamma_candidates.is_empty() || t.gamma_candidates.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
            return bad("gamma_candidates must be a nonempty list of nonnegative values".into());
        }
        if !(t.validation_fraction > 0.0 && t.validation_fraction < 1.0) {
            return bad("validation_fraction must lie in (0, 1)".into());
        }
        if !(t.mean_tolerance >= 0.0 && t.mean_tolerance.is_finite()) {
            return bad("mean_tolerance must be nonnegative".into());
        }
        if let TrafficSource::Gravity(g) = &self.traffic {
            if g.count == 0 || !(g.total >= 0.0) || !(g.jitter >= 0.0) {
                return bad("gravity needs count >= 1, total >= 0 and jitter >= 0".into());
            }
            if let Some(b) = &g.bursts {
                if !(0.0..=1.0).contains(&b.fraction) || !(b.alpha >= 0.0) || !(b.sigma_scale >= 0.0) || !(0.0..=1.0).contains(&b.rate) {
                    return bad("bursts need fraction and rate in [0, 1] and nonnegative alpha and sigma_scale".into());
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "topology": "topo.json",
        "traffic": {"gravity": {"total": 100, "count": 50, "jitter": 0.05,
                                "bursts": {"fraction": 0.1, "alpha": 2}}},
        "schemes": [
            {"kind": "omniscient"},
            {"kind": "desensitization", "name": "hedge", "bound": {"kind": "uniform", "cap": 0.6667}},
            {"kind": "neural", "gamma": 0.5},
            {"kind": "neural", "name": "tuned"}
        ],
        "seeds": {"base": 7, "train": 99}
    }"#;

    #[test]
    fn parses_with_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str(SAMPLE).unwrap();
        cfg.validate().unwrap();
        assert_eq!((cfg.k, cfg.h, cfg.split), (3, 12, 0.75));
        assert_eq!(cfg.schemes[1].name(), "hedge");
        assert!(matches!(cfg.schemes[2], SchemeSpec::Neural { gamma: GammaSpec::Value(g), .. } if g == 0.5));
        assert!(matches!(cfg.schemes[3], SchemeSpec::Neural { gamma: GammaSpec::Auto, .. }));
        assert_eq!(cfg.seeds.for_purpose(Purpose::Train), 99);
        assert_eq!(cfg.seeds.for_purpose(Purpose::Bursts), 8);
        let TrafficSource::Gravity(g) = &cfg.traffic else { panic!() };
        assert_eq!(g.bursts.as_ref().unwrap().sigma_scale, 1.0);
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg: ExperimentConfig = serde_json::from_str(SAMPLE).unwrap();
        cfg.schemes.push(SchemeSpec::Omniscient { name: None });
        assert!(matches!(cfg.validate(), Err(HarnessError::Config(_))));
        let mut cfg: ExperimentConfig = serde_json::from_str(SAMPLE).unwrap();
        cfg.split = 1.0;
        assert!(cfg.validate().is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(&SAMPLE.replace("\"gamma\": 0.5", "\"gamma\": \"big\"")).is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(&SAMPLE.replace("\"jitter\"", "\"jiter\"")).is_err());
    }

    #[test]
    fn relative_paths_follow_config_dir() {
        let mut cfg: ExperimentConfig = serde_json::from_str(SAMPLE).unwrap();
        cfg.resolve_paths(Path::new("/data/exp"));
        assert_eq!(cfg.topology, PathBuf::from("/data/exp/topo.json"));
        assert_eq!(cfg.output, PathBuf::from("/data/exp/out"));
    }
}
