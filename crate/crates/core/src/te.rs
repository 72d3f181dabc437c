//! TE configurations and their evaluation: link loads, MLU, path sensitivity
//! and proportional rerouting around failed links.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::topology::{Incidence, PathSets};
use crate::traffic::DemandMatrix;

/// Group sums must match 1 within this tolerance.
pub const GROUP_SUM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TeError {
    #[error("expected {expected} {what}, got {got}")]
    Shape { what: &'static str, expected: usize, got: usize },
    #[error("ratio {value} of path {path} outside [0, 1]")]
    RatioRange { path: usize, value: f64 },
    #[error("split ratios of SD pair ({src},{dst}) sum to {sum}")]
    GroupSum { src: usize, dst: usize, sum: f64 },
    #[error("every path of SD pair ({src},{dst}) traverses a failed link")]
    AllPathsFailed { src: usize, dst: usize },
}

/// Per-path split ratios in global path order; each SD group sums to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TeConfig {
    ratios: Vec<f64>,
}

impl TeConfig {
    pub fn new(ratios: Vec<f64>, ps: &PathSets) -> Result<Self, TeError> {
        let config = Self { ratios };
        config.validate(ps)?;
        Ok(config)
    }

    pub(crate) fn from_ratios_unchecked(ratios: Vec<f64>) -> Self {
        Self { ratios }
    }

    /// Even split over every group.
    pub fn uniform(ps: &PathSets) -> Self {
        let mut ratios = vec![0.0; ps.num_paths()];
        for g in ps.groups() {
            let share = 1.0 / g.len() as f64;
            ratios[g].iter_mut().for_each(|r| *r = share);
        }
        Self { ratios }
    }

    /// Everything on the first (shortest) path of each group.
    pub fn shortest_only(ps: &PathSets) -> Self {
        let mut ratios = vec![0.0; ps.num_paths()];
        for g in ps.groups() {
            ratios[g.start] = 1.0;
        }
        Self { ratios }
    }

    pub fn validate(&self, ps: &PathSets) -> Result<(), TeError> {
        if self.ratios.len() != ps.num_paths() {
            return Err(TeError::Shape { what: "ratios", expected: ps.num_paths(), got: self.ratios.len() });
        }
        for (path, &value) in self.ratios.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(TeError::RatioRange { path, value });
            }
        }
        for (sd, g) in ps.groups().enumerate() {
            let sum: f64 = self.ratios[g].iter().sum();
            if (sum - 1.0).abs() > GROUP_SUM_TOL {
                let (src, dst) = ps.sd_pairs()[sd];
                return Err(TeError::GroupSum { src, dst, sum });
            }
        }
        Ok(())
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    pub fn into_ratios(self) -> Vec<f64> {
        self.ratios
    }

    /// Ratios of SD group `sd`.
    pub fn group<'a>(&'a self, ps: &PathSets, sd: usize) -> &'a [f64] {
        &self.ratios[ps.group(sd)]
    }

    /// Convex combination `lambda * self + (1 - lambda) * other`.
    pub fn blend(&self, other: &TeConfig, lambda: f64) -> TeConfig {
        let ratios = self.ratios.iter().zip(&other.ratios).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
        TeConfig { ratios }
    }
}

/// Per-constraint load under a configuration and demand matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkLoad {
    pub flow: Vec<f64>,
    pub utilization: Vec<f64>,
    pub mlu: f64,
    /// Constraint attaining the MLU; lowest index on ties, 0 when there are no constraints.
    pub argmax: usize,
}

/// Index and value of the maximum, lowest index on ties.
pub(crate) fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &v) in values.iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    if values.is_empty() {
        (0, 0.0)
    } else {
        best
    }
}

/// Flow per constraint: `path_to_edge^T * ((sd_to_path^T * dm) .* ratios)`.
pub(crate) fn constraint_flows(ratios: &[f64], dm: &DemandMatrix, inc: &Incidence, flow: &mut [f64]) {
    flow.iter_mut().for_each(|f| *f = 0.0);
    let demand = dm.values();
    let sd_index = inc.sd_demand_index();
    for (p, (&r, &sd)) in ratios.iter().zip(inc.path_sd()).enumerate() {
        let volume = demand[sd_index[sd]] * r;
        if volume != 0.0 {
            for &e in inc.path_constraints(p) {
                flow[e] += volume;
            }
        }
    }
}

fn check_shapes(ratios: &[f64], dm: &DemandMatrix, inc: &Incidence) -> Result<(), TeError> {
    if ratios.len() != inc.num_paths() {
        return Err(TeError::Shape { what: "ratios", expected: inc.num_paths(), got: ratios.len() });
    }
    if dm.num_nodes() != inc.num_nodes() {
        return Err(TeError::Shape { what: "demand matrix nodes", expected: inc.num_nodes(), got: dm.num_nodes() });
    }
    Ok(())
}

pub fn evaluate(config: &TeConfig, dm: &DemandMatrix, inc: &Incidence) -> Result<LinkLoad, TeError> {
    check_shapes(config.ratios(), dm, inc)?;
    let mut flow = vec![0.0; inc.num_constraints()];
    constraint_flows(config.ratios(), dm, inc, &mut flow);
    let utilization: Vec<f64> = flow.iter().zip(inc.capacity()).map(|(f, c)| f / c).collect();
    let (argmax, mlu) = argmax(&utilization);
    Ok(LinkLoad { flow, utilization, mlu, argmax })
}

/// MLU only; same arithmetic as [`evaluate`].
pub fn mlu(config: &TeConfig, dm: &DemandMatrix, inc: &Incidence) -> Result<f64, TeError> {
    evaluate(config, dm, inc).map(|l| l.mlu)
}

/// Path sensitivity `r_p / C_p`. Never reads demand.
pub fn sensitivities(config: &TeConfig, ps: &PathSets) -> Vec<f64> {
    config.ratios().iter().zip(ps.paths()).map(|(r, p)| r / p.capacity).collect()
}

/// Per SD group: `(global path index, sensitivity)` of its most sensitive
/// path, lowest index on ties.
pub fn max_sensitivity_argmax(config: &TeConfig, ps: &PathSets) -> Vec<(usize, f64)> {
    let s = sensitivities(config, ps);
    ps.groups()
        .map(|g| {
            let (i, v) = argmax(&s[g.clone()]);
            (g.start + i, v)
        })
        .collect()
}

pub fn max_sensitivity_per_sd(config: &TeConfig, ps: &PathSets) -> Vec<f64> {
    max_sensitivity_argmax(config, ps).into_iter().map(|(_, v)| v).collect()
}

/// `true` for every path traversing at least one failed constraint.
pub fn failed_paths(ps: &PathSets, failed_constraints: &[usize]) -> Vec<bool> {
    ps.paths().iter().map(|p| p.edges.iter().any(|e| failed_constraints.contains(e))).collect()
}

/// SD groups whose every path traverses a failed constraint.
pub fn disconnected_groups(ps: &PathSets, failed_constraints: &[usize]) -> Vec<usize> {
    let failed = failed_paths(ps, failed_constraints);
    ps.groups().enumerate().filter(|(_, g)| failed[g.clone()].iter().all(|&f| f)).map(|(sd, _)| sd).collect()
}

/// Moves the share of failed paths onto the surviving paths of the same SD
/// group, proportionally to their ratios, or evenly when the survivors carry
/// nothing. Groups without a failed path that carries traffic are untouched.
pub fn reroute_on_failure(config: &TeConfig, ps: &PathSets, failed_constraints: &[usize]) -> Result<TeConfig, TeError> {
    let failed = failed_paths(ps, failed_constraints);
    let mut ratios = config.ratios().to_vec();
    for (sd, g) in ps.groups().enumerate() {
        let survivors: Vec<usize> = g.clone().filter(|&p| !failed[p]).collect();
        if survivors.is_empty() {
            let (src, dst) = ps.sd_pairs()[sd];
            return Err(TeError::AllPathsFailed { src, dst });
        }
        if !g.clone().any(|p| failed[p] && ratios[p] != 0.0) {
            continue;
        }
        let kept: f64 = survivors.iter().map(|&p| ratios[p]).sum();
        for p in g {
            if failed[p] {
                ratios[p] = 0.0;
            }
        }
        if kept > 0.0 {
            survivors.iter().for_each(|&p| ratios[p] /= kept);
        } else {
            let share = 1.0 / survivors.len() as f64;
            survivors.iter().for_each(|&p| ratios[p] = share);
        }
    }
    Ok(TeConfig { ratios })
}
