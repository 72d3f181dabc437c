//! TE schemes and the history view they decide from.

use rte_core::neural::Mlp;
use rte_core::optimize::{desensitization_te, prediction_te, SensitivityBound, SolveOptions};
use rte_core::te::TeConfig;
use rte_core::topology::{Incidence, PathSets};
use rte_core::traffic::{DemandMatrix, TrafficTrace};

use crate::error::{HarnessError, Result};

/// Snapshots strictly before the decision time. Schemes never see `D_t`.
#[derive(Debug, Clone, Copy)]
pub struct History<'a> {
    past: &'a [DemandMatrix],
}

impl<'a> History<'a> {
    pub fn before(trace: &'a TrafficTrace, t: usize) -> Self {
        Self { past: &trace.snapshots()[..t.min(trace.len())] }
    }

    pub fn len(&self) -> usize {
        self.past.len()
    }

    pub fn is_empty(&self) -> bool {
        self.past.is_empty()
    }

    /// The last `h` snapshots, oldest first.
    pub fn window(&self, h: usize) -> Option<&'a [DemandMatrix]> {
        (h <= self.past.len()).then(|| &self.past[self.past.len() - h..])
    }
}

pub enum Policy {
    /// Solves on the actual demand; only usable as the normalization oracle.
    Omniscient,
    Prediction,
    Desensitization { bound: SensitivityBound, window: usize },
    Neural(Box<Mlp>),
}

pub struct Scheme {
    pub name: String,
    pub policy: Policy,
}

/// Network context shared by every decision.
#[derive(Clone, Copy)]
pub struct Net<'a> {
    pub ps: &'a PathSets,
    pub inc: &'a Incidence,
    pub solver: &'a SolveOptions,
}

impl Scheme {
    pub fn is_oracle(&self) -> bool {
        matches!(self.policy, Policy::Omniscient)
    }

    /// Snapshots of history needed before the first decision.
    pub fn history_needed(&self) -> usize {
        match &self.policy {
            Policy::Omniscient => 0,
            Policy::Prediction => 1,
            Policy::Desensitization { window, .. } => *window,
            Policy::Neural(m) => m.h,
        }
    }

    /// Configuration for the next interval. `None` for the oracle, whose
    /// decision is the reference solution itself.
    pub fn decide(&self, history: &History<'_>, net: Net<'_>) -> Result<Option<TeConfig>> {
        let window = history.window(self.history_needed()).ok_or_else(|| {
            HarnessError::Config(format!(
                "scheme {:?} needs {} snapshots of history, only {} available",
                self.name,
                self.history_needed(),
                history.len()
            ))
        })?;
        Ok(match &self.policy {
            Policy::Omniscient => None,
            Policy::Prediction => Some(prediction_te(window, net.ps, net.inc, net.solver)?.config),
            Policy::Desensitization { bound, .. } => Some(desensitization_te(window, bound, net.ps, net.inc, net.solver)?.config),
            Policy::Neural(m) => Some(m.forward(window)?),
        })
    }
}
