//! Burst-aware traffic engineering on precomputed path sets.
//!
//! The crate is `no_std` (with `alloc`) and holds every algorithm used by the
//! `rte` harness:
//!
//! - [`topology`]: capacitated graphs, k-shortest path enumeration, incidence structures.
//! - [`traffic`]: demand matrices and traces, gravity synthesis, statistics, perturbation.
//! - [`te`]: split-ratio configurations, MLU evaluation, path sensitivity, failure rerouting.
//! - [`optimize`]: sensitivity-bounded MLU minimization and the classical baselines.
//! - [`neural`]: the MLP policy mapping a demand history window to split ratios.
//!
//! All randomness is drawn from [`rng::seeded`], so every result is a pure
//! function of its inputs and seed.

#![cfg_attr(not(test), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod neural;
pub mod optimize;
pub mod rng;
pub mod te;
pub mod topology;
pub mod traffic;

pub use neural::{AdamState, Mlp, TrainOptions, TrainingLog};
pub use optimize::{BoundKind, SensitivityBound, SolveOptions, Solution};
pub use te::{LinkLoad, TeConfig};
pub use topology::{Edge, Graph, Incidence, Path, PathSets};
pub use traffic::{Bursts, DemandMatrix, TrafficStats, TrafficTrace};
