//! Experiment harness for burst-aware traffic engineering: file formats,
//! experiment configuration, the TE schemes under comparison and the
//! experiment drivers behind the `rte` command line tool.

pub mod config;
pub mod error;
pub mod experiments;
pub mod formats;
pub mod metrics;
pub mod schemes;

pub use error::{HarnessError, Result};
pub use rte_core;
