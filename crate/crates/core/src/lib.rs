//! Budget-constrained selection of agents for false-data-injection attacks on
//! linear multi-agent consensus networks.

pub mod attack;
pub mod cli;
pub mod config;
pub mod convergence;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod presets;
pub mod report;
pub mod selection;
pub mod submodularity;

pub use error::{Error, Result};
