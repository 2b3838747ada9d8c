//! Precinct graphs, districting plans, Markov chain ensembles and partisan
//! metrics for analyzing redistricting plans.
pub mod chains;
pub mod config;
pub mod diagnostics;
pub mod ensemble;
pub mod error;
pub mod graph;
pub mod metrics;
pub mod partition;
pub mod superdistrict;

pub use error::{Error, Result};
pub use graph::{DualGraph, Precinct, VoteCount};
pub use partition::{Plan, PlanHash};
