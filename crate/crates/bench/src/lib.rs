//! Experiment runner for the proximal point methods in `ppm_core`: solve
//! runs with certificate audits, log-log rate fits, lower-bound probes and
//! a quick smoke suite.

pub mod audit;
pub mod config;
pub mod error;
pub mod lowerbound;
pub mod output;
pub mod ratefit;
pub mod smoke;
pub mod solve;

pub use error::{BenchError, Result};
