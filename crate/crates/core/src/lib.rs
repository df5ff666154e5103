//! Accelerated and unaccelerated inexact proximal point methods in ℓ_p geometry.
//!
//! The crate covers:
//! - p-norm geometry, uniformly convex regularizers and Bregman divergences ([`pnorm_core`]);
//! - the per-iteration subproblems: step-size equation, mirror step and Taylor-model criticality ([`subproblems`]);
//! - inexact proximal oracles with an always-on inequality audit ([`prox_oracle`]);
//! - the accelerated method with a duality-gap auditor ([`accel_ppm`]) and its adaptive variant ([`adaptive_ppm`]);
//! - the unaccelerated proximal point method ([`unaccel_ppm`]);
//! - benchmark objectives ([`problems`]) and the lower-bound laboratory ([`hard_instances`]).

pub mod accel_ppm;
pub mod adaptive_ppm;
pub mod error;
pub mod hard_instances;
pub mod numeric;
pub mod pnorm_core;
pub mod problems;
pub mod prox_oracle;
pub mod seed;
pub mod subproblems;
pub mod trace;
pub mod unaccel_ppm;
pub mod vector;

pub use error::{Error, Result};
pub use pnorm_core::{Geometry, Regularizer};
pub use prox_oracle::{Problem, ProxAnswer, ProxOracle};
pub use trace::RunTrace;
