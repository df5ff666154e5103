//! Accelerated inexact proximal point method with a (possibly δ-inexact)
//! uniformly convex regularizer, plus a duality-gap auditor.
//!
//! The lower model at step k is
//! `Φ_k(z) = Σ_{i≤k} a_i(⟨v_i, z − ỹ_i⟩ − ε_i) + D_ψ(z, x₀)` and the gap is
//! `A_k G_k = A_k f(y_k) − Σ a_i f(ỹ_i) − Φ_k(z_k) + D_ψ(u, x₀)`. Its
//! per-step change is audited against a budget E_k on every iteration.

use crate::error::{Error, Result};
use crate::pnorm_core::{bregman, Geometry, Regularizer};
use crate::prox_oracle::{Problem, ProxAnswer, ProxOracle};
use crate::subproblems::{solve_step, solve_zstep, StepEquation};
use crate::trace::{RunStatus, RunTrace, TraceRow};
use crate::vector::{axpy, dot, lincomb, sub};

/// Absolute tolerance for the per-iteration oracle and gap audits.
pub const AUDIT_TOL: f64 = 1e-8;
/// Relative tolerance for the witness identities.
pub const WITNESS_TOL: f64 = 1e-10;
pub(crate) const STEP_TOL: f64 = 1e-12;

/// `(μ/2)·(r*(1 − σ − σ′)/(1 + σ^{r*}))^{r−1}`.
pub fn accel_constant(mu: f64, r: f64, sigma: f64, sigma_prime: f64) -> f64 {
    let rs = r / (r - 1.0);
    0.5 * mu * (rs * (1.0 - sigma - sigma_prime) / (1.0 + sigma.powf(rs))).powf(r - 1.0)
}

/// Running sums for the incremental gap drop.
#[derive(Clone, Debug)]
pub(crate) struct GapLedger {
    sum_av: Vec<f64>,
    z_prev: Vec<f64>,
    psi_prev: f64,
    a_prev: f64,
    f_prev: f64,
}

impl GapLedger {
    pub(crate) fn new(x0: &[f64]) -> Self {
        GapLedger { sum_av: vec![0.0; x0.len()], z_prev: x0.to_vec(), psi_prev: 0.0, a_prev: 0.0, f_prev: 0.0 }
    }

    pub(crate) fn sum_av(&self) -> &[f64] {
        &self.sum_av
    }

    /// `A_kG_k − A_{k−1}G_{k−1}` (minus D_ψ(u, x₀) at k = 1), computed
    /// without reference to u. `f_y` and `f_yt` may be `None` when f is not
    /// queried; no drop is reported then.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn advance(
        &mut self,
        psi: &Regularizer,
        a: f64,
        big_a: f64,
        v: &[f64],
        eps: f64,
        y_tilde: &[f64],
        z: &[f64],
        f_y: Option<f64>,
        f_yt: Option<f64>,
    ) -> Option<f64> {
        let psi_z = psi.value(z);
        let model_change = dot(&self.sum_av, &sub(z, &self.z_prev)) + a * (dot(v, &sub(z, y_tilde)) - eps) + (psi_z - self.psi_prev);
        let drop = match (f_y, f_yt) {
            (Some(fy), Some(fyt)) => {
                let upper = if self.a_prev > 0.0 { self.a_prev * (fy - self.f_prev) } else { 0.0 } + a * (fy - fyt);
                Some(upper - model_change)
            }
            _ => None,
        };
        axpy(&mut self.sum_av, a, v);
        self.z_prev = z.to_vec();
        self.psi_prev = psi_z;
        self.a_prev = big_a;
        if let Some(fy) = f_y {
            self.f_prev = fy;
        }
        drop
    }
}

/// Run T iterations of the accelerated method with a fixed-λ oracle.
///
/// Oracle failures truncate the trace and are recorded in its status.
pub fn accel_run(
    f: &dyn Problem,
    psi: &Regularizer,
    oracle: &dyn ProxOracle,
    t_max: usize,
) -> Result<RunTrace> {
    let geometry = oracle.geometry();
    let r = oracle.exponent();
    if (psi.r - r).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("regularizer exponent {} differs from oracle exponent {r}", psi.r)));
    }
    if psi.geometry != geometry {
        return Err(Error::Geometry("regularizer and oracle use different norms".into()));
    }
    let Some(lambda) = oracle.fixed_lambda() else {
        return Err(Error::InvalidParameter("the accelerated method needs a fixed-λ oracle".into()));
    };
    let (sigma, sigma_prime) = oracle.sigmas();
    let c = accel_constant(psi.mu, r, sigma, sigma_prime);
    let x0 = psi.center.clone();

    let mut trace = RunTrace::new("accel", geometry.p(), r, &x0);
    trace.c = c;
    trace.sigma = sigma;
    trace.sigma_prime = sigma_prime;
    trace.regularizer = Some(psi.clone());
    trace.f_star = f.optimal_value();

    let mut ledger = GapLedger::new(&x0);
    let mut y = x0.clone();
    let mut z = x0.clone();
    let mut big_a = 0.0;
    for k in 1..=t_max {
        let a = solve_step(&StepEquation { r, c, a_prev: big_a, lambda }, STEP_TOL)?;
        let big_a_new = big_a + a;
        let x = lincomb(big_a / big_a_new, &y, a / big_a_new, &z);
        let ans = match oracle.query(f, &x, lambda) {
            Ok(ans) => ans,
            Err(e) => {
                trace.status = RunStatus::Failed { k, reason: e.to_string() };
                break;
            }
        };
        if ans.at_optimum {
            trace.stationary = Some(ans.y.clone());
            trace.status = RunStatus::AtOptimum { k };
            break;
        }
        let oracle_ok = ans.audit(&geometry, AUDIT_TOL, WITNESS_TOL).passed;
        let z_new = solve_zstep(psi, &lincomb(1.0, ledger.sum_av(), a, &ans.v))?;
        let f_y = f.value(&ans.y);
        let drop = ledger.advance(psi, a, big_a_new, &ans.v, ans.eps, &ans.y, &z_new, Some(f_y), Some(f_y));
        big_a = big_a_new;
        z = z_new;
        y = ans.y.clone();
        trace.rows.push(row(k, a, big_a, a, big_a, &ans, &y, &z, f_y, f_y, drop, psi.delta, &geometry, oracle_ok));
    }
    Ok(trace)
}

#[allow(clippy::too_many_arguments)]
fn row(
    k: usize,
    a: f64,
    big_a: f64,
    a_hat: f64,
    big_a_hat: f64,
    ans: &ProxAnswer,
    y: &[f64],
    z: &[f64],
    f_y: f64,
    f_yt: f64,
    drop: Option<f64>,
    e_k: f64,
    geometry: &Geometry,
    oracle_ok: bool,
) -> TraceRow {
    TraceRow {
        k,
        a,
        big_a,
        a_hat,
        big_a_hat,
        lambda: ans.lambda,
        lambda_hat: ans.lambda,
        gamma: 1.0,
        x: ans.x.clone(),
        y_tilde: ans.y.clone(),
        y: y.to_vec(),
        z: z.to_vec(),
        v: ans.v.clone(),
        eps: ans.eps,
        f_y: Some(f_y),
        f_y_tilde: Some(f_yt),
        move_norm: geometry.dist(&ans.x, &ans.y),
        drop,
        e_k: Some(e_k),
        oracle_ok,
    }
}

/// One audited iteration of the gap sequence for a fixed comparator u.
#[derive(Clone, Debug, PartialEq)]
pub struct GapAudit {
    pub k: usize,
    pub upper: f64,
    pub lower: f64,
    pub gap: f64,
    /// `A_kG_k − A_{k−1}G_{k−1}`, minus D_ψ(u, x₀) at k = 1.
    pub drop: f64,
    pub e_k: f64,
    pub passed: bool,
}

/// The audited gap sequence plus its telescoped certificate
/// `f(y_T) − f(u) ≤ G_T ≤ (D_ψ(u, x₀) + Σ E_k)/A_T`.
#[derive(Clone, Debug)]
pub struct GapReport {
    pub steps: Vec<GapAudit>,
    pub divergence: f64,
    pub certificate: f64,
    pub all_passed: bool,
}

/// Recompute U_k, L_k and G_k from their definitions along a trace.
pub fn audit_gap(trace: &RunTrace, u: &[f64], tol: f64) -> Result<GapReport> {
    let psi = trace
        .regularizer
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("trace carries no regularizer".into()))?;
    let divergence = bregman(psi, u, &psi.center)?;
    let d = trace.x0.len();
    let mut sum_av = vec![0.0; d];
    let mut sum_const = 0.0;
    let mut prev_ag = 0.0;
    let mut prev_scale = 0.0;
    let mut sum_e = 0.0;
    let mut steps = Vec::with_capacity(trace.rows.len());
    for row in &trace.rows {
        let (Some(fy), Some(fyt), Some(e_k)) = (row.f_y, row.f_y_tilde, row.e_k) else {
            return Err(Error::InvalidParameter(format!("row {} lacks function values for the audit", row.k)));
        };
        axpy(&mut sum_av, row.a, &row.v);
        sum_const += row.a * (fyt - dot(&row.v, &row.y_tilde) - row.eps);
        let a_lower = sum_const + dot(&sum_av, &row.z) + bregman(psi, &row.z, &psi.center)? - divergence;
        let ag = row.big_a * fy - a_lower;
        let mut drop = ag - prev_ag;
        if row.k == 1 {
            drop -= divergence;
        }
        // ag is a difference of terms of size A_k·|f|, so its roundoff grows
        // with A_k even when the per-step drop does not.
        let scale = (row.big_a * fy).abs() + a_lower.abs();
        let roundoff = 4.0 * f64::EPSILON * (scale + prev_scale);
        prev_ag = ag;
        prev_scale = scale;
        sum_e += e_k;
        steps.push(GapAudit {
            k: row.k,
            upper: fy,
            lower: a_lower / row.big_a,
            gap: ag / row.big_a,
            drop,
            e_k,
            passed: drop <= e_k + tol + roundoff,
        });
    }
    let certificate = match trace.rows.last() {
        Some(r) => (divergence + sum_e) / r.big_a,
        None => f64::INFINITY,
    };
    let all_passed = steps.iter().all(|s| s.passed);
    Ok(GapReport { steps, divergence, certificate, all_passed })
}

/// `r^r(D_ψ(u, x₀) + δT)/(C(Σλ_i^{1/r})^r)` for the first T rows.
pub fn theoretical_bound(trace: &RunTrace, divergence: f64, t: usize) -> f64 {
    let r = trace.r;
    let delta = trace.regularizer.as_ref().map_or(0.0, |p| p.delta);
    let s: f64 = trace.rows.iter().take(t).map(|row| row.lambda.powf(1.0 / r)).sum();
    r.powf(r) * (divergence + delta * t as f64) / (trace.c * s.powf(r))
}

/// Largest violation of `A_k^{1/r} − A_{k−1}^{1/r} ≥ (1/r)(Cλ_k)^{1/r}`.
pub fn recursion_violation(trace: &RunTrace) -> f64 {
    let r = trace.r;
    let mut prev = 0.0_f64;
    let mut worst = f64::NEG_INFINITY;
    for row in &trace.rows {
        let lhs = row.big_a.powf(1.0 / r) - prev.powf(1.0 / r);
        let rhs = (trace.c * row.lambda).powf(1.0 / r) / r;
        worst = worst.max(rhs - lhs);
        prev = row.big_a;
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_for_exact_euclidean() {
        // r = 2, σ = σ′ = 0: (μ/2)·2 = μ.
        assert!((accel_constant(1.0, 2.0, 0.0, 0.0) - 1.0).abs() < 1e-15);
        let c = accel_constant(1.0, 2.0, 0.25, 0.25);
        assert!((c - 0.5 * (2.0 * 0.5 / 1.0625)).abs() < 1e-15);
    }
}
