//! Adaptive accelerated proximal point: the oracle picks λ_k, the method
//! steers a guess λ̂_k up or down by a factor α, and damps the step by
//! γ_k = min{λ_k/λ̂_k, 1}. Also hosts the q-th order dispatcher.

use crate::accel_ppm::{accel_run, GapLedger, AUDIT_TOL, STEP_TOL, WITNESS_TOL};
use crate::error::{Error, Result};
use crate::pnorm_core::{bregman, inexact_from_uniform, Geometry, Regularizer};
use crate::prox_oracle::{HolderData, Problem, ProxAnswer, ProxOracle, TaylorOracle};
use crate::subproblems::{solve_step, solve_zstep, StepEquation};
use crate::trace::{RunStatus, RunTrace, TraceRow};
use crate::vector::lincomb;

/// `(μ/2)·(r*(1 − σ − σ′)/(2(1 + σ^{r*})))^{r−1}`.
pub fn adaptive_constant(mu: f64, r: f64, sigma: f64, sigma_prime: f64) -> f64 {
    let rs = r / (r - 1.0);
    0.5 * mu * (rs * (1.0 - sigma - sigma_prime) / (2.0 * (1.0 + sigma.powf(rs)))).powf(r - 1.0)
}

/// How y_k is formed from ỹ_k and y_{k−1}.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum YMode {
    /// The candidate with the smaller function value.
    Best,
    /// `((1−γ_k)A_{k−1}/A_k)·y_{k−1} + (γ_kÂ_k/A_k)·ỹ_k`; needs no f values.
    Combination,
}

#[derive(Clone, Debug)]
pub struct AdaptiveOptions {
    pub alpha: f64,
    pub lambda_hat0: f64,
    pub y_mode: YMode,
    /// Query f for the gap audit even in combination mode.
    pub audit: bool,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions { alpha: 2.0, lambda_hat0: 1.0, y_mode: YMode::Best, audit: true }
    }
}

/// Run T iterations of the adaptive method.
pub fn adaptive_run(
    f: &dyn Problem,
    psi: &Regularizer,
    oracle: &dyn ProxOracle,
    t_max: usize,
    opts: &AdaptiveOptions,
) -> Result<RunTrace> {
    let geometry = oracle.geometry();
    let r = oracle.exponent();
    if (psi.r - r).abs() > 1e-12 || psi.delta != 0.0 {
        return Err(Error::InvalidParameter("the adaptive method needs an exact regularizer of the oracle's exponent".into()));
    }
    if psi.geometry != geometry {
        return Err(Error::Geometry("regularizer and oracle use different norms".into()));
    }
    if !(opts.alpha > 1.0) || !(opts.lambda_hat0 > 0.0) {
        return Err(Error::InvalidParameter(format!("need α > 1 and λ̂₀ > 0, got {} and {}", opts.alpha, opts.lambda_hat0)));
    }
    let (sigma, sigma_prime) = oracle.sigmas();
    let c = adaptive_constant(psi.mu, r, sigma, sigma_prime);
    let x0 = psi.center.clone();
    let use_f = opts.y_mode == YMode::Best || opts.audit;

    let mut trace = RunTrace::new("adaptive", geometry.p(), r, &x0);
    trace.c = c;
    trace.sigma = sigma;
    trace.sigma_prime = sigma_prime;
    trace.regularizer = Some(psi.clone());
    trace.f_star = f.optimal_value();

    let mut pending: Option<ProxAnswer> = match oracle.query(f, &x0, opts.lambda_hat0) {
        Ok(a) => Some(a),
        Err(e) => {
            trace.status = RunStatus::Failed { k: 1, reason: e.to_string() };
            return Ok(trace);
        }
    };
    let first = pending.as_ref().expect("bootstrap answer");
    if first.at_optimum {
        trace.stationary = Some(first.y.clone());
        trace.status = RunStatus::AtOptimum { k: 1 };
        return Ok(trace);
    }
    let mut lambda_hat = first.lambda;

    let mut ledger = GapLedger::new(&x0);
    let mut y = x0.clone();
    let mut f_y_prev = if use_f { Some(f.value(&x0)) } else { None };
    let mut z = x0.clone();
    let mut big_a = 0.0;
    for k in 1..=t_max {
        let a_hat = solve_step(&StepEquation { r, c, a_prev: big_a, lambda: lambda_hat }, STEP_TOL)?;
        let big_a_hat = big_a + a_hat;
        let x = lincomb(big_a / big_a_hat, &y, a_hat / big_a_hat, &z);
        let ans = match pending.take() {
            Some(a) => a,
            None => match oracle.query(f, &x, lambda_hat) {
                Ok(a) => a,
                Err(e) => {
                    trace.status = RunStatus::Failed { k, reason: e.to_string() };
                    break;
                }
            },
        };
        if ans.at_optimum {
            trace.stationary = Some(ans.y.clone());
            trace.status = RunStatus::AtOptimum { k };
            break;
        }
        let oracle_ok = ans.audit(&geometry, AUDIT_TOL, WITNESS_TOL).passed;
        let lambda = ans.lambda;
        let gamma = (lambda / lambda_hat).min(1.0);
        let a = gamma * a_hat;
        let big_a_new = big_a + a;
        let f_yt = if use_f { Some(f.value(&ans.y)) } else { None };
        let (y_new, f_y) = match opts.y_mode {
            YMode::Best => {
                let (fyt, fprev) = (f_yt.expect("f queried"), f_y_prev.expect("f queried"));
                if fyt <= fprev {
                    (ans.y.clone(), Some(fyt))
                } else {
                    (y.clone(), Some(fprev))
                }
            }
            YMode::Combination => {
                let yn = lincomb((1.0 - gamma) * big_a / big_a_new, &y, gamma * big_a_hat / big_a_new, &ans.y);
                let fy = if opts.audit { Some(f.value(&yn)) } else { None };
                (yn, fy)
            }
        };
        let z_new = solve_zstep(psi, &lincomb(1.0, ledger.sum_av(), a, &ans.v))?;
        let move_norm = geometry.dist(&ans.x, &ans.y);
        let e_k = -0.5 * big_a_hat * (1.0 - sigma - sigma_prime) * (1.0 / lambda_hat).min(1.0 / lambda) * move_norm.powf(r);
        let drop = ledger.advance(psi, a, big_a_new, &ans.v, ans.eps, &ans.y, &z_new, f_y, f_yt);
        trace.rows.push(TraceRow {
            k,
            a,
            big_a: big_a_new,
            a_hat,
            big_a_hat,
            lambda,
            lambda_hat,
            gamma,
            x: ans.x.clone(),
            y_tilde: ans.y.clone(),
            y: y_new.clone(),
            z: z_new.clone(),
            v: ans.v.clone(),
            eps: ans.eps,
            f_y,
            f_y_tilde: f_yt,
            move_norm,
            drop,
            e_k: Some(e_k),
            oracle_ok,
        });
        lambda_hat = if lambda_hat <= lambda { opts.alpha * lambda_hat } else { lambda_hat / opts.alpha };
        big_a = big_a_new;
        y = y_new;
        z = z_new;
        f_y_prev = f_y;
    }
    Ok(trace)
}

/// `Σ Â_k‖ỹ_k − x_k‖^r(1 − σ − σ′)/(2max{λ̂_k, λ_k})`, bounded above by
/// D_ψ(x*, x₀) along any run.
pub fn movement_sum(trace: &RunTrace) -> f64 {
    let s = 1.0 - trace.sigma - trace.sigma_prime;
    trace
        .rows
        .iter()
        .map(|row| row.big_a_hat * row.move_norm.powf(trace.r) * s / (2.0 * row.lambda_hat.max(row.lambda)))
        .sum()
}

/// A reconstructed witness for the growth of A_T.
#[derive(Clone, Debug)]
pub struct GrowthCertificate {
    /// Iterations with λ_k ≥ λ̂_k.
    pub up: Vec<usize>,
    /// d_1 = 1, ends of down runs, and d_S = T.
    pub d: Vec<usize>,
    /// Ends of the up runs.
    pub u: Vec<usize>,
    pub r: Vec<f64>,
    pub r_sum: f64,
    pub a_root: f64,
    /// `(C^{1/r}/r)·Σ_{up} λ̂_k^{1/r}`.
    pub up_bound: f64,
    /// `(C^{1/r}/(2r))·Σ_i (α^{r_i−2}λ̂_{d_i})^{1/r}`.
    pub split_bound: f64,
    pub passed: bool,
}

/// Rebuild the up/down split of a completed adaptive trace and check both
/// lower bounds on A_T^{1/r}.
pub fn certify_growth(trace: &RunTrace, alpha: f64) -> Result<GrowthCertificate> {
    let t = trace.rows.len();
    if t == 0 {
        return Err(Error::InvalidParameter("empty trace".into()));
    }
    let r = trace.r;
    let lam_hat = |k: usize| trace.rows[k - 1].lambda_hat;
    let is_up: Vec<bool> = trace.rows.iter().map(|row| row.lambda >= row.lambda_hat).collect();
    let up: Vec<usize> = (1..=t).filter(|&k| is_up[k - 1]).collect();

    let mut u = Vec::new();
    let mut d = vec![1];
    for k in 1..=t {
        let next_differs = k == t || is_up[k] != is_up[k - 1];
        if next_differs {
            if is_up[k - 1] {
                u.push(k);
            } else if k < t {
                d.push(k);
            }
        }
    }
    // The last entry is d_S = T, whether the trace ends up or down.
    d.push(t);
    if u.is_empty() {
        return Err(Error::InvalidParameter("the first iterate must be an up iterate".into()));
    }
    let s = u.len() + 1;
    debug_assert_eq!(d.len(), s);
    let mut rr = Vec::with_capacity(s);
    rr.push(0.5 * (u[0] as f64 - 1.0));
    for i in 1..u.len() {
        rr.push(0.5 * (u[i] as f64 - u[i - 1] as f64));
    }
    rr.push(0.5 * (t as f64 - *u.last().expect("nonempty") as f64));
    let r_sum: f64 = rr.iter().sum();

    let c_root = trace.c.powf(1.0 / r);
    let a_root = trace.final_a().powf(1.0 / r);
    let up_bound = c_root / r * up.iter().map(|&k| lam_hat(k).powf(1.0 / r)).sum::<f64>();
    let split_bound = c_root / (2.0 * r)
        * d.iter().zip(&rr).map(|(&di, &ri)| (alpha.powf(ri - 2.0) * lam_hat(di)).powf(1.0 / r)).sum::<f64>();
    let tol = 1e-12 * a_root.max(1.0);
    let passed = (r_sum - 0.5 * (t as f64 - 1.0)).abs() < 1e-12 && a_root + tol >= up_bound && a_root + tol >= split_bound;
    Ok(GrowthCertificate { up, d, u, r: rr, r_sum, a_root, up_bound, split_bound, passed })
}

/// Rate exponent `((m+1)(q+ν) − m)/m` for q-th order methods in ℓ_p.
pub fn rate_exponent(p: f64, q: usize, nu: f64) -> f64 {
    let m = p.max(2.0);
    let s = q as f64 + nu;
    ((m + 1.0) * s - m) / m
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HighOrderBranch {
    /// q + ν = m: exact regularizer, constant λ.
    AccelExact,
    /// q + ν < m: inexact regularizer of exponent q + ν, constant λ.
    AccelInexact,
    /// q + ν > m: adaptive method with r = m.
    Adaptive,
}

#[derive(Clone, Debug)]
pub struct HighOrderOptions {
    pub x0: Vec<f64>,
    /// Upper bound on ‖x* − x₀‖_p. When absent the distance to a known
    /// minimizer is used, else 1 (reported as estimated).
    pub radius: Option<f64>,
    pub sigma: f64,
    pub alpha: f64,
    pub y_mode: YMode,
}

#[derive(Clone, Debug)]
pub struct HighOrderRun {
    pub trace: RunTrace,
    pub branch: HighOrderBranch,
    pub rate_exponent: f64,
    pub radius: f64,
    pub radius_estimated: bool,
}

/// Parameter a of the inexact regularizer: `R^{r(m−r)/m}·T^{−r(m−r)/m²}`.
pub fn inexact_parameter(radius: f64, r: f64, m: f64, t: usize) -> f64 {
    radius.powf(r * (m - r) / m) * (t.max(1) as f64).powf(-r * (m - r) / (m * m))
}

/// Minimize a q-th order (L, ν)-Hölder smooth convex f in ℓ_p with T
/// q-th order oracle calls.
pub fn highorder_solve(
    f: &dyn Problem,
    geometry: Geometry,
    holder: HolderData,
    t_max: usize,
    opts: &HighOrderOptions,
) -> Result<HighOrderRun> {
    if !geometry.is_smooth() {
        return Err(Error::Geometry(format!(
            "p = {} must be remapped before the q-th order dispatch",
            geometry.p()
        )));
    }
    let m = geometry.m();
    let s = holder.degree();
    let (radius, radius_estimated) = match (opts.radius, f.minimizer()) {
        (Some(r), _) => (r, false),
        (None, Some(xs)) => (geometry.dist(&xs, &opts.x0).max(f64::MIN_POSITIVE), false),
        (None, None) => (1.0, true),
    };
    let base = Regularizer::standard(geometry, opts.x0.clone())?;
    let exponent = rate_exponent(geometry.p(), holder.q, holder.nu);
    if s <= m + 1e-12 {
        let (psi, branch) = if (s - m).abs() <= 1e-12 {
            (base, HighOrderBranch::AccelExact)
        } else {
            let a = inexact_parameter(radius, s, m, t_max);
            (inexact_from_uniform(&base, s, a)?, HighOrderBranch::AccelInexact)
        };
        let oracle = TaylorOracle::new(geometry, psi.r, holder, opts.sigma)?;
        let trace = accel_run(f, &psi, &oracle, t_max)?;
        Ok(HighOrderRun { trace, branch, rate_exponent: exponent, radius, radius_estimated })
    } else {
        let oracle = TaylorOracle::new(geometry, m, holder, opts.sigma)?;
        let aopts = AdaptiveOptions { alpha: opts.alpha, lambda_hat0: oracle.lambda_hat(), y_mode: opts.y_mode, audit: true };
        let trace = adaptive_run(f, &base, &oracle, t_max, &aopts)?;
        Ok(HighOrderRun { trace, branch: HighOrderBranch::Adaptive, rate_exponent: exponent, radius, radius_estimated })
    }
}

/// D_ψ(u, x₀) for the regularizer stored in a trace.
pub fn trace_divergence(trace: &RunTrace, u: &[f64]) -> Result<f64> {
    let psi = trace
        .regularizer
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("trace carries no regularizer".into()))?;
    bregman(psi, u, &psi.center)
}
