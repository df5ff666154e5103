//! The `solve` pipeline: build the problem, dispatch a method, audit the
//! run and summarize it.

use std::path::Path;
use std::time::Instant;

use ppm_core::accel_ppm::{audit_gap, theoretical_bound, AUDIT_TOL};
use ppm_core::adaptive_ppm::{
    adaptive_run, certify_growth, highorder_solve, rate_exponent, trace_divergence, AdaptiveOptions, HighOrderBranch,
    HighOrderOptions,
};
use ppm_core::pnorm_core::{Geometry, Regularizer};
use ppm_core::problems::make_problem;
use ppm_core::prox_oracle::{prox_ball_minimizer, HolderData, Problem, TaylorOracle};
use ppm_core::trace::{RunStatus, RunTrace};
use ppm_core::unaccel_ppm::{smooth_bound, unaccel_run, UnaccelMode, UnaccelOptions};
use serde::Serialize;

use crate::config::{format_p, Method, SolveConfig, UnaccelChoice};
use crate::error::{usage, Result};
use crate::output::write_atomic;
use crate::ratefit::{fit_loglog, window, ROUNDOFF_FLOOR};

/// Relative slack allowed on the explicit-constant bound.
pub const BOUND_REL_TOL: f64 = 1e-6;

/// Pass/fail of each certificate; `None` when it does not apply to the run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificates {
    pub oracle_audit: bool,
    pub lyapunov_audit: Option<bool>,
    pub explicit_bound: Option<bool>,
    pub growth: Option<bool>,
}

impl Certificates {
    pub fn all_passed(&self) -> bool {
        self.oracle_audit && [self.lyapunov_audit, self.explicit_bound, self.growth].iter().all(|c| c.unwrap_or(true))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub name: String,
    pub problem: String,
    pub method: String,
    pub branch: Option<String>,
    pub p: String,
    pub p_effective: String,
    pub remap: Option<String>,
    pub q: usize,
    pub nu: f64,
    pub holder_l: f64,
    pub budget: usize,
    pub iterations: usize,
    pub status: String,
    pub radius: f64,
    pub radius_estimated: bool,
    pub f_star: Option<f64>,
    pub final_value: Option<f64>,
    pub final_gap: Option<f64>,
    pub theoretical_bound: Option<f64>,
    /// Exponent e of the guaranteed rate T^{−e}; null for the linear ball-mode rate.
    pub theoretical_exponent: Option<f64>,
    /// Fitted log-log slope of the gap along the trace, negated.
    pub measured_exponent: Option<f64>,
    pub fit_window: Option<[usize; 2]>,
    pub fit_warning: Option<String>,
    pub certificates: Certificates,
    pub passed: bool,
    pub seed: u64,
    /// Seconds; null unless timing was requested, so reruns stay byte-identical.
    pub wall_time_s: Option<f64>,
}

pub struct SolveOutcome {
    pub trace: RunTrace,
    pub summary: Summary,
}

impl SolveOutcome {
    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string(&self.summary).expect("summary serializes");
        s.push('\n');
        s
    }

    /// Write `<name>.trace.csv` and `<name>.summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_atomic(&dir.join(format!("{}.trace.csv", self.summary.name)), self.trace.to_csv_string().as_bytes())?;
        write_atomic(&dir.join(format!("{}.summary.json", self.summary.name)), self.summary_json().as_bytes())?;
        Ok(())
    }
}

/// `1 + 1/ln d`, whose norm is within a constant factor of ℓ₁ in R^d.
pub fn remapped_l1_exponent(d: usize) -> f64 {
    1.0 + 1.0 / (d as f64).ln()
}

enum Resolved {
    HighOrder,
    Adaptive,
    Unaccel(UnaccelChoice),
}

pub fn solve(cfg: &SolveConfig) -> Result<SolveOutcome> {
    let f = make_problem(&cfg.problem)?;
    let d = f.dim();
    let (p, remap) = if cfg.p == 1.0 {
        if d < 2 {
            return Err(usage("p = 1 is remapped through 1 + 1/ln d, which needs d ≥ 2"));
        }
        let ph = remapped_l1_exponent(d);
        (ph, Some(format!("p = 1 run in the {ph}-norm (1 + 1/ln {d})")))
    } else {
        (cfg.p, None)
    };
    let geometry = Geometry::new(p)?;
    let holder = f
        .holder(p, cfg.q)
        .ok_or_else(|| usage(format!("{} provides no Hölder data for order {} in the {}-norm", f.name(), cfg.q, format_p(p))))?;
    if (holder.nu - cfg.nu).abs() > 1e-12 {
        return Err(usage(format!("{} has ν = {} for order {}, not the requested {}", f.name(), holder.nu, cfg.q, cfg.nu)));
    }
    let resolved = match cfg.method {
        Method::Auto if p.is_infinite() => Resolved::Unaccel(UnaccelChoice::Power),
        Method::Auto => Resolved::HighOrder,
        Method::Accel => {
            if holder.degree() > geometry.m() + 1e-12 {
                return Err(usage(format!(
                    "the accelerated method needs q + ν ≤ max(2, p); got {} > {}, use adaptive or auto",
                    holder.degree(),
                    geometry.m()
                )));
            }
            Resolved::HighOrder
        }
        Method::Adaptive => Resolved::Adaptive,
        Method::Unaccel => Resolved::Unaccel(cfg.unaccel_mode.unwrap_or(if p.is_infinite() || cfg.q > 1 {
            UnaccelChoice::Power
        } else {
            UnaccelChoice::Smooth
        })),
    };
    if !geometry.is_smooth() && !matches!(resolved, Resolved::Unaccel(_)) {
        return Err(usage("p = inf is handled by the unaccelerated method; use method=unaccel or auto"));
    }
    let x0 = vec![0.0; d];
    let (radius, radius_estimated) = match (cfg.radius, f.minimizer()) {
        (Some(r), _) => (r, false),
        (None, Some(xs)) => (geometry.dist(&xs, &x0).max(f64::MIN_POSITIVE), false),
        (None, None) => (1.0, true),
    };
    let start = cfg.timing.then(Instant::now);

    let mut branch = None;
    let mut theoretical_exponent = Some(rate_exponent(p, cfg.q, cfg.nu));
    let mut final_bound = None;
    let trace = match resolved {
        Resolved::HighOrder => {
            let opts = HighOrderOptions { x0: x0.clone(), radius: Some(radius), sigma: cfg.sigma, alpha: cfg.alpha, y_mode: cfg.y_mode };
            let run = highorder_solve(f.as_ref(), geometry, holder, cfg.t, &opts)?;
            branch = Some(branch_name(run.branch).to_string());
            run.trace
        }
        Resolved::Adaptive => {
            let psi = Regularizer::standard(geometry, x0.clone())?;
            let oracle = TaylorOracle::new(geometry, geometry.m(), holder, cfg.sigma)?;
            let opts = AdaptiveOptions { alpha: cfg.alpha, lambda_hat0: oracle.lambda_hat(), y_mode: cfg.y_mode, audit: true };
            adaptive_run(f.as_ref(), &psi, &oracle, cfg.t, &opts)?
        }
        Resolved::Unaccel(choice) => {
            let mode = unaccel_mode(choice, cfg, holder, geometry)?;
            theoretical_exponent = match choice {
                UnaccelChoice::Smooth => Some(1.0),
                UnaccelChoice::Power => Some(holder.degree() - 1.0),
                UnaccelChoice::Ball => None,
            };
            if let UnaccelMode::Smooth { c } = mode {
                final_bound = Some(smooth_bound(c, radius, cfg.t));
            }
            let opts = UnaccelOptions { x0: x0.clone(), radius, comparator: None };
            unaccel_run(f.as_ref(), geometry, &mode, cfg.t, &opts)?
        }
    };
    let wall_time_s = start.map(|s| s.elapsed().as_secs_f64());

    let certificates = certify(&trace, f.as_ref(), cfg.alpha)?;
    if trace.regularizer.is_some() && trace.method == "accel" {
        if let Some(xs) = f.minimizer() {
            let div = trace_divergence(&trace, &xs)?;
            final_bound = Some(theoretical_bound(&trace, div, trace.rows.len()));
        }
    }
    let f_star = f.optimal_value();
    let final_value = trace.rows.last().and_then(|r| r.f_y).or_else(|| trace.stationary.as_ref().map(|y| f.value(y)));
    let final_gap = f_star.zip(final_value).map(|(fs, fv)| fv - fs);
    let (measured_exponent, fit_window, fit_warning) = measured_exponent(&trace, cfg.t);
    let passed = certificates.all_passed() && !matches!(trace.status, RunStatus::Failed { .. });
    let summary = Summary {
        name: cfg.name.clone(),
        problem: f.name(),
        method: trace.method.clone(),
        branch,
        p: format_p(cfg.p),
        p_effective: format_p(p),
        remap,
        q: cfg.q,
        nu: cfg.nu,
        holder_l: holder.l,
        budget: cfg.t,
        iterations: trace.rows.len(),
        status: status_text(&trace.status),
        radius,
        radius_estimated,
        f_star,
        final_value,
        final_gap,
        theoretical_bound: final_bound,
        theoretical_exponent,
        measured_exponent,
        fit_window,
        fit_warning,
        certificates,
        passed,
        seed: cfg.seed,
        wall_time_s,
    };
    Ok(SolveOutcome { trace, summary })
}

fn unaccel_mode(choice: UnaccelChoice, cfg: &SolveConfig, holder: HolderData, geometry: Geometry) -> Result<UnaccelMode> {
    Ok(match choice {
        UnaccelChoice::Smooth => {
            if cfg.q != 1 || cfg.nu != 1.0 {
                return Err(usage("smooth mode needs q = 1 and ν = 1"));
            }
            UnaccelMode::Smooth { c: holder.l }
        }
        UnaccelChoice::Power => UnaccelMode::Power { holder, sigma: cfg.sigma },
        UnaccelChoice::Ball => {
            let rho = cfg.ball_radius.ok_or_else(|| usage("ball mode needs ball_radius"))?;
            let hook = Box::new(move |f: &dyn Problem, x: &[f64], rho: f64| prox_ball_minimizer(f, geometry, x, rho));
            UnaccelMode::Ball { radius: rho, hook }
        }
    })
}

pub fn branch_name(b: HighOrderBranch) -> &'static str {
    match b {
        HighOrderBranch::AccelExact => "accel-exact",
        HighOrderBranch::AccelInexact => "accel-inexact",
        HighOrderBranch::Adaptive => "adaptive",
    }
}

pub fn status_text(s: &RunStatus) -> String {
    match s {
        RunStatus::Completed => "completed".into(),
        RunStatus::AtOptimum { k } => format!("at-optimum at iteration {k}"),
        RunStatus::Failed { k, reason } => format!("failed at iteration {k}: {reason}"),
    }
}

/// Run every certificate that applies to the trace.
pub fn certify(trace: &RunTrace, f: &dyn Problem, alpha: f64) -> Result<Certificates> {
    let oracle_audit = trace.oracle_audit_passed();
    let incremental = trace.worst_drop_excess().map(|e| e <= AUDIT_TOL);
    // The incremental drops and the recomputed gap sequence are two routes
    // to the same inequality; both must hold.
    let recomputed = match (&trace.regularizer, f.minimizer()) {
        (Some(_), Some(xs)) if !trace.rows.is_empty() => Some(audit_gap(trace, &xs, AUDIT_TOL)?.all_passed),
        _ => None,
    };
    let lyapunov_audit = match (incremental, recomputed) {
        (None, None) => None,
        (a, b) => Some(a.unwrap_or(true) && b.unwrap_or(true)),
    };
    let explicit_bound = match (&trace.regularizer, f.minimizer(), trace.f_star) {
        (Some(_), Some(xs), Some(fs)) if trace.method == "accel" => {
            let div = trace_divergence(trace, &xs)?;
            Some(trace.rows.iter().all(|row| {
                let bound = theoretical_bound(trace, div, row.k);
                row.f_y.is_some_and(|fy| fy - fs <= bound * (1.0 + BOUND_REL_TOL))
            }))
        }
        _ => None,
    };
    let growth = if trace.method == "adaptive" && !trace.rows.is_empty() {
        Some(certify_growth(trace, alpha)?.passed)
    } else {
        None
    };
    Ok(Certificates { oracle_audit, lyapunov_audit, explicit_bound, growth })
}

/// Negated log-log slope of the gap over rows `[max(2, T/8), T]`.
fn measured_exponent(trace: &RunTrace, t: usize) -> (Option<f64>, Option<[usize; 2]>, Option<String>) {
    let Some(fs) = trace.f_star else { return (None, None, None) };
    let lo = (t / 8).max(2);
    let pts: Vec<(f64, f64)> = trace.gaps().into_iter().map(|(k, g)| (k as f64, g)).collect();
    let w = window(&pts, lo as f64, t as f64, ROUNDOFF_FLOOR * fs.abs().max(1.0));
    match fit_loglog(&w.points) {
        Ok(fit) => (Some(-fit.slope), Some([lo, t]), w.warning),
        Err(e) => (None, Some([lo, t]), Some(w.warning.unwrap_or_else(|| e.to_string()))),
    }
}
