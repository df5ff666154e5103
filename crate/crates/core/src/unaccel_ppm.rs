//! Unaccelerated proximal point method `x_{k+1} ∈ argmin f + (1/(2λ_k))‖x_k − ·‖²`
//! in three regimes: ball oracle, smooth, and q-th order Hölder smooth.

use crate::error::{Error, Result};
use crate::pnorm_core::{dual_map, Geometry};
use crate::prox_oracle::{BallHook, ExactOracle, HolderData, LambdaMode, Problem, ProxAnswer, ProxOracle, TaylorOracle};
use crate::trace::{RunStatus, RunTrace, TraceRow};
use crate::vector::{dot, sub};

pub enum UnaccelMode {
    /// Minimize f over `B_p(x_k, ρ)` each step.
    Ball { radius: f64, hook: Box<BallHook> },
    /// Exact proximal steps with λ = 1/c and weights a_k = k + 1.
    Smooth { c: f64 },
    /// One Taylor-model step per iteration, realizing
    /// `argmin f + (c/(q+ν))‖x_k − ·‖^{q+ν}` with c = 1/λ̂.
    Power { holder: HolderData, sigma: f64 },
}

impl std::fmt::Debug for UnaccelMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UnaccelMode::Ball { radius, .. } => write!(f, "Ball {{ radius: {radius} }}"),
            UnaccelMode::Smooth { c } => write!(f, "Smooth {{ c: {c} }}"),
            UnaccelMode::Power { holder, sigma } => write!(f, "Power {{ holder: {holder:?}, sigma: {sigma} }}"),
        }
    }
}

/// Minimizer of the linearization of f over `B_p(x, ρ)`; exact for linear f.
pub fn linearized_ball_minimizer(geometry: Geometry) -> Box<BallHook> {
    Box::new(move |f: &dyn Problem, x: &[f64], rho: f64| {
        let w = dual_map(&f.gradient(x), geometry.p());
        Ok(x.iter().zip(&w).map(|(a, b)| a - rho * b).collect())
    })
}

#[derive(Clone, Debug)]
pub struct UnaccelOptions {
    pub x0: Vec<f64>,
    /// Bound on max_k ‖x_k − x*‖; iterates are kept in `B_p(x₀, 2R)`.
    pub radius: f64,
    /// Comparator for the smooth-mode gap audit; defaults to the known minimizer.
    pub comparator: Option<Vec<f64>>,
}

/// Project onto `B_p(center, rad)`: coordinate clamping for p = ∞, radial
/// scaling otherwise.
pub fn clamp_to_ball(geometry: &Geometry, center: &[f64], point: &[f64], rad: f64) -> Vec<f64> {
    if geometry.p().is_infinite() {
        return point.iter().zip(center).map(|(p, c)| p.clamp(c - rad, c + rad)).collect();
    }
    let u = sub(point, center);
    let n = geometry.norm(&u);
    if n <= rad {
        return point.to_vec();
    }
    center.iter().zip(&u).map(|(c, ui)| c + ui * rad / n).collect()
}

struct Step {
    ans: ProxAnswer,
    next: Vec<f64>,
}

/// Run T iterations. Row k records x_k, x_{k+1}, a_k and A_k.
pub fn unaccel_run(f: &dyn Problem, geometry: Geometry, mode: &UnaccelMode, t_max: usize, opts: &UnaccelOptions) -> Result<RunTrace> {
    if !(opts.radius > 0.0) {
        return Err(Error::InvalidParameter(format!("domain radius must be positive, got {}", opts.radius)));
    }
    let radius = opts.radius;
    let oracle: Box<dyn ProxOracle> = match mode {
        UnaccelMode::Smooth { c } => {
            if !(*c > 0.0) {
                return Err(Error::InvalidParameter(format!("need c > 0, got {c}")));
            }
            Box::new(ExactOracle::new(geometry, 2.0, LambdaMode::Fixed(1.0 / c))?)
        }
        UnaccelMode::Power { holder, sigma } => Box::new(TaylorOracle::new(geometry, 2.0, *holder, *sigma)?),
        UnaccelMode::Ball { radius: rho, .. } => {
            if !(*rho > 0.0 && *rho < 4.0 * radius) {
                return Err(Error::InvalidParameter(format!("ball radius must lie in (0, 4R), got {rho}")));
            }
            Box::new(NullOracle(geometry))
        }
    };
    let step = |x: &[f64]| -> Result<Step> {
        let ans = match mode {
            UnaccelMode::Ball { radius: rho, hook } => ball_answer(f, geometry, x, *rho, hook.as_ref())?,
            _ => oracle.query(f, x, 1.0)?,
        };
        let next = clamp_to_ball(&geometry, &opts.x0, &ans.y, 2.0 * radius);
        Ok(Step { ans, next })
    };

    let method = match mode {
        UnaccelMode::Ball { .. } => "unaccel-ball",
        UnaccelMode::Smooth { .. } => "unaccel-smooth",
        UnaccelMode::Power { .. } => "unaccel-power",
    };
    let mut trace = RunTrace::new(method, geometry.p(), 2.0, &opts.x0);
    trace.f_star = f.optimal_value();
    let comparator = opts.comparator.clone().or_else(|| f.minimizer());

    // Smooth-mode audit terms for the previous row: (A_{k−1}, M_k(x_k)).
    let mut prev_envelope: Option<f64> = None;
    let mut x = opts.x0.clone();
    let mut current = match step(&x) {
        Ok(s) => s,
        Err(e) => {
            trace.status = RunStatus::Failed { k: 1, reason: e.to_string() };
            return Ok(trace);
        }
    };
    let mut big_a = 0.0;
    for k in 1..=t_max {
        let Step { ans, next } = current;
        if ans.at_optimum {
            trace.stationary = Some(next);
            trace.status = RunStatus::AtOptimum { k };
            break;
        }
        let move_norm = geometry.dist(&x, &next);
        let a = match mode {
            UnaccelMode::Smooth { .. } => k as f64 + 1.0,
            UnaccelMode::Power { holder, .. } => (k as f64 + 1.0).powf(holder.degree() - 1.0),
            UnaccelMode::Ball { .. } => {
                if k == 1 {
                    1.0
                } else {
                    big_a / (4.0 * radius / move_norm - 1.0)
                }
            }
        };
        let big_a_new = big_a + a;
        let f_next = f.value(&next);
        let oracle_ok = ans.audit(&geometry, 1e-8, 1e-10).passed;
        let lambda = ans.lambda;
        // One step of lookahead supplies M_{k+1}(x_{k+1}) for the audit.
        let lookahead = if k < t_max || matches!(mode, UnaccelMode::Smooth { .. }) { Some(step(&next)) } else { None };
        let (drop, e_k) = match (mode, &comparator, &lookahead) {
            (UnaccelMode::Smooth { c }, Some(xs), Some(Ok(la))) if !la.ans.at_optimum => {
                let m_k = f_next + move_norm * move_norm / (2.0 * lambda);
                let m_next = f.value(&la.next) + geometry.dist(&next, &la.next).powi(2) / (2.0 * la.ans.lambda);
                let g_term = dot(&ans.v, &sub(xs, &x));
                let prev = prev_envelope.unwrap_or(0.0);
                let drop = big_a_new * m_next - big_a * prev - a * (m_k + g_term);
                prev_envelope = Some(m_next);
                (Some(drop), Some(a * a * c * radius * radius / big_a_new))
            }
            (UnaccelMode::Power { .. }, _, _) => {
                // Audit the stationarity identity 1/λ_k = c‖x_{k+1} − x_k‖^{q+ν−2}.
                let c = 1.0 / power_lambda_hat(mode);
                let rel = (1.0 / lambda - c * ans_movement_pow(&geometry, &ans, mode)).abs() * lambda;
                (Some(rel), Some(1e-10))
            }
            _ => (None, None),
        };
        trace.rows.push(TraceRow {
            k,
            a,
            big_a: big_a_new,
            a_hat: a,
            big_a_hat: big_a_new,
            lambda,
            lambda_hat: lambda,
            gamma: 1.0,
            x: x.clone(),
            y_tilde: ans.y.clone(),
            y: next.clone(),
            z: next.clone(),
            v: ans.v.clone(),
            eps: ans.eps,
            f_y: Some(f_next),
            f_y_tilde: Some(f_next),
            move_norm,
            drop,
            e_k,
            oracle_ok,
        });
        big_a = big_a_new;
        x = next;
        match lookahead {
            Some(Ok(s)) => current = s,
            Some(Err(e)) => {
                if k < t_max {
                    trace.status = RunStatus::Failed { k: k + 1, reason: e.to_string() };
                }
                break;
            }
            None => break,
        }
    }
    Ok(trace)
}

fn power_lambda_hat(mode: &UnaccelMode) -> f64 {
    match mode {
        UnaccelMode::Power { holder, sigma } => sigma * crate::prox_oracle::factorial(holder.q - 1) / (2.0 * holder.l),
        _ => f64::NAN,
    }
}

fn ans_movement_pow(geometry: &Geometry, ans: &ProxAnswer, mode: &UnaccelMode) -> f64 {
    match mode {
        UnaccelMode::Power { holder, .. } => geometry.dist(&ans.x, &ans.y).powf(holder.degree() - 2.0),
        _ => f64::NAN,
    }
}

fn ball_answer(f: &dyn Problem, geometry: Geometry, x: &[f64], rho: f64, hook: &BallHook) -> Result<ProxAnswer> {
    let y = hook(f, x, rho)?;
    let v = f.gradient(&y);
    let movement = geometry.dist(&y, x);
    let gnorm = geometry.dual_norm(&v);
    let interior = movement < rho * (1.0 - 1e-6) || gnorm == 0.0;
    let lambda = if interior { f64::INFINITY } else { movement / gnorm };
    let v_hat = if interior { vec![0.0; x.len()] } else { crate::prox_oracle::witness(&geometry, x, &y, 2.0, lambda) };
    Ok(ProxAnswer {
        x: x.to_vec(),
        y,
        v,
        lambda,
        eps: 0.0,
        v_hat,
        r: 2.0,
        sigma: 0.25,
        sigma_prime: 0.0,
        at_optimum: interior,
        inner_iterations: 0,
    })
}

struct NullOracle(Geometry);

impl ProxOracle for NullOracle {
    fn geometry(&self) -> Geometry {
        self.0
    }
    fn exponent(&self) -> f64 {
        2.0
    }
    fn sigmas(&self) -> (f64, f64) {
        (0.0, 0.0)
    }
    fn fixed_lambda(&self) -> Option<f64> {
        None
    }
    fn query(&self, _f: &dyn Problem, _x: &[f64], _lambda_hat: f64) -> Result<ProxAnswer> {
        Err(Error::InvalidParameter("ball mode answers through its hook".into()))
    }
}

/// The smooth-mode guarantee `4cR²/(T + 2)`.
pub fn smooth_bound(c: f64, radius: f64, t: usize) -> f64 {
    4.0 * c * radius * radius / (t as f64 + 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamp_examples() {
        let ginf = Geometry::new(f64::INFINITY).unwrap();
        assert_eq!(clamp_to_ball(&ginf, &[0.0, 0.0], &[3.0, -0.5], 1.0), vec![1.0, -0.5]);
        let g2 = Geometry::new(2.0).unwrap();
        let c = clamp_to_ball(&g2, &[0.0, 0.0], &[3.0, 4.0], 1.0);
        assert!((c[0] - 0.6).abs() < 1e-15 && (c[1] - 0.8).abs() < 1e-15);
    }
}
