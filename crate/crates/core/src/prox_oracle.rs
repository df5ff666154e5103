//! Objective handles and inexact proximal oracles.
//!
//! An oracle answers a query point x with (ỹ, v, λ, ε) and a witness v̂ from
//! the subdifferential of `−(1/(rλ))‖y − x‖^r` at ỹ. Every answer can be
//! audited against the two oracle inequalities
//! `‖v − v̂‖_* ≤ (σ/λ)‖x − ỹ‖^{r−1}` and `ε ≤ (σ′/λ)‖x − ỹ‖^r`.

use crate::error::{Error, Result};
use crate::numeric::{self, MinimizeOptions};
use crate::pnorm_core::{dual_map, powered_norm_grad, Geometry};
use crate::subproblems::{find_critical_point, CriticalOptions, TaylorModel};
use crate::vector::{dot, sub};

/// Hölder data of the q-th derivative with respect to a given p-norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderData {
    pub q: usize,
    pub l: f64,
    pub nu: f64,
    /// True when `l` is a sampled estimate rather than an analytic bound.
    pub empirical: bool,
}

impl HolderData {
    pub fn analytic(q: usize, l: f64, nu: f64) -> Self {
        HolderData { q, l, nu, empirical: false }
    }

    /// The combined exponent q + ν.
    pub fn degree(&self) -> f64 {
        self.q as f64 + self.nu
    }
}

/// A convex objective with derivative access.
pub trait Problem: Send + Sync {
    fn name(&self) -> String;
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// Highest derivative order this objective provides.
    fn max_order(&self) -> usize {
        1
    }

    /// `∇^j f(x)[u]^{j−1}` as a dual vector. Order 1 is the gradient.
    fn derivative(&self, x: &[f64], u: &[f64], j: usize) -> Result<Vec<f64>> {
        let _ = u;
        if j == 1 {
            Ok(self.gradient(x))
        } else {
            Err(Error::DerivativeOrder { requested: j, available: self.max_order() })
        }
    }

    /// Hölder data of the q-th derivative in the p-norm, when known.
    fn holder(&self, p: f64, q: usize) -> Option<HolderData> {
        let _ = (p, q);
        None
    }

    fn minimizer(&self) -> Option<Vec<f64>> {
        None
    }

    fn optimal_value(&self) -> Option<f64> {
        None
    }
}

/// One oracle reply.
#[derive(Clone, Debug)]
pub struct ProxAnswer {
    /// The query point.
    pub x: Vec<f64>,
    /// The approximate proximal point ỹ.
    pub y: Vec<f64>,
    /// An ε-subgradient of f at ỹ.
    pub v: Vec<f64>,
    pub lambda: f64,
    pub eps: f64,
    /// Witness from `∂(−(1/(rλ))‖· − x‖^r)(ỹ)`.
    pub v_hat: Vec<f64>,
    pub r: f64,
    pub sigma: f64,
    pub sigma_prime: f64,
    /// Set when x is stationary (λ = ∞) or the answer lies strictly inside
    /// a ball that contains the optimum.
    pub at_optimum: bool,
    pub inner_iterations: usize,
}

/// Residuals of one answer against the oracle inequalities.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleAudit {
    pub movement: f64,
    pub subgradient_gap: f64,
    pub subgradient_bound: f64,
    pub eps: f64,
    pub eps_bound: f64,
    /// Relative residual of `‖v̂‖_* = ‖x − ỹ‖^{r−1}/λ`.
    pub witness_norm_residual: f64,
    /// Relative residual of `⟨v̂, x − ỹ⟩ = ‖x − ỹ‖^r/λ`.
    pub witness_inner_residual: f64,
    pub passed: bool,
}

impl ProxAnswer {
    /// Check both oracle inequalities at absolute tolerance `tol` and the
    /// witness identities at relative tolerance `witness_tol`.
    pub fn audit(&self, geometry: &Geometry, tol: f64, witness_tol: f64) -> OracleAudit {
        let diff = sub(&self.x, &self.y);
        let movement = geometry.norm(&diff);
        if self.at_optimum && !self.lambda.is_finite() {
            return OracleAudit {
                movement,
                subgradient_gap: geometry.dual_norm(&self.v),
                subgradient_bound: 0.0,
                eps: self.eps,
                eps_bound: 0.0,
                witness_norm_residual: 0.0,
                witness_inner_residual: 0.0,
                passed: geometry.dual_norm(&self.v) <= tol && self.eps <= tol,
            };
        }
        let gap = geometry.dual_norm(&sub(&self.v, &self.v_hat));
        let sub_bound = self.sigma / self.lambda * movement.powf(self.r - 1.0);
        let eps_bound = self.sigma_prime / self.lambda * movement.powf(self.r);
        let target_norm = movement.powf(self.r - 1.0) / self.lambda;
        let target_inner = movement.powf(self.r) / self.lambda;
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300).max(a.abs());
        let witness_norm_residual =
            if target_norm == 0.0 { geometry.dual_norm(&self.v_hat) } else { rel(geometry.dual_norm(&self.v_hat), target_norm) };
        let witness_inner_residual =
            if target_inner == 0.0 { dot(&self.v_hat, &diff).abs() } else { rel(dot(&self.v_hat, &diff), target_inner) };
        // x − ỹ is only known to the rounding of the stored points.
        let scale = self.x.iter().chain(&self.y).fold(0.0f64, |m, v| m.max(v.abs()));
        let roundoff = if movement > 0.0 { 4.0 * f64::EPSILON * scale / movement } else { 0.0 };
        let passed = gap <= sub_bound + tol
            && self.eps <= eps_bound + tol
            && witness_norm_residual <= witness_tol + roundoff
            && witness_inner_residual <= witness_tol + roundoff;
        OracleAudit {
            movement,
            subgradient_gap: gap,
            subgradient_bound: sub_bound,
            eps: self.eps,
            eps_bound,
            witness_norm_residual,
            witness_inner_residual,
            passed,
        }
    }
}

/// Witness `−(1/λ)·∇((1/r)‖·‖^r)(ỹ − x)`.
pub fn witness(geometry: &Geometry, x: &[f64], y: &[f64], r: f64, lambda: f64) -> Vec<f64> {
    powered_norm_grad(&sub(y, x), geometry.p(), r).into_iter().map(|g| -g / lambda).collect()
}

/// The common oracle contract. `lambda_hat` is the caller's guess; fixed-λ
/// oracles ignore it.
pub trait ProxOracle {
    fn geometry(&self) -> Geometry;
    fn exponent(&self) -> f64;
    fn sigmas(&self) -> (f64, f64);
    /// `Some(λ)` when every answer carries the same λ.
    fn fixed_lambda(&self) -> Option<f64>;
    fn query(&self, f: &dyn Problem, x: &[f64], lambda_hat: f64) -> Result<ProxAnswer>;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LambdaMode {
    Fixed(f64),
    /// Use the caller's guess, so λ_k = λ̂_k on every call.
    FollowGuess,
}

/// Reference oracle: numerically minimizes `f(y) + (1/(rλ))‖y − x‖^r`.
#[derive(Clone, Debug)]
pub struct ExactOracle {
    pub geometry: Geometry,
    pub r: f64,
    pub mode: LambdaMode,
    pub sigma: f64,
    pub sigma_prime: f64,
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl ExactOracle {
    pub fn new(geometry: Geometry, r: f64, mode: LambdaMode) -> Result<Self> {
        if !geometry.is_smooth() {
            return Err(Error::Geometry(format!("exact oracle needs p in (1, inf), got {}", geometry.p())));
        }
        if !(r > 1.0) {
            return Err(Error::InvalidParameter(format!("exact oracle needs r > 1, got {r}")));
        }
        if let LambdaMode::Fixed(l) = mode {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidParameter(format!("λ must be positive, got {l}")));
            }
        }
        Ok(ExactOracle { geometry, r, mode, sigma: 0.25, sigma_prime: 0.25, grad_tol: 1e-11, max_iter: 20_000 })
    }

    pub fn solve(&self, f: &dyn Problem, x: &[f64], lambda: f64) -> Result<ProxAnswer> {
        let p = self.geometry.p();
        let r = self.r;
        let g0 = f.gradient(x);
        if self.geometry.dual_norm(&g0) == 0.0 {
            return Ok(stationary_answer(x, g0, r, self.sigma, self.sigma_prime));
        }
        let obj = |y: &[f64]| {
            let u = sub(y, x);
            let n = self.geometry.norm(&u);
            let mut g = f.gradient(y);
            for (gi, hi) in g.iter_mut().zip(powered_norm_grad(&u, p, r)) {
                *gi += hi / lambda;
            }
            (f.value(y) + n.powf(r) / (r * lambda), g)
        };
        // Warm start at the minimizer of the linearized model.
        let start = linearized_step(&self.geometry, x, &g0, lambda, r);
        let opts = MinimizeOptions { grad_tol: self.grad_tol, max_iter: self.max_iter, ..Default::default() };
        let norm = |g: &[f64]| self.geometry.dual_norm(g);
        let res = numeric::minimize(&obj, &start, &norm, &opts);
        // Accept a stalled solve that still meets a looser floor scaled by the gradient size.
        let floor = self.grad_tol.max(1e-9 * self.geometry.dual_norm(&g0).min(1.0));
        if !res.converged && res.grad_norm > floor {
            return Err(Error::InnerSolver {
                iterations: res.iterations,
                residual_ratio: res.grad_norm / self.geometry.dual_norm(&g0),
            });
        }
        let y = res.x;
        let v = f.gradient(&y);
        let v_hat = witness(&self.geometry, x, &y, r, lambda);
        Ok(ProxAnswer {
            x: x.to_vec(),
            y,
            v,
            lambda,
            eps: 0.0,
            v_hat,
            r,
            sigma: self.sigma,
            sigma_prime: self.sigma_prime,
            at_optimum: false,
            inner_iterations: res.iterations,
        })
    }
}

/// Minimizer of `⟨g, y − x⟩ + (1/(rλ))‖y − x‖^r`.
pub fn linearized_step(geometry: &Geometry, x: &[f64], g: &[f64], lambda: f64, r: f64) -> Vec<f64> {
    let t = (lambda * geometry.dual_norm(g)).powf(1.0 / (r - 1.0));
    let w = dual_map(g, geometry.p());
    x.iter().zip(&w).map(|(xi, wi)| xi - t * wi).collect()
}

fn stationary_answer(x: &[f64], g: Vec<f64>, r: f64, sigma: f64, sigma_prime: f64) -> ProxAnswer {
    ProxAnswer {
        x: x.to_vec(),
        y: x.to_vec(),
        v_hat: vec![0.0; g.len()],
        v: g,
        lambda: f64::INFINITY,
        eps: 0.0,
        r,
        sigma,
        sigma_prime,
        at_optimum: true,
        inner_iterations: 0,
    }
}

impl ProxOracle for ExactOracle {
    fn geometry(&self) -> Geometry {
        self.geometry
    }

    fn exponent(&self) -> f64 {
        self.r
    }

    fn sigmas(&self) -> (f64, f64) {
        (self.sigma, self.sigma_prime)
    }

    fn fixed_lambda(&self) -> Option<f64> {
        match self.mode {
            LambdaMode::Fixed(l) => Some(l),
            LambdaMode::FollowGuess => None,
        }
    }

    fn query(&self, f: &dyn Problem, x: &[f64], lambda_hat: f64) -> Result<ProxAnswer> {
        let lambda = match self.mode {
            LambdaMode::Fixed(l) => l,
            LambdaMode::FollowGuess => lambda_hat,
        };
        self.solve(f, x, lambda)
    }
}

/// Dual gradient norm below which a failed inner solve reports the query as
/// stationary.
pub const STATIONARY_TOL: f64 = 1e-10;

/// One q-th-order query per call: an approximate critical point of the
/// regularized Taylor model `f_q(·; x) + ‖· − x‖^{q+ν}/(λ̂(q+ν))`.
#[derive(Clone, Debug)]
pub struct TaylorOracle {
    pub geometry: Geometry,
    pub r: f64,
    pub holder: HolderData,
    pub sigma: f64,
    pub inner: CriticalOptions,
}

impl TaylorOracle {
    pub fn new(geometry: Geometry, r: f64, holder: HolderData, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 0.5) {
            return Err(Error::InvalidParameter(format!("σ must lie in (0, 1/2), got {sigma}")));
        }
        if !(holder.l > 0.0 && holder.l.is_finite()) {
            return Err(Error::InvalidParameter(format!("Hölder constant must be positive, got {}", holder.l)));
        }
        if holder.q == 0 || !(holder.nu > 0.0 && holder.nu <= 1.0) {
            return Err(Error::InvalidParameter("need q >= 1 and ν in (0, 1]".into()));
        }
        let p = geometry.p();
        if p == 1.0 || (p.is_infinite() && holder.q > 1) {
            return Err(Error::Geometry(format!("Taylor oracle with q = {} unsupported for p = {p}", holder.q)));
        }
        Ok(TaylorOracle { geometry, r, holder, sigma, inner: CriticalOptions::default() })
    }

    /// The model weight λ̂ = σ(q−1)!/(2L).
    pub fn lambda_hat(&self) -> f64 {
        self.sigma * factorial(self.holder.q - 1) / (2.0 * self.holder.l)
    }

    /// The stationarity identity: λ = λ̂‖ỹ − x‖^{r−q−ν}.
    pub fn lambda_for_movement(&self, movement: f64) -> f64 {
        self.lambda_hat() * movement.powf(self.r - self.holder.degree())
    }
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

impl ProxOracle for TaylorOracle {
    fn geometry(&self) -> Geometry {
        self.geometry
    }

    fn exponent(&self) -> f64 {
        self.r
    }

    fn sigmas(&self) -> (f64, f64) {
        (self.sigma, 0.0)
    }

    fn fixed_lambda(&self) -> Option<f64> {
        if (self.r - self.holder.degree()).abs() < 1e-15 {
            Some(self.lambda_hat())
        } else {
            None
        }
    }

    fn query(&self, f: &dyn Problem, x: &[f64], _lambda_hat: f64) -> Result<ProxAnswer> {
        let lhat = self.lambda_hat();
        let model = TaylorModel::build(f, self.geometry, x, self.holder, lhat)?;
        let cp = match find_critical_point(&model, &self.inner) {
            Ok(cp) => cp,
            // The criticality rule is unverifiable below the gradient's own roundoff.
            Err(Error::InnerSolver { .. }) if self.geometry.dual_norm(model.gradient_at_center()) <= STATIONARY_TOL => {
                return Ok(stationary_answer(x, model.gradient_at_center().to_vec(), self.r, self.sigma, 0.0));
            }
            Err(e) => return Err(e),
        };
        if cp.at_center {
            return Ok(stationary_answer(x, model.gradient_at_center().to_vec(), self.r, self.sigma, 0.0));
        }
        let movement = self.geometry.dist(&cp.y, x);
        let lambda = self.lambda_for_movement(movement);
        let v = f.gradient(&cp.y);
        Ok(ProxAnswer {
            x: x.to_vec(),
            y: cp.y,
            v,
            lambda,
            eps: 0.0,
            v_hat: cp.v_hat,
            r: self.r,
            sigma: self.sigma,
            sigma_prime: 0.0,
            at_optimum: false,
            inner_iterations: cp.iterations,
        })
    }
}

/// Minimizer of f over the ball `B_p(x, ρ)`.
pub type BallHook = dyn Fn(&dyn Problem, &[f64], f64) -> Result<Vec<f64>> + Send + Sync;

/// Ball optimization oracle: the constrained minimizer ỹ with
/// λ = ‖ỹ − x‖^{r−1}/‖∇f(ỹ)‖_*.
pub struct BallOracle {
    pub geometry: Geometry,
    pub r: f64,
    pub radius: f64,
    pub sigma: f64,
    /// Relative slack under which ỹ counts as interior to the ball.
    pub boundary_tol: f64,
    hook: Box<BallHook>,
}

impl std::fmt::Debug for BallOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BallOracle").field("p", &self.geometry.p()).field("r", &self.r).field("radius", &self.radius).finish()
    }
}

impl BallOracle {
    pub fn new(geometry: Geometry, r: f64, radius: f64, hook: Box<BallHook>) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!("ball radius must be positive, got {radius}")));
        }
        Ok(BallOracle { geometry, r, radius, sigma: 0.25, boundary_tol: 1e-6, hook })
    }

    /// Ball oracle backed by [`prox_ball_minimizer`].
    pub fn with_prox_bisection(geometry: Geometry, r: f64, radius: f64) -> Result<Self> {
        let g = geometry;
        Self::new(geometry, r, radius, Box::new(move |f: &dyn Problem, x: &[f64], rho: f64| prox_ball_minimizer(f, g, x, rho)))
    }
}

impl ProxOracle for BallOracle {
    fn geometry(&self) -> Geometry {
        self.geometry
    }

    fn exponent(&self) -> f64 {
        self.r
    }

    fn sigmas(&self) -> (f64, f64) {
        (self.sigma, 0.0)
    }

    fn fixed_lambda(&self) -> Option<f64> {
        None
    }

    fn query(&self, f: &dyn Problem, x: &[f64], _lambda_hat: f64) -> Result<ProxAnswer> {
        let g0 = f.gradient(x);
        if self.geometry.dual_norm(&g0) <= STATIONARY_TOL {
            return Ok(stationary_answer(x, g0, self.r, self.sigma, 0.0));
        }
        let y = (self.hook)(f, x, self.radius)?;
        let v = f.gradient(&y);
        let movement = self.geometry.dist(&y, x);
        let gnorm = self.geometry.dual_norm(&v);
        if movement < self.radius * (1.0 - self.boundary_tol) || gnorm == 0.0 {
            let mut ans = stationary_answer(x, v, self.r, self.sigma, 0.0);
            ans.y = y;
            return Ok(ans);
        }
        let lambda = movement.powf(self.r - 1.0) / gnorm;
        let v_hat = witness(&self.geometry, x, &y, self.r, lambda);
        Ok(ProxAnswer {
            x: x.to_vec(),
            y,
            v,
            lambda,
            eps: 0.0,
            v_hat,
            r: self.r,
            sigma: self.sigma,
            sigma_prime: 0.0,
            at_optimum: false,
            inner_iterations: 0,
        })
    }
}

/// Minimize f over `B_p(x, ρ)` by bisection on the proximal parameter: the
/// movement of the r = 2 proximal point is nondecreasing in λ.
pub fn prox_ball_minimizer(f: &dyn Problem, geometry: Geometry, x: &[f64], rho: f64) -> Result<Vec<f64>> {
    let oracle = ExactOracle::new(geometry, 2.0, LambdaMode::FollowGuess)?;
    let moved = |lambda: f64| -> Result<(Vec<f64>, f64)> {
        let a = oracle.solve(f, x, lambda)?;
        let m = geometry.dist(&a.y, x);
        Ok((a.y, m))
    };
    // Unconstrained minimizer inside the ball ends the search.
    let mut hi = rho / geometry.dual_norm(&f.gradient(x)).max(1e-300);
    let (mut y_hi, mut m_hi) = moved(hi)?;
    let mut grow = 0;
    while m_hi < rho {
        if grow > 60 {
            return Ok(y_hi);
        }
        hi *= 4.0;
        let next = moved(hi)?;
        // Saturated movement or a stationary point of f: the unconstrained
        // minimizer lies inside the ball. The inner solve resolves y only to
        // about its gradient tolerance, so saturation is tested at that scale.
        let saturated = (next.1 - m_hi).abs() <= 1e-9 * rho;
        if saturated || geometry.dual_norm(&f.gradient(&next.0)) <= STATIONARY_TOL {
            return Ok(next.0);
        }
        y_hi = next.0;
        m_hi = next.1;
        grow += 1;
    }
    let mut lo = 0.0;
    let mut y_best = y_hi;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let (y, m) = moved(mid)?;
        if (m - rho).abs() <= 1e-10 * rho {
            return Ok(y);
        }
        if m > rho {
            hi = mid;
            y_best = y;
        } else {
            lo = mid;
        }
    }
    // Pull the last overshooting point back to the sphere.
    let u = sub(&y_best, x);
    let s = rho / geometry.norm(&u);
    Ok(x.iter().zip(&u).map(|(a, b)| a + s * b).collect())
}
