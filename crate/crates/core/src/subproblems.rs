//! Per-iteration subproblems: the step-size equation, the mirror step and
//! approximate critical points of regularized Taylor models.

use crate::error::{Error, Result};
use crate::numeric::{self, MinimizeOptions};
use crate::pnorm_core::{dual_map, powered_norm_grad, signed_pow, Geometry, Regularizer, RegularizerKind};
use crate::prox_oracle::{factorial, HolderData, Problem};
use crate::vector::{add, axpy, dot, matvec, sub};

/// `a^r = C·(A_prev + a)^{r−1}·λ` in the unknown a > 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepEquation {
    pub r: f64,
    pub c: f64,
    pub a_prev: f64,
    pub lambda: f64,
}

impl StepEquation {
    pub fn residual(&self, a: f64) -> f64 {
        a.powf(self.r) - self.c * (self.a_prev + a).powf(self.r - 1.0) * self.lambda
    }
}

/// Solve the step-size equation by bisection on the increasing map
/// `a ↦ a·(a/(A_prev + a))^{r−1} − Cλ`.
pub fn solve_step(eq: &StepEquation, tol: f64) -> Result<f64> {
    let StepEquation { r, c, a_prev, lambda } = *eq;
    if !(r > 1.0 && c > 0.0 && a_prev >= 0.0 && lambda > 0.0) || !(c * lambda).is_finite() {
        return Err(Error::InvalidParameter(format!("invalid step equation {eq:?}")));
    }
    let cl = c * lambda;
    let h = |a: f64| a * (a / (a_prev + a)).powf(r - 1.0) - cl;
    let lo = cl.max((cl * a_prev.powf(r - 1.0)).powf(1.0 / r));
    let mut hi = 2.0 * lo;
    while h(hi) <= 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::InvalidParameter(format!("step equation has no finite root: {eq:?}")));
        }
    }
    let a = numeric::bisect_increasing(h, lo, hi, 200);
    let scale = a.powf(r).max(1.0);
    if eq.residual(a).abs() > tol.max(1e-13) * scale {
        return Err(Error::InnerSolver { iterations: 200, residual_ratio: eq.residual(a).abs() / scale });
    }
    Ok(a)
}

/// The mirror step: the unique z with `∇ψ(z) − ∇ψ(x₀) = −g`.
pub fn solve_zstep(psi: &Regularizer, g: &[f64]) -> Result<Vec<f64>> {
    let p = psi.geometry.p();
    if !psi.geometry.is_smooth() {
        return Err(Error::Geometry(format!("mirror step needs p in (1, inf), got {p}")));
    }
    if g.len() != psi.center.len() {
        return Err(Error::DimensionMismatch { expected: psi.center.len(), got: g.len() });
    }
    let kind = match &psi.kind {
        RegularizerKind::InexactFromUniform { base, .. } => base.as_ref(),
        k => k,
    };
    let u: Vec<f64> = match kind {
        RegularizerKind::PowerP => g.iter().map(|&gi| -signed_pow(gi, 1.0 / (p - 1.0))).collect(),
        _ => {
            // ‖∇ψ(z)‖_* = ‖z − x₀‖/(p − 1) fixes the magnitude; the direction
            // follows by inverting the coordinate power map.
            let t = (p - 1.0) * psi.geometry.dual_norm(g);
            if t == 0.0 {
                vec![0.0; g.len()]
            } else {
                let s = (p - 1.0) * t.powf(p - 2.0);
                g.iter().map(|&gi| -signed_pow(s * gi, 1.0 / (p - 1.0))).collect()
            }
        }
    };
    Ok(add(&psi.center, &u))
}

/// The q-th order Taylor expansion of f at a center plus the power
/// regularization `‖y − x‖^{q+ν}/(λ̂(q+ν))`.
pub struct TaylorModel<'a> {
    pub geometry: Geometry,
    pub center: Vec<f64>,
    pub holder: HolderData,
    pub lambda_hat: f64,
    grad0: Vec<f64>,
    hessian: Option<Vec<f64>>,
    problem: &'a dyn Problem,
}

impl<'a> TaylorModel<'a> {
    pub fn build(
        problem: &'a dyn Problem,
        geometry: Geometry,
        center: &[f64],
        holder: HolderData,
        lambda_hat: f64,
    ) -> Result<Self> {
        let q = holder.q;
        if problem.max_order() < q {
            return Err(Error::DerivativeOrder { requested: q, available: problem.max_order() });
        }
        if center.len() != problem.dim() {
            return Err(Error::DimensionMismatch { expected: problem.dim(), got: center.len() });
        }
        let d = center.len();
        let hessian = if q == 2 {
            let mut h = vec![0.0; d * d];
            let mut e = vec![0.0; d];
            for i in 0..d {
                e[i] = 1.0;
                let col = problem.derivative(center, &e, 2)?;
                for (j, v) in col.into_iter().enumerate() {
                    h[j * d + i] = v;
                }
                e[i] = 0.0;
            }
            Some(h)
        } else {
            None
        };
        Ok(TaylorModel {
            geometry,
            center: center.to_vec(),
            holder,
            lambda_hat,
            grad0: problem.gradient(center),
            hessian,
            problem,
        })
    }

    pub fn gradient_at_center(&self) -> &[f64] {
        &self.grad0
    }

    pub fn degree(&self) -> f64 {
        self.holder.degree()
    }

    /// Value and gradient of f_q(x + u; x).
    /// `f_q(x + u; x)` and its gradient. Only this and
    /// [`taylor_value_grad`] evaluate f itself.
    pub fn taylor(&self, u: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (inc, grad) = self.taylor_increment(u)?;
        Ok((self.problem.value(&self.center) + inc, grad))
    }

    /// `f_q(x + u; x) − f(x)` and the gradient of f_q at x + u.
    pub fn taylor_increment(&self, u: &[f64]) -> Result<(f64, Vec<f64>)> {
        let mut value = dot(&self.grad0, u);
        let mut grad = self.grad0.clone();
        if let Some(h) = &self.hessian {
            let hu = matvec(h, u);
            value += 0.5 * dot(&hu, u);
            axpy(&mut grad, 1.0, &hu);
            return Ok((value, grad));
        }
        for j in 2..=self.holder.q {
            let dj = self.problem.derivative(&self.center, u, j)?;
            value += dot(&dj, u) / factorial(j);
            axpy(&mut grad, 1.0 / factorial(j - 1), &dj);
        }
        Ok((value, grad))
    }

    /// `−(1/λ̂)·∇((1/(q+ν))‖·‖^{q+ν})(u)`.
    pub fn witness(&self, u: &[f64]) -> Vec<f64> {
        powered_norm_grad(u, self.geometry.p(), self.degree()).into_iter().map(|g| -g / self.lambda_hat).collect()
    }

    /// The right-hand side `(L/(q−1)!)‖u‖^{q+ν−1}` of the criticality rule.
    pub fn criticality_bound(&self, u: &[f64]) -> f64 {
        self.holder.l / factorial(self.holder.q - 1) * self.geometry.norm(u).powf(self.degree() - 1.0)
    }
}

/// Value and gradient of the regularized model F at y.
pub fn taylor_value_grad(model: &TaylorModel<'_>, y: &[f64]) -> Result<(f64, Vec<f64>)> {
    let (v, g) = regularized_increment(model, y)?;
    Ok((model.problem.value(&model.center) + v, g))
}

/// `F(y) − f(x)` and `∇F(y)`; the inner solver works with the increment to
/// keep f(x) out of its line-search arithmetic.
fn regularized_increment(model: &TaylorModel<'_>, y: &[f64]) -> Result<(f64, Vec<f64>)> {
    let u = sub(y, &model.center);
    // The constant f(x) is left out so value differences stay above roundoff.
    let (v, mut g) = model.taylor_increment(&u)?;
    let s = model.degree();
    let n = model.geometry.norm(&u);
    axpy(&mut g, -1.0, &model.witness(&u));
    Ok((v + n.powf(s) / (model.lambda_hat * s), g))
}

#[derive(Clone, Debug)]
pub struct CriticalOptions {
    pub max_iter: usize,
}

impl Default for CriticalOptions {
    fn default() -> Self {
        CriticalOptions { max_iter: 20_000 }
    }
}

#[derive(Clone, Debug)]
pub struct CriticalPoint {
    pub y: Vec<f64>,
    /// The witness v̂ used in the rule.
    pub v_hat: Vec<f64>,
    /// ∇f(x) = 0, so the center is stationary.
    pub at_center: bool,
    /// `‖∇f_q(y) − v̂‖_*`.
    pub residual: f64,
    pub bound: f64,
    pub iterations: usize,
}

/// Find y ≠ x with `‖∇f_q(y; x) − v̂‖_* ≤ (L/(q−1)!)‖y − x‖^{q+ν−1}`,
/// accepting the first point that passes.
pub fn find_critical_point(model: &TaylorModel<'_>, opts: &CriticalOptions) -> Result<CriticalPoint> {
    let geometry = model.geometry;
    let x = &model.center;
    let g = model.gradient_at_center();
    let gnorm = geometry.dual_norm(g);
    if gnorm == 0.0 {
        return Ok(CriticalPoint {
            y: x.clone(),
            v_hat: vec![0.0; x.len()],
            at_center: true,
            residual: 0.0,
            bound: 0.0,
            iterations: 0,
        });
    }
    let s = model.degree();
    // Minimizer of the q = 1 model in the p-geometry.
    let t = (model.lambda_hat * gnorm).powf(1.0 / (s - 1.0));
    let w = dual_map(g, geometry.p());
    let start: Vec<f64> = x.iter().zip(&w).map(|(xi, wi)| xi - t * wi).collect();

    if geometry.p().is_infinite() {
        // q = 1 only: v̂ = g lies in the face of the max-norm subdifferential.
        let u = sub(&start, x);
        return Ok(CriticalPoint { bound: model.criticality_bound(&u), y: start, v_hat: g.to_vec(), at_center: false, residual: 0.0, iterations: 0 });
    }

    let residual_at = |y: &[f64]| -> Result<(f64, f64, Vec<f64>)> {
        let u = sub(y, x);
        let (_, grad) = model.taylor_increment(&u)?;
        let vh = model.witness(&u);
        Ok((geometry.dual_norm(&sub(&grad, &vh)), model.criticality_bound(&u), vh))
    };
    let (r0, b0, vh0) = residual_at(&start)?;
    if r0 <= b0 && b0 > 0.0 {
        return Ok(CriticalPoint { y: start, v_hat: vh0, at_center: false, residual: r0, bound: b0, iterations: 0 });
    }

    let failure = std::cell::Cell::new(None);
    let obj = |y: &[f64]| match regularized_increment(model, y) {
        Ok(vg) => vg,
        Err(e) => {
            failure.set(Some(e));
            (f64::NAN, vec![0.0; y.len()])
        }
    };
    let stop = |y: &[f64], grad: &[f64]| {
        let u = sub(y, x);
        let b = model.criticality_bound(&u);
        b > 0.0 && geometry.dual_norm(grad) <= b
    };
    let norm = |v: &[f64]| geometry.dual_norm(v);
    let mopts = MinimizeOptions { max_iter: opts.max_iter, grad_tol: 0.0, ..Default::default() };
    let res = numeric::minimize_until(&obj, &start, &stop, &norm, &mopts);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let (residual, bound, v_hat) = residual_at(&res.x)?;
    if !(residual <= bound && bound > 0.0) {
        return Err(Error::InnerSolver { iterations: res.iterations, residual_ratio: residual / bound });
    }
    Ok(CriticalPoint { y: res.x, v_hat, at_center: false, residual, bound, iterations: res.iterations })
}
