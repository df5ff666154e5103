//! ℓ_p geometry: norms, dual exponents, subgradients of powered norms,
//! uniformly convex regularizers and their Bregman divergences.

use crate::error::{Error, Result};
use crate::numeric::{self, MinimizeOptions};
use crate::prox_oracle::Problem;
use crate::vector::{dot, sub};

/// Magnitudes below this are treated as exact zeros in power maps.
pub const ZERO_GUARD: f64 = 1e-300;

/// Dual exponent `(1 - 1/p)^-1`, with `1 ↦ ∞` and `∞ ↦ 1`.
pub fn dual_exponent(p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent(p));
    }
    if p == 1.0 {
        Ok(f64::INFINITY)
    } else if p.is_infinite() {
        Ok(1.0)
    } else {
        Ok(p / (p - 1.0))
    }
}

/// The pair (p, p*) together with m = max{2, p}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Geometry {
    p: f64,
    p_star: f64,
    m: f64,
}

impl Geometry {
    pub fn new(p: f64) -> Result<Self> {
        let p_star = dual_exponent(p)?;
        Ok(Geometry { p, p_star, m: p.max(2.0) })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn p_star(&self) -> f64 {
        self.p_star
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// True when p ∈ (1, ∞), where the norm is differentiable away from 0.
    pub fn is_smooth(&self) -> bool {
        self.p > 1.0 && self.p.is_finite()
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        pnorm(x, self.p)
    }

    pub fn dual_norm(&self, g: &[f64]) -> f64 {
        pnorm(g, self.p_star)
    }

    /// Distance ‖x − y‖_p.
    pub fn dist(&self, x: &[f64], y: &[f64]) -> f64 {
        pnorm(&sub(x, y), self.p)
    }
}

/// ℓ_p norm, scaled by the max-abs entry to avoid overflow.
pub fn pnorm(x: &[f64], p: f64) -> f64 {
    let amax = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if amax == 0.0 || p.is_infinite() {
        return amax;
    }
    if p == 1.0 {
        return x.iter().map(|v| v.abs()).sum();
    }
    let s: f64 = if p == 2.0 {
        x.iter().map(|v| (v / amax) * (v / amax)).sum()
    } else {
        x.iter().map(|v| (v.abs() / amax).powf(p)).sum()
    };
    amax * s.powf(1.0 / p)
}

/// ℓ_{p*} norm of a dual vector.
pub fn dual_pnorm(g: &[f64], p: f64) -> f64 {
    let ps = if p <= 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    };
    pnorm(g, ps)
}

/// `sign(u)·|u|^e`, exactly 0 for |u| below [`ZERO_GUARD`].
pub fn signed_pow(u: f64, e: f64) -> f64 {
    if u.abs() < ZERO_GUARD {
        0.0
    } else {
        u.signum() * u.abs().powf(e)
    }
}

/// A subgradient of `(1/r)‖u‖_p^r`; the gradient when p ∈ (1, ∞).
///
/// At kinks (p ∈ {1, ∞}) the selection is sign(u) for p = 1 and the
/// lowest-index max-abs coordinate for p = ∞. Returns 0 at u = 0.
pub fn powered_norm_grad(u: &[f64], p: f64, r: f64) -> Vec<f64> {
    let n = pnorm(u, p);
    if n == 0.0 {
        return vec![0.0; u.len()];
    }
    let lead = n.powf(r - 1.0);
    if p == 1.0 {
        return u
            .iter()
            .map(|&v| if v.abs() < ZERO_GUARD { 0.0 } else { lead * v.signum() })
            .collect();
    }
    if p.is_infinite() {
        let mut g = vec![0.0; u.len()];
        let j = argmax_abs(u);
        g[j] = lead * u[j].signum();
        return g;
    }
    u.iter().map(|&v| lead * signed_pow(v / n, p - 1.0)).collect()
}

/// Unit-norm primal direction w with ⟨g, w⟩ = ‖g‖_{p*}.
pub fn dual_map(g: &[f64], p: f64) -> Vec<f64> {
    let ps = dual_pnorm_exponent(p);
    powered_norm_grad(g, ps, 1.0)
}

fn dual_pnorm_exponent(p: f64) -> f64 {
    if p <= 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

pub(crate) fn argmax_abs(u: &[f64]) -> usize {
    let mut j = 0;
    let mut best = -1.0;
    for (i, v) in u.iter().enumerate() {
        if v.abs() > best {
            best = v.abs();
            j = i;
        }
    }
    j
}

/// One element of the subdifferential of `(1/(rλ))‖y − x‖^r` at y.
#[derive(Clone, Debug)]
pub struct PoweredNormSubgradient {
    pub base: Vec<f64>,
    pub query: Vec<f64>,
    pub r: f64,
    pub inv_lambda: f64,
}

impl PoweredNormSubgradient {
    pub fn new(base: &[f64], query: &[f64], r: f64, inv_lambda: f64) -> Self {
        PoweredNormSubgradient { base: base.to_vec(), query: query.to_vec(), r, inv_lambda }
    }

    pub fn value(&self, geometry: &Geometry) -> Vec<f64> {
        let u = sub(&self.query, &self.base);
        powered_norm_grad(&u, geometry.p(), self.r)
            .into_iter()
            .map(|g| g * self.inv_lambda)
            .collect()
    }
}

/// Which closed form a regularizer uses.
#[derive(Clone, Debug, PartialEq)]
pub enum RegularizerKind {
    /// `(1/p)‖x − x₀‖_p^p`, p ≥ 2.
    PowerP,
    /// `‖x − x₀‖_p² / (2(p − 1))`, p ∈ (1, 2].
    SquaredP,
    /// Same value as `base`, recertified for a smaller exponent with slack δ.
    InexactFromUniform { base: Box<RegularizerKind>, a: f64, base_exponent: f64 },
}

/// A δ-inexact (μ, r)-uniformly convex function centered at x₀.
#[derive(Clone, Debug)]
pub struct Regularizer {
    pub geometry: Geometry,
    pub center: Vec<f64>,
    pub r: f64,
    pub mu: f64,
    pub delta: f64,
    pub kind: RegularizerKind,
}

impl Regularizer {
    pub fn power_p(geometry: Geometry, center: Vec<f64>) -> Result<Self> {
        let p = geometry.p();
        if !(p >= 2.0 && p.is_finite()) {
            return Err(Error::Geometry(format!("power-p regularizer needs 2 <= p < inf, got {p}")));
        }
        Ok(Regularizer {
            geometry,
            center,
            r: p,
            mu: 2f64.powf(-p * (p - 2.0) / (p - 1.0)),
            delta: 0.0,
            kind: RegularizerKind::PowerP,
        })
    }

    pub fn squared_p(geometry: Geometry, center: Vec<f64>) -> Result<Self> {
        let p = geometry.p();
        if !(p > 1.0 && p <= 2.0) {
            return Err(Error::Geometry(format!("squared-p regularizer needs 1 < p <= 2, got {p}")));
        }
        Ok(Regularizer { geometry, center, r: 2.0, mu: 1.0, delta: 0.0, kind: RegularizerKind::SquaredP })
    }

    /// Power-p for p ≥ 2, squared-p below; both are (μ, m)-uniformly convex.
    pub fn standard(geometry: Geometry, center: Vec<f64>) -> Result<Self> {
        if geometry.p() >= 2.0 {
            Self::power_p(geometry, center)
        } else {
            Self::squared_p(geometry, center)
        }
    }

    fn closed_form(&self) -> &RegularizerKind {
        match &self.kind {
            RegularizerKind::InexactFromUniform { base, .. } => base,
            k => k,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let u = sub(x, &self.center);
        let p = self.geometry.p();
        match self.closed_form() {
            RegularizerKind::PowerP => u.iter().map(|v| v.abs().powf(p)).sum::<f64>() / p,
            _ => {
                let n = pnorm(&u, p);
                n * n / (2.0 * (p - 1.0))
            }
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.geometry.is_smooth() {
            return Err(Error::Geometry(format!(
                "regularizer gradient undefined for p = {}",
                self.geometry.p()
            )));
        }
        let u = sub(x, &self.center);
        let p = self.geometry.p();
        Ok(match self.closed_form() {
            RegularizerKind::PowerP => u.iter().map(|&v| signed_pow(v, p - 1.0)).collect(),
            _ => powered_norm_grad(&u, p, 2.0).into_iter().map(|g| g / (p - 1.0)).collect(),
        })
    }
}

/// Bregman divergence `ψ(x) − ψ(y) − ⟨∇ψ(y), x − y⟩`.
pub fn bregman(psi: &Regularizer, x: &[f64], y: &[f64]) -> Result<f64> {
    let g = psi.gradient(y)?;
    Ok(psi.value(x) - psi.value(y) - dot(&g, &sub(x, y)))
}

/// Recertify an exact (μ₀, σ)-uniformly convex regularizer as a
/// δ-inexact (μ, s)-uniformly convex one for 0 < s < σ.
///
/// Young's inequality with exponents σ/s and σ/(σ − s) gives
/// μ = μ₀·a^{σ/s} and δ = μ₀·a^{σ²/(s(σ−s))}·(σ − s)/(sσ).
pub fn inexact_from_uniform(psi: &Regularizer, s: f64, a: f64) -> Result<Regularizer> {
    let sigma = psi.r;
    if psi.delta != 0.0 || matches!(psi.kind, RegularizerKind::InexactFromUniform { .. }) {
        return Err(Error::InvalidParameter("base regularizer must be exactly uniformly convex".into()));
    }
    if !(s > 0.0 && s < sigma) {
        return Err(Error::InvalidParameter(format!("need 0 < s < {sigma}, got s = {s}")));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidParameter(format!("need a > 0, got {a}")));
    }
    let mu = psi.mu * a.powf(sigma / s);
    let delta = psi.mu * a.powf(sigma * sigma / (s * (sigma - s))) * (sigma - s) / (s * sigma);
    Ok(Regularizer {
        geometry: psi.geometry,
        center: psi.center.clone(),
        r: s,
        mu,
        delta,
        kind: RegularizerKind::InexactFromUniform { base: Box::new(psi.kind.clone()), a, base_exponent: sigma },
    })
}

/// Evidence returned by [`moreau_probe`].
#[derive(Clone, Debug)]
pub struct MoreauCertificate {
    pub f_prox: f64,
    pub envelope: f64,
    pub f_x: f64,
    /// ‖∇f(ŷ)‖_* for the prox witness.
    pub witness_norm: f64,
    /// ‖x − ŷ‖^{r−1}/λ.
    pub movement_term: f64,
    pub tol: f64,
    pub ordering_ok: bool,
    pub identity_ok: bool,
}

#[derive(Clone, Debug)]
pub struct MoreauProbe {
    pub value: f64,
    pub prox: Vec<f64>,
    pub certificate: MoreauCertificate,
}

/// Numerically evaluate `M(x) = min_y f(y) + (1/(rλ))‖y − x‖^r`.
pub fn moreau_probe(
    f: &dyn Problem,
    geometry: &Geometry,
    x: &[f64],
    lambda: f64,
    r: f64,
    tol: f64,
) -> Result<MoreauProbe> {
    if lambda < 0.0 || !geometry.is_smooth() {
        return Err(Error::InvalidParameter("moreau_probe needs λ >= 0 and p in (1, inf)".into()));
    }
    let fx = f.value(x);
    if lambda == 0.0 {
        let certificate = MoreauCertificate {
            f_prox: fx,
            envelope: fx,
            f_x: fx,
            witness_norm: 0.0,
            movement_term: 0.0,
            tol,
            ordering_ok: true,
            identity_ok: true,
        };
        return Ok(MoreauProbe { value: fx, prox: x.to_vec(), certificate });
    }
    let p = geometry.p();
    let obj = |y: &[f64]| {
        let u = sub(y, x);
        let n = pnorm(&u, p);
        let mut g = f.gradient(y);
        for (gi, hi) in g.iter_mut().zip(powered_norm_grad(&u, p, r)) {
            *gi += hi / lambda;
        }
        (f.value(y) + n.powf(r) / (r * lambda), g)
    };
    let opts = MinimizeOptions { grad_tol: tol * 1e-2, max_iter: 20_000, ..Default::default() };
    let res = numeric::minimize(&obj, x, &|g| geometry.dual_norm(g), &opts);
    // A solve stalled by roundoff is still usable once it meets the certificate tolerance.
    if !res.converged && res.grad_norm > tol {
        return Err(Error::InnerSolver { iterations: res.iterations, residual_ratio: res.grad_norm });
    }
    let prox = res.x;
    let f_prox = f.value(&prox);
    let envelope = res.value;
    let witness_norm = geometry.dual_norm(&f.gradient(&prox));
    let movement_term = geometry.dist(x, &prox).powf(r - 1.0) / lambda;
    let certificate = MoreauCertificate {
        f_prox,
        envelope,
        f_x: fx,
        witness_norm,
        movement_term,
        tol,
        ordering_ok: f_prox <= envelope + tol && envelope <= fx + tol,
        identity_ok: (witness_norm - movement_term).abs() <= tol * (1.0 + movement_term),
    };
    Ok(MoreauProbe { value: envelope, prox, certificate })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_exponent_examples() {
        assert_eq!(dual_exponent(2.0).unwrap(), 2.0);
        assert_eq!(dual_exponent(1.0).unwrap(), f64::INFINITY);
        assert_eq!(dual_exponent(f64::INFINITY).unwrap(), 1.0);
        assert!((dual_exponent(4.0).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!(dual_exponent(0.5).is_err());
        assert!(dual_exponent(f64::NAN).is_err());
    }

    #[test]
    fn norm_examples() {
        assert_eq!(pnorm(&[3.0, 4.0], 2.0), 5.0);
        assert_eq!(pnorm(&[1.0, -1.0, 1.0], f64::INFINITY), 1.0);
        // Direct evaluation: (1 + 1 + 1 + 1)^{1/3}.
        let expected = 4f64.powf(1.0 / 3.0);
        assert!((pnorm(&[1.0; 4], 3.0) - expected).abs() < 1e-15);
        assert_eq!(dual_pnorm(&[1.0, -2.0], f64::INFINITY), 3.0);
    }

    #[test]
    fn geometry_invariants() {
        for p in [1.0, 1.5, 2.0, 3.0, 4.0, f64::INFINITY] {
            let g = Geometry::new(p).unwrap();
            let inv = |x: f64| if x.is_infinite() { 0.0 } else { 1.0 / x };
            assert!((inv(g.p()) + inv(g.p_star()) - 1.0).abs() < 1e-15);
            assert!(g.m() >= 2.0);
            if p >= 2.0 {
                assert_eq!(g.m(), p);
            }
        }
    }

    #[test]
    fn signed_pow_guard() {
        assert_eq!(signed_pow(1e-301, -0.5), 0.0);
        assert_eq!(signed_pow(-8.0, 1.0 / 3.0), -2.0);
    }

    #[test]
    fn powered_subgradient_is_zero_at_base() {
        let g = Geometry::new(3.0).unwrap();
        let s = PoweredNormSubgradient::new(&[1.0, 2.0], &[1.0, 2.0], 2.5, 4.0);
        assert_eq!(s.value(&g), vec![0.0, 0.0]);
    }

    #[test]
    fn bregman_examples() {
        let g2 = Geometry::new(2.0).unwrap();
        let psi = Regularizer::squared_p(g2, vec![0.0, 0.0]).unwrap();
        let d = bregman(&psi, &[1.0, 2.0], &[-1.0, 0.5]).unwrap();
        assert!((d - 0.5 * (4.0 + 2.25)).abs() < 1e-14);
        assert_eq!(bregman(&psi, &[0.3, 0.1], &[0.3, 0.1]).unwrap(), 0.0);

        // (1/4)‖(1,0)‖_4^4 − 0 − 0.
        let g4 = Geometry::new(4.0).unwrap();
        let psi4 = Regularizer::power_p(g4, vec![0.0, 0.0]).unwrap();
        assert!((bregman(&psi4, &[1.0, 0.0], &[0.0, 0.0]).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn regularizer_constants() {
        let g4 = Geometry::new(4.0).unwrap();
        let psi = Regularizer::power_p(g4, vec![0.0]).unwrap();
        assert_eq!(psi.r, 4.0);
        assert!((psi.mu - 2f64.powf(-8.0 / 3.0)).abs() < 1e-15);
        let g15 = Geometry::new(1.5).unwrap();
        let psi = Regularizer::squared_p(g15, vec![0.0]).unwrap();
        assert_eq!((psi.r, psi.mu, psi.delta), (2.0, 1.0, 0.0));
        assert!(Regularizer::power_p(g15, vec![0.0]).is_err());
        assert!(Regularizer::squared_p(g4, vec![0.0]).is_err());
    }

    #[test]
    fn rejects_kinked_geometry() {
        let ginf = Geometry::new(f64::INFINITY).unwrap();
        assert!(Regularizer::standard(ginf, vec![0.0]).is_err());
        let g1 = Geometry::new(1.0).unwrap();
        assert!(Regularizer::standard(g1, vec![0.0]).is_err());
    }

    #[test]
    fn inexact_from_uniform_examples() {
        let g2 = Geometry::new(2.0).unwrap();
        let psi = Regularizer::standard(g2, vec![0.0]).unwrap();
        let inexact = inexact_from_uniform(&psi, 1.0, 1.0).unwrap();
        assert!((inexact.mu - 1.0).abs() < 1e-15);
        assert!((inexact.delta - 0.5).abs() < 1e-15);
        assert!(inexact_from_uniform(&psi, 2.0, 1.0).is_err());
        assert!(inexact_from_uniform(&psi, 2.5, 1.0).is_err());

        let mut prev = (f64::INFINITY, f64::INFINITY);
        for a in [1.0, 0.5, 0.1, 0.01] {
            let r = inexact_from_uniform(&psi, 1.5, a).unwrap();
            assert!(r.mu < prev.0 && r.delta < prev.1);
            prev = (r.mu, r.delta);
        }
    }
}
