//! Benchmark objectives with derivatives up to order three, Hölder data in a
//! chosen p-norm, and known minimizers where available.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numeric::{minimize, MinimizeOptions};
use crate::pnorm_core::{dual_exponent, dual_map, dual_pnorm, pnorm, signed_pow};
use crate::prox_oracle::{HolderData, Problem};
use crate::seed::{ids, stream};
use crate::vector::{dot, matvec, sub};

/// `sup_{‖u‖_p ≤ 1} Σ h_i u_i²` for h ≥ 0.
pub fn diagonal_operator_norm(h: &[f64], p: f64) -> f64 {
    if p <= 2.0 {
        return h.iter().fold(0.0_f64, |m, v| m.max(*v));
    }
    // Dual exponent of p/2.
    let t = p / 2.0;
    pnorm(h, dual_exponent(t).expect("p/2 > 1"))
}

/// `max(1, d^e)` norm-comparison factor.
fn dim_factor(d: usize, e: f64) -> f64 {
    (d as f64).powf(e).max(1.0)
}

/// f(x) = ½(x − x*)ᵀQ(x − x*) + f*, with Q positive definite.
#[derive(Clone, Debug)]
pub struct Quadratic {
    q: Vec<f64>,
    diag: Option<Vec<f64>>,
    x_star: Vec<f64>,
    f_star: f64,
    lambda_max: f64,
}

impl Quadratic {
    pub fn diagonal(h: Vec<f64>, x_star: Vec<f64>) -> Result<Self> {
        if h.len() != x_star.len() {
            return Err(Error::DimensionMismatch { expected: h.len(), got: x_star.len() });
        }
        if h.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter("diagonal entries must be positive and finite".into()));
        }
        let d = h.len();
        let mut q = vec![0.0; d * d];
        for i in 0..d {
            q[i * d + i] = h[i];
        }
        let lambda_max = h.iter().fold(0.0_f64, |m, v| m.max(*v));
        Ok(Quadratic { q, diag: Some(h), x_star, f_star: 0.0, lambda_max })
    }

    /// ½xᵀQx − bᵀx for a row-major symmetric positive definite Q.
    pub fn dense(q: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let d = b.len();
        if q.len() != d * d {
            return Err(Error::DimensionMismatch { expected: d * d, got: q.len() });
        }
        let m = DMatrix::from_row_slice(d, d, &q);
        if (&m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
            return Err(Error::InvalidParameter("Q must be symmetric".into()));
        }
        let eig = m.clone().symmetric_eigen();
        let lambda_min = eig.eigenvalues.min();
        if !(lambda_min > 0.0) {
            return Err(Error::InvalidParameter(format!("Q must be positive definite, smallest eigenvalue {lambda_min}")));
        }
        let chol = m.cholesky().ok_or_else(|| Error::InvalidParameter("Cholesky factorization failed".into()))?;
        let x = chol.solve(&DVector::from_column_slice(&b));
        let x_star: Vec<f64> = x.iter().copied().collect();
        let f_star = -0.5 * dot(&b, &x_star);
        Ok(Quadratic { q, diag: None, x_star, f_star, lambda_max: eig.eigenvalues.max() })
    }

    /// Diagonal spectrum h_i = i^{−decay}; the minimizer has entries
    /// ±i^{−coef_decay} with random signs, scaled to unit Euclidean norm.
    pub fn ill_conditioned(d: usize, decay: f64, coef_decay: f64, seed: u64) -> Result<Self> {
        let h: Vec<f64> = (1..=d).map(|i| (i as f64).powf(-decay)).collect();
        let mut rng = stream(seed, ids::PROBLEM_DATA);
        let mut x: Vec<f64> = (1..=d)
            .map(|i| {
                let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                s * (i as f64).powf(-coef_decay)
            })
            .collect();
        let n = pnorm(&x, 2.0);
        x.iter_mut().for_each(|v| *v /= n);
        Quadratic::diagonal(h, x)
    }

    fn hess_vec(&self, u: &[f64]) -> Vec<f64> {
        match &self.diag {
            Some(h) => h.iter().zip(u).map(|(a, b)| a * b).collect(),
            None => matvec(&self.q, u),
        }
    }
}

impl Problem for Quadratic {
    fn name(&self) -> String {
        "quadratic".into()
    }
    fn dim(&self) -> usize {
        self.x_star.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        let w = sub(x, &self.x_star);
        0.5 * dot(&w, &self.hess_vec(&w)) + self.f_star
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.hess_vec(&sub(x, &self.x_star))
    }
    fn max_order(&self) -> usize {
        3
    }
    fn derivative(&self, x: &[f64], u: &[f64], j: usize) -> Result<Vec<f64>> {
        match j {
            1 => Ok(self.gradient(x)),
            2 => Ok(self.hess_vec(u)),
            3 => Ok(vec![0.0; u.len()]),
            _ => Err(Error::DerivativeOrder { requested: j, available: 3 }),
        }
    }
    fn holder(&self, p: f64, q: usize) -> Option<HolderData> {
        match q {
            1 => {
                let l = match &self.diag {
                    Some(h) => diagonal_operator_norm(h, p),
                    None => self.lambda_max * dim_factor(self.dim(), 1.0 - 2.0 / p),
                };
                Some(HolderData::analytic(1, l, 1.0))
            }
            // The second-order model is exact.
            2 | 3 => Some(HolderData::analytic(q, 0.0, 1.0)),
            _ => None,
        }
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(self.x_star.clone())
    }
    fn optimal_value(&self) -> Option<f64> {
        Some(self.f_star)
    }
}

/// f(x) = (c/s)·Σ|x_i − x*_i|^s.
#[derive(Clone, Debug)]
pub struct PthPower {
    pub s: f64,
    pub scale: f64,
    pub center: Vec<f64>,
}

impl PthPower {
    pub fn new(s: f64, scale: f64, center: Vec<f64>) -> Result<Self> {
        if !(s > 1.0 && s.is_finite()) || !(scale > 0.0) {
            return Err(Error::InvalidParameter(format!("need s > 1 and scale > 0, got s={s}, scale={scale}")));
        }
        Ok(PthPower { s, scale, center })
    }

    /// φ^{(j)}(t) for φ(t) = |t|^s/s.
    fn phi_derivative(&self, t: f64, j: usize) -> f64 {
        let coef: f64 = (1..j).map(|i| self.s - i as f64).product();
        let e = self.s - j as f64;
        if j % 2 == 1 {
            coef * signed_pow(t, e)
        } else {
            coef * t.abs().powf(e)
        }
    }
}

impl Problem for PthPower {
    fn name(&self) -> String {
        format!("pth-power(s={})", self.s)
    }
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        let sum: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c).abs().powf(self.s)).sum();
        self.scale * sum / self.s
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.center).map(|(a, c)| self.scale * signed_pow(a - c, self.s - 1.0)).collect()
    }
    fn max_order(&self) -> usize {
        (self.s.floor() as usize).min(3)
    }
    fn derivative(&self, x: &[f64], u: &[f64], j: usize) -> Result<Vec<f64>> {
        if j == 0 || j > self.max_order() {
            return Err(Error::DerivativeOrder { requested: j, available: self.max_order() });
        }
        Ok(x.iter()
            .zip(&self.center)
            .zip(u)
            .map(|((a, c), ui)| self.scale * self.phi_derivative(a - c, j) * ui.powi(j as i32 - 1))
            .collect())
    }
    /// Defined for the order q with s − q ∈ (0, 1], where ν = s − q.
    fn holder(&self, p: f64, q: usize) -> Option<HolderData> {
        let nu = self.s - q as f64;
        if !(nu > 0.0 && nu <= 1.0) {
            return None;
        }
        let coef: f64 = (1..q).map(|i| self.s - i as f64).product();
        let sign_factor = if nu < 1.0 { 2f64.powf(1.0 - nu) } else { 1.0 };
        let e = if p.is_infinite() { 1.0 } else { 1.0 - (q as f64 + nu) / p };
        Some(HolderData::analytic(q, self.scale * coef * sign_factor * dim_factor(self.dim(), e), nu))
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(self.center.clone())
    }
    fn optimal_value(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// ℓ(t) = ln(1 + e^{−t}) and its derivatives.
fn logistic_loss(t: f64) -> f64 {
    if t > 0.0 {
        (-t).exp().ln_1p()
    } else {
        -t + t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn logistic_derivative(t: f64, j: usize) -> f64 {
    let s = sigmoid(t);
    match j {
        1 => s - 1.0,
        2 => s * (1.0 - s),
        3 => s * (1.0 - s) * (1.0 - 2.0 * s),
        4 => s * (1.0 - s) * (1.0 - 6.0 * s + 6.0 * s * s),
        _ => f64::NAN,
    }
}

/// sup |ℓ^{(j)}| for j = 2, 3, 4.
const LOGISTIC_SUP: [f64; 3] = [0.25, 0.096_225_044_864_937_63, 0.125];

/// Average logistic loss `(1/n)Σ ln(1 + exp(−y_i⟨a_i, x⟩))`.
#[derive(Clone, Debug)]
pub struct Logistic {
    n: usize,
    d: usize,
    /// Rows y_i·a_i, row-major.
    rows: Vec<f64>,
    x_star: Vec<f64>,
    f_star: f64,
}

impl Logistic {
    pub fn new(data: Vec<f64>, labels: &[f64]) -> Result<Self> {
        let n = labels.len();
        if n == 0 || data.len() % n != 0 {
            return Err(Error::DimensionMismatch { expected: n, got: data.len() });
        }
        let d = data.len() / n;
        let mut rows = data;
        for (i, y) in labels.iter().enumerate() {
            if *y != 1.0 && *y != -1.0 {
                return Err(Error::InvalidParameter(format!("labels must be ±1, got {y}")));
            }
            rows[i * d..(i + 1) * d].iter_mut().for_each(|v| *v *= y);
        }
        let mut lg = Logistic { n, d, rows, x_star: vec![0.0; d], f_star: f64::NAN };
        lg.x_star = lg.newton()?;
        // A point with every margin positive separates the data strictly, and
        // then f decreases forever along it.
        if lg.margins(&lg.x_star).iter().all(|m| *m > 0.0) {
            return Err(Error::InvalidParameter("logistic data is separable; no minimizer exists".into()));
        }
        lg.f_star = lg.value(&lg.x_star);
        Ok(lg)
    }

    /// Gaussian features, labels from a random unit direction with margin
    /// `scale` and a fraction `flip` of labels flipped.
    pub fn random(n: usize, d: usize, scale: f64, flip: f64, seed: u64) -> Result<Self> {
        let mut rng = stream(seed, ids::PROBLEM_DATA);
        let mut w: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let wn = pnorm(&w, 2.0);
        w.iter_mut().for_each(|v| *v /= wn);
        let mut data = Vec::with_capacity(n * d);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let a: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal) / (d as f64).sqrt()).collect();
            let mut y = if dot(&a, &w) * scale >= 0.0 { 1.0 } else { -1.0 };
            if rng.random::<f64>() < flip {
                y = -y;
            }
            data.extend_from_slice(&a);
            labels.push(y);
        }
        Logistic::new(data, &labels)
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.d..(i + 1) * self.d]
    }

    fn margins(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.d, self.d);
        for (i, m) in self.margins(x).into_iter().enumerate() {
            let a = DVector::from_column_slice(self.row(i));
            h += (logistic_derivative(m, 2) / self.n as f64) * &a * a.transpose();
        }
        h
    }

    fn newton(&self) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.d];
        for _ in 0..200 {
            let g = self.gradient(&x);
            if pnorm(&g, 2.0) <= 1e-14 {
                return Ok(x);
            }
            let h = self.hessian(&x);
            let Some(chol) = h.cholesky() else {
                return Err(Error::InvalidParameter("logistic Hessian is singular; data may be separable".into()));
            };
            let step = chol.solve(&DVector::from_column_slice(&g));
            let f0 = self.value(&x);
            let slope: f64 = -dot(&g, step.as_slice());
            let mut t = 1.0;
            loop {
                let cand: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
                // Near the optimum the decrease drops below the roundoff of f; a full step is taken then.
                let flat = -slope <= 1e-13 * (1.0 + f0.abs());
                if flat || self.value(&cand) <= f0 + 1e-4 * t * slope || t < 1e-12 {
                    x = cand;
                    break;
                }
                t *= 0.5;
            }
            if pnorm(&x, 2.0) > 1e8 {
                return Err(Error::InvalidParameter("logistic minimizer diverges; data is separable".into()));
            }
        }
        // Gradient roundoff grows with the iterate's size.
        let g = self.gradient(&x);
        if pnorm(&g, 2.0) <= 1e-11 * (1.0 + pnorm(&x, 2.0)) {
            Ok(x)
        } else {
            Err(Error::InnerSolver { iterations: 200, residual_ratio: pnorm(&g, 2.0) })
        }
    }

    fn row_norm_power_mean(&self, p: f64, power: i32) -> f64 {
        (0..self.n).map(|i| dual_pnorm(self.row(i), p).powi(power)).sum::<f64>() / self.n as f64
    }
}

impl Problem for Logistic {
    fn name(&self) -> String {
        "logistic".into()
    }
    fn dim(&self) -> usize {
        self.d
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.margins(x).into_iter().map(logistic_loss).sum::<f64>() / self.n as f64
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.d];
        for (i, m) in self.margins(x).into_iter().enumerate() {
            let c = logistic_derivative(m, 1) / self.n as f64;
            g.iter_mut().zip(self.row(i)).for_each(|(gi, a)| *gi += c * a);
        }
        g
    }
    fn max_order(&self) -> usize {
        3
    }
    fn derivative(&self, x: &[f64], u: &[f64], j: usize) -> Result<Vec<f64>> {
        if j == 0 || j > 3 {
            return Err(Error::DerivativeOrder { requested: j, available: 3 });
        }
        let mut g = vec![0.0; self.d];
        for (i, m) in self.margins(x).into_iter().enumerate() {
            let au = dot(self.row(i), u);
            let c = logistic_derivative(m, j) * au.powi(j as i32 - 1) / self.n as f64;
            g.iter_mut().zip(self.row(i)).for_each(|(gi, a)| *gi += c * a);
        }
        Ok(g)
    }
    fn holder(&self, p: f64, q: usize) -> Option<HolderData> {
        if !(1..=3).contains(&q) {
            return None;
        }
        let l = LOGISTIC_SUP[q - 1] * self.row_norm_power_mean(p, q as i32 + 1);
        Some(HolderData::analytic(q, l, 1.0))
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(self.x_star.clone())
    }
    fn optimal_value(&self) -> Option<f64> {
        Some(self.f_star)
    }
}

/// Softmax smoothing of `‖Ax − b‖_∞`: `μ ln Σ_i (e^{(a_i·x − b_i)/μ} + e^{−(a_i·x − b_i)/μ})`.
#[derive(Clone, Debug)]
pub struct SoftmaxRegression {
    n: usize,
    d: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    mu: f64,
    x_star: Vec<f64>,
    f_star: f64,
}

impl SoftmaxRegression {
    pub fn new(a: Vec<f64>, b: Vec<f64>, mu: f64) -> Result<Self> {
        let n = b.len();
        if n == 0 || a.len() % n != 0 {
            return Err(Error::DimensionMismatch { expected: n, got: a.len() });
        }
        if !(mu > 0.0) {
            return Err(Error::InvalidParameter(format!("smoothing μ must be positive, got {mu}")));
        }
        let d = a.len() / n;
        let mut sr = SoftmaxRegression { n, d, a, b, mu, x_star: vec![0.0; d], f_star: f64::NAN };
        // No closed form; the minimizer is computed to gradient tolerance 1e-12.
        let opts = MinimizeOptions { grad_tol: 1e-12, max_iter: 50_000, ..MinimizeOptions::default() };
        let res = minimize(&|x: &[f64]| (sr.value(x), sr.gradient(x)), &vec![0.0; d], &|g: &[f64]| pnorm(g, 2.0), &opts);
        if res.grad_norm > 1e-9 {
            return Err(Error::InnerSolver { iterations: res.iterations, residual_ratio: res.grad_norm });
        }
        sr.x_star = res.x;
        sr.f_star = res.value;
        Ok(sr)
    }

    pub fn random(n: usize, d: usize, mu: f64, seed: u64) -> Result<Self> {
        let mut rng = stream(seed, ids::PROBLEM_DATA);
        let a: Vec<f64> = (0..n * d).map(|_| rng.sample::<f64, _>(StandardNormal) / (d as f64).sqrt()).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        SoftmaxRegression::new(a, b, mu)
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.d..(i + 1) * self.d]
    }

    /// Residuals and softmax weights over the 2n signed residuals.
    fn weights(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let res: Vec<f64> = (0..self.n).map(|i| dot(self.row(i), x) - self.b[i]).collect();
        let signed: Vec<f64> = res.iter().flat_map(|r| [*r, -*r]).collect();
        let m = signed.iter().fold(f64::NEG_INFINITY, |a, v| a.max(*v));
        let e: Vec<f64> = signed.iter().map(|v| ((v - m) / self.mu).exp()).collect();
        let z: f64 = e.iter().sum();
        (m + self.mu * z.ln(), e.into_iter().map(|v| v / z).collect())
    }

    /// Σ_i (π_i⁺ − π_i⁻)·a_i.
    fn combine(&self, w: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.d];
        for i in 0..self.n {
            let c = w[2 * i] - w[2 * i + 1];
            g.iter_mut().zip(self.row(i)).for_each(|(gi, a)| *gi += c * a);
        }
        g
    }
}

impl Problem for SoftmaxRegression {
    fn name(&self) -> String {
        "softmax-linf-regression".into()
    }
    fn dim(&self) -> usize {
        self.d
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.weights(x).0
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.combine(&self.weights(x).1)
    }
    fn max_order(&self) -> usize {
        2
    }
    fn derivative(&self, x: &[f64], u: &[f64], j: usize) -> Result<Vec<f64>> {
        match j {
            1 => Ok(self.gradient(x)),
            2 => {
                let (_, pi) = self.weights(x);
                let bu: Vec<f64> = (0..self.n).flat_map(|i| {
                    let t = dot(self.row(i), u);
                    [t, -t]
                }).collect();
                let mean = dot(&pi, &bu);
                let w: Vec<f64> = pi.iter().zip(&bu).map(|(p, t)| p * (t - mean) / self.mu).collect();
                Ok(self.combine(&w))
            }
            _ => Err(Error::DerivativeOrder { requested: j, available: 2 }),
        }
    }
    fn holder(&self, p: f64, q: usize) -> Option<HolderData> {
        if q != 1 {
            return None;
        }
        let amax = (0..self.n).map(|i| dual_pnorm(self.row(i), p)).fold(0.0_f64, f64::max);
        Some(HolderData::analytic(1, amax * amax / self.mu, 1.0))
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(self.x_star.clone())
    }
    fn optimal_value(&self) -> Option<f64> {
        Some(self.f_star)
    }
}

/// Σ huber_δ(x_i − c_i), with huber_δ(t) = t²/(2δ) for |t| ≤ δ and |t| − δ/2 beyond.
#[derive(Clone, Debug)]
pub struct Huber {
    pub delta: f64,
    pub center: Vec<f64>,
}

impl Huber {
    pub fn new(delta: f64, center: Vec<f64>) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidParameter(format!("Huber width must be positive, got {delta}")));
        }
        Ok(Huber { delta, center })
    }
}

impl Problem for Huber {
    fn name(&self) -> String {
        "huber".into()
    }
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.center)
            .map(|(a, c)| {
                let t = (a - c).abs();
                if t <= self.delta { t * t / (2.0 * self.delta) } else { t - self.delta / 2.0 }
            })
            .sum()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.center).map(|(a, c)| ((a - c) / self.delta).clamp(-1.0, 1.0)).collect()
    }
    fn max_order(&self) -> usize {
        2
    }
    fn derivative(&self, x: &[f64], u: &[f64], j: usize) -> Result<Vec<f64>> {
        match j {
            1 => Ok(self.gradient(x)),
            2 => Ok(x
                .iter()
                .zip(&self.center)
                .zip(u)
                .map(|((a, c), ui)| if (a - c).abs() <= self.delta { ui / self.delta } else { 0.0 })
                .collect()),
            _ => Err(Error::DerivativeOrder { requested: j, available: 2 }),
        }
    }
    fn holder(&self, p: f64, q: usize) -> Option<HolderData> {
        (q == 1).then(|| HolderData::analytic(1, diagonal_operator_norm(&vec![1.0 / self.delta; self.dim()], p), 1.0))
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(self.center.clone())
    }
    fn optimal_value(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// f(x) = ⟨c, x⟩ restricted to `B_p(center, radius)`; the minimizer is the
/// boundary point `center − radius·dual_map(c)`.
#[derive(Clone, Debug)]
pub struct LinearOverBall {
    pub c: Vec<f64>,
    pub center: Vec<f64>,
    pub radius: f64,
    pub p: f64,
}

impl Problem for LinearOverBall {
    fn name(&self) -> String {
        "linear".into()
    }
    fn dim(&self) -> usize {
        self.c.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        dot(&self.c, x)
    }
    fn gradient(&self, _x: &[f64]) -> Vec<f64> {
        self.c.clone()
    }
    fn max_order(&self) -> usize {
        3
    }
    fn derivative(&self, x: &[f64], u: &[f64], j: usize) -> Result<Vec<f64>> {
        match j {
            1 => Ok(self.gradient(x)),
            2 | 3 => Ok(vec![0.0; u.len()]),
            _ => Err(Error::DerivativeOrder { requested: j, available: 3 }),
        }
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        let w = dual_map(&self.c, self.p);
        Some(self.center.iter().zip(&w).map(|(a, b)| a - self.radius * b).collect())
    }
    fn optimal_value(&self) -> Option<f64> {
        self.minimizer().map(|x| self.value(&x))
    }
}

/// Plain-data description of a benchmark objective.
#[derive(Clone, Debug, PartialEq)]
pub enum ProblemSpec {
    /// Diagonal spectrum i^{−decay}, minimizer entries ±i^{−coef_decay}.
    Quadratic { dim: usize, decay: f64, coef_decay: f64, seed: u64 },
    PthPower { dim: usize, s: f64, scale: f64, seed: u64 },
    Logistic { rows: usize, dim: usize, scale: f64, flip: f64, seed: u64 },
    SoftmaxRegression { rows: usize, dim: usize, mu: f64, seed: u64 },
    Huber { dim: usize, delta: f64, seed: u64 },
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        match self {
            ProblemSpec::Quadratic { dim, .. }
            | ProblemSpec::PthPower { dim, .. }
            | ProblemSpec::Logistic { dim, .. }
            | ProblemSpec::SoftmaxRegression { dim, .. }
            | ProblemSpec::Huber { dim, .. } => *dim,
        }
    }
}

fn gaussian_center(d: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, ids::PROBLEM_DATA);
    (0..d).map(|_| StandardNormal.sample(&mut rng)).collect()
}

pub fn make_problem(spec: &ProblemSpec) -> Result<Box<dyn Problem>> {
    if spec.dim() == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    Ok(match spec {
        ProblemSpec::Quadratic { dim, decay, coef_decay, seed } => {
            Box::new(Quadratic::ill_conditioned(*dim, *decay, *coef_decay, *seed)?)
        }
        ProblemSpec::PthPower { dim, s, scale, seed } => Box::new(PthPower::new(*s, *scale, gaussian_center(*dim, *seed))?),
        ProblemSpec::Logistic { rows, dim, scale, flip, seed } => Box::new(Logistic::random(*rows, *dim, *scale, *flip, *seed)?),
        ProblemSpec::SoftmaxRegression { rows, dim, mu, seed } => Box::new(SoftmaxRegression::random(*rows, *dim, *mu, *seed)?),
        ProblemSpec::Huber { dim, delta, seed } => Box::new(Huber::new(*delta, gaussian_center(*dim, *seed))?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_second_order_model_is_exact() {
        let q = Quadratic::diagonal(vec![1.0, 2.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(q.holder(2.0, 2).unwrap().l, 0.0);
    }

    #[test]
    fn diagonal_norm_matches_euclidean_case() {
        assert_eq!(diagonal_operator_norm(&[1.0, 3.0, 2.0], 2.0), 3.0);
        // p = 4: ‖h‖_2.
        assert!((diagonal_operator_norm(&[3.0, 4.0], 4.0) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn pth_power_third_order_constant() {
        // s = 4, p = 2: ∇³f(x) − ∇³f(y) = 6c·diag(x − y), operator norm 6c‖x − y‖₂ at worst.
        let f = PthPower::new(4.0, 0.5, vec![0.0; 5]).unwrap();
        let h = f.holder(2.0, 3).unwrap();
        assert!((h.l - 3.0).abs() < 1e-15 && h.nu == 1.0);
    }
}
