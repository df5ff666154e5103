//! Small numerical kernels: limited-memory BFGS with Armijo backtracking and
//! bisection on monotone scalar maps.

use std::collections::VecDeque;

use crate::vector::{axpy, dot};

#[derive(Clone, Debug)]
pub struct MinimizeOptions {
    /// Stop once the caller's gradient norm falls below this.
    pub grad_tol: f64,
    pub max_iter: usize,
    pub memory: usize,
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions { grad_tol: 1e-10, max_iter: 5_000, memory: 12, armijo: 1e-4, max_backtracks: 60 }
    }
}

#[derive(Clone, Debug)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimize a smooth function given as `x ↦ (value, gradient)`, stopping on
/// `norm(gradient) <= grad_tol`.
pub fn minimize<F, N>(obj: &F, x0: &[f64], norm: &N, opts: &MinimizeOptions) -> MinimizeResult
where
    F: Fn(&[f64]) -> (f64, Vec<f64>) + ?Sized,
    N: Fn(&[f64]) -> f64 + ?Sized,
{
    let tol = opts.grad_tol;
    minimize_until(obj, x0, &|_: &[f64], g: &[f64]| norm(g) <= tol, norm, opts)
}

/// L-BFGS with a caller-supplied stopping rule `stop(x, grad)`.
///
/// `norm` is only used for reporting. Returns with `converged = false` when
/// the iteration cap is hit or the line search can no longer make progress.
pub fn minimize_until<F, S, N>(obj: &F, x0: &[f64], stop: &S, norm: &N, opts: &MinimizeOptions) -> MinimizeResult
where
    F: Fn(&[f64]) -> (f64, Vec<f64>) + ?Sized,
    S: Fn(&[f64], &[f64]) -> bool + ?Sized,
    N: Fn(&[f64]) -> f64 + ?Sized,
{
    let mut x = x0.to_vec();
    let (mut fx, mut g) = obj(&x);
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut iterations = 0;
    let mut stalled = 0;
    while iterations < opts.max_iter {
        if stop(&x, &g) {
            return MinimizeResult { grad_norm: norm(&g), x, value: fx, grad: g, iterations, converged: true };
        }
        iterations += 1;
        let mut d = two_loop(&g, &hist);
        let mut slope = dot(&d, &g);
        if !(slope < 0.0) || !slope.is_finite() {
            hist.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        // First step of a steepest-descent direction is scaled to unit length.
        let mut t = if hist.is_empty() { 1.0 / dot(&d, &d).sqrt().max(1e-300) } else { 1.0 };
        t = t.min(1.0e12);
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let mut xn = x.clone();
            axpy(&mut xn, t, &d);
            let (fn_, gn) = obj(&xn);
            // Near the optimum value differences drown in roundoff; then a step
            // that keeps the value within roundoff and shrinks the gradient is taken.
            let roundoff_ok = fn_ <= fx + 1e-14 * fx.abs() && dot(&gn, &gn) < dot(&g, &g);
            if fn_.is_finite() && (fn_ <= fx + opts.armijo * t * slope || roundoff_ok) {
                accepted = Some((xn, fn_, gn));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            if hist.is_empty() {
                break;
            }
            hist.clear();
            stalled += 1;
            if stalled > 3 {
                break;
            }
            continue;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 * dot(&s, &s).max(1e-300) && sy.is_finite() {
            if hist.len() == opts.memory {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
        if fn_ >= fx && s_is_zero(&xn, &x) {
            stalled += 1;
            if stalled > 3 {
                x = xn;
                fx = fn_;
                g = gn;
                break;
            }
        } else {
            stalled = 0;
        }
        x = xn;
        fx = fn_;
        g = gn;
    }
    let converged = stop(&x, &g);
    MinimizeResult { grad_norm: norm(&g), x, value: fx, grad: g, iterations, converged }
}

fn s_is_zero(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(u, v)| u == v)
}

fn two_loop(g: &[f64], hist: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(hist.len());
    for (s, y, rho) in hist.iter().rev() {
        let a = rho * dot(s, &q);
        axpy(&mut q, -a, y);
        alphas.push(a);
    }
    if let Some((s, y, _)) = hist.back() {
        let gamma = dot(s, y) / dot(y, y);
        for v in q.iter_mut() {
            *v *= gamma;
        }
    }
    for ((s, y, rho), a) in hist.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        axpy(&mut q, a - b, s);
    }
    q.iter().map(|v| -v).collect()
}

/// Root of a nondecreasing `h` on `[lo, hi]` with `h(lo) <= 0 <= h(hi)`.
pub fn bisect_increasing<H: Fn(f64) -> f64>(h: H, mut lo: f64, mut hi: f64, max_iter: usize) -> f64 {
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lbfgs_on_rosenbrock() {
        let obj = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
            (f, g)
        };
        let norm = |g: &[f64]| dot(g, g).sqrt();
        let res = minimize(&obj, &[-1.2, 1.0], &norm, &MinimizeOptions::default());
        assert!(res.converged);
        assert!((res.x[0] - 1.0).abs() < 1e-8 && (res.x[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn bisection_cube_root() {
        let r = bisect_increasing(|a| a * a * a - 2.0, 0.0, 2.0, 200);
        assert!((r - 2f64.cbrt()).abs() < 1e-15);
    }
}
