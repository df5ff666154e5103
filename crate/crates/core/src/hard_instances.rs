//! Lower-bound laboratory: softmax primitives, the max-of-partial-softmax hard
//! family with a lazily resisting sign oracle, Hadamard bases, randomized
//! smoothing by Monte Carlo, and the optimality-gap experiment.

use std::sync::Mutex;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};

use crate::error::{Error, Result};
use crate::pnorm_core::{dual_exponent, pnorm};
use crate::prox_oracle::Problem;

/// `μ ln Σ exp(x_i/μ)`, max-shifted.
pub fn smax(x: &[f64], mu: f64) -> f64 {
    smax_partial(x, x.len(), mu)
}

/// Softmax over the first n entries.
pub fn smax_partial(x: &[f64], n: usize, mu: f64) -> f64 {
    let head = &x[..n];
    let m = head.iter().fold(f64::NEG_INFINITY, |a, v| a.max(*v));
    let s: f64 = head.iter().map(|v| ((v - m) / mu).exp()).sum();
    m + mu * s.ln()
}

/// Gradient of `smax_partial(·, n, μ)`: softmax weights on the first n
/// entries, zero elsewhere.
pub fn smax_partial_grad(x: &[f64], n: usize, mu: f64) -> Vec<f64> {
    let head = &x[..n];
    let m = head.iter().fold(f64::NEG_INFINITY, |a, v| a.max(*v));
    let mut g: Vec<f64> = head.iter().map(|v| ((v - m) / mu).exp()).collect();
    let s: f64 = g.iter().sum();
    g.iter_mut().for_each(|v| *v /= s);
    g.resize(x.len(), 0.0);
    g
}

pub fn smax_grad(x: &[f64], mu: f64) -> Vec<f64> {
    smax_partial_grad(x, x.len(), mu)
}

/// In-place unnormalized fast Walsh-Hadamard transform; `x.len()` must be a
/// power of two.
fn walsh_hadamard(x: &mut [f64]) {
    let n = x.len();
    let mut h = 1;
    while h < n {
        for i in (0..n).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (x[j], x[j + h]);
                x[j] = a + b;
                x[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// The exponent s with `2^{s−1} < 8k^{3/2} ≤ 2^s`.
pub fn hadamard_exponent(k: usize) -> u32 {
    let target = 8.0 * (k as f64).powf(1.5);
    let mut s = 0;
    while ((1u64 << s) as f64) < target {
        s += 1;
    }
    s
}

/// Columns `v_j = d^{1/2 − 1/p*}ê_j` of the normalized Sylvester-Hadamard
/// matrix of order `d = 2^s`, returned row-major (entry `[i*d + j]` is the
/// i-th coordinate of v_j).
pub fn hadamard_basis(k: usize, p: f64) -> Result<Vec<f64>> {
    let s = hadamard_exponent(k);
    hadamard_matrix(s, p)
}

pub fn hadamard_matrix(s: u32, p: f64) -> Result<Vec<f64>> {
    let d = 1usize << s;
    let scale = hadamard_scale(d, p)?;
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            let sign = if (i & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            m[i * d + j] = sign * scale / (d as f64).sqrt();
        }
    }
    Ok(m)
}

fn hadamard_scale(d: usize, p: f64) -> Result<f64> {
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::HardInstance(format!("the Hadamard basis is used for p ∈ [1, 2], got {p}")));
    }
    let ps = dual_exponent(p)?;
    Ok((d as f64).powf(0.5 - 1.0 / ps))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Basis {
    Canonical,
    /// Scaled Hadamard columns; the field is `d^{1/2 − 1/p*}`.
    Hadamard { scale: f64 },
}

/// One revealed slot: query number, basis index, and sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Reveal {
    pub t: usize,
    pub index: usize,
    pub sign: i8,
}

/// The hard function family for a query budget k.
#[derive(Clone, Debug)]
pub struct HardInstance {
    pub k: usize,
    pub p: f64,
    pub m: f64,
    pub q: usize,
    pub d: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub basis: Basis,
    reveals: Vec<Reveal>,
    used: Vec<bool>,
    /// Signs for unrevealed slots; +1 unless overridden by a locality probe.
    pending_signs: Vec<f64>,
    queries: usize,
}

impl HardInstance {
    /// Smallest admissible dimension and largest admissible γ.
    pub fn new(k: usize, p: f64, q: usize) -> Result<Self> {
        if k < 3 {
            return Err(Error::HardInstance(format!("need k ≥ 3 so that ln k ≥ 1, got {k}")));
        }
        if q == 0 {
            return Err(Error::HardInstance("derivative order q must be at least 1".into()));
        }
        if !(p >= 1.0) {
            return Err(Error::HardInstance(format!("need p ≥ 1, got {p}")));
        }
        let kf = k as f64;
        let m = p.max(2.0);
        let (d, gamma, alpha, basis) = if p.is_infinite() {
            (8 * k, 1.0 / (4.0 * kf), q as f64 + 1.0, Basis::Canonical)
        } else if p < 2.0 {
            let d = 1usize << hadamard_exponent(k);
            let scale = hadamard_scale(d, p)?;
            (d, 1.0 / (4.0 * kf.powf(1.0 + 1.0 / m)), q as f64 + m / (m + 1.0), Basis::Hadamard { scale })
        } else {
            let d = (8.0 * kf.powf(1.0 + 1.0 / m)).ceil() as usize;
            (d, 1.0 / (4.0 * kf.powf(1.0 + 1.0 / m)), q as f64 + m / (m + 1.0), Basis::Canonical)
        };
        let ln_d = (d as f64).ln();
        let inst = HardInstance {
            k,
            p,
            m,
            q,
            d,
            gamma,
            alpha,
            beta: gamma / ln_d,
            mu: gamma / (4.0 * alpha * ln_d),
            basis,
            reveals: Vec::with_capacity(k),
            used: vec![false; d],
            pending_signs: vec![1.0; k],
            queries: 0,
        };
        inst.check_parameters()?;
        Ok(inst)
    }

    /// `μ(ln k + α ln d) + 2β` against γ, plus the dimension and γ rules.
    pub fn separation_margin(&self) -> f64 {
        let (kf, df) = (self.k as f64, self.d as f64);
        self.gamma - (self.mu * (kf.ln() + self.alpha * df.ln()) + 2.0 * self.beta)
    }

    fn check_parameters(&self) -> Result<()> {
        let kf = self.k as f64;
        let (d_min, g_max) = if self.p.is_infinite() {
            (8.0 * kf, 1.0 / (4.0 * kf))
        } else if self.p < 2.0 {
            (8.0 * kf.powf(1.5), 1.0 / (4.0 * kf.powf(1.5)))
        } else {
            (8.0 * kf.powf(1.0 + 1.0 / self.m), 1.0 / (4.0 * kf.powf(1.0 + 1.0 / self.m)))
        };
        if (self.d as f64) < d_min || self.gamma > g_max {
            return Err(Error::HardInstance(format!("dimension {} or γ {} violates the parameter rules", self.d, self.gamma)));
        }
        if self.separation_margin() < 0.0 {
            return Err(Error::HardInstance(format!("separation condition fails by {}", -self.separation_margin())));
        }
        Ok(())
    }

    pub fn reveals(&self) -> &[Reveal] {
        &self.reveals
    }

    pub fn queries(&self) -> usize {
        self.queries
    }

    pub fn frozen(&self) -> bool {
        self.reveals.len() == self.k
    }

    /// ⟨v_i, x⟩ for every basis vector.
    pub fn projections(&self, x: &[f64]) -> Vec<f64> {
        match self.basis {
            Basis::Canonical => x.to_vec(),
            Basis::Hadamard { scale } => {
                let mut y = x.to_vec();
                walsh_hadamard(&mut y);
                let c = scale / (self.d as f64).sqrt();
                y.iter_mut().for_each(|v| *v *= c);
                y
            }
        }
    }

    /// Basis vector v_i as a dense vector.
    pub fn basis_vector(&self, i: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.d];
        e[i] = 1.0;
        // Both bases are symmetric, so v_i is the i-th row of the transform.
        self.projections(&e)
    }

    /// (basis index, sign) for each of the k slots. Unrevealed slots take the
    /// lowest unused indices in order.
    pub fn slot_bindings(&self) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = self.reveals.iter().map(|r| (r.index, r.sign as f64)).collect();
        let mut free = (0..self.d).filter(|i| !self.used[*i]);
        for j in self.reveals.len()..self.k {
            let idx = free.next().expect("d ≥ k");
            out.push((idx, self.pending_signs[j]));
        }
        out
    }

    /// Arguments `ξ_j⟨v_j, x⟩ + (k − j)γ` of the softmax, one per slot.
    pub fn slot_values(&self, x: &[f64]) -> Vec<f64> {
        let proj = self.projections(x);
        self.slot_bindings()
            .iter()
            .enumerate()
            .map(|(j, (idx, s))| s * proj[*idx] + (self.k - 1 - j) as f64 * self.gamma)
            .collect()
    }

    /// f_1(x), …, f_k(x).
    pub fn pieces(&self, x: &[f64]) -> Vec<f64> {
        let vals = self.slot_values(x);
        let tail = (self.d as f64).powf(-self.alpha);
        (1..=self.k).map(|i| smax_partial(&vals, i, self.mu) + self.mu * (self.k + 1 - i) as f64 * tail).collect()
    }

    pub fn hard_f_i(&self, i: usize, x: &[f64]) -> f64 {
        self.pieces(x)[i - 1]
    }

    pub fn hard_h(&self, x: &[f64]) -> f64 {
        self.pieces(x).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// A subgradient of h: the gradient of the lowest-index active piece.
    pub fn hard_subgradient(&self, x: &[f64]) -> Vec<f64> {
        let pieces = self.pieces(x);
        let h = pieces.iter().fold(f64::NEG_INFINITY, |a, v| a.max(*v));
        let i = pieces.iter().position(|v| *v == h).expect("k ≥ 1") + 1;
        let w = smax_partial_grad(&self.slot_values(x), i, self.mu);
        let mut g = vec![0.0; self.d];
        for ((idx, s), wj) in self.slot_bindings().into_iter().zip(w) {
            if wj != 0.0 {
                let v = self.basis_vector(idx);
                g.iter_mut().zip(&v).for_each(|(gi, vi)| *gi += s * wj * vi);
            }
        }
        g
    }

    /// A copy with the sign of unrevealed slot j set to `sign`.
    pub fn with_pending_sign(&self, slot: usize, sign: f64) -> Result<Self> {
        if slot < self.reveals.len() || slot >= self.k {
            return Err(Error::HardInstance(format!("slot {slot} is not an unrevealed slot")));
        }
        let mut c = self.clone();
        c.pending_signs[slot] = sign;
        Ok(c)
    }

    /// Answer one query, revealing a slot while the budget lasts.
    pub fn resisting_oracle(&mut self, x: &[f64]) -> Result<LocalAnswer> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: x.len() });
        }
        let t = self.queries;
        self.queries += 1;
        let reveal = if self.frozen() {
            None
        } else {
            let proj = self.projections(x);
            // Lowest index among the maximizers of |⟨v_i, x⟩| over unused i.
            let mut best: Option<(usize, f64)> = None;
            for (i, v) in proj.iter().enumerate() {
                if self.used[i] {
                    continue;
                }
                if best.is_none_or(|(_, b)| v.abs() > b) {
                    best = Some((i, v.abs()));
                }
            }
            let (index, _) = best.expect("d > k");
            let sign = if proj[index] >= 0.0 { 1 } else { -1 };
            let r = Reveal { t, index, sign };
            self.used[index] = true;
            self.reveals.push(r);
            Some(r)
        };
        Ok(LocalAnswer { t, reveal, value: self.hard_h(x), subgradient: self.hard_subgradient(x) })
    }

    /// Plain-text transcript, one line `t i_t xi_t` per reveal.
    pub fn transcript(&self) -> String {
        self.reveals.iter().map(|r| format!("{} {} {}\n", r.t, r.index, r.sign)).collect()
    }

    pub fn parse_transcript(text: &str) -> Result<Vec<Reveal>> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let f: Vec<&str> = l.split_whitespace().collect();
                let bad = || Error::Io(format!("bad transcript line {l:?}"));
                if f.len() != 3 {
                    return Err(bad());
                }
                Ok(Reveal {
                    t: f[0].parse().map_err(|_| bad())?,
                    index: f[1].parse().map_err(|_| bad())?,
                    sign: f[2].parse().map_err(|_| bad())?,
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalAnswer {
    pub t: usize,
    pub reveal: Option<Reveal>,
    pub value: f64,
    pub subgradient: Vec<f64>,
}

/// The hard function behind a resisting oracle, seen as a [`Problem`].
///
/// Every evaluation at a point different from the previous one counts as a
/// query. Query points and answers are recorded for replay.
pub struct ResistingProblem {
    state: Mutex<ResistingState>,
    d: usize,
}

struct ResistingState {
    inst: HardInstance,
    last: Option<(Vec<f64>, LocalAnswer)>,
    points: Vec<Vec<f64>>,
    answers: Vec<LocalAnswer>,
}

impl ResistingProblem {
    pub fn new(inst: HardInstance) -> Self {
        let d = inst.d;
        ResistingProblem { state: Mutex::new(ResistingState { inst, last: None, points: Vec::new(), answers: Vec::new() }), d }
    }

    fn answer(&self, x: &[f64]) -> LocalAnswer {
        let mut st = self.state.lock().expect("resisting oracle lock");
        if let Some((p, a)) = &st.last {
            if p.as_slice() == x {
                return a.clone();
            }
        }
        let a = st.inst.resisting_oracle(x).expect("dimension checked by caller");
        st.points.push(x.to_vec());
        st.answers.push(a.clone());
        st.last = Some((x.to_vec(), a.clone()));
        a
    }

    pub fn instance(&self) -> HardInstance {
        self.state.lock().expect("resisting oracle lock").inst.clone()
    }

    pub fn query_points(&self) -> Vec<Vec<f64>> {
        self.state.lock().expect("resisting oracle lock").points.clone()
    }

    pub fn answers(&self) -> Vec<LocalAnswer> {
        self.state.lock().expect("resisting oracle lock").answers.clone()
    }
}

impl Problem for ResistingProblem {
    fn name(&self) -> String {
        "hard-instance".into()
    }
    fn dim(&self) -> usize {
        self.d
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.answer(x).value
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.answer(x).subgradient
    }
}

/// Normalized subgradient steps `x ← Π(x − η·w)` with ‖w‖_p = 1 and
/// ⟨g, w⟩ = ‖g‖_*, projected onto the unit p-ball; stops after `queries`
/// oracle calls.
pub fn subgradient_method(f: &dyn Problem, p: f64, step: f64, queries: usize) -> Vec<Vec<f64>> {
    let geometry = crate::pnorm_core::Geometry::new(p).expect("valid p");
    let d = f.dim();
    let zero = vec![0.0; d];
    let mut x = zero.clone();
    let mut traj = Vec::with_capacity(queries);
    for _ in 0..queries {
        traj.push(x.clone());
        let g = f.gradient(&x);
        let w = crate::pnorm_core::dual_map(&g, p);
        let next: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a - step * b).collect();
        x = crate::unaccel_ppm::clamp_to_ball(&geometry, &zero, &next, 1.0);
    }
    traj
}

/// Uniform sample from `B_p(0, radius)` in `R^d`.
pub fn sample_lp_ball<R: Rng + ?Sized>(p: f64, radius: f64, d: usize, rng: &mut R) -> Vec<f64> {
    if p.is_infinite() {
        return (0..d).map(|_| radius * (2.0 * rng.random::<f64>() - 1.0)).collect();
    }
    let gamma = Gamma::new(1.0 / p, 1.0).expect("positive shape");
    let w: Vec<f64> = (0..d)
        .map(|_| {
            let g: f64 = gamma.sample(rng);
            let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
            s * g.powf(1.0 / p)
        })
        .collect();
    let z: f64 = Exp1.sample(rng);
    let denom = (w.iter().map(|v| v.abs().powf(p)).sum::<f64>() + z).powf(1.0 / p);
    w.into_iter().map(|v| radius * v / denom).collect()
}

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.575_829_303_548_900_4;

#[derive(Clone, Debug)]
pub struct SmoothingEstimate {
    pub x: Vec<f64>,
    pub samples: usize,
    pub radii: Vec<f64>,
    pub estimate: f64,
    pub half_width: f64,
}

/// Monte-Carlo estimate of the q-fold composed smoothing of f at x: each
/// sample adds independent ball draws of radii β/2, …, β/2^q.
pub fn smooth_estimate<F, R>(f: F, p: f64, x: &[f64], beta: f64, q: usize, n: usize, rng: &mut R) -> Result<SmoothingEstimate>
where
    F: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    if n < 1000 {
        return Err(Error::InvalidParameter(format!("need at least 10³ samples, got {n}")));
    }
    let radii: Vec<f64> = (1..=q).map(|i| beta / 2f64.powi(i as i32)).collect();
    let d = x.len();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    let mut point = vec![0.0; d];
    for _ in 0..n {
        point.copy_from_slice(x);
        for r in &radii {
            let w = sample_lp_ball(p, *r, d, rng);
            point.iter_mut().zip(&w).for_each(|(a, b)| *a += b);
        }
        let v = f(&point);
        sum += v;
        sum_sq += v * v;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    Ok(SmoothingEstimate { x: x.to_vec(), samples: n, radii, estimate: mean, half_width: Z99 * (var / nf).sqrt() })
}

/// Radius `(1 − 2^{−q})β` of the neighbourhood a local answer covers.
pub fn locality_radius(inst: &HardInstance) -> f64 {
    (1.0 - 0.5f64.powi(inst.q as i32)) * inst.beta
}

/// Count (point, slot) pairs where flipping an unrevealed sign changes h or
/// its subgradient, over x itself and `samples` uniform draws from the
/// locality ball around x. Comparisons are bitwise.
pub fn locality_violations<R: Rng + ?Sized>(inst: &HardInstance, x: &[f64], samples: usize, rng: &mut R) -> Result<usize> {
    if x.len() != inst.d {
        return Err(Error::DimensionMismatch { expected: inst.d, got: x.len() });
    }
    let radius = locality_radius(inst);
    let bindings = inst.slot_bindings();
    let flipped: Vec<HardInstance> =
        (inst.reveals.len()..inst.k).map(|j| inst.with_pending_sign(j, -bindings[j].1)).collect::<Result<_>>()?;
    let mut violations = 0;
    for s in 0..=samples {
        let y: Vec<f64> = if s == 0 {
            x.to_vec()
        } else {
            let w = sample_lp_ball(inst.p, radius, inst.d, rng);
            x.iter().zip(&w).map(|(a, b)| a + b).collect()
        };
        let h = inst.hard_h(&y);
        let g = inst.hard_subgradient(&y);
        for alt in &flipped {
            let same_g = alt.hard_subgradient(&y).iter().zip(&g).all(|(a, b)| a.to_bits() == b.to_bits());
            if alt.hard_h(&y).to_bits() != h.to_bits() || !same_g {
                violations += 1;
            }
        }
    }
    Ok(violations)
}

/// Comparator point for a completed instance.
pub fn gap_comparator(inst: &HardInstance) -> Vec<f64> {
    let kf = inst.k as f64;
    let mut x = vec![0.0; inst.d];
    let slots = inst.slot_bindings();
    match inst.basis {
        Basis::Canonical => {
            let c = if inst.p.is_infinite() { 1.0 } else { kf.powf(-1.0 / inst.p) };
            for (idx, s) in slots {
                x[idx] = -c * s;
            }
        }
        Basis::Hadamard { .. } => {
            // Equal weights: ξ_j⟨v_j, x⟩ is the same for every slot.
            for (idx, s) in slots {
                let v = inst.basis_vector(idx);
                x.iter_mut().zip(&v).for_each(|(a, b)| *a -= s * b);
            }
            let n = pnorm(&x, inst.p);
            x.iter_mut().for_each(|a| *a /= n);
        }
    }
    x
}

#[derive(Clone, Debug)]
pub struct GapReport {
    pub k: usize,
    pub p: f64,
    pub x_star: Vec<f64>,
    pub x_star_norm: f64,
    pub h_out: f64,
    pub f_k_out: f64,
    pub h_star: f64,
    pub pieces_star: Vec<f64>,
    pub beta: f64,
    /// Lower bound `(h(x_out) − 2β) − (h(x*) + 2β)` on the smoothed gap.
    pub gap_lower: f64,
    pub epsilon: f64,
    pub passed: bool,
}

/// `k^{−1/m}/16`, or 1/16 for p = ∞.
pub fn gap_threshold(k: usize, p: f64) -> f64 {
    if p.is_infinite() {
        1.0 / 16.0
    } else {
        (k as f64).powf(-1.0 / p.max(2.0)) / 16.0
    }
}

/// Evaluate the gap at the trajectory's final query point once all k slots
/// are revealed.
pub fn gap_experiment(inst: &HardInstance, trajectory: &[Vec<f64>]) -> Result<GapReport> {
    if !inst.frozen() {
        return Err(Error::HardInstance(format!("only {} of {} slots revealed", inst.reveals().len(), inst.k)));
    }
    let x_out = trajectory.last().ok_or_else(|| Error::HardInstance("empty trajectory".into()))?;
    let x_star = gap_comparator(inst);
    let pieces_out = inst.pieces(x_out);
    let pieces_star = inst.pieces(&x_star);
    let h_out = pieces_out.iter().fold(f64::NEG_INFINITY, |a, v| a.max(*v));
    let h_star = pieces_star.iter().fold(f64::NEG_INFINITY, |a, v| a.max(*v));
    let gap_lower = (h_out - 2.0 * inst.beta) - (h_star + 2.0 * inst.beta);
    let epsilon = gap_threshold(inst.k, inst.p);
    let x_star_norm = pnorm(&x_star, inst.p);
    Ok(GapReport {
        k: inst.k,
        p: inst.p,
        x_star_norm,
        x_star,
        h_out,
        f_k_out: pieces_out[inst.k - 1],
        h_star,
        pieces_star,
        beta: inst.beta,
        gap_lower,
        epsilon,
        passed: gap_lower >= epsilon && x_star_norm <= 1.0 + 1e-12,
    })
}
