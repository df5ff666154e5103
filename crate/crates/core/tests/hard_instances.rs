use ppm_core::hard_instances::{
    gap_experiment, gap_threshold, hadamard_exponent, hadamard_matrix, locality_violations, sample_lp_ball, smax,
    smax_grad, smax_partial, smax_partial_grad, smooth_estimate, subgradient_method, Basis, HardInstance, Reveal,
    ResistingProblem,
};
use ppm_core::pnorm_core::{dual_exponent, pnorm};
use ppm_core::seed::stream;
use ppm_core::vector::{dot, sub};
use proptest::prelude::*;
use proptest::test_runner::Config;
use rand::Rng;

fn config(cases: u32) -> Config {
    Config { cases, failure_persistence: None, ..Config::default() }
}

const PS: [f64; 6] = [1.0, 1.5, 2.0, 3.0, 4.0, f64::INFINITY];

/// Unshifted `μ ln Σ exp(x_i/μ)`; accurate for the moderate inputs used here.
fn naive_smax(x: &[f64], mu: f64) -> f64 {
    mu * x.iter().map(|v| (v / mu).exp()).sum::<f64>().ln()
}

fn sum_abs(v: &[f64]) -> f64 {
    v.iter().map(|a| a.abs()).sum()
}

#[test]
fn softmax_examples() {
    let mu = 0.25;
    for d in [1, 2, 7, 64] {
        assert!((smax(&vec![0.0; d], mu) - mu * (d as f64).ln()).abs() < 1e-15);
    }
    let x = [0.3, -1.0, 2.5, 0.0];
    assert_eq!(smax_partial(&x, 4, mu), smax(&x, mu));
    assert_eq!(smax_partial(&x, 1, mu), 0.3);
    assert!((smax(&x, mu) - naive_smax(&x, mu)).abs() < 1e-12);
    // Large entries stay finite.
    assert!((smax(&[1e4, 1e4], 0.01) - (1e4 + 0.01 * 2f64.ln())).abs() < 1e-10);
    let g = smax_partial_grad(&x, 2, mu);
    assert_eq!((g[2], g[3]), (0.0, 0.0));
    assert!((g[0] + g[1] - 1.0).abs() < 1e-15);
}

#[test]
fn hadamard_first_order_matrix() {
    let h = hadamard_matrix(1, 2.0).unwrap();
    let r = 0.5f64.sqrt();
    for (a, b) in h.iter().zip([r, r, r, -r]) {
        assert!((a - b).abs() < 1e-15);
    }
    assert!(hadamard_matrix(2, 3.0).is_err());
    // 2^{s−1} < 8k^{3/2} ≤ 2^s.
    for k in 3..200 {
        let s = hadamard_exponent(k);
        let target = 8.0 * (k as f64).powf(1.5);
        assert!(2f64.powi(s as i32 - 1) < target && target <= 2f64.powi(s as i32), "k = {k}");
    }
}

#[test]
fn hadamard_columns_are_orthonormal() {
    let mut rng = stream(5, 0);
    for s in 1..=12u32 {
        let d = 1usize << s;
        let m = hadamard_matrix(s, 2.0).unwrap();
        let col = |j: usize| -> Vec<f64> { (0..d).map(|i| m[i * d + j]).collect() };
        // Every pair for small orders, a random sample of pairs beyond.
        let pairs: Vec<(usize, usize)> = if s <= 7 {
            (0..d).flat_map(|i| (i..d).map(move |j| (i, j))).collect()
        } else {
            (0..300).map(|_| (rng.random_range(0..d), rng.random_range(0..d))).collect()
        };
        for (i, j) in pairs {
            let ip = dot(&col(i), &col(j));
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((ip - want).abs() <= 1e-12, "s = {s}, ({i}, {j}): {ip}");
        }
        for j in [0, d / 2, d - 1] {
            let c = col(j);
            assert!((pnorm(&c, f64::INFINITY) - (d as f64).powf(-0.5)).abs() < 1e-15);
        }
    }
}

#[test]
fn scaled_hadamard_columns_have_unit_dual_norm() {
    for p in [1.0, 1.25, 1.5, 2.0] {
        let ps = dual_exponent(p).unwrap();
        let s = 6;
        let d = 1usize << s;
        let m = hadamard_matrix(s, p).unwrap();
        for j in [0, 17, d - 1] {
            let v: Vec<f64> = (0..d).map(|i| m[i * d + j]).collect();
            assert!(pnorm(&v, ps) <= 1.0 + 1e-12, "p = {p}");
            assert!((pnorm(&v, ps) - 1.0).abs() < 1e-12, "p = {p}");
        }
    }
}

#[test]
fn instance_projections_match_the_dense_basis() {
    for p in [1.5, 1.0] {
        let inst = HardInstance::new(3, p, 1).unwrap();
        let Basis::Hadamard { scale } = inst.basis else { panic!("p < 2 uses the Hadamard basis") };
        let d = inst.d;
        assert_eq!(d, 1 << hadamard_exponent(3));
        let m = hadamard_matrix(hadamard_exponent(3), p).unwrap();
        assert!((m[0] - scale / (d as f64).sqrt()).abs() < 1e-15);
        let mut rng = stream(6, 0);
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let proj = inst.projections(&x);
        for j in 0..d {
            let direct: f64 = (0..d).map(|i| m[i * d + j] * x[i]).sum();
            assert!((proj[j] - direct).abs() < 1e-12);
            let v = inst.basis_vector(j);
            assert!(v.iter().enumerate().all(|(i, vi)| (vi - m[i * d + j]).abs() < 1e-15));
        }
    }
}

#[test]
fn parameter_rules_hold_exactly() {
    for k in [3, 4, 8, 16, 32] {
        for p in PS {
            for q in 1..=3 {
                let inst = HardInstance::new(k, p, q).unwrap();
                let (kf, df) = (k as f64, inst.d as f64);
                let m = p.max(2.0);
                assert_eq!(inst.m, m);
                let (d_min, g_max, alpha) = if p.is_infinite() {
                    (8.0 * kf, 1.0 / (4.0 * kf), q as f64 + 1.0)
                } else if p < 2.0 {
                    (8.0 * kf.powf(1.5), 1.0 / (4.0 * kf.powf(1.5)), q as f64 + m / (m + 1.0))
                } else {
                    (8.0 * kf.powf(1.0 + 1.0 / m), 1.0 / (4.0 * kf.powf(1.0 + 1.0 / m)), q as f64 + m / (m + 1.0))
                };
                assert!(df >= d_min && inst.gamma <= g_max, "k = {k}, p = {p}");
                assert_eq!(inst.alpha, alpha);
                assert!((inst.beta - inst.gamma / df.ln()).abs() <= 1e-17);
                assert!((inst.mu - inst.gamma / (4.0 * alpha * df.ln())).abs() <= 1e-17);
                let margin = inst.gamma - (inst.mu * (kf.ln() + alpha * df.ln()) + 2.0 * inst.beta);
                assert!(margin >= 0.0);
                assert!((margin - inst.separation_margin()).abs() < 1e-15);
                if p < 2.0 {
                    assert!(inst.d.is_power_of_two());
                    assert!(((inst.d / 2) as f64) < d_min);
                }
            }
        }
    }
    assert!(HardInstance::new(2, 2.0, 1).is_err());
    assert!(HardInstance::new(4, 2.0, 0).is_err());
    assert!(HardInstance::new(4, 0.5, 1).is_err());
}

#[test]
fn pieces_at_the_origin() {
    for p in [1.5, 2.0, f64::INFINITY] {
        let inst = HardInstance::new(5, p, 2).unwrap();
        let pieces = inst.pieces(&vec![0.0; inst.d]);
        let tail = (inst.d as f64).powf(-inst.alpha);
        for i in 1..=inst.k {
            let consts: Vec<f64> = (1..=i).map(|j| (inst.k - j) as f64 * inst.gamma).collect();
            let want = naive_smax(&consts, inst.mu) + inst.mu * (inst.k + 1 - i) as f64 * tail;
            assert!((pieces[i - 1] - want).abs() < 1e-14, "p = {p}, i = {i}");
            assert_eq!(inst.hard_f_i(i, &vec![0.0; inst.d]), pieces[i - 1]);
        }
        let offsets: Vec<f64> = (1..=inst.k).map(|i| inst.mu * (inst.k + 1 - i) as f64 * tail).collect();
        assert!(offsets.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(inst.hard_h(&vec![0.0; inst.d]), pieces.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    }
}

#[test]
fn resisting_oracle_rules() {
    let mut inst = HardInstance::new(4, 2.0, 1).unwrap();
    let d = inst.d;
    let a = inst.resisting_oracle(&vec![0.0; d]).unwrap();
    assert_eq!(a.reveal, Some(Reveal { t: 0, index: 0, sign: 1 }));
    // A tie between indices 3 and 5 goes to 3; the sign follows the projection.
    let mut x = vec![0.0; d];
    x[3] = -0.5;
    x[5] = 0.5;
    let a = inst.resisting_oracle(&x).unwrap();
    assert_eq!(a.reveal, Some(Reveal { t: 1, index: 3, sign: -1 }));
    // Index 0 is used, so a query concentrated there picks the next largest.
    let mut x = vec![0.0; d];
    x[0] = 2.0;
    x[7] = 0.1;
    assert_eq!(inst.resisting_oracle(&x).unwrap().reveal.unwrap().index, 7);
    inst.resisting_oracle(&vec![0.0; d]).unwrap();
    assert!(inst.frozen());
    let before = inst.reveals().to_vec();
    let a = inst.resisting_oracle(&x).unwrap();
    assert_eq!(a.reveal, None);
    assert_eq!(inst.reveals(), before.as_slice());
    assert_eq!(inst.queries(), 5);
    assert!(inst.resisting_oracle(&[0.0]).is_err());

    let text = inst.transcript();
    assert_eq!(HardInstance::parse_transcript(&text).unwrap(), before);
    assert!(HardInstance::parse_transcript("0 1").is_err());
    assert!(HardInstance::parse_transcript("0 x 1").is_err());
}

#[test]
fn queries_see_nonnegative_last_piece() {
    let mut rng = stream(7, 0);
    for p in [1.5, 2.0, 4.0, f64::INFINITY] {
        let mut inst = HardInstance::new(8, p, 1).unwrap();
        for _ in 0..inst.k {
            let x = sample_lp_ball(p, rng.random_range(0.0..1.0), inst.d, &mut rng);
            let ans = inst.resisting_oracle(&x).unwrap();
            let pieces = inst.pieces(&x);
            let f_k = pieces[inst.k - 1];
            assert!(f_k >= 0.0, "p = {p}");
            assert!(ans.value >= f_k);
            assert_eq!(ans.value, inst.hard_h(&x));
        }
    }
}

#[test]
fn lower_bound_gap_examples() {
    assert_eq!(gap_threshold(8, f64::INFINITY), 1.0 / 16.0);
    assert_eq!(gap_threshold(16, 2.0), 1.0 / 64.0);
    assert_eq!(gap_threshold(16, 1.5), 1.0 / 64.0);
    for (k, p, eps) in [(8, f64::INFINITY, 1.0 / 16.0), (16, 2.0, 1.0 / 64.0), (8, 1.5, gap_threshold(8, 1.5))] {
        let prob = ResistingProblem::new(HardInstance::new(k, p, 1).unwrap());
        let traj = subgradient_method(&prob, p, 1.0 / (k as f64).sqrt(), k);
        let inst = prob.instance();
        assert!(inst.frozen());
        let report = gap_experiment(&inst, &traj).unwrap();
        assert!(report.passed, "k = {k}, p = {p}: {report:?}");
        assert!(report.gap_lower >= eps);
        assert!(report.x_star_norm <= 1.0 + 1e-12);
        if p >= 2.0 && p.is_finite() {
            let bound = -0.25 * (k as f64).powf(-1.0 / p);
            assert!(report.pieces_star.iter().all(|v| *v <= bound), "{:?}", report.pieces_star);
        }
    }
    let fresh = HardInstance::new(4, 2.0, 1).unwrap();
    assert!(gap_experiment(&fresh, &[vec![0.0; fresh.d]]).is_err());
}

#[test]
fn ball_sampler_examples() {
    let mut rng = stream(8, 0);
    let n = 20_000;
    for _ in 0..1000 {
        let w = sample_lp_ball(f64::INFINITY, 0.3, 5, &mut rng);
        assert!(w.iter().all(|v| v.abs() <= 0.3));
    }
    // The volume ratio of the half-radius ball is 2^{−d}.
    let d = 3;
    let mut inside = 0;
    for _ in 0..n {
        let w = sample_lp_ball(2.0, 2.0, d, &mut rng);
        let r = pnorm(&w, 2.0);
        assert!(r <= 2.0);
        inside += usize::from(r <= 1.0);
    }
    let frac = inside as f64 / n as f64;
    let target = 0.5f64.powi(d as i32);
    let ci = 4.0 * (target * (1.0 - target) / n as f64).sqrt();
    assert!((frac - target).abs() <= ci, "{frac} vs {target}");
    // p = 1, d = 2: symmetric around zero.
    let (mut s0, mut s1) = (0.0, 0.0);
    for _ in 0..n {
        let w = sample_lp_ball(1.0, 1.0, 2, &mut rng);
        assert!(pnorm(&w, 1.0) <= 1.0);
        s0 += w[0];
        s1 += w[1];
    }
    // Each coordinate has variance below 1/6 on the unit ℓ1 ball.
    let ci = 4.0 * (1.0 / (6.0 * n as f64)).sqrt();
    assert!((s0 / n as f64).abs() <= ci && (s1 / n as f64).abs() <= ci);
}

#[test]
fn smoothing_estimate_properties() {
    let mut rng = stream(9, 0);
    let n = 20_000;
    let beta = 0.2;
    assert!(smooth_estimate(|x: &[f64]| x[0], 2.0, &[0.0], beta, 1, 999, &mut rng).is_err());
    for p in [1.5, 2.0, f64::INFINITY] {
        for q in 1..=3 {
            let x = [0.3, -0.2, 0.1];
            let lin = |y: &[f64]| dot(&[1.0, 2.0, -1.0], y);
            let s = smooth_estimate(lin, p, &x, beta, q, n, &mut rng).unwrap();
            assert_eq!(s.radii.len(), q);
            assert!((s.radii[0] - beta / 2.0).abs() < 1e-16);
            assert!((s.estimate - lin(&x)).abs() <= s.half_width.max(1e-12), "p = {p}, q = {q}");
            // ‖·‖_p is 1-Lipschitz in its own norm.
            let f = |y: &[f64]| pnorm(y, p);
            let s = smooth_estimate(f, p, &x, beta, q, n, &mut rng).unwrap();
            assert!((s.estimate - f(&x)).abs() <= beta + s.half_width);
            assert!(s.estimate >= f(&x) - s.half_width, "smoothing a convex function lifts it");
            let y = [-0.4, 0.5, 0.0];
            let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
            let sy = smooth_estimate(f, p, &y, beta, q, n, &mut rng).unwrap();
            let sm = smooth_estimate(f, p, &mid, beta, q, n, &mut rng).unwrap();
            let slack = s.half_width + sy.half_width + sm.half_width;
            assert!(sm.estimate <= 0.5 * (s.estimate + sy.estimate) + slack);
        }
    }
}

/// Gradient of ‖·‖_p away from the coordinate hyperplanes.
fn pnorm_grad(x: &[f64], p: f64) -> Vec<f64> {
    let n = pnorm(x, p);
    x.iter().map(|v| v.signum() * (v.abs() / n).powf(p - 1.0)).collect()
}

#[test]
fn single_stage_smoothing_is_smooth() {
    // Stochastic: ∇S_β[f](x) = E ∇f(x + w) with w uniform on the β-ball,
    // estimated with common draws at both points.
    let mut rng = stream(10, 0);
    let n = 20_000;
    for (p, d) in [(2.0, 4), (1.5, 3), (3.0, 8)] {
        let beta = 0.3;
        let ps = dual_exponent(p).unwrap();
        let bound = d as f64 / beta;
        for _ in 0..5 {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-0.5..0.5)).collect();
            let dx: Vec<f64> = (0..d).map(|_| rng.random_range(-0.05..0.05)).collect();
            let y: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
            let mut diff = vec![0.0; d];
            for _ in 0..n {
                let w = sample_lp_ball(p, beta, d, &mut rng);
                let gx = pnorm_grad(&x.iter().zip(&w).map(|(a, b)| a + b).collect::<Vec<_>>(), p);
                let gy = pnorm_grad(&y.iter().zip(&w).map(|(a, b)| a + b).collect::<Vec<_>>(), p);
                diff.iter_mut().zip(sub(&gx, &gy)).for_each(|(a, b)| *a += b / n as f64);
            }
            let ratio = pnorm(&diff, ps) / pnorm(&dx, p);
            // 25% slack covers the Monte-Carlo error of the difference.
            assert!(ratio <= 1.25 * bound, "p = {p}: {ratio} > {bound}");
        }
    }
}

proptest! {
    #![proptest_config(config(1000))]

    #[test]
    fn softmax_smoothing_properties(
        x in prop::collection::vec(-3.0f64..3.0, 1..12),
        dy in prop::collection::vec(-3.0f64..3.0, 12),
        mu in 0.05f64..2.0,
        cut in 0usize..12,
    ) {
        let d = x.len();
        let y: Vec<f64> = x.iter().zip(&dy).map(|(a, b)| a + b).collect();
        // 1-Lipschitz in ℓ_∞.
        prop_assert!((smax(&x, mu) - smax(&y, mu)).abs() <= pnorm(&sub(&x, &y), f64::INFINITY) * (1.0 + 1e-12));
        prop_assert!((smax(&x, mu) - naive_smax(&x, mu)).abs() <= 1e-12 * (1.0 + smax(&x, mu).abs()));
        let g = smax_grad(&x, mu);
        prop_assert!(g.iter().all(|v| *v >= 0.0));
        prop_assert!((g.iter().sum::<f64>() - 1.0).abs() <= d as f64 * f64::EPSILON);
        let n = 1 + cut % d;
        let delta = (smax(&x, mu) - smax_partial(&x, n, mu)) / mu;
        if delta < 1.0 {
            let gap = sum_abs(&sub(&g, &smax_partial_grad(&x, n, mu)));
            prop_assert!(gap <= 4.0 * delta + 1e-12, "{gap} > 4·{delta}");
        }
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn unrevealed_signs_never_reach_local_answers(
        p in prop::sample::select(vec![1.5, 2.0, 4.0, f64::INFINITY]),
        q in 1usize..=3,
        seed in 0u64..1000,
    ) {
        let mut rng = stream(seed, 0);
        let mut inst = HardInstance::new(6, p, q).unwrap();
        for _ in 0..inst.k {
            let x = sample_lp_ball(p, rng.random_range(0.0..1.0), inst.d, &mut rng);
            inst.resisting_oracle(&x).unwrap();
            prop_assert_eq!(locality_violations(&inst, &x, 4, &mut rng).unwrap(), 0);
        }
    }
}
