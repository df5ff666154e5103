use ppm_core::accel_ppm::{AUDIT_TOL, WITNESS_TOL};
use ppm_core::problems::{LinearOverBall, Logistic, Quadratic};
use ppm_core::prox_oracle::{BallOracle, ExactOracle, HolderData, LambdaMode, TaylorOracle};
use ppm_core::vector::sub;
use ppm_core::{Geometry, Problem, ProxOracle};
use proptest::prelude::*;
use proptest::test_runner::Config;

fn config(cases: u32) -> Config {
    Config { cases, failure_persistence: None, ..Config::default() }
}

fn linear(c: Vec<f64>) -> LinearOverBall {
    let d = c.len();
    LinearOverBall { c, center: vec![0.0; d], radius: 1.0, p: 2.0 }
}

#[test]
fn exact_oracle_examples() {
    let g = Geometry::new(2.0).unwrap();
    let lambda = 0.8;
    let oracle = ExactOracle::new(g, 2.0, LambdaMode::Fixed(lambda)).unwrap();
    let c = vec![0.5, -1.5, 2.0];
    let x = [1.0, 0.0, -1.0];
    let ans = oracle.query(&linear(c.clone()), &x, 1.0).unwrap();
    for i in 0..3 {
        assert!((ans.y[i] - (x[i] - lambda * c[i])).abs() < 1e-9);
        assert_eq!(ans.v[i], c[i]);
        assert!((ans.v_hat[i] - c[i]).abs() < 1e-8);
    }
    assert_eq!(ans.eps, 0.0);
    assert!(ans.audit(&g, AUDIT_TOL, WITNESS_TOL).passed);

    let half_sq = Quadratic::diagonal(vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
    let unit = ExactOracle::new(g, 2.0, LambdaMode::Fixed(1.0)).unwrap();
    let ans = unit.query(&half_sq, &[2.0, 0.0], 1.0).unwrap();
    assert!((ans.y[0] - 1.0).abs() < 1e-9 && ans.y[1].abs() < 1e-9);

    let at_min = unit.query(&half_sq, &[0.0, 0.0], 1.0).unwrap();
    assert!(at_min.at_optimum);
    assert_eq!(at_min.y, vec![0.0, 0.0]);
    assert_eq!(at_min.v_hat, vec![0.0, 0.0]);
    assert!(at_min.audit(&g, AUDIT_TOL, WITNESS_TOL).passed);
}

#[test]
fn follow_guess_mode_uses_the_callers_lambda() {
    let g = Geometry::new(3.0).unwrap();
    let oracle = ExactOracle::new(g, 2.0, LambdaMode::FollowGuess).unwrap();
    assert_eq!(oracle.fixed_lambda(), None);
    let f = Logistic::random(64, 4, 1.0, 0.1, 2).unwrap();
    for guess in [0.1, 1.0, 7.5] {
        let ans = oracle.query(&f, &[1.0, 1.0, -1.0, 0.5], guess).unwrap();
        assert_eq!(ans.lambda, guess);
        assert!(ans.audit(&g, AUDIT_TOL, WITNESS_TOL).passed);
    }
}

#[test]
fn taylor_oracle_first_order_closed_form() {
    let g = Geometry::new(2.0).unwrap();
    let f = Logistic::random(64, 4, 1.0, 0.1, 4).unwrap();
    let (sigma, l) = (0.25, 0.5);
    let oracle = TaylorOracle::new(g, 2.0, HolderData::analytic(1, l, 1.0), sigma).unwrap();
    assert_eq!(oracle.lambda_hat(), sigma / (2.0 * l));
    assert_eq!(oracle.fixed_lambda(), Some(sigma / (2.0 * l)));
    let x = [0.5, -0.5, 1.0, 0.0];
    let ans = oracle.query(&f, &x, 1.0).unwrap();
    let gx = f.gradient(&x);
    for i in 0..4 {
        assert!((ans.y[i] - (x[i] - oracle.lambda_hat() * gx[i])).abs() < 1e-14);
    }
    assert_eq!(ans.lambda, oracle.lambda_hat());
    assert_eq!((ans.eps, ans.sigma_prime), (0.0, 0.0));
}

#[test]
fn taylor_oracle_lambda_is_constant_when_r_matches_the_degree() {
    let f = Logistic::random(64, 4, 1.0, 0.1, 6).unwrap();
    for (p, q) in [(2.0, 2), (3.0, 2), (4.0, 3)] {
        let g = Geometry::new(p).unwrap();
        let holder = f.holder(p, q).unwrap();
        let oracle = TaylorOracle::new(g, holder.degree(), holder, 0.25).unwrap();
        let lambdas: Vec<f64> = [[0.3, 0.1, -0.2, 0.4], [2.0, -1.0, 0.0, 1.0], [-0.5, -0.5, 0.5, 0.5]]
            .iter()
            .map(|x| oracle.query(&f, x, 1.0).unwrap().lambda)
            .collect();
        assert!(lambdas.iter().all(|l| *l == oracle.lambda_hat()), "{lambdas:?}");
    }
}

#[test]
fn stationary_queries_return_the_optimum_sentinel() {
    let g = Geometry::new(2.0).unwrap();
    let f = Quadratic::diagonal(vec![1.0, 3.0], vec![0.25, -0.5]).unwrap();
    let oracle = TaylorOracle::new(g, 2.0, HolderData::analytic(1, 3.0, 1.0), 0.25).unwrap();
    let ans = oracle.query(&f, &[0.25, -0.5], 1.0).unwrap();
    assert!(ans.at_optimum);
    assert!(ans.lambda.is_infinite());
    assert_eq!(ans.y, ans.x);
}

#[test]
fn ball_oracle_examples() {
    let g = Geometry::new(2.0).unwrap();
    let rho = 0.3;
    let oracle = BallOracle::with_prox_bisection(g, 2.0, rho).unwrap();
    let ans = oracle.query(&linear(vec![1.0, 2.0, -2.0]), &[0.0, 1.0, 0.0], 1.0).unwrap();
    assert!(!ans.at_optimum);
    assert!((g.dist(&ans.x, &ans.y) - rho).abs() < 1e-9 * rho);

    let f = Quadratic::diagonal(vec![1.0, 2.0, 0.5], vec![0.1, 0.1, 0.1]).unwrap();
    let near = oracle.query(&f, &[0.2, 0.0, 0.15], 1.0).unwrap();
    assert!(near.at_optimum);
    assert!(g.dist(&near.y, &f.minimizer().unwrap()) < 1e-6);
    assert!(BallOracle::with_prox_bisection(g, 2.0, 0.0).is_err());
}

#[test]
fn ball_oracle_moves_a_full_radius_until_near_the_optimum() {
    let f = Logistic::random(128, 4, 2.0, 0.1, 8).unwrap();
    let x_star = f.minimizer().unwrap();
    for p in [1.5, 2.0, 3.0] {
        let g = Geometry::new(p).unwrap();
        let rho = 0.2;
        let oracle = BallOracle::with_prox_bisection(g, 2.0, rho).unwrap();
        for scale in [0.0, 0.5, 1.0, 2.0, 4.0] {
            let x: Vec<f64> = x_star.iter().enumerate().map(|(i, v)| v + scale * if i % 2 == 0 { 0.3 } else { -0.2 }).collect();
            let ans = oracle.query(&f, &x, 1.0).unwrap();
            if g.dist(&x, &x_star) > rho {
                assert!(!ans.at_optimum);
                assert!(g.dist(&ans.x, &ans.y) >= rho * (1.0 - 1e-9));
                assert!(ans.audit(&g, AUDIT_TOL, WITNESS_TOL).passed);
            } else {
                assert!(ans.at_optimum);
            }
        }
    }
}

#[test]
fn taylor_matches_exact_prox_on_a_quadratic() {
    // The second-order model of a quadratic is exact, so the Taylor answer is
    // an inexact solve of the same proximal problem the exact oracle solves.
    let f = Quadratic::dense(vec![2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 0.5], vec![1.0, 0.0, -1.0]).unwrap();
    for p in [1.5, 2.0, 3.0] {
        let g = Geometry::new(p).unwrap();
        let holder = HolderData::analytic(2, 1.0, 1.0);
        let sigma = 0.25;
        let taylor = TaylorOracle::new(g, holder.degree(), holder, sigma).unwrap();
        let exact = ExactOracle::new(g, holder.degree(), LambdaMode::Fixed(taylor.lambda_hat())).unwrap();
        for x in [[2.0, 2.0, 2.0], [-1.0, 0.5, 3.0], [0.0, -3.0, 0.0]] {
            let t = taylor.query(&f, &x, 1.0).unwrap();
            let e = exact.query(&f, &x, 1.0).unwrap();
            let movement = g.dist(&x, &e.y);
            assert!(g.dist(&t.y, &e.y) <= sigma * movement, "p = {p}: {} vs movement {movement}", g.dist(&t.y, &e.y));
        }
    }
}

proptest! {
    #![proptest_config(config(40))]

    #[test]
    fn every_oracle_answer_passes_its_audit(
        p in prop::sample::select(vec![1.5, 2.0, 3.0, 4.0]),
        q in 1usize..=2,
        seed in 0u64..500,
        x in prop::collection::vec(-3.0f64..3.0, 4),
    ) {
        let f = Logistic::random(128, 4, 1.0, 0.1, seed).unwrap();
        let g = Geometry::new(p).unwrap();
        let holder = f.holder(p, q).unwrap();
        let m = g.m();
        for r in [holder.degree(), m] {
            let taylor = TaylorOracle::new(g, r, holder, 0.25).unwrap();
            let ans = taylor.query(&f, &x, 1.0).unwrap();
            let audit = ans.audit(&g, AUDIT_TOL, WITNESS_TOL);
            prop_assert!(audit.passed, "taylor r = {r}: {audit:?}");
        }
        let exact = ExactOracle::new(g, m, LambdaMode::Fixed(0.7)).unwrap();
        let ans = exact.query(&f, &x, 1.0).unwrap();
        let audit = ans.audit(&g, AUDIT_TOL, WITNESS_TOL);
        prop_assert!(audit.passed, "exact: {audit:?}");
        prop_assert!(g.dual_norm(&sub(&ans.v, &ans.v_hat)) <= 1e-6 * g.dual_norm(&ans.v).max(1.0));
    }
}
