use ppm_core::pnorm_core::{dual_pnorm, pnorm};
use ppm_core::problems::{make_problem, Huber, LinearOverBall, Logistic, ProblemSpec, PthPower, Quadratic, SoftmaxRegression};
use ppm_core::vector::{dot, sub};
use ppm_core::Problem;
use proptest::prelude::*;
use proptest::test_runner::Config;

fn config(cases: u32) -> Config {
    Config { cases, failure_persistence: None, ..Config::default() }
}

const D: usize = 4;

/// Every benchmark objective, paired with a map that moves a raw point off
/// the objective's nonsmooth set (kinks of Huber, the center of |t|^s).
fn catalog() -> Vec<(Box<dyn Problem>, fn(&[f64]) -> Vec<f64>)> {
    fn id(x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
    fn off_center(x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| v.signum() * (0.2 + v.abs())).collect()
    }
    fn off_kink(x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| if (v.abs() - 1.0).abs() < 0.05 { v * 1.1 } else { *v }).collect()
    }
    let dense = vec![2.0, 0.3, 0.0, 0.1, 0.3, 1.0, 0.1, 0.0, 0.0, 0.1, 0.5, 0.2, 0.1, 0.0, 0.2, 1.5];
    vec![
        (Box::new(Quadratic::dense(dense, vec![1.0, 0.0, -1.0, 0.5]).unwrap()), id),
        (make_problem(&ProblemSpec::Quadratic { dim: D, decay: 1.0, coef_decay: 0.5, seed: 1 }).unwrap(), id),
        (Box::new(PthPower::new(1.5, 1.0, vec![0.0; D]).unwrap()), off_center),
        (Box::new(PthPower::new(2.5, 0.7, vec![0.0; D]).unwrap()), off_center),
        (Box::new(PthPower::new(3.5, 1.0, vec![0.0; D]).unwrap()), off_center),
        (Box::new(PthPower::new(4.0, 0.5, vec![0.0; D]).unwrap()), off_center),
        (make_problem(&ProblemSpec::Logistic { rows: 64, dim: D, scale: 1.0, flip: 0.1, seed: 2 }).unwrap(), id),
        (make_problem(&ProblemSpec::SoftmaxRegression { rows: 16, dim: D, mu: 0.5, seed: 3 }).unwrap(), id),
        (Box::new(Huber::new(1.0, vec![0.0; D]).unwrap()), off_kink),
        (Box::new(LinearOverBall { c: vec![1.0, -2.0, 0.5, 0.0], center: vec![0.0; D], radius: 1.0, p: 2.0 }), id),
    ]
}

fn sup(v: &[f64]) -> f64 {
    pnorm(v, f64::INFINITY)
}

fn shifted(x: &[f64], u: &[f64], h: f64) -> Vec<f64> {
    x.iter().zip(u).map(|(a, b)| a + h * b).collect()
}

#[test]
fn quadratic_second_order_model_is_exact() {
    let f = Quadratic::dense(vec![2.0, 0.5, 0.5, 1.0], vec![1.0, -1.0]).unwrap();
    for p in [1.5, 2.0, 4.0] {
        assert_eq!(f.holder(p, 2).unwrap().l, 0.0);
    }
    let x = [0.3, -0.7];
    let u = [1.5, 2.0];
    let model = f.value(&x) + dot(&f.gradient(&x), &u) + 0.5 * dot(&f.derivative(&x, &u, 2).unwrap(), &u);
    assert!((model - f.value(&shifted(&x, &u, 1.0))).abs() < 1e-13);
    assert_eq!(f.derivative(&x, &u, 3).unwrap(), vec![0.0, 0.0]);
}

#[test]
fn fourth_power_third_order_constant() {
    // φ(t) = t⁴/4 has φ''' = 6t, so ∇³f(x)[u]² − ∇³f(y)[u]² = 6c·(x − y)∘u∘u.
    let scale = 0.8;
    let f = PthPower::new(4.0, scale, vec![0.0; 5]).unwrap();
    let h = f.holder(2.0, 3).unwrap();
    assert_eq!((h.q, h.nu, h.empirical), (3, 1.0, false));
    assert!((h.l - 6.0 * scale).abs() < 1e-15);
    // Attained along a coordinate axis.
    let mut x = vec![0.0; 5];
    x[0] = 0.4;
    let mut u = vec![0.0; 5];
    u[0] = 1.0;
    let diff = sub(&f.derivative(&x, &u, 3).unwrap(), &f.derivative(&[0.0; 5], &u, 3).unwrap());
    assert!((pnorm(&diff, 2.0) - h.l * 0.4).abs() < 1e-14);
}

#[test]
fn logistic_gradient_matches_finite_differences() {
    let f = Logistic::random(128, 6, 1.0, 0.1, 4).unwrap();
    for x in [[0.0; 6], [1.0, -1.0, 0.5, 0.0, 2.0, -0.3], [-3.0, 0.2, 0.2, 1.0, 0.0, 0.7]] {
        let g = f.gradient(&x);
        for i in 0..6 {
            let mut e = [0.0; 6];
            e[i] = 1.0;
            let h = 1e-5;
            let fd = (f.value(&shifted(&x, &e, h)) - f.value(&shifted(&x, &e, -h))) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-6 * sup(&g), "coordinate {i}: {fd} vs {}", g[i]);
        }
    }
}

#[test]
fn known_optima_are_stationary() {
    for (f, _) in catalog() {
        let Some(x_star) = f.minimizer() else { continue };
        let f_star = f.optimal_value().unwrap();
        assert_eq!(f.value(&x_star), f_star, "{}", f.name());
        if f.name() != "linear" {
            assert!(pnorm(&f.gradient(&x_star), 2.0) <= 1e-9, "{}", f.name());
        }
    }
    // The boundary minimizer of a linear objective over a ball.
    let lin = LinearOverBall { c: vec![3.0, 4.0], center: vec![1.0, 1.0], radius: 2.0, p: 2.0 };
    let x = lin.minimizer().unwrap();
    assert!((x[0] + 0.2).abs() < 1e-15 && (x[1] + 0.6).abs() < 1e-15);
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(PthPower::new(1.0, 1.0, vec![0.0]).is_err());
    assert!(PthPower::new(2.0, 0.0, vec![0.0]).is_err());
    assert!(Huber::new(0.0, vec![0.0]).is_err());
    assert!(SoftmaxRegression::new(vec![1.0, 0.0], vec![0.0, 1.0], 0.0).is_err());
    assert!(Quadratic::diagonal(vec![1.0, -1.0], vec![0.0, 0.0]).is_err());
    assert!(Quadratic::diagonal(vec![1.0], vec![0.0, 0.0]).is_err());
    assert!(Quadratic::dense(vec![1.0, 2.0, 0.0, 1.0], vec![0.0, 0.0]).is_err());
    assert!(Quadratic::dense(vec![1.0, 0.0, 0.0, -1.0], vec![0.0, 0.0]).is_err());
    assert!(Logistic::new(vec![1.0, 2.0, 3.0], &[1.0, 1.0]).is_err());
    assert!(Logistic::new(vec![1.0, 2.0], &[1.0, 0.5]).is_err());
    // Separable data has no minimizer.
    assert!(Logistic::new(vec![1.0, 2.0], &[1.0, 1.0]).is_err());
    assert!(make_problem(&ProblemSpec::Huber { dim: 0, delta: 1.0, seed: 0 }).is_err());
}

#[test]
fn derivative_orders_are_bounded() {
    for (f, _) in catalog() {
        let x = vec![0.5; D];
        assert!(f.derivative(&x, &x, f.max_order() + 1).is_err(), "{}", f.name());
        assert!(f.derivative(&x, &x, f.max_order()).is_ok(), "{}", f.name());
    }
    assert_eq!(PthPower::new(2.5, 1.0, vec![0.0]).unwrap().max_order(), 2);
    assert_eq!(PthPower::new(1.5, 1.0, vec![0.0]).unwrap().max_order(), 1);
    // Hölder data exists only for the order with s − q ∈ (0, 1].
    let f = PthPower::new(3.5, 1.0, vec![0.0; 2]).unwrap();
    assert!(f.holder(2.0, 2).is_none());
    assert_eq!(f.holder(2.0, 3).unwrap().nu, 0.5);
}

proptest! {
    #![proptest_config(config(100))]

    #[test]
    fn derivatives_match_finite_differences(
        raw in prop::collection::vec(-2.0f64..2.0, D),
        u in prop::collection::vec(-1.0f64..1.0, D),
    ) {
        let h = 1e-5;
        for (f, place) in catalog() {
            let x = place(&raw);
            // Order 1 against values, coordinate by coordinate.
            let g = f.gradient(&x);
            let fx = f.value(&x).abs();
            for i in 0..D {
                let mut e = vec![0.0; D];
                e[i] = 1.0;
                let fd = (f.value(&shifted(&x, &e, h)) - f.value(&shifted(&x, &e, -h))) / (2.0 * h);
                prop_assert!((fd - g[i]).abs() <= 1e-5 * sup(&g) + 1e-9 * (1.0 + fx), "{} order 1: {fd} vs {}", f.name(), g[i]);
            }
            // Order j against differences of order j − 1 along u.
            for j in 2..=f.max_order() {
                let exact = f.derivative(&x, &u, j).unwrap();
                let plus = f.derivative(&shifted(&x, &u, h), &u, j - 1).unwrap();
                let minus = f.derivative(&shifted(&x, &u, -h), &u, j - 1).unwrap();
                let base = sup(&f.derivative(&x, &u, j - 1).unwrap());
                for i in 0..D {
                    let fd = (plus[i] - minus[i]) / (2.0 * h);
                    prop_assert!(
                        (fd - exact[i]).abs() <= 1e-5 * sup(&exact) + 1e-9 * (1.0 + base),
                        "{} order {j}, coordinate {i}: {fd} vs {}", f.name(), exact[i]
                    );
                }
            }
        }
    }

    #[test]
    fn advertised_holder_constants_hold_on_samples(
        x in prop::collection::vec(-2.0f64..2.0, D),
        y in prop::collection::vec(-2.0f64..2.0, D),
        u in prop::collection::vec(-1.0f64..1.0, D),
        p in prop::sample::select(vec![1.5, 2.0, 3.0, 4.0, f64::INFINITY]),
    ) {
        for (f, _) in catalog() {
            for q in 1..=3 {
                let Some(h) = f.holder(p, q) else { continue };
                let dx = |z: &[f64]| if q == 1 { f.gradient(z) } else { f.derivative(z, &u, q).unwrap() };
                let lhs = dual_pnorm(&sub(&dx(&x), &dx(&y)), p);
                let rhs = h.l * pnorm(&sub(&x, &y), p).powf(h.nu) * pnorm(&u, p).powi(q as i32 - 1);
                prop_assert!(lhs <= rhs * (1.0 + 1e-9) + 1e-12, "{} p = {p}, q = {q}: {lhs} > {rhs}", f.name());
            }
        }
    }
}

proptest! {
    #![proptest_config(config(1000))]

    #[test]
    fn midpoint_convexity(
        x in prop::collection::vec(-3.0f64..3.0, D),
        y in prop::collection::vec(-3.0f64..3.0, D),
    ) {
        let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
        for (f, _) in catalog() {
            let (fx, fy) = (f.value(&x), f.value(&y));
            let avg = 0.5 * (fx + fy);
            prop_assert!(f.value(&mid) <= avg + 1e-12 * (1.0 + fx.abs() + fy.abs()), "{}", f.name());
        }
    }
}
