use dnls_core::analytic::{q as q_exact, yq_l2_sq};
use dnls_core::ground_state::{discrete_ground_state, GroundStateSpec};
use dnls_core::linops::*;
use dnls_core::quadrature::integrate;
use dnls_core::{Error, Grid, RealField};
use proptest::prelude::*;
use std::f64::consts::PI;

fn q_field(g: Grid) -> RealField {
    RealField::from_fn(g, q_exact)
}

fn q_h(g: Grid) -> RealField {
    discrete_ground_state(GroundStateSpec::default(), g).unwrap()
}

#[test]
fn apply_is_symmetric() {
    let g = Grid::new(15.0, 0.01).unwrap();
    let q = q_field(g);
    let f = RealField::from_fn(g, |x| (-(x - 0.3) * (x - 0.3)).exp());
    let h = RealField::from_fn(g, |x| x * (-0.5 * x * x).exp() + (-x * x).exp());
    for op in [
        LinearizedOperator::plus(&q),
        LinearizedOperator::minus(&q).with_delta(1.3),
    ] {
        let a = op.apply(&f).unwrap().inner(&h).unwrap();
        let b = f.inner(&op.apply(&h).unwrap()).unwrap();
        assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "{a} {b}");
    }
}

#[test]
fn algebra_identities_converge_at_second_order() {
    let a = algebra_residuals(Grid::default()).unwrap().as_array();
    let b = algebra_residuals(Grid::default().refined())
        .unwrap()
        .as_array();
    for i in 0..4 {
        assert!(a[i] < 2e-3, "identity {i}: {}", a[i]);
        let ratio = a[i] / b[i];
        assert!((ratio - 4.0).abs() < 0.5, "identity {i}: ratio {ratio}");
    }
}

#[test]
fn solve_plus_of_minus_two_q_is_lambda_q() {
    let g = Grid::default();
    let q = q_field(g);
    let f = LinearizedOperator::plus(&q)
        .solve_plus(&q.scale(-2.0))
        .unwrap();
    let exact = RealField::from_fn(g, |x| 0.5 * q_exact(x) - x * q_exact(x) * (2.0 * x).tanh());
    let e1 = (&f - &exact).max_abs();
    let g2 = g.refined();
    let q2 = q_field(g2);
    let f2 = LinearizedOperator::plus(&q2)
        .solve_plus(&q2.scale(-2.0))
        .unwrap();
    let exact2 = RealField::from_fn(g2, |x| 0.5 * q_exact(x) - x * q_exact(x) * (2.0 * x).tanh());
    let e2 = (&f2 - &exact2).max_abs();
    assert!(e1 < 1e-4);
    assert!((e1 / e2 - 4.0).abs() < 0.5, "{}", e1 / e2);
}

#[test]
fn rho_pairing_identity() {
    let g = Grid::default();
    let q = q_h(g);
    let r = rho(&q).unwrap();
    let oracle = integrate(|y| y * y * q_exact(y) * q_exact(y), -40.0, 40.0, 1e-15).unwrap();
    assert!((oracle / yq_l2_sq() - 1.0).abs() < 1e-12);
    let ratio = q.inner(&r).unwrap() / (0.5 * oracle);
    assert!((ratio - 1.0).abs() < 1e-6, "{ratio}");
    assert!((rho_pairing_ratio(g).unwrap() - ratio).abs() < 1e-14);
}

#[test]
fn solve_plus_of_zero_is_zero() {
    let g = Grid::new(10.0, 0.02).unwrap();
    let q = q_field(g);
    let f = LinearizedOperator::plus(&q)
        .solve_plus(&RealField::zeros(g))
        .unwrap();
    assert_eq!(f.max_abs(), 0.0);
}

#[test]
fn solve_plus_rejects_odd_data() {
    let g = Grid::new(10.0, 0.02).unwrap();
    let q = q_field(g);
    let odd = q.map_x(|y, v| y * v);
    assert!(matches!(
        LinearizedOperator::plus(&q).solve_plus(&odd),
        Err(Error::NotEven(_))
    ));
}

#[test]
fn solve_plus_residual() {
    let g = Grid::default();
    let q = q_field(g);
    let op = LinearizedOperator::plus(&q).with_delta(1.0);
    let rhs = q.map_x(|y, v| y * y * v + v.powi(3));
    let f = op.solve_plus(&rhs).unwrap();
    let res = (&op.apply(&f).unwrap() - &rhs).l2();
    assert!(res <= 1e-10 * rhs.l2(), "{res}");
}

#[test]
fn solve_minus_recovers_y2q() {
    let g = Grid::default();
    let q = q_field(g);
    let lm = LinearizedOperator::minus(&q);
    let rhs = q.lambda_op().scale(-4.0);
    // the discrete ⟨ΛQ, Q⟩ is O(h²), far above the default tolerance
    assert!(matches!(
        lm.solve_minus(&rhs),
        Err(Error::Solvability { .. })
    ));
    let f = lm.solve_minus_with_tol(&rhs, 1e-3).unwrap();
    let y2q = q.map_x(|y, v| y * y * v);
    let c = y2q.inner(&q).unwrap() / q.l2_sq();
    let exact = y2q.axpy(-c, &q).unwrap();
    let err = (&f - &exact).max_abs();
    assert!(err < 1e-3, "{err}");
    assert!(f.inner(&q).unwrap().abs() < 1e-12);
}

#[test]
fn solve_minus_error_is_second_order() {
    let err = |g: Grid| {
        let q = q_field(g);
        let lm = LinearizedOperator::minus(&q);
        let f = lm
            .solve_minus_with_tol(&q.lambda_op().scale(-4.0), 1e-3)
            .unwrap();
        let y2q = q.map_x(|y, v| y * y * v);
        let c = y2q.inner(&q).unwrap() / q.l2_sq();
        (&f - &y2q.axpy(-c, &q).unwrap()).max_abs()
    };
    let g = Grid::new(20.0, 0.02).unwrap();
    let r = err(g) / err(g.refined());
    assert!((r - 4.0).abs() < 0.5, "{r}");
}

#[test]
fn solve_minus_postconditions_with_exact_kernel() {
    let g = Grid::default();
    let q = q_h(g);
    let lm = LinearizedOperator::minus(&q);
    let raw = q.map_x(|y, v| (y * y - 0.7) * v + y * v.powi(2));
    let c = raw.inner(&q).unwrap() / q.l2_sq();
    let rhs = raw.axpy(-c, &q).unwrap();
    let f = lm.solve_minus(&rhs).unwrap();
    assert!(f.inner(&q).unwrap().abs() < 1e-12);
    let res = (&lm.apply(&f).unwrap() - &rhs).l2();
    assert!(res <= 1e-10 * rhs.l2(), "{res}");
    assert!(lm.projected_residual(&f, &rhs).unwrap() <= 1e-10 * rhs.l2());
}

#[test]
fn solve_minus_rejects_q_and_maps_zero_to_zero() {
    let g = Grid::new(10.0, 0.02).unwrap();
    let q = q_field(g);
    let lm = LinearizedOperator::minus(&q);
    assert!(matches!(lm.solve_minus(&q), Err(Error::Solvability { .. })));
    assert_eq!(lm.solve_minus(&RealField::zeros(g)).unwrap().max_abs(), 0.0);
}

#[test]
fn beta_routes_agree() {
    let g = Grid::default();
    for mu in [-1.0, 0.5, 1.0, 2.0] {
        let b = beta_coefficient(mu, g).unwrap();
        assert!(b.relative_gap < 1e-8, "mu={mu}: {b:?}");
        assert!((b.solvability_single / b.closed_form - 1.0).abs() < 1e-4);
        assert_eq!(b.closed_form > 0.0, mu > 0.0);
    }
    let z = beta_coefficient(0.0, g).unwrap();
    assert_eq!((z.closed_form, z.solvability), (0.0, 0.0));
}

#[test]
fn beta_against_quadrature_oracle() {
    let yq = integrate(
        |y| y * y * 3.0f64.sqrt() / (2.0 * y).cosh(),
        -40.0,
        40.0,
        1e-15,
    )
    .unwrap();
    let b = beta_coefficient(1.0, Grid::default()).unwrap();
    assert!((b.closed_form - 2.0 * 3.0f64.sqrt() / yq).abs() < 1e-12);
    assert!((b.closed_form - 64.0 / PI.powi(3)).abs() < 1e-12);
}

fn gaps(g: Grid) -> (f64, f64, f64) {
    let q = q_h(g);
    let y2q = q.map_x(|y, v| y * y * v);
    let r = rho(&q).unwrap();
    let p = coercivity_gap(
        &LinearizedOperator::plus(&q),
        &[q.clone(), y2q],
        GapOptions::default(),
    )
    .unwrap()
    .gap;
    let m = coercivity_gap(&LinearizedOperator::minus(&q), &[r], GapOptions::default())
        .unwrap()
        .gap;
    let free = coercivity_gap(&LinearizedOperator::minus(&q), &[], GapOptions::default())
        .unwrap()
        .gap;
    (p, m, free)
}

#[test]
fn constrained_gaps_are_positive_and_stable() {
    let (p1, m1, f1) = gaps(Grid::default());
    let (p2, m2, f2) = gaps(Grid::default().refined());
    assert!(p1 > 0.0 && m1 > 0.0, "{p1} {m1}");
    assert!((p1 / p2 - 1.0).abs() < 0.05);
    assert!((m1 / m2 - 1.0).abs() < 0.05);
    assert!(f1.abs() < 1e-6 && f2.abs() < 1e-6, "{f1} {f2}");
}

#[test]
fn unconstrained_minus_gap_is_order_h2_with_closed_form_q() {
    let gap = |g: Grid| {
        coercivity_gap(
            &LinearizedOperator::minus(&q_field(g)),
            &[],
            GapOptions::default(),
        )
        .unwrap()
        .gap
    };
    let a = gap(Grid::new(20.0, 0.02).unwrap());
    let b = gap(Grid::new(20.0, 0.01).unwrap());
    assert!(a.abs() < 1e-3);
    assert!((a / b - 4.0).abs() < 0.5, "{a} {b}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn solve_plus_inverts_apply(
        c in proptest::collection::vec(0.2f64..3.0, 3),
        w in proptest::collection::vec(0.4f64..2.0, 3),
    ) {
        let g = Grid::new(20.0, 0.02).unwrap();
        let q = q_field(g);
        let op = LinearizedOperator::plus(&q);
        let f = RealField::from_fn(g, |x| {
            c.iter().zip(&w).map(|(a, s)| a * (-(x / s).powi(2)).exp()).sum()
        });
        let back = op.solve_plus(&op.apply(&f).unwrap()).unwrap();
        prop_assert!((&back - &f).max_abs() < 1e-9 * f.max_abs());
    }
}
