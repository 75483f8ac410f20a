use dnls_core::analytic::{mass_omega_mu, q, q_l2_sq, q_omega_mu, q_prime};
use dnls_core::ground_state::*;
use dnls_core::quadrature::integrate;
use dnls_core::{ComplexField, Grid, RealField};
use num_complex::Complex64;
use proptest::prelude::*;

fn q_field(g: Grid) -> RealField {
    ground_state(GroundStateSpec::default(), g).unwrap()
}

#[test]
fn q_peak_value() {
    let g = Grid::default();
    let u = q_field(g);
    // 3^{1/4} from exp(ln 3 / 4)
    assert!((u.at_origin() - (3.0f64.ln() / 4.0).exp()).abs() < 1e-14);
}

#[test]
fn q_mass_matches_quadrature_oracle() {
    let g = Grid::default();
    let oracle = integrate(|x| q(x) * q(x), -30.0, 30.0, 1e-14).unwrap();
    let m = mass(&q_field(g));
    assert!((m.l2_sq / oracle - 1.0).abs() < 1e-8);
    assert!((m.mass - 0.5 * m.l2_sq).abs() < 1e-15);
    assert!((oracle / q_l2_sq() - 1.0).abs() < 1e-12);
}

#[test]
fn gradient_norm_matches_quadrature_oracle() {
    let g = Grid::default();
    let oracle = integrate(|x| q_prime(x).powi(2), -30.0, 30.0, 1e-14).unwrap();
    let got = q_field(g).grad_l2_sq();
    assert!((got / oracle - 1.0).abs() < 1e-6, "{got} vs {oracle}");
}

#[test]
fn pohozaev_identity() {
    let d = pohozaev_defect(&q_field(Grid::default()));
    assert!(d.abs() < 1e-6, "{d}");
}

#[test]
fn discrete_residual_is_second_order() {
    let res = |g: Grid| {
        let u = q_field(g);
        let r = u
            .second_derivative()
            .zip_with(&u, |d2, v| -d2 + v - v.powi(5))
            .unwrap();
        r.l2()
    };
    let g = Grid::default();
    let ratio = res(g) / res(g.refined());
    let order = ratio.log2();
    assert!((order - 2.0).abs() < 0.2, "order {order}");
}

#[test]
fn soliton_converges_to_q_as_mu_vanishes() {
    let x = 0.37;
    let e1 = (q_omega_mu(1.0, 1e-3, x) - q(x)).abs();
    let e2 = (q_omega_mu(1.0, 1e-6, x) - q(x)).abs();
    assert!(e2 < e1 * 1e-2);
}

#[test]
fn energy_of_zero_is_zero() {
    let g = Grid::new(5.0, 0.1).unwrap();
    assert_eq!(mass(&RealField::zeros(g)).mass, 0.0);
    assert_eq!(energy(&RealField::zeros(g), 1.0), 0.0);
}

#[test]
fn pseudoconformal_energy_is_time_independent() {
    let g = Grid::new(30.0, 0.002).unwrap();
    let es: Vec<f64> = [-1.0, -0.5, -0.25]
        .iter()
        .map(|&t| energy(&pseudoconformal_solution(t, g).unwrap(), 0.0))
        .collect();
    // direct evaluation: E(S) = ‖yQ‖²/8 since the Q-part has zero energy
    let oracle = integrate(|y| y * y * q(y) * q(y), -30.0, 30.0, 1e-14).unwrap() / 8.0;
    for e in &es {
        assert!((e - es[0]).abs() < 1e-4, "{es:?}");
        assert!((e - oracle).abs() < 1e-3, "{e} vs {oracle}");
    }
}

#[test]
fn pseudoconformal_mass() {
    let g = Grid::new(20.0, 0.005).unwrap();
    let s1 = pseudoconformal_solution(-1.0, g).unwrap();
    assert!((s1.l2_sq() - q_l2_sq()).abs() < 1e-6);
}

/// `‖∂S(t)‖² = ‖Q'‖²/t² + ‖yQ‖²/4`, each term by quadrature.
fn grad_sq_oracle(t: f64) -> f64 {
    let dq = integrate(|y| q_prime(y).powi(2), -30.0, 30.0, 1e-14).unwrap();
    let yq = integrate(|y| y * y * q(y) * q(y), -30.0, 30.0, 1e-14).unwrap();
    dq / (t * t) + yq / 4.0
}

#[test]
fn pseudoconformal_gradient_matches_closed_form() {
    let g = Grid::new(20.0, 0.005).unwrap();
    for t in [-1.0, -0.5] {
        let got = pseudoconformal_solution(t, g).unwrap().grad_l2_sq();
        assert!((got / grad_sq_oracle(t) - 1.0).abs() < 1e-5, "t={t}");
    }
    let r = (grad_sq_oracle(-0.5) / grad_sq_oracle(-1.0)).sqrt();
    assert!((r - 1.81).abs() < 0.01, "{r}");
}

#[test]
fn pseudoconformal_gradient_grows_like_inverse_time() {
    let g = Grid::new(20.0, 0.001).unwrap();
    let a = pseudoconformal_solution(-0.1, g).unwrap().norms().grad_l2;
    let b = pseudoconformal_solution(-0.05, g).unwrap().norms().grad_l2;
    assert!((b / a - 2.0).abs() < 0.1, "{}", b / a);
}

#[test]
fn gn_is_sharp_at_q_and_scale_invariant() {
    let u = q_field(Grid::default());
    let r = gn_check(&u).unwrap().ratio;
    assert!((r - 1.0).abs() < 1e-5, "{r}");
    let r2 = gn_check(&u.scale(2.0)).unwrap().ratio;
    assert!((r2 - r).abs() < 1e-12);
}

#[test]
fn gn_is_strict_for_gaussian() {
    let g = Grid::default();
    let u = RealField::from_fn(g, |x| (-x * x).exp());
    let c = gn_check(&u).unwrap();
    let l6 = integrate(|x| (-6.0 * x * x).exp(), -10.0, 10.0, 1e-14).unwrap();
    let l2 = integrate(|x| (-2.0 * x * x).exp(), -10.0, 10.0, 1e-14).unwrap();
    let d = integrate(|x| 4.0 * x * x * (-2.0 * x * x).exp(), -10.0, 10.0, 1e-14).unwrap();
    let oracle = l6 / (3.0 / q_l2_sq().powi(2) * l2 * l2 * d);
    assert!(c.ratio < 1.0);
    assert!((c.ratio - oracle).abs() < 1e-6);
}

/// Bisection on the closed-form soliton mass.
fn omega_for_mass(m: f64, mu: f64) -> f64 {
    let (mut lo, mut hi) = (mu * mu / 4.0 * (1.0 + 1e-14), 1e4);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass_omega_mu(mid, mu) < m * m {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn minimizer_recovers_soliton() {
    // steep soliton (ω ≈ 2.9) with a weak mass-to-ω dependence
    let g = Grid::new(20.0, 0.0025).unwrap();
    let m = 0.9 * q_l2_sq().sqrt();
    let res = minimize_fixed_mass(m, 1.0, g, MinimizerOptions::default()).unwrap();
    let w = omega_for_mass(m, 1.0);
    for omega in [w, res.omega] {
        let exact = RealField::from_fn(g, |x| q_omega_mu(omega, 1.0, x));
        let err = (&res.field - &exact).max_abs();
        assert!(err < 1e-4, "err {err}");
    }
    assert!(res.omega > 0.25);
    assert!((res.omega / w - 1.0).abs() < 1e-3, "{} vs {w}", res.omega);
    assert!(res.energy < 0.0);
    assert!(res.max_mass_defect < 1e-13);
}

#[test]
fn minimizer_rejects_supercritical_mass() {
    let g = Grid::new(10.0, 0.05).unwrap();
    assert!(minimize_fixed_mass(1.01 * q_l2_sq().sqrt(), 1.0, g, Default::default()).is_err());
    assert!(minimize_fixed_mass(1.0, -1.0, g, Default::default()).is_err());
}

fn random_field(
    g: Grid,
    amps: &[f64],
    centers: &[f64],
    widths: &[f64],
    phases: &[f64],
) -> ComplexField {
    ComplexField::from_fn(g, |x| {
        amps.iter()
            .zip(centers)
            .zip(widths)
            .zip(phases)
            .map(|(((a, c), w), p)| {
                let z = (x - c) / w;
                Complex64::from_polar(*a * (-z * z).exp(), p * x)
            })
            .sum()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn gn_inequality_holds(
        amps in proptest::collection::vec(0.1f64..2.0, 3),
        centers in proptest::collection::vec(-4.0f64..4.0, 3),
        widths in proptest::collection::vec(0.3f64..3.0, 3),
        phases in proptest::collection::vec(-2.0f64..2.0, 3),
    ) {
        let g = Grid::new(20.0, 0.02).unwrap();
        let u = random_field(g, &amps, &centers, &widths, &phases);
        let r = gn_check(&u).unwrap().ratio;
        prop_assert!(r > 0.0 && r <= 1.0 + 1e-4, "ratio {}", r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn energy_bounded_below_below_threshold(
        amps in proptest::collection::vec(0.1f64..2.0, 3),
        centers in proptest::collection::vec(-4.0f64..4.0, 3),
        widths in proptest::collection::vec(0.3f64..3.0, 3),
        phases in proptest::collection::vec(-2.0f64..2.0, 3),
        frac in 0.05f64..0.99,
    ) {
        let g = Grid::new(20.0, 0.02).unwrap();
        let u = random_field(g, &amps, &centers, &widths, &phases);
        let u = u.scale(frac * q_l2_sq().sqrt() / u.l2());
        let ratio = u.l2_sq().powi(2) / q_l2_sq().powi(2);
        let bound = 0.5 * u.grad_l2_sq() * (1.0 - ratio);
        prop_assert!(energy(&u, 0.0) >= bound - 1e-6);
    }
}
