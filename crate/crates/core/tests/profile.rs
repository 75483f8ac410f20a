use dnls_core::analytic::{beta, q as q_exact};
use dnls_core::grid::{ComplexField, Grid, RealField};
use dnls_core::linops::beta_coefficient;
use dnls_core::profile::{
    build_profile, energy_expansion_check, extract_sources, residual_psi, ProfileCoefficients,
};
use dnls_core::series::BivariateSeries;
use num_complex::Complex64;
use proptest::prelude::*;
use std::sync::OnceLock;

fn grid() -> Grid {
    Grid::new(20.0, 0.01).unwrap()
}

fn profile(order: usize) -> &'static ProfileCoefficients {
    static CACHE: [OnceLock<ProfileCoefficients>; 3] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    CACHE[order].get_or_init(|| build_profile(order, 1.0, grid()).unwrap())
}

fn app(s: f64, beta: f64) -> (f64, f64) {
    (2.0 / s, 2.0 / (beta * s * s))
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

fn interior_max(f: &ComplexField) -> f64 {
    let cut = f.grid().half_width() / 2.0;
    (0..f.len())
        .filter(|&i| f.grid().x(i).abs() <= cut)
        .map(|i| f[i].norm())
        .fold(0.0, f64::max)
}

#[test]
fn beta00_matches_closed_form_and_solvability_route() {
    let p = profile(0);
    let b00 = p.beta(0, 0).unwrap();
    let routes = beta_coefficient(1.0, grid()).unwrap();
    assert!((b00 - routes.solvability_single).abs() <= 1e-8 * b00.abs());
    // the discrete ground state carries an O(h²) offset from the closed form
    assert!((b00 - beta(1.0)).abs() / beta(1.0) < 1e-3);
}

#[test]
fn k0_has_one_block_with_kink_at_origin() {
    let p = profile(0);
    assert_eq!(p.blocks.len(), 1);
    let plus = &p.blocks[&(0, 0)].plus;
    assert!(plus.asymmetry() < 1e-12);
    let h = grid().spacing();
    let m = grid().origin();
    let right = (plus[m + 1] - plus[m]) / h;
    let left = (plus[m] - plus[m - 1]) / h;
    assert!(right * left < 0.0 || (right - left).abs() > 0.1);
    // L₊ f = μδQ + ... gives a slope jump of -μQ(0)
    let jump = right - left;
    assert!((jump + p.q[m]).abs() < 0.05 * p.q[m], "jump {jump}");
}

#[test]
fn zero_mu_gives_zero_profile() {
    let p = build_profile(1, 0.0, Grid::new(12.0, 0.05).unwrap()).unwrap();
    for blk in p.blocks.values() {
        assert!(blk.beta.abs() < 1e-14);
        assert!(blk.plus.max_abs() < 1e-14);
        assert!(blk.minus.max_abs() < 1e-14);
    }
}

#[test]
fn sources_of_first_block() {
    let p = profile(1);
    let src = extract_sources(p, 0, 0).unwrap();
    let expected = p.q.discrete_delta_apply(1.0);
    assert!((&src.plus - &expected).max_abs() < 1e-12);
    assert!(src.minus.max_abs() < 1e-12);
}

#[test]
fn missing_dependency_is_reported() {
    let mut p = profile(1).clone();
    p.blocks.remove(&(0, 0));
    assert!(extract_sources(&p, 0, 1).is_err());
}

#[test]
fn block_systems_and_gauges() {
    let p = profile(2);
    let qn = p.q.l2();
    for (&(j, k), blk) in &p.blocks {
        assert!(blk.system_residuals[0] <= 1e-8 * (1.0 + blk.source_norms[0]));
        assert!(blk.system_residuals[1] <= 1e-8 * (1.0 + blk.source_norms[1]));
        assert!(
            blk.minus.inner(&p.q).unwrap().abs() < 1e-10 * qn,
            "({j},{k})"
        );
        assert!(blk.plus.asymmetry() < 1e-10 && blk.minus.asymmetry() < 1e-10);
        assert!(blk.beta.is_finite());
    }
    // the gauge of P⁺ is fixed by the L₋ solvability: ⟨P⁺, Q⟩ = ⟨F⁻, Q⟩/c
    let b00 = &p.blocks[&(0, 0)];
    assert!(b00.plus.inner(&p.q).unwrap().abs() < 1e-10);
    for (&(j, k), blk) in &p.blocks {
        let src = extract_sources(p, j, k).unwrap();
        let c = (k + 1 + 2 * j) as f64;
        let lhs = blk.plus.inner(&p.q).unwrap();
        let rhs = src.minus.inner(&p.q).unwrap() / c;
        assert!(
            (lhs - rhs).abs() < 1e-9 * (1.0 + rhs.abs()),
            "({j},{k}) {lhs} {rhs}"
        );
    }
}

#[test]
fn parity_structure_of_residual_series() {
    let p = profile(2);
    let r = p.residual_series();
    for &(j, k) in p.blocks.keys() {
        for m in [2 * j, 2 * j + 1] {
            if let Some(c) = r.get(m, k + 1) {
                let re = c.re().max_abs();
                let im = c.im().max_abs();
                assert!(
                    re < 1e-8 && im < 1e-8,
                    "b^{m} λ^{} : {re:.2e} {im:.2e}",
                    k + 1
                );
            }
        }
    }
}

#[test]
fn evaluation_identities() {
    let p = profile(1);
    let at0 = p.eval_p(0.0, 0.0);
    assert_eq!(at0, p.q.to_complex());
    let pr = p.eval_p(0.1, 0.02);
    let pb = p.eval_pb(0.1, 0.02);
    assert!((pr.l2() - pb.l2()).abs() < 1e-14);
    for i in 0..pr.len() {
        assert!((pr[i].norm() - pb[i].norm()).abs() < 1e-14);
    }
    let p0 = profile(0);
    let b00 = p0.beta(0, 0).unwrap();
    assert!((p0.eval_theta(0.0, 0.03) - b00 * 0.03).abs() < 1e-15);
}

#[test]
fn residual_vanishes_at_origin_of_parameters() {
    let p = profile(1);
    let r = residual_psi(p, 0.0, 0.0);
    assert!(r.weighted_sup < 1e-12);
    let defect = p.ground_defect();
    let exact = RealField::from_fn(grid(), q_exact);
    let continuum = exact
        .second_derivative()
        .zip_with(&exact, |d, v| d - v + v.powi(5))
        .unwrap();
    assert!(defect.max_abs() < 1e-9);
    let h = grid().spacing();
    assert!(continuum.max_abs() < 10.0 * h * h);
}

#[test]
fn higher_order_profile_has_smaller_residual() {
    let r0 = residual_psi(profile(0), 0.1, 0.005).weighted_sup;
    let r1 = residual_psi(profile(1), 0.1, 0.005).weighted_sup;
    assert!(r1 < r0, "{r1} vs {r0}");
}

#[test]
fn residual_scaling_along_app_curve() {
    let b00 = profile(0).beta(0, 0).unwrap();
    for order in [0usize, 1, 2] {
        let (mut xs, mut ys) = (vec![], vec![]);
        for s in [20.0, 40.0, 80.0, 160.0] {
            let (b, l) = app(s, b00);
            let r = residual_psi(profile(order), b, l);
            assert!(r.in_regime);
            xs.push(b * b + l);
            ys.push(r.weighted_sup);
        }
        let k = slope(&xs, &ys);
        let target = order as f64 + 2.0;
        assert!((k - target).abs() <= 0.3, "K={order}: slope {k:.3}");
    }
}

fn lagrange_weights(nodes: &[f64]) -> Vec<Vec<f64>> {
    // monomial coefficients of the Lagrange basis polynomials
    let n = nodes.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut poly = vec![1.0];
        let mut denom = 1.0;
        for (j, &xj) in nodes.iter().enumerate() {
            if i == j {
                continue;
            }
            let mut next = vec![0.0; poly.len() + 1];
            for (d, &c) in poly.iter().enumerate() {
                next[d + 1] += c;
                next[d] -= xj * c;
            }
            poly = next;
            denom *= nodes[i] - xj;
        }
        for d in 0..n {
            out[i][d] = poly[d] / denom;
        }
    }
    out
}

/// Tensor interpolation of samples on a 5×5 node set, returning the
/// coefficient of b^m λ^n.
fn fitted_coefficient(
    p: &ProfileCoefficients,
    b0: f64,
    l0: f64,
    m: usize,
    n: usize,
) -> ComplexField {
    let nodes = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let w = lagrange_weights(&nodes);
    let mut acc = ComplexField::zeros(*p.grid());
    for (i, &bi) in nodes.iter().enumerate() {
        for (j, &lj) in nodes.iter().enumerate() {
            let c = w[i][m] * w[j][n] / (b0.powi(m as i32) * l0.powi(n as i32));
            let r = p.residual_field(bi * b0, lj * l0);
            acc = acc.axpy(c, &r.re().to_complex()).unwrap();
            acc = &acc + &r.im().to_complex().mul_i().scale(c);
        }
    }
    acc
}

#[test]
fn series_coefficients_match_sampled_residual() {
    let p = profile(1);
    let r = p.residual_series();
    let (b0, l0) = (0.02, 0.02);
    for (m, n) in [
        (0usize, 1usize),
        (1, 1),
        (2, 1),
        (0, 2),
        (1, 2),
        (0, 3),
        (2, 2),
        (1, 3),
    ] {
        let f: Vec<ComplexField> = [1.0, 0.5, 0.25]
            .iter()
            .map(|sc| fitted_coefficient(p, b0 * sc, l0 * sc, m, n))
            .collect();
        // aliasing from truncated higher powers enters at second and fourth order in the scale
        let r1 = f[1].scale(4.0 / 3.0).axpy(-1.0 / 3.0, &f[0]).unwrap();
        let r2 = f[2].scale(4.0 / 3.0).axpy(-1.0 / 3.0, &f[1]).unwrap();
        let extrap = r2.scale(16.0 / 15.0).axpy(-1.0 / 15.0, &r1).unwrap();
        let series = r
            .get(m, n)
            .cloned()
            .unwrap_or_else(|| ComplexField::zeros(*p.grid()));
        let err = interior_max(&(&extrap - &series));
        assert!(
            err < 1e-6 * (1.0 + interior_max(&series)),
            "b^{m} λ^{n}: {err:.3e}"
        );
    }
}

#[test]
fn energy_expansion_along_app_curve() {
    let p = build_profile(2, 1.0, grid()).unwrap();
    let b00 = p.beta(0, 0).unwrap();
    let mut scaled = vec![];
    for s in [50.0, 100.0, 200.0] {
        let (b, l) = app(s, b00);
        let e = energy_expansion_check(&p, b, l).unwrap();
        scaled.push(e.gap * l * l / (b * b + l).powi(2));
    }
    let max = scaled.iter().cloned().fold(0.0, f64::max);
    let min = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(max / min < 3.0, "{scaled:?}");
}

#[test]
fn energy_expansion_at_zero_b() {
    let p = profile(0);
    let mut gaps = vec![];
    for l in [0.02, 0.01, 0.005] {
        let e = energy_expansion_check(p, 0.0, l).unwrap();
        let yq = p.q.map_x(|y, v| y * y * v).inner(&p.q).unwrap();
        assert!((e.e_leading + 2.0 * p.beta(0, 0).unwrap() / l * yq / 8.0).abs() < 1e-9);
        gaps.push(e.gap);
    }
    assert!(gaps.iter().all(|g| *g < 1.0), "{gaps:?}");
}

#[test]
fn energy_of_ground_state_is_pohozaev_defect() {
    let p = build_profile(0, 0.0, grid()).unwrap();
    let e = energy_expansion_check(&p, 0.0, 0.1).unwrap();
    assert!(e.e_profile.abs() < 1e-10);
    assert!(e.pohozaev_defect.abs() < 1e-3);
}

fn small_series() -> impl Strategy<Value = BivariateSeries<i64>> {
    (
        1usize..=4,
        prop::collection::vec((0usize..5, 0usize..5, -9i64..10), 0..8),
    )
        .prop_map(|(d, terms)| {
            let mut s = BivariateSeries::new(d);
            for (m, n, c) in terms {
                s.add_term(m, n, c);
            }
            s
        })
}

fn with_degree(s: &BivariateSeries<i64>, d: usize) -> BivariateSeries<i64> {
    let mut out = BivariateSeries::new(d);
    for ((m, n), &c) in s.terms() {
        if c != 0 {
            out.add_term(m, n, c);
        }
    }
    out
}

fn nz(s: BivariateSeries<i64>) -> BivariateSeries<i64> {
    with_degree(&s, s.max_total_degree())
}

proptest! {
    #[test]
    fn series_ring_laws(a in small_series(), b in small_series(), c in small_series()) {
        let d = a.max_total_degree();
        let (b, c) = (with_degree(&b, d), with_degree(&c, d));
        prop_assert_eq!(nz(a.mul(&b)), nz(b.mul(&a)));
        prop_assert_eq!(nz(a.add(&b)), nz(b.add(&a)));
        prop_assert_eq!(nz(a.mul(&b).mul(&c)), nz(a.mul(&b.mul(&c))));
        prop_assert_eq!(nz(a.add(&b).add(&c)), nz(a.add(&b.add(&c))));
        prop_assert_eq!(nz(a.mul(&b.add(&c))), nz(a.mul(&b).add(&a.mul(&c))));
        prop_assert_eq!(nz(a.sub(&a)), BivariateSeries::new(d));
    }

    #[test]
    fn conjugation_fixes_indices(re in -5.0f64..5.0, im in -5.0f64..5.0, m in 0usize..3, n in 0usize..3) {
        let s = BivariateSeries::monomial(4, m, n, Complex64::new(re, im));
        let c = s.conj();
        prop_assert_eq!(c.get(m, n).copied(), Some(Complex64::new(re, -im)));
        prop_assert_eq!(c.conj(), s);
    }
}

#[test]
fn coefficients_round_trip_through_json() {
    let c = build_profile(1, 1.0, Grid::new(20.0, 0.05).unwrap()).unwrap();
    let text = serde_json::to_string(&c).unwrap();
    let back: ProfileCoefficients = serde_json::from_str(&text).unwrap();
    assert_eq!(back, c);
}
