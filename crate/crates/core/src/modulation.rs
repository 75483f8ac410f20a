//! Decomposition `u = λ^{-1/2}(P_b + ε)(x/λ) e^{iγ}` under the conditions
//! `⟨ε, iΛP_b⟩ = ⟨ε, |y|²P_b⟩ = ⟨ε, iρ_b⟩ = 0`, and the functionals
//! `H`, `J`, `S` built on `ε`.
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, RealField};
use crate::interp::cubic_at;
use crate::linops::solve_dense;
use crate::profile::ProfileCoefficients;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationState {
    pub lambda: f64,
    pub b: f64,
    pub gamma: f64,
    pub s: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub state: ModulationState,
    pub epsilon: ComplexField,
    pub residuals: [f64; 3],
    pub iterations: usize,
}

impl Decomposition {
    pub fn eps_l2(&self) -> f64 {
        self.epsilon.l2()
    }

    pub fn eps_h1(&self) -> f64 {
        h1_sq(&self.epsilon).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iterations: usize,
    /// Relative finite-difference step for the Jacobian.
    pub fd_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-10,
            max_iterations: 50,
            fd_step: 1e-6,
        }
    }
}

fn h1_sq(f: &ComplexField) -> f64 {
    f.grad_l2_sq() + f.l2_sq()
}

fn quadratic_phase(f: &RealField, b: f64) -> ComplexField {
    f.map_x(|y, v| Complex64::from_polar(v, -b * y * y / 4.0))
}

/// `λ^{1/2} u(λy) e^{-iγ}` on the profile grid.
pub fn rescale(
    u: &ComplexField,
    coeffs: &ProfileCoefficients,
    lambda: f64,
    gamma: f64,
) -> ComplexField {
    let amp = lambda.sqrt();
    let rot = Complex64::from_polar(amp, -gamma);
    ComplexField::from_fn(*coeffs.grid(), |y| cubic_at(u, lambda * y) * rot)
}

/// Inverse of [`rescale`] applied to `P_b`, sampled on the grid of `like`.
pub fn reconstruct(
    state: &ModulationState,
    coeffs: &ProfileCoefficients,
    like: &ComplexField,
) -> ComplexField {
    let pb = coeffs.eval_pb(state.b, state.lambda);
    let rot = Complex64::from_polar(state.lambda.powf(-0.5), state.gamma);
    ComplexField::from_fn(*like.grid(), |x| cubic_at(&pb, x / state.lambda) * rot)
}

struct Directions {
    pb: ComplexField,
    i_lambda_pb: ComplexField,
    y2_pb: ComplexField,
    i_rho_b: ComplexField,
}

fn directions(coeffs: &ProfileCoefficients, b: f64, lambda: f64) -> Directions {
    let pb = coeffs.eval_pb(b, lambda);
    Directions {
        i_lambda_pb: pb.lambda_op().mul_i(),
        y2_pb: pb.map_x(|y, v| v * (y * y)),
        i_rho_b: quadratic_phase(&coeffs.rho, b).mul_i(),
        pb,
    }
}

fn pairings(eps: &ComplexField, d: &Directions) -> [f64; 3] {
    [
        eps.inner(&d.i_lambda_pb).expect("same grid"),
        eps.inner(&d.y2_pb).expect("same grid"),
        eps.inner(&d.i_rho_b).expect("same grid"),
    ]
}

fn evaluate(
    u: &ComplexField,
    coeffs: &ProfileCoefficients,
    p: [f64; 3],
) -> (ComplexField, [f64; 3]) {
    let d = directions(coeffs, p[1], p[0]);
    let eps = &rescale(u, coeffs, p[0], p[2]) - &d.pb;
    let r = pairings(&eps, &d);
    (eps, r)
}

/// Newton iteration on `(λ, b, γ)` with a central-difference Jacobian.
pub fn decompose(
    u: &ComplexField,
    guess: ModulationState,
    coeffs: &ProfileCoefficients,
    opts: &NewtonOptions,
) -> Result<Decomposition> {
    let h = u.grid().spacing();
    if !(guess.lambda >= 50.0 * h) {
        return Err(Error::Resolution(format!(
            "λ guess {:.3e} below 50h = {:.3e}",
            guess.lambda,
            50.0 * h
        )));
    }
    let scale = u.l2() * coeffs.rho.l2().max(1.0);
    let mut p = [guess.lambda, guess.b, guess.gamma];
    for it in 0..=opts.max_iterations {
        let (eps, r) = evaluate(u, coeffs, p);
        if r.iter().all(|v| v.abs() <= opts.tol * scale) {
            return Ok(Decomposition {
                state: ModulationState {
                    lambda: p[0],
                    b: p[1],
                    gamma: p[2],
                    ..guess
                },
                epsilon: eps,
                residuals: r,
                iterations: it,
            });
        }
        if it == opts.max_iterations {
            break;
        }
        let steps = [opts.fd_step * p[0], opts.fd_step, opts.fd_step];
        let mut jac = vec![vec![0.0; 3]; 3];
        for k in 0..3 {
            let mut plus = p;
            let mut minus = p;
            plus[k] += steps[k];
            minus[k] -= steps[k];
            let rp = evaluate(u, coeffs, plus).1;
            let rm = evaluate(u, coeffs, minus).1;
            for row in 0..3 {
                jac[row][k] = (rp[row] - rm[row]) / (2.0 * steps[k]);
            }
        }
        let delta = solve_dense(&jac, &r)?;
        let mut next = [p[0] - delta[0], p[1] - delta[1], p[2] - delta[2]];
        if !(next[0] > 0.0) {
            next[0] = 0.5 * p[0];
        }
        if !next.iter().all(|v| v.is_finite()) {
            break;
        }
        p = next;
    }
    Err(Error::NonConvergence {
        what: "modulation Newton iteration (tube exit)".into(),
        iterations: opts.max_iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModValues {
    pub s: f64,
    pub t: f64,
    /// `λ_s/λ + b`.
    pub scale: f64,
    /// `b_s + b² − θ`.
    pub law: f64,
    /// `1 − γ_s`.
    pub phase: f64,
}

impl ModValues {
    pub fn max_abs(&self) -> f64 {
        self.scale.abs().max(self.law.abs()).max(self.phase.abs())
    }
}

/// Rescaled times `s_{n+1} = s_n + ∫ λ^{-2} dt` by the trapezoid rule,
/// starting from `states[0].s`.
pub fn reconstruct_s(states: &[ModulationState]) -> Vec<f64> {
    let mut s = Vec::with_capacity(states.len());
    if let Some(first) = states.first() {
        s.push(first.s);
    }
    for w in states.windows(2) {
        let dt = w[1].t - w[0].t;
        let inc = 0.5 * dt * (w[0].lambda.powi(-2) + w[1].lambda.powi(-2));
        let last = *s.last().expect("seeded above");
        s.push(last + inc);
    }
    s
}

/// Second-order derivative of `f` on the nonuniform nodes `x`.
fn derivative(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    let three = |i: usize, a: usize, b: usize, c: usize| {
        let (x0, x1, x2) = (x[a], x[b], x[c]);
        let xi = x[i];
        f[a] * (2.0 * xi - x1 - x2) / ((x0 - x1) * (x0 - x2))
            + f[b] * (2.0 * xi - x0 - x2) / ((x1 - x0) * (x1 - x2))
            + f[c] * (2.0 * xi - x0 - x1) / ((x2 - x0) * (x2 - x1))
    };
    (0..n)
        .map(|i| {
            if i == 0 {
                three(0, 0, 1, 2)
            } else if i == n - 1 {
                three(i, n - 3, n - 2, n - 1)
            } else {
                three(i, i - 1, i, i + 1)
            }
        })
        .collect()
}

/// `Mod(s)` along a fitted trajectory ordered in `t`.
pub fn mod_vector(
    states: &[ModulationState],
    coeffs: &ProfileCoefficients,
) -> Result<Vec<ModValues>> {
    if states.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: states.len(),
        });
    }
    let s = reconstruct_s(states);
    if s.windows(2).any(|w| !(w[1] != w[0])) {
        return Err(Error::InvalidParameter("repeated sample times".into()));
    }
    let lam: Vec<f64> = states.iter().map(|st| st.lambda).collect();
    let b: Vec<f64> = states.iter().map(|st| st.b).collect();
    let g: Vec<f64> = states.iter().map(|st| st.gamma).collect();
    let (dl, db, dg) = (derivative(&s, &lam), derivative(&s, &b), derivative(&s, &g));
    Ok((0..states.len())
        .map(|i| ModValues {
            s: s[i],
            t: states[i].t,
            scale: dl[i] / lam[i] + b[i],
            law: db[i] + b[i] * b[i] - coeffs.eval_theta(b[i], lam[i]),
            phase: 1.0 - dg[i],
        })
        .collect())
}

/// `φ(r) = r²/2` on `r < 1`, `3r + e^{-r}` on `r > 2`, and on `[1, 2]` the
/// quintic matching value, slope and curvature at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorawetzWeight {
    pub a: f64,
    blend: [f64; 6],
}

pub const DEFAULT_A: f64 = 20.0;

impl MorawetzWeight {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 1.0) {
            return Err(Error::InvalidParameter(format!("A = {a} must exceed 1")));
        }
        let e = (-2.0f64).exp();
        let row = |t: f64, d: usize| -> Vec<f64> {
            (0..6)
                .map(|k| {
                    if k < d {
                        0.0
                    } else {
                        let c: f64 = (0..d).map(|j| (k - j) as f64).product();
                        c * t.powi((k - d) as i32)
                    }
                })
                .collect()
        };
        let m = vec![
            row(0.0, 0),
            row(0.0, 1),
            row(0.0, 2),
            row(1.0, 0),
            row(1.0, 1),
            row(1.0, 2),
        ];
        let rhs = [0.5, 1.0, 1.0, 6.0 + e, 3.0 - e, e];
        let c = solve_dense(&m, &rhs)?;
        Ok(MorawetzWeight {
            a,
            blend: [c[0], c[1], c[2], c[3], c[4], c[5]],
        })
    }

    /// `φ^{(d)}(r)` for `r ≥ 0`, `d ≤ 4`.
    fn phi_d(&self, r: f64, d: usize) -> f64 {
        if r < 1.0 {
            match d {
                0 => 0.5 * r * r,
                1 => r,
                2 => 1.0,
                _ => 0.0,
            }
        } else if r > 2.0 {
            let e = (-r).exp();
            match d {
                0 => 3.0 * r + e,
                1 => 3.0 - e,
                _ if d.is_multiple_of(2) => e,
                _ => -e,
            }
        } else {
            let t = r - 1.0;
            (d..6)
                .map(|k| {
                    let c: f64 = (0..d).map(|j| (k - j) as f64).product();
                    self.blend[k] * c * t.powi((k - d) as i32)
                })
                .sum()
        }
    }

    /// `∂^d φ_A(x)` with `φ_A(x) = A² φ(|x|/A)`.
    pub fn derivative(&self, x: f64, d: usize) -> f64 {
        if x.abs() <= self.a {
            return match d {
                0 => 0.5 * x * x,
                1 => x,
                2 => 1.0,
                _ => 0.0,
            };
        }
        let sign = if x < 0.0 && d % 2 == 1 { -1.0 } else { 1.0 };
        sign * self.a.powi(2 - d as i32) * self.phi_d(x.abs() / self.a, d)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }

    /// `max(0, −min φ'')` over the blend interval.
    pub fn convexity_defect(&self) -> f64 {
        let min = (0..=1000)
            .map(|i| self.phi_d(1.0 + i as f64 / 1000.0, 2))
            .fold(f64::INFINITY, f64::min);
        (-min).max(0.0)
    }
}

/// `H = ½‖∂ε‖² + ½‖ε‖² − ∫(F(P_b+ε) − F(P_b) − dF(P_b)ε) − ½λμ|ε(0)|²`
/// with `F(u) = |u|⁶/6`.
pub fn functional_h(
    eps: &ComplexField,
    b: f64,
    lambda: f64,
    coeffs: &ProfileCoefficients,
) -> Result<f64> {
    eps.grid().check_same(coeffs.grid())?;
    let pb = coeffs.eval_pb(b, lambda);
    let g = *eps.grid();
    let mut nonlinear = 0.0;
    for i in 0..g.len() {
        let (p, e) = (pb[i], eps[i]);
        let a = p.norm_sqr();
        let d = 2.0 * (p * e.conj()).re + e.norm_sqr();
        nonlinear += g.weight(i) * (0.5 * a * a * e.norm_sqr() + 0.5 * a * d * d + d * d * d / 6.0);
    }
    Ok(0.5 * eps.grad_l2_sq() + 0.5 * eps.l2_sq()
        - nonlinear
        - 0.5 * lambda * coeffs.mu * eps.at_origin().norm_sqr())
}

/// `J = ½ Im ∫ φ_A' ∂ε ε̄`.
pub fn functional_j(eps: &ComplexField, weight: &MorawetzWeight) -> f64 {
    let d = eps.gradient();
    let g = eps.grid();
    0.5 * (0..g.len())
        .map(|i| g.weight(i) * weight.derivative(g.x(i), 1) * (d[i] * eps[i].conj()).im)
        .sum::<f64>()
}

/// `S = λ^{-4}(H + bJ)`.
pub fn functional_s(
    eps: &ComplexField,
    state: &ModulationState,
    weight: &MorawetzWeight,
    coeffs: &ProfileCoefficients,
) -> Result<f64> {
    let h = functional_h(eps, state.b, state.lambda, coeffs)?;
    Ok((h + state.b * functional_j(eps, weight)) / state.lambda.powi(4))
}

/// Projects `eps` onto the complement of `iΛP_b`, `|y|²P_b`, `iρ_b`, `P_b`.
pub fn project_constraints(
    eps: &ComplexField,
    b: f64,
    lambda: f64,
    coeffs: &ProfileCoefficients,
) -> Result<ComplexField> {
    let d = directions(coeffs, b, lambda);
    let mut basis: Vec<ComplexField> = Vec::new();
    for v in [d.i_lambda_pb, d.y2_pb, d.i_rho_b, d.pb] {
        let mut w = v;
        for e in &basis {
            let c = w.inner(e)?;
            w = w.axpy(-c, e)?;
        }
        let n = w.l2();
        basis.push(w.scale(1.0 / n));
    }
    let mut out = eps.clone();
    for _ in 0..2 {
        for e in &basis {
            let c = out.inner(e)?;
            out = out.axpy(-c, e)?;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoercivityReport {
    pub min_ratio: f64,
    pub ratios: Vec<f64>,
    pub seed: u64,
}

pub const DEFAULT_SEED: u64 = 20240531;

/// Random even decaying `ε`, projected and scaled to `‖ε‖_{H¹} = amplitude`.
pub fn random_perturbation(
    rng: &mut ChaCha8Rng,
    amplitude: f64,
    b: f64,
    lambda: f64,
    coeffs: &ProfileCoefficients,
    project: bool,
) -> Result<ComplexField> {
    let alpha: f64 = rng.gen_range(0.2..2.0);
    let c: Vec<Complex64> = (0..4)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let raw = ComplexField::from_fn(*coeffs.grid(), |y| {
        let y2 = y * y;
        let poly = c[0] + c[1] * y2 + c[2] * y2 * y2 * 0.5 + c[3] * y2 * y2 * y2 / 6.0;
        poly * (-alpha * y2).exp()
    });
    let eps = if project {
        project_constraints(&raw, b, lambda, coeffs)?
    } else {
        raw
    };
    let n = h1_sq(&eps).sqrt();
    if n == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(eps.scale(amplitude / n))
}

/// Minimum of `H/‖ε‖²_{H¹}` over seeded constrained samples.
pub fn coercivity_h_check(
    n_samples: usize,
    amplitude: f64,
    b: f64,
    lambda: f64,
    coeffs: &ProfileCoefficients,
    seed: u64,
) -> Result<CoercivityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ratios = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let eps = random_perturbation(&mut rng, amplitude, b, lambda, coeffs, true)?;
        ratios.push(functional_h(&eps, b, lambda, coeffs)? / h1_sq(&eps));
    }
    let min_ratio = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(CoercivityReport {
        min_ratio,
        ratios,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blend_matches_pieces() {
        let w = MorawetzWeight::new(1.5).unwrap();
        for d in 0..3 {
            for r in [1.0, 2.0] {
                let lo = w.phi_d(r - 1e-12, d);
                let hi = w.phi_d(r + 1e-12, d);
                assert!((lo - hi).abs() < 1e-9, "d={d} r={r}: {lo} {hi}");
            }
        }
    }

    #[test]
    fn derivative_of_uniform_samples() {
        let x: Vec<f64> = (0..5)
            .map(|i| 0.3 * i as f64 + 0.05 * (i * i) as f64)
            .collect();
        let f: Vec<f64> = x.iter().map(|v| v * v).collect();
        let d = derivative(&x, &f);
        for (xi, di) in x.iter().zip(d) {
            assert!((di - 2.0 * xi).abs() < 1e-12);
        }
    }
}
