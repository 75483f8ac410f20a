//! Linearized operators `L₊ = -∂² + 1 - 5Q⁴` and `L₋ = -∂² + 1 - Q⁴`.
//!
//! Solves are carried out sector by sector on the half-line: even data
//! reflect through the origin, odd data vanish there.
use serde::{Deserialize, Serialize};

use crate::analytic;
use crate::error::{Error, Result};
use crate::grid::{Grid, RealField};
use crate::ground_state::{discrete_ground_state, GroundStateSpec};
use crate::halfline::{even_operator, pinned_operator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    Plus,
    Minus,
}

#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    kind: OperatorKind,
    q: RealField,
    potential: RealField,
    delta_mu: f64,
}

/// Default tolerance on `|⟨g,Q⟩| / ‖g‖₂` for `L₋` solves.
pub const TOL_SOLV: f64 = 1e-8;

impl LinearizedOperator {
    pub fn new(kind: OperatorKind, q: &RealField) -> Self {
        let power = match kind {
            OperatorKind::Plus => 5.0,
            OperatorKind::Minus => 1.0,
        };
        LinearizedOperator {
            kind,
            potential: q.map(|v| 1.0 - power * v.powi(4)),
            q: q.clone(),
            delta_mu: 0.0,
        }
    }

    pub fn plus(q: &RealField) -> Self {
        Self::new(OperatorKind::Plus, q)
    }

    pub fn minus(q: &RealField) -> Self {
        Self::new(OperatorKind::Minus, q)
    }

    /// Adds the point interaction `-μδ`.
    pub fn with_delta(mut self, mu: f64) -> Self {
        self.delta_mu = mu;
        self
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn grid(&self) -> &Grid {
        self.q.grid()
    }

    pub fn q(&self) -> &RealField {
        &self.q
    }

    pub fn potential(&self) -> &RealField {
        &self.potential
    }

    pub fn apply(&self, f: &RealField) -> Result<RealField> {
        let lap = f.second_derivative();
        let mut out = f.zip_with(&self.potential, |a, v| a * v)?;
        out = &out - &lap;
        if self.delta_mu != 0.0 {
            out = &out - &f.discrete_delta_apply(self.delta_mu);
        }
        Ok(out)
    }

    /// Applies the operator with a five-point second derivative.
    pub fn apply_fourth_order(&self, f: &RealField) -> Result<RealField> {
        let n = f.len();
        let h = f.grid().spacing();
        let v = f.values();
        let at = |i: isize| {
            if i < 0 || i >= n as isize {
                0.0
            } else {
                v[i as usize]
            }
        };
        let d2 = RealField::new(
            *f.grid(),
            (0..n as isize)
                .map(|i| {
                    (-at(i - 2) + 16.0 * at(i - 1) - 30.0 * at(i) + 16.0 * at(i + 1) - at(i + 2))
                        / (12.0 * h * h)
                })
                .collect(),
        )?;
        let out = f.zip_with(&self.potential, |a, p| a * p)?;
        Ok(&out - &d2)
    }

    fn split(&self, g: &RealField) -> Result<(RealField, RealField)> {
        self.grid().check_same(g.grid())?;
        let mirror = RealField::new(*g.grid(), g.values().iter().rev().copied().collect())?;
        Ok(((g + &mirror).scale(0.5), (g - &mirror).scale(0.5)))
    }

    fn solve_even(&self, g: &RealField) -> Result<RealField> {
        let op = even_operator(self.grid(), &self.potential.half_line(), self.delta_mu);
        RealField::from_half_line(*self.grid(), &op.solve(&g.half_line())?)
    }

    fn solve_odd(&self, g: &RealField) -> Result<RealField> {
        let grid = *self.grid();
        let m = grid.origin();
        let op = pinned_operator(&grid, &self.potential.half_line());
        let rhs = &g.half_line()[1..];
        let f = op.solve(rhs)?;
        let mut out = RealField::zeros(grid);
        for (k, v) in f.iter().enumerate() {
            out[m + 1 + k] = *v;
            out[m - 1 - k] = -*v;
        }
        Ok(out)
    }

    /// Inverts `L₊` on even data.
    pub fn solve_plus(&self, g: &RealField) -> Result<RealField> {
        if self.kind != OperatorKind::Plus {
            return Err(Error::InvalidParameter("solve_plus needs L₊".into()));
        }
        self.grid().check_same(g.grid())?;
        let asym = g.asymmetry();
        if asym > 1e-12 * g.max_abs().max(1e-300) {
            return Err(Error::NotEven(asym));
        }
        self.solve_even(g)
    }

    /// Inverts `L₋` on the complement of `Q` with the default tolerance.
    pub fn solve_minus(&self, g: &RealField) -> Result<RealField> {
        self.solve_minus_with_tol(g, TOL_SOLV)
    }

    /// Solves `L₋ f = g - ⟨g,Q⟩Q/‖Q‖²` with `⟨f, Q⟩ = 0`.
    pub fn solve_minus_with_tol(&self, g: &RealField, tol_solv: f64) -> Result<RealField> {
        if self.kind != OperatorKind::Minus {
            return Err(Error::InvalidParameter("solve_minus needs L₋".into()));
        }
        let pairing = g.inner(&self.q)?;
        let gn = g.l2();
        if pairing.abs() > tol_solv * gn {
            return Err(Error::Solvability {
                pairing: pairing.abs(),
                tolerance: tol_solv * gn,
            });
        }
        if gn == 0.0 {
            return Ok(RealField::zeros(*g.grid()));
        }
        let (even, odd) = self.split(g)?;
        let fe = self.solve_even_bordered(&even)?;
        let fo = if odd.max_abs() > 0.0 {
            self.solve_odd(&odd)?
        } else {
            RealField::zeros(*g.grid())
        };
        Ok(&fe + &fo)
    }

    /// Even-sector solve of `L f + cQ = g`, `⟨f, Q⟩ = 0`, stable whether or
    /// not `Q` is an exact kernel vector of the discrete operator.
    fn solve_even_bordered(&self, g: &RealField) -> Result<RealField> {
        let grid = *self.grid();
        let m = grid.origin();
        let v = self.potential.half_line();
        let pinned = pinned_operator(&grid, &v);
        let full = even_operator(&grid, &v, self.delta_mu);
        let ih2 = 1.0 / (grid.spacing() * grid.spacing());
        let qh = self.q.half_line();
        let gh = g.half_line();
        // rows 1..M with f_0 = 1, rhs 0
        let mut e1 = vec![0.0; m];
        e1[0] = ih2;
        let phi = pinned.solve(&e1)?;
        let psi_g = pinned.solve(&gh[1..])?;
        let psi_q = pinned.solve(&qh[1..])?;
        let lift = |f0: f64, tail: &[f64]| {
            let mut h = Vec::with_capacity(m + 1);
            h.push(f0);
            h.extend_from_slice(tail);
            h
        };
        let phi = lift(1.0, &phi);
        let psi_g = lift(0.0, &psi_g);
        let psi_q = lift(0.0, &psi_q);
        let row0 = |f: &[f64]| full.apply(f)[0];
        let qf = |f: &[f64]| -> Result<f64> { RealField::from_half_line(grid, f)?.inner(&self.q) };
        // unknowns (a, c): f = a φ + ψ_g − c ψ_Q
        let a11 = row0(&phi);
        let a12 = qh[0] - row0(&psi_q);
        let b1 = gh[0] - row0(&psi_g);
        let a21 = qf(&phi)?;
        let a22 = -qf(&psi_q)?;
        let b2 = -qf(&psi_g)?;
        let det = a11 * a22 - a12 * a21;
        if det == 0.0 || !det.is_finite() {
            return Err(Error::SolverBreakdown {
                row: 0,
                pivot: det.abs(),
            });
        }
        let a = (b1 * a22 - a12 * b2) / det;
        let c = (a11 * b2 - a21 * b1) / det;
        let f: Vec<f64> = (0..=m)
            .map(|i| a * phi[i] + psi_g[i] - c * psi_q[i])
            .collect();
        RealField::from_half_line(grid, &f)
    }

    /// `‖P⊥(L f − g)‖₂` with `P⊥` the projection off `Q`.
    pub fn projected_residual(&self, f: &RealField, g: &RealField) -> Result<f64> {
        let r = &self.apply(f)? - g;
        let c = r.inner(&self.q)? / self.q.l2_sq();
        Ok(r.axpy(-c, &self.q)?.l2())
    }
}

/// `ρ`, the even solution of `L₊ρ = |y|²Q`.
pub fn rho(q: &RealField) -> Result<RealField> {
    let g = q.map_x(|y, v| y * y * v);
    LinearizedOperator::plus(q).solve_plus(&g)
}

/// Residuals of the four algebraic identities around `Q`, in `L²(|y| ≤ L/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgebraResiduals {
    pub l_minus_q: f64,
    pub l_plus_lambda_q: f64,
    pub l_minus_y2q: f64,
    pub l_plus_rho: f64,
}

impl AlgebraResiduals {
    pub fn as_array(&self) -> [f64; 4] {
        [
            self.l_minus_q,
            self.l_plus_lambda_q,
            self.l_minus_y2q,
            self.l_plus_rho,
        ]
    }
}

fn interior_l2(f: &RealField) -> f64 {
    let cut = 0.5 * f.grid().half_width();
    f.integrate_with(|y, v| if y.abs() <= cut { v * v } else { 0.0 })
        .sqrt()
}

/// Evaluates the identities with the closed-form `Q` on `grid`. The `ρ`
/// identity is measured with the fourth-order operator, since `ρ` solves
/// the second-order one exactly. The outer half of the domain is left out
/// because the ghost-zero closure dominates there.
pub fn algebra_residuals(grid: Grid) -> Result<AlgebraResiduals> {
    let q = RealField::from_fn(grid, analytic::q);
    let lp = LinearizedOperator::plus(&q);
    let lm = LinearizedOperator::minus(&q);
    let lq = q.lambda_op();
    let y2q = q.map_x(|y, v| y * y * v);
    let r = rho(&q)?;
    Ok(AlgebraResiduals {
        l_minus_q: interior_l2(&lm.apply(&q)?),
        l_plus_lambda_q: interior_l2(&lp.apply(&lq)?.axpy(2.0, &q)?),
        l_minus_y2q: interior_l2(&lm.apply(&y2q)?.axpy(4.0, &lq)?),
        l_plus_rho: interior_l2(&(&lp.apply_fourth_order(&r)? - &y2q)),
    })
}

/// `⟨Q, ρ⟩ / (½‖yQ‖²)` with the discrete ground state and the exact
/// `‖yQ‖²`.
pub fn rho_pairing_ratio(grid: Grid) -> Result<f64> {
    let q = discrete_ground_state(GroundStateSpec::default(), grid)?;
    Ok(q.inner(&rho(&q)?)? / (0.5 * analytic::yq_l2_sq()))
}

/// The two evaluations of `β(μ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaRoutes {
    /// `2μ Q(0)² / ‖yQ‖²` with exact constants.
    pub closed_form: f64,
    /// Solvability value on the given grid.
    pub solvability_single: f64,
    /// Solvability value extrapolated from `h` and `h/2`.
    pub solvability: f64,
    pub relative_gap: f64,
}

/// `β` as the value that makes the `(0,0)` corrector orthogonal to `Q`:
/// `β = -4μ Q(0) (L₊⁻¹Q)(0) / ⟨ρ, Q⟩`.
pub fn beta_solvability(mu: f64, grid: Grid) -> Result<f64> {
    if mu == 0.0 {
        return Ok(0.0);
    }
    let q = discrete_ground_state(GroundStateSpec::default(), grid)?;
    let lp = LinearizedOperator::plus(&q);
    let w = lp.solve_plus(&q)?;
    let r = rho(&q)?;
    Ok(-4.0 * mu * q.at_origin() * w.at_origin() / r.inner(&q)?)
}

pub fn beta_coefficient(mu: f64, grid: Grid) -> Result<BetaRoutes> {
    let closed_form = analytic::beta(mu);
    let coarse = beta_solvability(mu, grid)?;
    let fine = beta_solvability(mu, grid.refined())?;
    let solvability = (4.0 * fine - coarse) / 3.0;
    let relative_gap = if closed_form == 0.0 {
        solvability.abs()
    } else {
        ((solvability - closed_form) / closed_form).abs()
    };
    Ok(BetaRoutes {
        closed_form,
        solvability_single: coarse,
        solvability,
        relative_gap,
    })
}

/// Options of the projected inverse iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapOptions {
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for GapOptions {
    fn default() -> Self {
        GapOptions {
            tol: 1e-12,
            max_iterations: 50_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoercivityGap {
    pub gap: f64,
    pub eigenvector: RealField,
    pub iterations: usize,
}

/// Smallest Rayleigh quotient of `op` over even fields orthogonal to
/// `constraints`.
pub fn coercivity_gap(
    op: &LinearizedOperator,
    constraints: &[RealField],
    opts: GapOptions,
) -> Result<CoercivityGap> {
    let grid = *op.grid();
    let vmin = op
        .potential()
        .values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let sigma = (-vmin).max(0.0) + 1.0;
    let shifted = op.potential().map(|v| v + sigma);
    let mat = even_operator(&grid, &shifted.half_line(), op.delta_mu);
    let inv = |f: &RealField| -> Result<RealField> {
        RealField::from_half_line(grid, &mat.solve(&f.half_line())?)
    };
    let k = constraints.len();
    let ainv_c: Vec<RealField> = constraints.iter().map(&inv).collect::<Result<_>>()?;
    let mut gram = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            gram[i][j] = ainv_c[j].inner(&constraints[i])?;
        }
    }
    let project = |f: &RealField| -> Result<RealField> {
        let rhs: Vec<f64> = constraints
            .iter()
            .map(|c| f.inner(c))
            .collect::<Result<_>>()?;
        let alpha = solve_dense(&gram, &rhs)?;
        let mut out = f.clone();
        for (a, c) in alpha.iter().zip(&ainv_c) {
            out = out.axpy(-a, c)?;
        }
        Ok(out)
    };
    let mut v = project(&inv(&RealField::from_fn(grid, |y| {
        (1.0 + y * y) * (-0.5 * y * y).exp()
    }))?)?;
    v = v.scale(1.0 / v.l2());
    let mut quotient = op.apply(&v)?.inner(&v)?;
    for it in 1..=opts.max_iterations {
        let next = project(&inv(&v)?)?;
        let next = next.scale(1.0 / next.l2());
        let q = op.apply(&next)?.inner(&next)?;
        let done = (q - quotient).abs() <= opts.tol * q.abs().max(1.0);
        v = next;
        quotient = q;
        if done {
            return Ok(CoercivityGap {
                gap: quotient,
                eigenvector: v,
                iterations: it,
            });
        }
    }
    Err(Error::NonConvergence {
        what: "projected inverse iteration".into(),
        iterations: opts.max_iterations,
    })
}

/// Gaussian elimination with partial pivoting for small dense systems.
pub(crate) fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .expect("nonempty");
        if m[piv][col].abs() < 1e-300 {
            return Err(Error::SolverBreakdown {
                row: col,
                pivot: m[piv][col].abs(),
            });
        }
        m.swap(col, piv);
        x.swap(col, piv);
        let (top, below) = m.split_at_mut(col + 1);
        let pivot_row = &top[col];
        for (k, r) in below.iter_mut().enumerate() {
            let f = r[col] / pivot_row[col];
            for (a, p) in r[col..].iter_mut().zip(&pivot_row[col..]) {
                *a -= f * p;
            }
            x[col + 1 + k] -= f * x[col];
        }
    }
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| m[row][c] * x[c]).sum();
        x[row] = (x[row] - s) / m[row][row];
    }
    Ok(x)
}
