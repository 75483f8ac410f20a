//! The refined blow-up profile
//! `P = Q + Σ b^{2j} λ^{k+1} P⁺_{jk} + i Σ b^{2j+1} λ^{k+1} P⁻_{jk}`
//! and its modulation correction `θ = Σ b^{2j} λ^{k+1} β_{jk}`.
//!
//! Sources of each block are read off the residual series
//! `R = i D[P] + P'' − P + |P|⁴P + λμδP + θ|y|²P/4`, where
//! `D = −b λ∂_λ + (θ − b²) ∂_b` is `∂_s` after the substitutions
//! `λ_s/λ = −b` and `b_s = θ − b²`.
use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid, RealField};
use crate::ground_state::{discrete_ground_state, energy, GroundStateSpec};
use crate::linops::{rho, LinearizedOperator};
use crate::series::BivariateSeries;

/// Correctors and β of one `(j, k)` block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub plus: RealField,
    pub minus: RealField,
    pub beta: f64,
    /// `‖L₊P⁺ − F⁺ − β|y|²Q/4‖₂` and `‖L₋P⁻ − F⁻ + cP⁺‖₂`.
    pub system_residuals: [f64; 2],
    pub source_norms: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCoefficients {
    pub order: usize,
    pub mu: f64,
    pub q: RealField,
    pub rho: RealField,
    #[serde(with = "block_list")]
    pub blocks: BTreeMap<(usize, usize), Block>,
}

/// Blocks as a list of `(j, k, block)`, since JSON keys must be strings.
mod block_list {
    use super::Block;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<(usize, usize), Block>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let list: Vec<(usize, usize, &Block)> = map.iter().map(|(&(j, k), b)| (j, k, b)).collect();
        list.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<(usize, usize), Block>, D::Error> {
        let list: Vec<(usize, usize, Block)> = Vec::deserialize(d)?;
        Ok(list.into_iter().map(|(j, k, b)| ((j, k), b)).collect())
    }
}

/// Sources `F⁺`, `F⁻` of a block.
#[derive(Debug, Clone, PartialEq)]
pub struct Sources {
    pub plus: RealField,
    pub minus: RealField,
}

/// Blocks of `Σ_K` in recursion order: `k` outer, `j` inner.
pub fn block_order(order: usize) -> Vec<(usize, usize)> {
    (0..=order)
        .flat_map(|k| (0..=order - k).map(move |j| (j, k)))
        .collect()
}

fn precedes(a: (usize, usize), b: (usize, usize)) -> bool {
    a.1 < b.1 || (a.1 == b.1 && a.0 < b.0)
}

/// Largest supported truncation order.
pub const MAX_ORDER: usize = 3;

impl ProfileCoefficients {
    pub fn grid(&self) -> &Grid {
        self.q.grid()
    }

    pub fn beta(&self, j: usize, k: usize) -> Option<f64> {
        self.blocks.get(&(j, k)).map(|b| b.beta)
    }

    fn degree(&self) -> usize {
        2 * self.order + 2
    }

    /// `P` as a series, restricted to blocks accepted by `keep`.
    fn p_series(&self, keep: impl Fn((usize, usize)) -> bool) -> BivariateSeries<ComplexField> {
        let d = self.degree();
        let mut p = BivariateSeries::monomial(d, 0, 0, self.q.to_complex());
        for (&(j, k), blk) in &self.blocks {
            if keep((j, k)) {
                p.add_term(2 * j, k + 1, blk.plus.to_complex());
                p.add_term(2 * j + 1, k + 1, blk.minus.to_complex().mul_i());
            }
        }
        p
    }

    fn theta_series(&self, keep: impl Fn((usize, usize)) -> bool) -> BivariateSeries<f64> {
        let mut t = BivariateSeries::new(self.degree());
        for (&(j, k), blk) in &self.blocks {
            if keep((j, k)) {
                t.add_term(2 * j, k + 1, blk.beta);
            }
        }
        t
    }

    /// Residual series of the full profile, truncated at total degree `2K+2`.
    pub fn residual_series(&self) -> BivariateSeries<ComplexField> {
        residual_series(
            &self.p_series(|_| true),
            &self.theta_series(|_| true),
            self.mu,
        )
    }

    pub fn eval_p(&self, b: f64, lambda: f64) -> ComplexField {
        &self.q.to_complex() + &self.eval_correction(b, lambda)
    }

    /// `P − Q` at `(b, λ)`.
    pub fn eval_correction(&self, b: f64, lambda: f64) -> ComplexField {
        let mut out = ComplexField::zeros(*self.grid());
        for (&(j, k), blk) in &self.blocks {
            let wp = b.powi(2 * j as i32) * lambda.powi(k as i32 + 1);
            let wm = wp * b;
            for i in 0..out.len() {
                out[i] += Complex64::new(wp * blk.plus[i], wm * blk.minus[i]);
            }
        }
        out
    }

    pub fn eval_theta(&self, b: f64, lambda: f64) -> f64 {
        self.blocks
            .iter()
            .map(|(&(j, k), blk)| blk.beta * b.powi(2 * j as i32) * lambda.powi(k as i32 + 1))
            .sum()
    }

    /// `P_b = P e^{−ib|y|²/4}`.
    pub fn eval_pb(&self, b: f64, lambda: f64) -> ComplexField {
        self.eval_p(b, lambda)
            .map_x(|y, v| v * Complex64::from_polar(1.0, -b * y * y / 4.0))
    }

    /// `λ∂_λ P` and `∂_b P` at `(b, λ)`.
    fn eval_derivatives(&self, b: f64, lambda: f64) -> (ComplexField, ComplexField) {
        let g = *self.grid();
        let mut pl = ComplexField::zeros(g);
        let mut pb = ComplexField::zeros(g);
        for (&(j, k), blk) in &self.blocks {
            let lk = lambda.powi(k as i32 + 1);
            let kk = (k + 1) as f64;
            let even = b.powi(2 * j as i32) * lk;
            let odd = b.powi(2 * j as i32 + 1) * lk;
            let d_even = if j > 0 {
                2.0 * j as f64 * b.powi(2 * j as i32 - 1) * lk
            } else {
                0.0
            };
            let d_odd = (2 * j + 1) as f64 * even;
            for i in 0..g.len() {
                pl[i] += Complex64::new(kk * even * blk.plus[i], kk * odd * blk.minus[i]);
                pb[i] += Complex64::new(d_even * blk.plus[i], d_odd * blk.minus[i]);
            }
        }
        (pl, pb)
    }

    /// `Q'' − Q + Q⁵` on the grid, the residual at `b = λ = 0`.
    pub fn ground_defect(&self) -> RealField {
        let q = &self.q;
        let r = q.second_derivative();
        r.zip_with(q, |d2, v| d2 - v + v.powi(5))
            .expect("same grid")
    }

    /// Direct evaluation of the profile equation residual at `(b, λ)`,
    /// with the `b = λ = 0` defect of the discrete ground state removed.
    /// Terms are formed from `Z = P − Q` so that nothing of order one cancels.
    pub fn residual_field(&self, b: f64, lambda: f64) -> ComplexField {
        let z = self.eval_correction(b, lambda);
        let p = &self.q.to_complex() + &z;
        let theta = self.eval_theta(b, lambda);
        let (pl, pb) = self.eval_derivatives(b, lambda);
        let lap = z.second_derivative();
        let delta = p.discrete_delta_apply(lambda * self.mu);
        let i = Complex64::i();
        let mut out = ComplexField::zeros(*self.grid());
        for n in 0..out.len() {
            let y = self.grid().x(n);
            let (qn, zn) = (self.q[n], z[n]);
            let e = 2.0 * qn * zn.re + zn.norm_sqr();
            let nonlinear = zn * qn.powi(4) + (p[n]) * (2.0 * qn * qn * e + e * e);
            let ds = -b * pl[n] + (theta - b * b) * pb[n];
            out[n] = i * ds + lap[n] - zn + nonlinear + delta[n] + p[n] * (theta * y * y / 4.0);
        }
        out
    }
}

/// Residual series for given `P` and `θ` series.
pub fn residual_series(
    p: &BivariateSeries<ComplexField>,
    theta: &BivariateSeries<f64>,
    mu: f64,
) -> BivariateSeries<ComplexField> {
    let d = p.max_total_degree();
    let lam_dl = p.lambda_d_lambda();
    let db = p.d_b();
    let b = BivariateSeries::monomial(d, 1, 0, 1.0);
    let b2 = BivariateSeries::monomial(d, 2, 0, 1.0);
    let ds = lam_dl
        .mul_scalar_series(&b)
        .neg()
        .add(&db.mul_scalar_series(&theta.sub(&b2)));
    let i_ds = ds.map_coefficients(|c| c.mul_i());
    let lin = p.map_coefficients(|c| &c.second_derivative() - c);
    let pp = p.mul(&p.conj());
    let nonlinear = pp.mul(&pp).mul(p);
    let delta = p
        .map_coefficients(|c| c.discrete_delta_apply(mu))
        .shift(0, 1);
    let potential = p
        .map_coefficients(|c| c.map_x(|y, v| v * (y * y / 4.0)))
        .mul_scalar_series(theta);
    i_ds.add(&lin).add(&nonlinear).add(&delta).add(&potential)
}

fn coefficient_part(
    r: &BivariateSeries<ComplexField>,
    m: usize,
    n: usize,
    grid: Grid,
    real: bool,
) -> RealField {
    match r.get(m, n) {
        Some(c) if real => c.re(),
        Some(c) => c.im(),
        None => RealField::zeros(grid),
    }
}

/// Sources of block `(j, k)` from the blocks that precede it.
pub fn extract_sources(partial: &ProfileCoefficients, j: usize, k: usize) -> Result<Sources> {
    for blk in block_order(partial.order) {
        if precedes(blk, (j, k)) && !partial.blocks.contains_key(&blk) {
            return Err(Error::MissingBlock { j: blk.0, k: blk.1 });
        }
    }
    let keep = |blk: (usize, usize)| precedes(blk, (j, k));
    let r = residual_series(
        &partial.p_series(keep),
        &partial.theta_series(keep),
        partial.mu,
    );
    let g = *partial.grid();
    Ok(Sources {
        plus: coefficient_part(&r, 2 * j, k + 1, g, true),
        minus: coefficient_part(&r, 2 * j + 1, k + 1, g, false),
    })
}

/// Solves the block systems of `Σ_K` in recursion order on `grid`.
pub fn build_profile(order: usize, mu: f64, grid: Grid) -> Result<ProfileCoefficients> {
    if order > MAX_ORDER {
        return Err(Error::InvalidParameter(format!(
            "order {order} above supported maximum {MAX_ORDER}"
        )));
    }
    let q = discrete_ground_state(GroundStateSpec::default(), grid)?;
    let r = rho(&q)?;
    let lp = LinearizedOperator::plus(&q);
    let lm = LinearizedOperator::minus(&q);
    let rho_q = r.inner(&q)?;
    let y2q = q.map_x(|y, v| y * y * v);
    let mut coeffs = ProfileCoefficients {
        order,
        mu,
        q: q.clone(),
        rho: r.clone(),
        blocks: BTreeMap::new(),
    };
    for (j, k) in block_order(order) {
        let src = extract_sources(&coeffs, j, k)?;
        let c = (k + 1 + 2 * j) as f64;
        let u = lp.solve_plus(&src.plus)?;
        let beta = 4.0 * (src.minus.inner(&q)? / c - u.inner(&q)?) / rho_q;
        let plus = u.axpy(beta / 4.0, &r)?;
        let rhs = src.minus.axpy(-c, &plus)?;
        let minus = lm.solve_minus(&rhs).map_err(|e| Error::Block {
            j,
            k,
            source: Box::new(e),
        })?;
        let res_plus = (&lp.apply(&plus)? - &src.plus)
            .axpy(-beta / 4.0, &y2q)?
            .l2();
        let res_minus = (&lm.apply(&minus)? - &src.minus).axpy(c, &plus)?.l2();
        let source_norms = [src.plus.l2(), src.minus.l2()];
        for (res, norm) in [(res_plus, source_norms[0]), (res_minus, source_norms[1])] {
            if !(res <= 1e-8 * (1.0 + norm)) {
                return Err(Error::Block {
                    j,
                    k,
                    source: Box::new(Error::NonConvergence {
                        what: format!("block system (residual {res:.3e})"),
                        iterations: 1,
                    }),
                });
            }
        }
        coeffs.blocks.insert(
            (j, k),
            Block {
                plus,
                minus,
                beta,
                system_residuals: [res_plus, res_minus],
                source_norms,
            },
        );
    }
    Ok(coeffs)
}

/// Whether `(b, λ)` lies in the small-parameter regime `|b| + λ ≤ 0.5`.
pub fn in_regime(b: f64, lambda: f64) -> bool {
    b.abs() + lambda <= 0.5 && lambda >= 0.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub field: ComplexField,
    /// `sup_{|y| ≤ L/2} e^{|y|/2} (|Ψ| + |∂_yΨ|)`.
    pub weighted_sup: f64,
    pub in_regime: bool,
}

pub fn residual_psi(coeffs: &ProfileCoefficients, b: f64, lambda: f64) -> Residual {
    let field = coeffs.residual_field(b, lambda);
    let d = field.first_derivative();
    let cut = 0.5 * coeffs.grid().half_width();
    let mut sup = 0.0f64;
    for i in 0..field.len() {
        let y = coeffs.grid().x(i);
        if y.abs() <= cut {
            sup = sup.max((0.5 * y.abs()).exp() * (field[i].norm() + d[i].norm()));
        }
    }
    Residual {
        field,
        weighted_sup: sup,
        in_regime: in_regime(b, lambda),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyExpansion {
    /// `E(λ^{-1/2} P_b(·/λ))` with the grid's Pohozaev defect of `Q` removed.
    pub e_profile: f64,
    pub e_profile_raw: f64,
    /// `(1/8)(b²/λ² − 2β/λ) ‖yQ‖²`.
    pub e_leading: f64,
    pub gap: f64,
    /// `E(Q)` on the grid, which is zero in the continuum.
    pub pohozaev_defect: f64,
}

/// Energy of the rescaled profile against its leading expansion. The
/// physical energy is evaluated in `y` through
/// `E(λ^{-1/2}v(·/λ)) = λ^{-2}(½‖v'‖² − ⅙‖v‖₆⁶ − ½λμ|v(0)|²)`.
pub fn energy_expansion_check(
    coeffs: &ProfileCoefficients,
    b: f64,
    lambda: f64,
) -> Result<EnergyExpansion> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda}")));
    }
    let pb = coeffs.eval_pb(b, lambda);
    let scaled = energy(&pb, lambda * coeffs.mu) / (lambda * lambda);
    let defect = energy(&coeffs.q, 0.0);
    let e_profile = scaled - defect / (lambda * lambda);
    let beta = coeffs.beta(0, 0).unwrap_or(0.0);
    let yq = coeffs.q.map_x(|y, v| y * y * v).inner(&coeffs.q)?;
    let e_leading = (b * b / (lambda * lambda) - 2.0 * beta / lambda) * yq / 8.0;
    Ok(EnergyExpansion {
        e_profile,
        e_profile_raw: scaled,
        e_leading,
        gap: (e_profile - e_leading).abs(),
        pohozaev_defect: defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recursion_order() {
        assert_eq!(block_order(1), vec![(0, 0), (1, 0), (0, 1)]);
        assert_eq!(block_order(2).len(), 6);
        assert!(precedes((2, 0), (0, 1)));
        assert!(!precedes((0, 1), (1, 0)));
    }

    #[test]
    fn order_above_maximum_is_rejected() {
        let g = Grid::new(5.0, 0.1).unwrap();
        assert!(build_profile(4, 1.0, g).is_err());
    }

    #[test]
    fn regime() {
        assert!(in_regime(0.1, 0.01));
        assert!(!in_regime(0.4, 0.2));
    }
}
