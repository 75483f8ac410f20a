//! Uniform symmetric grids, grid functions, quadrature and stencils.
//!
//! Every discrete operator closes the domain with ghost zeros outside
//! `[-L, L]`, so boundary samples behave as Dirichlet data.
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Uniform grid on `[-L, L]` with an odd number of nodes so that 0 is a node.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Grid {
    half_width: f64,
    spacing: f64,
    nodes: usize,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.half_width == other.half_width
    }
}

impl Default for Grid {
    fn default() -> Self {
        Grid::new(20.0, 0.01).expect("default grid is valid")
    }
}

impl Grid {
    /// Builds the grid whose spacing is the closest to `spacing` that
    /// divides `[-L, L]` into an even number of cells.
    pub fn new(half_width: f64, spacing: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!("half width {half_width}")));
        }
        if !(spacing > 0.0 && spacing <= half_width) {
            return Err(Error::InvalidGrid(format!("spacing {spacing}")));
        }
        let half_cells = (half_width / spacing).round() as usize;
        Self::with_nodes(half_width, 2 * half_cells + 1)
    }

    pub fn with_nodes(half_width: f64, nodes: usize) -> Result<Self> {
        if nodes < 3 || nodes.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "node count {nodes} must be odd and at least 3"
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!("half width {half_width}")));
        }
        Ok(Grid {
            half_width,
            spacing: 2.0 * half_width / (nodes - 1) as f64,
            nodes,
        })
    }

    /// Same domain, half the spacing.
    pub fn refined(&self) -> Self {
        Self::with_nodes(self.half_width, 2 * self.nodes - 1).expect("refinement of a valid grid")
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.nodes
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the node at `x = 0`.
    pub fn origin(&self) -> usize {
        (self.nodes - 1) / 2
    }

    /// Node coordinate; the origin is exactly zero and nodes are mirror images.
    pub fn x(&self, i: usize) -> f64 {
        let m = self.origin();
        (i as isize - m as isize) as f64 * self.half_width / m as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nodes).map(|i| self.x(i)).collect()
    }

    /// Trapezoid weight.
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.nodes {
            0.5 * self.spacing
        } else {
            self.spacing
        }
    }

    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "({}, {}) vs ({}, {})",
                self.half_width, self.nodes, other.half_width, other.nodes
            )))
        }
    }
}

/// Samples of a function on a [`Grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field<T> {
    grid: Grid,
    values: Vec<T>,
}

pub type RealField = Field<f64>;
pub type ComplexField = Field<Complex64>;

/// Discrete norms of a field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l2: f64,
    pub l6: f64,
    pub grad_l2: f64,
    pub h1: f64,
}

impl<T: Scalar> Field<T> {
    pub fn new(grid: Grid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Field {
            grid,
            values: vec![T::zero(); grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> T) -> Self {
        Field {
            grid,
            values: (0..grid.len()).map(|i| f(grid.x(i))).collect(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at_origin(&self) -> T {
        self.values[self.grid.origin()]
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Field<U> {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Like [`Field::map`] but also passes the node coordinate.
    pub fn map_x<U: Scalar>(&self, f: impl Fn(f64, T) -> U) -> Field<U> {
        Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(i, &v)| f(self.grid.x(i), v))
                .collect(),
        }
    }

    pub fn zip_with<U: Scalar, V: Scalar>(
        &self,
        other: &Field<U>,
        f: impl Fn(T, U) -> V,
    ) -> Result<Field<V>> {
        self.grid.check_same(&other.grid)?;
        Ok(Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| v * c)
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b * c)
    }

    pub fn conj(&self) -> Self {
        self.map(Scalar::conj)
    }

    pub fn re(&self) -> RealField {
        self.map(Scalar::re)
    }

    pub fn im(&self) -> RealField {
        self.map(Scalar::im)
    }

    pub fn to_complex(&self) -> ComplexField {
        self.map(Scalar::to_complex)
    }

    pub fn abs(&self) -> RealField {
        self.map(Scalar::abs)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Trapezoid integral of `g(x, u(x))`.
    pub fn integrate_with(&self, g: impl Fn(f64, T) -> f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| self.grid.weight(i) * g(self.grid.x(i), v))
            .sum()
    }

    /// Real inner product `Re ∫ u v̄`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .enumerate()
            .map(|(i, (&a, &b))| self.grid.weight(i) * (a * b.conj()).re())
            .sum())
    }

    pub fn l2_sq(&self) -> f64 {
        self.integrate_with(|_, v| v.abs2())
    }

    pub fn l2(&self) -> f64 {
        self.l2_sq().sqrt()
    }

    pub fn l6(&self) -> f64 {
        self.integrate_with(|_, v| v.abs2().powi(3)).powf(1.0 / 6.0)
    }

    /// Fourth-order centered gradient samples with ghost zeros.
    pub fn gradient(&self) -> Self {
        let n = self.len();
        let h = self.grid.spacing;
        let at = |i: isize| -> T {
            if i < 0 || i >= n as isize {
                T::zero()
            } else {
                self.values[i as usize]
            }
        };
        let values = (0..n as isize)
            .map(|i| {
                (at(i - 2) - at(i - 1) * 8.0 + at(i + 1) * 8.0 - at(i + 2)) * (1.0 / (12.0 * h))
            })
            .collect();
        Field {
            grid: self.grid,
            values,
        }
    }

    pub fn grad_l2_sq(&self) -> f64 {
        self.gradient().l2_sq()
    }

    pub fn norms(&self) -> Norms {
        let l2sq = self.l2_sq();
        let gsq = self.grad_l2_sq();
        Norms {
            l2: l2sq.sqrt(),
            l6: self.l6(),
            grad_l2: gsq.sqrt(),
            h1: (l2sq + gsq).sqrt(),
        }
    }

    /// Three-point second derivative with ghost zeros.
    pub fn second_derivative(&self) -> Self {
        let n = self.len();
        let ih2 = 1.0 / (self.grid.spacing * self.grid.spacing);
        let v = &self.values;
        let values = (0..n)
            .map(|i| {
                let left = if i > 0 { v[i - 1] } else { T::zero() };
                let right = if i + 1 < n { v[i + 1] } else { T::zero() };
                (left + right - v[i] * 2.0) * ih2
            })
            .collect();
        Field {
            grid: self.grid,
            values,
        }
    }

    /// Centered first derivative, one-sided at the two end nodes.
    pub fn first_derivative(&self) -> Self {
        let n = self.len();
        let h = self.grid.spacing;
        let v = &self.values;
        let values = (0..n)
            .map(|i| {
                if i == 0 {
                    (v[1] - v[0]) * (1.0 / h)
                } else if i + 1 == n {
                    (v[n - 1] - v[n - 2]) * (1.0 / h)
                } else {
                    (v[i + 1] - v[i - 1]) * (0.5 / h)
                }
            })
            .collect();
        Field {
            grid: self.grid,
            values,
        }
    }

    /// `Λu = u/2 + x u'`.
    pub fn lambda_op(&self) -> Self {
        let d = self.first_derivative();
        Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&d.values)
                .enumerate()
                .map(|(i, (&u, &du))| u * 0.5 + du * self.grid.x(i))
                .collect(),
        }
    }

    /// Field equal to `(mu/h) u(0)` at the origin and zero elsewhere.
    pub fn discrete_delta_apply(&self, mu: f64) -> Self {
        let mut out = Self::zeros(self.grid);
        let o = self.grid.origin();
        out.values[o] = self.values[o] * (mu / self.grid.spacing);
        out
    }

    /// Largest deviation from the mirror image `u(-x)`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.len();
        (0..n / 2)
            .map(|i| (self.values[i] - self.values[n - 1 - i]).abs())
            .fold(0.0, f64::max)
    }

    /// Samples at `x >= 0`, origin first.
    pub fn half_line(&self) -> Vec<T> {
        self.values[self.grid.origin()..].to_vec()
    }

    /// Even extension of half-line samples (origin first).
    pub fn from_half_line(grid: Grid, half: &[T]) -> Result<Self> {
        let m = grid.origin();
        if half.len() != m + 1 {
            return Err(Error::GridMismatch(format!(
                "{} half-line values for {} nodes",
                half.len(),
                m + 1
            )));
        }
        let values = (0..grid.len())
            .map(|i| half[(i as isize - m as isize).unsigned_abs()])
            .collect();
        Ok(Field { grid, values })
    }
}

impl ComplexField {
    pub fn from_parts(re: &RealField, im: &RealField) -> Result<Self> {
        re.zip_with(im, Complex64::new)
    }

    pub fn mul_i(&self) -> Self {
        self.map(|v| v * Complex64::i())
    }

    pub fn scale_c(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    /// CSV with header `x,re,im`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.len() * 72);
        s.push_str("x,re,im\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(s, "{:.16e},{:.16e},{:.16e}", self.grid.x(i), v.re, v.im);
        }
        s
    }

    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    /// Reads a field written by [`ComplexField::to_csv`]; the grid is
    /// reconstructed from the first and last abscissae.
    pub fn read_csv(r: impl BufRead) -> Result<Self> {
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with('x')) {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(Error::Parse(format!(
                    "line {}: expected 3 columns",
                    lineno + 1
                )));
            }
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            xs.push(num(cols[0])?);
            values.push(Complex64::new(num(cols[1])?, num(cols[2])?));
        }
        if xs.len() < 3 {
            return Err(Error::TooFewSamples {
                needed: 3,
                got: xs.len(),
            });
        }
        let half_width = -xs[0];
        if (xs[xs.len() - 1] - half_width).abs() > 1e-9 * half_width {
            return Err(Error::InvalidGrid("abscissae are not symmetric".into()));
        }
        let grid = Grid::with_nodes(half_width, xs.len())?;
        Field::new(grid, values)
    }
}

impl<T> Index<usize> for Field<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.values[i]
    }
}

impl<T> IndexMut<usize> for Field<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.values[i]
    }
}

impl<T: Scalar> Add for &Field<T> {
    type Output = Field<T>;
    fn add(self, rhs: Self) -> Field<T> {
        self.zip_with(rhs, |a, b| a + b)
            .expect("grid mismatch in +")
    }
}

impl<T: Scalar> Sub for &Field<T> {
    type Output = Field<T>;
    fn sub(self, rhs: Self) -> Field<T> {
        self.zip_with(rhs, |a, b| a - b)
            .expect("grid mismatch in -")
    }
}

impl<T: Scalar> Neg for &Field<T> {
    type Output = Field<T>;
    fn neg(self) -> Field<T> {
        self.map(|v| -v)
    }
}

impl<T: Scalar> Mul<f64> for &Field<T> {
    type Output = Field<T>;
    fn mul(self, c: f64) -> Field<T> {
        self.scale(c)
    }
}

/// Pointwise product.
impl<T: Scalar> Mul for &Field<T> {
    type Output = Field<T>;
    fn mul(self, rhs: Self) -> Field<T> {
        self.zip_with(rhs, |a, b| a * b)
            .expect("grid mismatch in *")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(x: f64) -> f64 {
        (-x * x).exp()
    }

    #[test]
    fn origin_is_a_node_and_nodes_are_symmetric() {
        let g = Grid::new(20.0, 0.01).unwrap();
        assert_eq!(g.len(), 4001);
        assert_eq!(g.x(g.origin()), 0.0);
        for i in 0..g.len() {
            assert_eq!(g.x(i), -g.x(g.len() - 1 - i));
        }
        assert!((g.x(0) + 20.0).abs() < 1e-12);
    }

    #[test]
    fn even_node_counts_are_rejected() {
        assert!(Grid::with_nodes(1.0, 4).is_err());
        assert!(Grid::with_nodes(1.0, 1).is_err());
    }

    #[test]
    fn refinement_halves_spacing() {
        let g = Grid::new(5.0, 0.1).unwrap();
        let r = g.refined();
        assert!((r.spacing() - 0.05).abs() < 1e-15);
        assert_eq!(r.x(2 * 7), g.x(7));
    }

    #[test]
    fn inner_is_orthogonal_to_i_times_self() {
        let g = Grid::new(5.0, 0.05).unwrap();
        let u = ComplexField::from_fn(g, |x| Complex64::new(bump(x), x * bump(x)));
        assert_eq!(u.inner(&u.mul_i()).unwrap(), 0.0);
    }

    #[test]
    fn second_derivative_is_exact_on_quadratics() {
        let g = Grid::new(3.0, 0.1).unwrap();
        let u = RealField::from_fn(g, |x| x * x - 3.0 * x + 1.0);
        let d = u.second_derivative();
        for i in 1..g.len() - 1 {
            assert!((d[i] - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn delta_is_supported_on_one_node() {
        let g = Grid::new(2.0, 0.1).unwrap();
        let u = RealField::from_fn(g, |x| 1.0 + x);
        let d = u.discrete_delta_apply(2.0);
        let support = d.values().iter().filter(|v| **v != 0.0).count();
        assert_eq!(support, 1);
        assert!((d.inner(&u).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn lambda_preserves_evenness() {
        let g = Grid::new(4.0, 0.02).unwrap();
        let u = RealField::from_fn(g, bump);
        let lu = u.lambda_op();
        assert!(lu.asymmetry() < 1e-14);
        assert!((lu.at_origin() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn half_line_round_trip() {
        let g = Grid::new(1.0, 0.25).unwrap();
        let u = RealField::from_fn(g, |x| x * x);
        let back = RealField::from_half_line(g, &u.half_line()).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let g = Grid::new(1.0, 0.1).unwrap();
        let u = ComplexField::from_fn(g, |x| Complex64::new(x.sin() / 3.0, x.exp()));
        let back = ComplexField::read_csv(u.to_csv().as_bytes()).unwrap();
        assert_eq!(back.grid(), u.grid());
        assert_eq!(back.values(), u.values());
    }

    #[test]
    fn zero_field_has_zero_norms() {
        let g = Grid::new(1.0, 0.1).unwrap();
        let n = ComplexField::zeros(g).norms();
        assert_eq!((n.l2, n.l6, n.grad_l2, n.h1), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = RealField::zeros(Grid::new(1.0, 0.1).unwrap());
        let b = RealField::zeros(Grid::new(1.0, 0.05).unwrap());
        assert!(matches!(a.inner(&b), Err(Error::GridMismatch(_))));
    }
}
