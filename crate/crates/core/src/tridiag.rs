//! Thomas algorithm for tridiagonal systems.
//!
//! Row `i` reads `lower[i-1] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`,
//! so `lower` and `upper` both have length `n - 1`.
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Banded storage of a tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct Tridiagonal<T> {
    pub lower: Vec<T>,
    pub diag: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Scalar> Tridiagonal<T> {
    pub fn new(lower: Vec<T>, diag: Vec<T>, upper: Vec<T>) -> Self {
        assert_eq!(lower.len() + 1, diag.len());
        assert_eq!(upper.len() + 1, diag.len());
        Self { lower, diag, upper }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Matrix-vector product.
    pub fn apply<U>(&self, x: &[U]) -> Vec<U>
    where
        U: Scalar + std::ops::Mul<T, Output = U>,
    {
        let n = self.len();
        assert_eq!(x.len(), n);
        let mut out = vec![U::zero(); n];
        for i in 0..n {
            let mut acc = x[i] * self.diag[i];
            if i > 0 {
                acc += x[i - 1] * self.lower[i - 1];
            }
            if i + 1 < n {
                acc += x[i + 1] * self.upper[i];
            }
            out[i] = acc;
        }
        out
    }

    /// Solves `A x = rhs` without pivoting.
    pub fn solve<U>(&self, rhs: &[U]) -> Result<Vec<U>>
    where
        U: Scalar + std::ops::Mul<T, Output = U> + std::ops::Div<T, Output = U>,
    {
        let n = self.len();
        assert_eq!(rhs.len(), n);
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut c = vec![T::zero(); n];
        let mut d = vec![U::zero(); n];
        let mut pivot = self.diag[0];
        check_pivot(pivot, 0)?;
        if n > 1 {
            c[0] = self.upper[0] / pivot;
        }
        d[0] = rhs[0] / pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.lower[i - 1] * c[i - 1];
            check_pivot(pivot, i)?;
            if i + 1 < n {
                c[i] = self.upper[i] / pivot;
            }
            d[i] = (rhs[i] - d[i - 1] * self.lower[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            let next = d[i + 1];
            d[i] -= next * c[i];
        }
        Ok(d)
    }
}

fn check_pivot<T: Scalar>(pivot: T, row: usize) -> Result<()> {
    let p = pivot.abs();
    if p == 0.0 || !p.is_finite() {
        return Err(Error::SolverBreakdown { row, pivot: p });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn solves_small_real_system() {
        let a = Tridiagonal::new(vec![1.0, 1.0], vec![4.0, 4.0, 4.0], vec![1.0, 1.0]);
        let x = vec![1.0, -2.0, 3.0];
        let b = a.apply(&x);
        let y = a.solve(&b).unwrap();
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn solves_complex_system() {
        let i = Complex64::i();
        let one = Complex64::new(1.0, 0.0);
        let a = Tridiagonal::new(
            vec![-one, -one, -one],
            vec![2.0 * one + i, 2.0 * one + i, 2.0 * one + i, 2.0 * one + i],
            vec![-one, -one, -one],
        );
        let x = vec![one, i, -one, 2.0 * i];
        let y = a.solve(&a.apply(&x)).unwrap();
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).norm() < 1e-14);
        }
    }

    #[test]
    fn reports_zero_pivot() {
        let a = Tridiagonal::new(vec![1.0], vec![0.0, 1.0], vec![1.0]);
        assert!(matches!(
            a.solve(&[1.0, 1.0]),
            Err(Error::SolverBreakdown { row: 0, .. })
        ));
    }
}
