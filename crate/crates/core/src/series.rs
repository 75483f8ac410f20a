//! Truncated power series in two real variables `b` and `λ`.
//!
//! A term `c · b^m λ^n` is stored under the key `(m, n)`; every operation
//! drops terms with `m + n` above the series' maximal total degree.
use std::collections::BTreeMap;
use std::fmt::Debug;

use num_complex::Complex64;

use crate::grid::{ComplexField, RealField};

/// Coefficient ring.
pub trait Coefficient: Clone + Debug + PartialEq {
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn conj(&self) -> Self;
}

/// Coefficients that can be scaled by real numbers.
pub trait RealScale: Coefficient {
    fn scale(&self, c: f64) -> Self;
}

macro_rules! scalar_coefficient {
    ($t:ty, $conj:expr) => {
        impl Coefficient for $t {
            fn add(&self, o: &Self) -> Self {
                *self + *o
            }
            fn sub(&self, o: &Self) -> Self {
                *self - *o
            }
            fn mul(&self, o: &Self) -> Self {
                *self * *o
            }
            fn neg(&self) -> Self {
                -*self
            }
            fn conj(&self) -> Self {
                $conj(*self)
            }
        }
    };
}

scalar_coefficient!(i64, |x| x);
scalar_coefficient!(f64, |x| x);
scalar_coefficient!(Complex64, |x: Complex64| x.conj());

impl RealScale for f64 {
    fn scale(&self, c: f64) -> Self {
        self * c
    }
}

impl RealScale for Complex64 {
    fn scale(&self, c: f64) -> Self {
        self * c
    }
}

macro_rules! field_coefficient {
    ($t:ty) => {
        impl Coefficient for $t {
            fn add(&self, o: &Self) -> Self {
                self + o
            }
            fn sub(&self, o: &Self) -> Self {
                self - o
            }
            fn mul(&self, o: &Self) -> Self {
                self * o
            }
            fn neg(&self) -> Self {
                -self
            }
            fn conj(&self) -> Self {
                <$t>::conj(self)
            }
        }

        impl RealScale for $t {
            fn scale(&self, c: f64) -> Self {
                <$t>::scale(self, c)
            }
        }
    };
}

field_coefficient!(RealField);
field_coefficient!(ComplexField);

#[derive(Debug, Clone, PartialEq)]
pub struct BivariateSeries<C> {
    max_total_degree: usize,
    terms: BTreeMap<(usize, usize), C>,
}

impl<C: Coefficient> BivariateSeries<C> {
    pub fn new(max_total_degree: usize) -> Self {
        BivariateSeries {
            max_total_degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn monomial(max_total_degree: usize, m: usize, n: usize, c: C) -> Self {
        let mut s = Self::new(max_total_degree);
        s.add_term(m, n, c);
        s
    }

    pub fn max_total_degree(&self) -> usize {
        self.max_total_degree
    }

    pub fn get(&self, m: usize, n: usize) -> Option<&C> {
        self.terms.get(&(m, n))
    }

    pub fn terms(&self) -> impl Iterator<Item = ((usize, usize), &C)> {
        self.terms.iter().map(|(k, v)| (*k, v))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `c b^m λ^n`, ignoring it beyond the truncation degree.
    pub fn add_term(&mut self, m: usize, n: usize, c: C) {
        if m + n > self.max_total_degree {
            return;
        }
        match self.terms.get_mut(&(m, n)) {
            Some(v) => *v = v.add(&c),
            None => {
                self.terms.insert((m, n), c);
            }
        }
    }

    pub fn remove(&mut self, m: usize, n: usize) -> Option<C> {
        self.terms.remove(&(m, n))
    }

    fn degree_for(&self, other: &Self) -> usize {
        self.max_total_degree.min(other.max_total_degree)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = Self::new(self.degree_for(other));
        for ((m, n), c) in self.terms().chain(other.terms()) {
            out.add_term(m, n, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map_coefficients(|c| c.neg())
    }

    pub fn conj(&self) -> Self {
        self.map_coefficients(|c| c.conj())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let d = self.degree_for(other);
        let mut out = Self::new(d);
        for ((m1, n1), a) in self.terms() {
            for ((m2, n2), b) in other.terms() {
                if m1 + m2 + n1 + n2 <= d {
                    out.add_term(m1 + m2, n1 + n2, a.mul(b));
                }
            }
        }
        out
    }

    pub fn map_coefficients(&self, f: impl Fn(&C) -> C) -> Self {
        BivariateSeries {
            max_total_degree: self.max_total_degree,
            terms: self.terms.iter().map(|(k, v)| (*k, f(v))).collect(),
        }
    }

    /// Multiplies by `b^db λ^dl`.
    pub fn shift(&self, db: usize, dl: usize) -> Self {
        let mut out = Self::new(self.max_total_degree);
        for ((m, n), c) in self.terms() {
            out.add_term(m + db, n + dl, c.clone());
        }
        out
    }

    pub fn truncate(&self, degree: usize) -> Self {
        let mut out = Self::new(degree.min(self.max_total_degree));
        for ((m, n), c) in self.terms() {
            out.add_term(m, n, c.clone());
        }
        out
    }
}

impl<C: RealScale> BivariateSeries<C> {
    pub fn scale(&self, c: f64) -> Self {
        self.map_coefficients(|v| v.scale(c))
    }

    /// `∂_b`.
    pub fn d_b(&self) -> Self {
        let mut out = Self::new(self.max_total_degree);
        for ((m, n), c) in self.terms() {
            if m > 0 {
                out.add_term(m - 1, n, c.scale(m as f64));
            }
        }
        out
    }

    /// `λ ∂_λ`.
    pub fn lambda_d_lambda(&self) -> Self {
        let mut out = Self::new(self.max_total_degree);
        for ((m, n), c) in self.terms() {
            if n > 0 {
                out.add_term(m, n, c.scale(n as f64));
            }
        }
        out
    }

    /// Product with a series of real scalars.
    pub fn mul_scalar_series(&self, s: &BivariateSeries<f64>) -> Self {
        let d = self.max_total_degree.min(s.max_total_degree);
        let mut out = Self::new(d);
        for ((m1, n1), a) in self.terms() {
            for ((m2, n2), b) in s.terms() {
                if m1 + m2 + n1 + n2 <= d {
                    out.add_term(m1 + m2, n1 + n2, a.scale(*b));
                }
            }
        }
        out
    }

    /// Sums the series at `(b, λ)`.
    pub fn eval_with(&self, b: f64, lambda: f64, zero: C) -> C {
        self.terms().fold(zero, |acc, ((m, n), c)| {
            acc.add(&c.scale(b.powi(m as i32) * lambda.powi(n as i32)))
        })
    }
}
