//! Four-point Lagrange interpolation of grid fields.
use crate::grid::{Field, Grid};
use crate::scalar::Scalar;

/// Cubic interpolant of `f` at `x`; zero outside the grid.
pub fn cubic_at<T: Scalar>(f: &Field<T>, x: f64) -> T {
    let g = f.grid();
    let l = g.half_width();
    if !(x >= -l && x <= l) {
        return T::zero();
    }
    let h = g.spacing();
    let n = g.len();
    let t = (x + l) / h;
    let i = (t.floor() as usize).min(n - 2);
    let frac = t - i as f64;
    let v = f.values();
    let at = |k: isize| -> T {
        if k < 0 || k >= n as isize {
            T::zero()
        } else {
            v[k as usize]
        }
    };
    let i = i as isize;
    let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
    let s = frac;
    let w0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
    let w1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
    let w2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
    let w3 = (s + 1.0) * s * (s - 1.0) / 6.0;
    p0 * w0 + p1 * w1 + p2 * w2 + p3 * w3
}

/// Resamples `f` at the nodes of `target`.
pub fn resample<T: Scalar>(f: &Field<T>, target: Grid) -> Field<T> {
    Field::from_fn(target, |x| cubic_at(f, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RealField;

    #[test]
    fn reproduces_nodes() {
        let g = Grid::new(2.0, 0.1).unwrap();
        let f = RealField::from_fn(g, |x| x.sin());
        for i in 0..g.len() {
            assert!((cubic_at(&f, g.x(i)) - f[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_on_cubics_in_interior() {
        let g = Grid::new(2.0, 0.1).unwrap();
        let p = |x: f64| 1.0 - x + 0.5 * x * x - 0.3 * x * x * x;
        let f = RealField::from_fn(g, p);
        for &x in &[-1.73, -0.011, 0.5, 1.2345] {
            assert!((cubic_at(&f, x) - p(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let err = |h: f64| {
            let g = Grid::new(3.0, h).unwrap();
            let f = RealField::from_fn(g, |x| (-x * x).exp());
            (0..200)
                .map(|k| -2.0 + 0.0191 * k as f64)
                .map(|x| (cubic_at(&f, x) - (-x * x).exp()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(0.1) / err(0.05);
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn vanishes_outside_domain() {
        let g = Grid::new(1.0, 0.1).unwrap();
        let f = RealField::from_fn(g, |_| 1.0);
        assert_eq!(cubic_at(&f, 1.5), 0.0);
        assert_eq!(cubic_at(&f, f64::NAN), 0.0);
    }
}
