//! Even-sector operators `-∂² + V` on `[0, L]`, reflected at the origin.
use crate::grid::Grid;
use crate::tridiag::Tridiagonal;

/// Tridiagonal matrix of `-∂² + V - (mu/h) δ₀` acting on the half-line
/// samples `f_0, …, f_M` of an even field.
pub(crate) fn even_operator(grid: &Grid, potential: &[f64], delta_mu: f64) -> Tridiagonal<f64> {
    let m = grid.origin();
    assert_eq!(potential.len(), m + 1);
    let h = grid.spacing();
    let ih2 = 1.0 / (h * h);
    let mut diag: Vec<f64> = potential.iter().map(|v| v + 2.0 * ih2).collect();
    diag[0] -= delta_mu / h;
    let mut upper = vec![-ih2; m];
    upper[0] = -2.0 * ih2;
    let lower = vec![-ih2; m];
    Tridiagonal::new(lower, diag, upper)
}

/// Same operator with `f_0 = 0` imposed; acts on `f_1, …, f_M`.
pub(crate) fn pinned_operator(grid: &Grid, potential: &[f64]) -> Tridiagonal<f64> {
    let m = grid.origin();
    let h = grid.spacing();
    let ih2 = 1.0 / (h * h);
    let diag: Vec<f64> = potential[1..].iter().map(|v| v + 2.0 * ih2).collect();
    Tridiagonal::new(vec![-ih2; m - 1], diag, vec![-ih2; m - 1])
}
