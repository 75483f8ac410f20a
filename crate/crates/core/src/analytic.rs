//! Closed forms for the free ground state and its relatives.
use std::f64::consts::PI;

/// `Q(x) = (3 sech²(2x))^{1/4}`.
pub fn q(x: f64) -> f64 {
    (3.0f64).powf(0.25) * sech(2.0 * x).sqrt()
}

/// `Q'(x) = −Q(x) tanh(2x)`.
pub fn q_prime(x: f64) -> f64 {
    -q(x) * (2.0 * x).tanh()
}

/// Soliton of the delta problem at frequency `omega`.
pub fn q_omega_mu(omega: f64, mu: f64, x: f64) -> f64 {
    let w = omega.sqrt();
    let shift = (mu / (2.0 * w)).atanh();
    (3.0 * omega).powf(0.25) * sech(2.0 * w * x.abs() + shift).sqrt()
}

/// `‖Q_{ω,μ}‖₂²`.
pub fn mass_omega_mu(omega: f64, mu: f64) -> f64 {
    3.0f64.sqrt() * (0.5 * PI - (mu / (2.0 * omega.sqrt())).asin())
}

/// `‖Q‖₂² = √3 π / 2`.
pub fn q_l2_sq() -> f64 {
    3.0f64.sqrt() * PI / 2.0
}

/// `‖yQ‖₂² = √3 π³ / 32`.
pub fn yq_l2_sq() -> f64 {
    3.0f64.sqrt() * PI.powi(3) / 32.0
}

/// `β = 2μ Q(0)² / ‖yQ‖₂²`.
pub fn beta(mu: f64) -> f64 {
    2.0 * mu * 3.0f64.sqrt() / yq_l2_sq()
}

/// Pseudo-conformal blow-up solution at time `t < 0`.
pub fn pseudoconformal(t: f64, x: f64) -> num_complex::Complex64 {
    let a = t.abs();
    let phase = -x * x / (4.0 * a) + 1.0 / a;
    num_complex::Complex64::from_polar(q(x / a) / a.sqrt(), phase)
}

pub fn sech(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

/// `‖Q'‖₂² = √3 π / 4`.
pub fn q_prime_l2_sq() -> f64 {
    3.0f64.sqrt() * PI / 4.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_at_origin() {
        assert!((q(0.0) - 1.316_074_012_952_492_4).abs() < 1e-15);
    }

    #[test]
    fn soliton_reduces_to_q() {
        for &x in &[-1.0, 0.0, 0.3, 2.0] {
            assert!((q_omega_mu(1.0, 0.0, x) - q(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn sech_is_stable_for_large_arguments() {
        assert!(sech(800.0) == 0.0);
        assert!((sech(0.0) - 1.0).abs() < 1e-16);
    }

    #[test]
    fn beta_value() {
        assert!((beta(1.0) - 64.0 / PI.powi(3)).abs() < 1e-14);
    }
}
