//! Numerics for minimal-mass blow-up of the one-dimensional quintic
//! Schrödinger equation with an attractive or repulsive point interaction,
//!
//! `i u_t + u_xx + μ δ u + |u|⁴ u = 0`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod blowup_law;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod ground_state;
mod halfline;
pub mod interp;
pub mod linops;
pub mod modulation;
pub mod pde;
pub mod profile;
pub mod quadrature;
pub mod scalar;
pub mod series;
pub mod tridiag;

pub use error::{Error, Result};
pub use grid::{ComplexField, Field, Grid, Norms, RealField};
pub use scalar::Scalar;
