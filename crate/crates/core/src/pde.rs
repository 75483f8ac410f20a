//! Time stepping for `i u_t + u_xx + μ δ u + |u|⁴ u = 0`.
//!
//! The linear part is advanced by Crank–Nicolson with the point interaction
//! in the matrix; the nonlinear part is the exact phase rotation
//! `u ↦ u e^{iτ|u|⁴}`.
use std::fmt;
use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analytic;
use crate::blowup_law::{final_data, time_maps, FinalData, LawParams, LAMBDA0};
use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid};
use crate::ground_state::pseudoconformal_solution;
use crate::interp::cubic_at;
use crate::profile::ProfileCoefficients;
use crate::tridiag::Tridiagonal;

/// One time step of a splitting scheme.
pub trait Propagator: fmt::Debug + Send + Sync {
    fn name(&self) -> &'static str;
    fn step(&self, u: &ComplexField, dt: f64, mu: f64) -> Result<ComplexField>;
}

/// `N(dt/2) L(dt) N(dt/2)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CrankNicolsonStrang;

/// `N(dt) L(dt)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CrankNicolsonLie;

impl Propagator for CrankNicolsonStrang {
    fn name(&self) -> &'static str {
        "crank_nicolson_strang"
    }

    fn step(&self, u: &ComplexField, dt: f64, mu: f64) -> Result<ComplexField> {
        let half = nonlinear_phase(u, 0.5 * dt);
        let lin = linear_step(&half, dt, mu)?;
        Ok(nonlinear_phase(&lin, 0.5 * dt))
    }
}

impl Propagator for CrankNicolsonLie {
    fn name(&self) -> &'static str {
        "crank_nicolson_lie"
    }

    fn step(&self, u: &ComplexField, dt: f64, mu: f64) -> Result<ComplexField> {
        linear_step(&nonlinear_phase(u, dt), dt, mu)
    }
}

pub const PROPAGATORS: [&str; 2] = ["crank_nicolson_strang", "crank_nicolson_lie"];

pub fn propagator(name: &str) -> Result<Box<dyn Propagator>> {
    match name {
        "crank_nicolson_strang" => Ok(Box::new(CrankNicolsonStrang)),
        "crank_nicolson_lie" => Ok(Box::new(CrankNicolsonLie)),
        _ => Err(Error::Unknown {
            kind: "propagator",
            name: name.to_string(),
        }),
    }
}

/// `u ↦ u e^{iτ|u|⁴}`.
pub fn nonlinear_phase(u: &ComplexField, tau: f64) -> ComplexField {
    u.map(|v| {
        let a = v.norm_sqr();
        v * Complex64::from_polar(1.0, tau * a * a)
    })
}

/// Crank–Nicolson for `u_t = −iAu`, `A = −D² − (μ/h)δ₀`.
pub fn linear_step(u: &ComplexField, dt: f64, mu: f64) -> Result<ComplexField> {
    let g = *u.grid();
    let n = g.len();
    let h = g.spacing();
    let off = -1.0 / (h * h);
    let mut diag = vec![2.0 / (h * h); n];
    diag[g.origin()] -= mu / h;
    let c = Complex64::new(0.0, 0.5 * dt);
    let one = Complex64::new(1.0, 0.0);
    let vals = u.values();
    let mut rhs = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let mut au = vals[i] * diag[i];
        if i > 0 {
            au += vals[i - 1] * off;
        }
        if i + 1 < n {
            au += vals[i + 1] * off;
        }
        rhs[i] = vals[i] - c * au;
    }
    let m = Tridiagonal::new(
        vec![c * off; n - 1],
        diag.iter().map(|&d| one + c * d).collect(),
        vec![c * off; n - 1],
    );
    ComplexField::new(g, m.solve(&rhs)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[default]
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolutionConfig {
    pub mu: f64,
    pub dt0: f64,
    /// `dt = dt0·min(1, λ_est^exponent)` when set.
    pub adapt: bool,
    pub adapt_exponent: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub direction: Direction,
    pub scheme: String,
    /// Stop once `‖∂ₓu‖₂` exceeds this multiple of its initial value.
    pub grad_factor: f64,
    /// Stop once `λ_est < resolution_factor·h`.
    pub resolution_factor: f64,
    /// Stop once `λ_est > domain_fraction·L`.
    pub domain_fraction: Option<f64>,
    pub record_every: usize,
    pub max_steps: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            mu: 0.0,
            dt0: 1e-3,
            adapt: false,
            adapt_exponent: 2.0,
            t_start: 0.0,
            t_end: 1.0,
            direction: Direction::Forward,
            scheme: "crank_nicolson_strang".into(),
            grad_factor: 50.0,
            resolution_factor: 20.0,
            domain_fraction: None,
            record_every: 1,
            max_steps: 10_000_000,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dt0 = {} must be positive",
                self.dt0
            )));
        }
        if self.t_end == self.t_start || !self.t_end.is_finite() || !self.t_start.is_finite() {
            return Err(Error::InvalidParameter(
                "t_end must differ from t_start".into(),
            ));
        }
        let backward = self.t_end < self.t_start;
        if backward != (self.direction == Direction::Backward) {
            return Err(Error::InvalidParameter(format!(
                "direction {:?} inconsistent with t_start = {}, t_end = {}",
                self.direction, self.t_start, self.t_end
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter(
                "record_every must be positive".into(),
            ));
        }
        propagator(&self.scheme).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub grad_l2: f64,
    pub abs_u0: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    BlowUp,
    Resolution,
    Domain,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionRecord {
    pub rows: Vec<RecordRow>,
    pub stop: StopReason,
    pub steps: usize,
}

impl EvolutionRecord {
    pub fn blow_up(&self) -> bool {
        self.stop == StopReason::BlowUp
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,mass,energy,grad_l2,abs_u0,dt\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r.t, r.mass, r.energy, r.grad_l2, r.abs_u0, r.dt
            ));
        }
        out
    }
}

/// `‖Q'‖₂/‖∂ₓu‖₂`.
pub fn lambda_estimate(u: &ComplexField) -> f64 {
    (analytic::q_prime_l2_sq() / u.grad_l2_sq()).sqrt()
}

/// Energy with the difference quotients and point term of the linear step,
/// `½Σ h|D₊u|² − ½μ|u(0)|² − ⅙Σ h|u|⁶`.
pub fn scheme_energy(u: &ComplexField, mu: f64) -> f64 {
    let g = u.grid();
    let h = g.spacing();
    let v = u.values();
    let n = v.len();
    let mut grad = (v[0].norm_sqr() + v[n - 1].norm_sqr()) / h;
    for i in 0..n - 1 {
        grad += (v[i + 1] - v[i]).norm_sqr() / h;
    }
    let pot: f64 = v.iter().map(|z| z.norm_sqr().powi(3)).sum::<f64>() * h;
    0.5 * grad - 0.5 * mu * u.at_origin().norm_sqr() - pot / 6.0
}

fn observe(u: &ComplexField, t: f64, mu: f64, dt: f64) -> RecordRow {
    RecordRow {
        t,
        mass: u.l2_sq(),
        energy: scheme_energy(u, mu),
        grad_l2: u.grad_l2_sq().sqrt(),
        abs_u0: u.at_origin().norm(),
        dt,
    }
}

pub struct Evolution {
    pub u_final: ComplexField,
    pub t_final: f64,
    pub record: EvolutionRecord,
}

pub fn evolve(u0: &ComplexField, config: &EvolutionConfig) -> Result<Evolution> {
    evolve_with(u0, config, |_, _| Ok(()))
}

/// Runs the evolution, calling `observer(t, u)` at every recorded time.
/// Backward runs evolve `ū(−t)` forward and conjugate back.
pub fn evolve_with(
    u0: &ComplexField,
    config: &EvolutionConfig,
    mut observer: impl FnMut(f64, &ComplexField) -> Result<()>,
) -> Result<Evolution> {
    config.validate()?;
    let prop = propagator(&config.scheme)?;
    let backward = config.direction == Direction::Backward;
    let sign = if backward { -1.0 } else { 1.0 };
    let grid = *u0.grid();
    let h = grid.spacing();
    let mut v = if backward { u0.conj() } else { u0.clone() };
    let tau_end = sign * config.t_end;
    let mut tau = sign * config.t_start;
    let physical = |w: &ComplexField| if backward { w.conj() } else { w.clone() };

    let grad0 = u0.grad_l2_sq().sqrt();
    let mut rows = vec![observe(u0, config.t_start, config.mu, 0.0)];
    observer(config.t_start, u0)?;
    let mut steps = 0;
    let mut stop = StopReason::Completed;
    while tau < tau_end {
        if steps >= config.max_steps {
            stop = StopReason::MaxSteps;
            break;
        }
        let lam = lambda_estimate(&v);
        if lam < config.resolution_factor * h {
            stop = StopReason::Resolution;
            break;
        }
        if config
            .domain_fraction
            .is_some_and(|f| lam > f * grid.half_width())
        {
            stop = StopReason::Domain;
            break;
        }
        let mut dt = config.dt0;
        if config.adapt {
            dt *= lam.powf(config.adapt_exponent).min(1.0);
        }
        let last = tau_end - tau <= dt * (1.0 + 1e-9);
        if last {
            dt = tau_end - tau;
        }
        v = prop.step(&v, dt, config.mu)?;
        tau = if last { tau_end } else { tau + dt };
        steps += 1;
        let grad = v.grad_l2_sq().sqrt();
        let blown = !(grad <= config.grad_factor * grad0);
        if steps % config.record_every == 0 || last || blown {
            let u = physical(&v);
            rows.push(observe(&u, sign * tau, config.mu, dt));
            observer(sign * tau, &u)?;
        }
        if blown {
            stop = StopReason::BlowUp;
            break;
        }
    }
    let u_final = physical(&v);
    if rows.last().map(|r| r.t) != Some(sign * tau) {
        rows.push(observe(&u_final, sign * tau, config.mu, 0.0));
        observer(sign * tau, &u_final)?;
    }
    Ok(Evolution {
        u_final,
        t_final: sign * tau,
        record: EvolutionRecord { rows, stop, steps },
    })
}

/// `λ₁^{-1/2} P_{b₁}(x/λ₁)` on `grid`, at the time `t_app(s₁)`.
pub struct FinalDataField {
    pub field: ComplexField,
    pub data: FinalData,
    pub t1: f64,
    pub s1: f64,
}

pub fn final_data_field(
    s1: f64,
    e0: f64,
    coeffs: &ProfileCoefficients,
    grid: Grid,
) -> Result<FinalDataField> {
    let params = LawParams::from_energy(coeffs.mu, e0, LAMBDA0)?;
    let data = final_data(s1, &params)?;
    let lam = data.lambda1;
    if lam < 50.0 * grid.spacing() {
        return Err(Error::Resolution(format!(
            "λ₁ = {lam:.3e} below 50h = {:.3e}",
            50.0 * grid.spacing()
        )));
    }
    let pb = coeffs.eval_pb(data.b1, lam);
    let amp = lam.powf(-0.5);
    let field = ComplexField::from_fn(grid, |x| cubic_at(&pb, x / lam) * amp);
    let t1 = if params.beta > 0.0 {
        time_maps(s1, params.beta)?.t_app
    } else {
        0.0
    };
    Ok(FinalDataField {
        field,
        data,
        t1,
        s1,
    })
}

/// Initial data sources selectable by name.
pub trait InitialData: fmt::Debug {
    fn name(&self) -> &'static str;
    fn build(&self, grid: Grid) -> Result<ComplexField>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialDataSpec {
    GroundState {
        #[serde(default = "one")]
        omega: f64,
        #[serde(default)]
        mu: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    Pseudoconformal {
        t: f64,
    },
    FinalData {
        s1: f64,
        #[serde(default)]
        e0: f64,
        mu: f64,
        #[serde(default = "two")]
        order: usize,
        #[serde(default = "profile_half_width")]
        profile_half_width: f64,
        #[serde(default = "profile_spacing")]
        profile_spacing: f64,
    },
    File {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}
fn two() -> usize {
    2
}
fn profile_half_width() -> f64 {
    20.0
}
fn profile_spacing() -> f64 {
    0.01
}

#[derive(Debug)]
struct GroundStateData {
    omega: f64,
    mu: f64,
    scale: f64,
}

impl InitialData for GroundStateData {
    fn name(&self) -> &'static str {
        "ground_state"
    }

    fn build(&self, grid: Grid) -> Result<ComplexField> {
        crate::ground_state::GroundStateSpec::new(self.omega, self.mu)?;
        Ok(ComplexField::from_fn(grid, |x| {
            Complex64::new(
                self.scale * analytic::q_omega_mu(self.omega, self.mu, x),
                0.0,
            )
        }))
    }
}

#[derive(Debug)]
struct PseudoconformalData {
    t: f64,
}

impl InitialData for PseudoconformalData {
    fn name(&self) -> &'static str {
        "pseudoconformal"
    }

    fn build(&self, grid: Grid) -> Result<ComplexField> {
        pseudoconformal_solution(self.t, grid)
    }
}

#[derive(Debug)]
struct FinalDataSource {
    s1: f64,
    e0: f64,
    mu: f64,
    order: usize,
    profile_grid: (f64, f64),
}

impl InitialData for FinalDataSource {
    fn name(&self) -> &'static str {
        "final_data"
    }

    fn build(&self, grid: Grid) -> Result<ComplexField> {
        let pg = Grid::new(self.profile_grid.0, self.profile_grid.1)?;
        let coeffs = crate::profile::build_profile(self.order, self.mu, pg)?;
        Ok(final_data_field(self.s1, self.e0, &coeffs, grid)?.field)
    }
}

#[derive(Debug)]
struct FileData {
    path: PathBuf,
}

impl InitialData for FileData {
    fn name(&self) -> &'static str {
        "file"
    }

    fn build(&self, grid: Grid) -> Result<ComplexField> {
        let f = std::fs::File::open(&self.path)?;
        let field = ComplexField::read_csv(std::io::BufReader::new(f))?;
        grid.check_same(field.grid())?;
        Ok(field)
    }
}

pub const INITIAL_DATA: [&str; 4] = ["ground_state", "pseudoconformal", "final_data", "file"];

pub fn initial_data(spec: &InitialDataSpec) -> Box<dyn InitialData> {
    match spec.clone() {
        InitialDataSpec::GroundState { omega, mu, scale } => {
            Box::new(GroundStateData { omega, mu, scale })
        }
        InitialDataSpec::Pseudoconformal { t } => Box::new(PseudoconformalData { t }),
        InitialDataSpec::FinalData {
            s1,
            e0,
            mu,
            order,
            profile_half_width,
            profile_spacing,
        } => Box::new(FinalDataSource {
            s1,
            e0,
            mu,
            order,
            profile_grid: (profile_half_width, profile_spacing),
        }),
        InitialDataSpec::File { path } => Box::new(FileData { path }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names() {
        for name in PROPAGATORS {
            assert_eq!(propagator(name).unwrap().name(), name);
        }
        assert!(propagator("leapfrog").is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = EvolutionConfig {
            t_end: 1.0,
            ..Default::default()
        };
        assert!(c.validate().is_ok());
        c.direction = Direction::Backward;
        assert!(c.validate().is_err());
        c.t_end = -1.0;
        assert!(c.validate().is_ok());
        c.dt0 = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn phase_preserves_modulus() {
        let g = Grid::new(5.0, 0.1).unwrap();
        let u = ComplexField::from_fn(g, |x| Complex64::new((-x * x).exp(), x));
        let v = nonlinear_phase(&u, 0.3);
        for i in 0..u.len() {
            assert!((u[i].norm() - v[i].norm()).abs() < 1e-15);
        }
    }
}
