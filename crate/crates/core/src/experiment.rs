//! Backward runs from the profile final data, tracked by modulation.
use serde::{Deserialize, Serialize};

use crate::blowup_law::{final_data, integrate, loglog_slope, FlowState, LawParams, LAMBDA0, STEP};
use crate::error::Result;
use crate::grid::{ComplexField, Grid};
use crate::modulation::{
    decompose, functional_h, functional_j, mod_vector, ModulationState, MorawetzWeight,
    NewtonOptions, DEFAULT_A,
};
use crate::pde::{evolve_with, final_data_field, Direction, EvolutionConfig, StopReason};
use crate::profile::ProfileCoefficients;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub e0: f64,
    pub s1: f64,
    /// Physical spacing is `λ₁/nodes_per_lambda`.
    pub nodes_per_lambda: f64,
    /// Physical half width is `domain_lambdas·λ₁`.
    pub domain_lambdas: f64,
    /// Base step; with `dt ∝ λ²` this is the step in `s`.
    pub dt0: f64,
    pub record_every: usize,
    pub domain_fraction: f64,
    pub morawetz_a: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            e0: 0.0,
            s1: 100.0,
            nodes_per_lambda: 300.0,
            domain_lambdas: 100.0,
            dt0: 2e-3,
            record_every: 250,
            domain_fraction: 0.05,
            morawetz_a: DEFAULT_A,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackRow {
    pub t: f64,
    pub s: f64,
    pub lambda: f64,
    pub b: f64,
    pub gamma: f64,
    pub eps_l2: f64,
    pub eps_h1: f64,
    pub mod1: f64,
    pub mod2: f64,
    pub mod3: f64,
    pub h: f64,
    pub j: f64,
    pub s_functional: f64,
    pub eps_pb_pairing: f64,
    pub lambda_ode: f64,
}

/// Profile grid used with the default configuration.
pub const PROFILE_HALF_WIDTH: f64 = 20.0;
pub const PROFILE_SPACING: f64 = 0.0025;

pub const TRACK_HEADER: &str =
    "t,s,lambda,b,gamma,eps_l2,eps_h1,mod1,mod2,mod3,H,J,S,eps_Pb_pairing,lambda_ode";

impl TrackRow {
    pub fn csv_line(&self) -> String {
        let v = [
            self.t,
            self.s,
            self.lambda,
            self.b,
            self.gamma,
            self.eps_l2,
            self.eps_h1,
            self.mod1,
            self.mod2,
            self.mod3,
            self.h,
            self.j,
            self.s_functional,
            self.eps_pb_pairing,
            self.lambda_ode,
        ];
        v.iter()
            .map(|x| format!("{x:.16e}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub lambda1: f64,
    pub b1: f64,
    pub t1: f64,
    pub grid_nodes: usize,
    pub stop: StopReason,
    pub steps: usize,
    /// `λ_max/λ₁` over the tracked window.
    pub shrink_factor: f64,
    pub max_rel_deviation: f64,
    pub max_eps_h1: f64,
    pub exponent: f64,
    pub max_mod: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub summary: ExperimentSummary,
    pub rows: Vec<TrackRow>,
}

/// Tracks a sequence of snapshots `(t, u)` in time order, each decomposition
/// seeded from the previous one.
pub fn track(
    snapshots: &[(f64, ComplexField)],
    start: ModulationState,
    coeffs: &ProfileCoefficients,
    weight: &MorawetzWeight,
) -> Result<(Vec<ModulationState>, Vec<TrackRow>)> {
    let opts = NewtonOptions::default();
    let mut states = Vec::with_capacity(snapshots.len());
    let mut rows = Vec::with_capacity(snapshots.len());
    let mut guess = start;
    let mut prev: Option<ModulationState> = None;
    for (t, u) in snapshots {
        guess.t = *t;
        if let Some(p) = prev {
            guess.lambda *= guess.lambda / p.lambda;
            guess.b += guess.b - p.b;
            guess.gamma += guess.gamma - p.gamma;
        }
        let dec = decompose(u, guess, coeffs, &opts)?;
        let st = dec.state;
        let pb = coeffs.eval_pb(st.b, st.lambda);
        let h = functional_h(&dec.epsilon, st.b, st.lambda, coeffs)?;
        let j = functional_j(&dec.epsilon, weight);
        rows.push(TrackRow {
            t: *t,
            s: 0.0,
            lambda: st.lambda,
            b: st.b,
            gamma: st.gamma,
            eps_l2: dec.eps_l2(),
            eps_h1: dec.eps_h1(),
            mod1: 0.0,
            mod2: 0.0,
            mod3: 0.0,
            h,
            j,
            s_functional: (h + st.b * j) / st.lambda.powi(4),
            eps_pb_pairing: dec.epsilon.inner(&pb)?,
            lambda_ode: f64::NAN,
        });
        states.push(st);
        prev = Some(st);
        guess = st;
    }
    if states.len() >= 3 {
        for (row, m) in rows.iter_mut().zip(mod_vector(&states, coeffs)?) {
            row.s = m.s;
            row.mod1 = m.scale;
            row.mod2 = m.law;
            row.mod3 = m.phase;
        }
    }
    Ok((states, rows))
}

/// Linear interpolation of `λ` against elapsed time along a law trajectory.
fn lambda_at(elapsed: &[f64], lambda: &[f64], dt: f64) -> f64 {
    let n = elapsed.len();
    let idx = elapsed.partition_point(|&e| e > dt).min(n - 1).max(1);
    let (e0, e1) = (elapsed[idx - 1], elapsed[idx]);
    let w = if e1 == e0 { 0.0 } else { (dt - e0) / (e1 - e0) };
    lambda[idx - 1] + w * (lambda[idx] - lambda[idx - 1])
}

pub fn blowup_experiment(
    coeffs: &ProfileCoefficients,
    cfg: &ExperimentConfig,
) -> Result<ExperimentResult> {
    let params = LawParams::from_energy(coeffs.mu, cfg.e0, LAMBDA0)?;
    let lambda_guess = final_data(cfg.s1, &params)?.lambda1;
    let h = lambda_guess / cfg.nodes_per_lambda;
    let grid = Grid::new(cfg.domain_lambdas * lambda_guess, h)?;
    let fd = final_data_field(cfg.s1, cfg.e0, coeffs, grid)?;
    let (lambda1, b1, t1) = (fd.data.lambda1, fd.data.b1, fd.t1);
    let beta = fd.data.params.beta;

    let ev_cfg = EvolutionConfig {
        mu: coeffs.mu,
        dt0: cfg.dt0,
        adapt: true,
        adapt_exponent: 2.0,
        t_start: t1,
        t_end: t1 - 1.0,
        direction: Direction::Backward,
        record_every: cfg.record_every,
        domain_fraction: Some(cfg.domain_fraction),
        ..Default::default()
    };
    let mut snapshots = Vec::new();
    let ev = evolve_with(&fd.field, &ev_cfg, |t, u| {
        snapshots.push((t, u.clone()));
        Ok(())
    })?;

    let weight = MorawetzWeight::new(cfg.morawetz_a)?;
    let start = ModulationState {
        lambda: lambda1,
        b: b1,
        gamma: 0.0,
        s: cfg.s1,
        t: t1,
    };
    let (states, mut rows) = track(&snapshots, start, coeffs, &weight)?;

    let s_min = rows.iter().map(|r| r.s).fold(cfg.s1, f64::min).max(1.0);
    let law = integrate(
        FlowState {
            s: cfg.s1,
            lambda: lambda1,
            b: b1,
        },
        beta,
        0.9 * s_min,
        STEP,
    )?;
    let ode_lambda: Vec<f64> = law.states.iter().map(|st| st.lambda).collect();
    let mut max_dev: f64 = 0.0;
    for row in rows.iter_mut() {
        row.lambda_ode = lambda_at(&law.elapsed, &ode_lambda, row.t - t1);
        max_dev = max_dev.max((row.lambda / row.lambda_ode - 1.0).abs());
    }
    let ts: Vec<f64> = rows.iter().map(|r| -r.t).collect();
    let ls: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
    let summary = ExperimentSummary {
        lambda1,
        b1,
        t1,
        grid_nodes: grid.len(),
        stop: ev.record.stop,
        steps: ev.record.steps,
        shrink_factor: states.iter().map(|s| s.lambda).fold(0.0, f64::max) / lambda1,
        max_rel_deviation: max_dev,
        max_eps_h1: rows.iter().map(|r| r.eps_h1).fold(0.0, f64::max),
        exponent: loglog_slope(&ts, &ls),
        max_mod: rows
            .iter()
            .map(|r| r.mod1.abs().max(r.mod2.abs()).max(r.mod3.abs()))
            .fold(0.0, f64::max),
    };
    Ok(ExperimentResult { summary, rows })
}
