//! The modulation law `λ_s/λ + b = 0`, `b_s + b² − βλ = 0`.
use serde::{Deserialize, Serialize};

use crate::analytic;
use crate::error::{Error, Result};
use crate::quadrature::integrate as quad;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LawParams {
    pub beta: f64,
    pub c0: f64,
    pub lambda0: f64,
}

/// Default cap `λ₀` for `𝓕`.
pub const LAMBDA0: f64 = 0.1;

impl LawParams {
    pub fn new(beta: f64, c0: f64, lambda0: f64) -> Result<Self> {
        if !(lambda0 > 0.0) || !(2.0 * beta + c0 * lambda0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need λ₀ > 0 and 2β + C₀λ₀ > 0 (β = {beta}, C₀ = {c0}, λ₀ = {lambda0})"
            )));
        }
        Ok(LawParams { beta, c0, lambda0 })
    }

    /// `β` from the closed form and `C₀ = 8E₀/‖yQ‖²`.
    pub fn from_energy(mu: f64, e0: f64, lambda0: f64) -> Result<Self> {
        Self::new(analytic::beta(mu), 8.0 * e0 / analytic::yq_l2_sq(), lambda0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub s: f64,
    pub lambda: f64,
    pub b: f64,
}

/// `(λ_s, b_s) = (−λb, −b² + βλ)`.
pub fn vector_field(state: &FlowState, beta: f64) -> (f64, f64) {
    (
        -state.lambda * state.b,
        -state.b * state.b + beta * state.lambda,
    )
}

/// `b²/λ² − 2β/λ`, constant along the flow.
pub fn conserved(state: &FlowState, beta: f64) -> f64 {
    let l = state.lambda;
    state.b * state.b / (l * l) - 2.0 * beta / l
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<FlowState>,
    /// `∫ λ² ds` from the first state, i.e. elapsed physical time.
    pub elapsed: Vec<f64>,
    /// Set when `λ ≤ 0` was reached and the trajectory cut short.
    pub truncated: bool,
}

impl Trajectory {
    pub fn last(&self) -> &FlowState {
        self.states.last().expect("trajectory is never empty")
    }
}

/// Default relative step `ds/s`.
pub const STEP: f64 = 2.5e-4;

/// Classical RK4 on `(λ, b, t)` with proportional steps `|ds| = step·s`,
/// landing exactly on `s_end`, which may lie before `state0.s`.
pub fn integrate(state0: FlowState, beta: f64, s_end: f64, step: f64) -> Result<Trajectory> {
    if !(step > 0.0) || !(state0.s > 0.0) || !(state0.lambda > 0.0) || !(s_end > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "integrate from s = {} (λ = {}) to {s_end} with step {step}",
            state0.s, state0.lambda
        )));
    }
    let dir = if s_end >= state0.s { 1.0 } else { -1.0 };
    let rhs = |y: [f64; 3]| {
        let (dl, db) = vector_field(
            &FlowState {
                s: 0.0,
                lambda: y[0],
                b: y[1],
            },
            beta,
        );
        [dl, db, y[0] * y[0]]
    };
    let mut states = vec![state0];
    let mut elapsed = vec![0.0];
    let mut y = [state0.lambda, state0.b, 0.0];
    let mut s = state0.s;
    let mut truncated = false;
    while dir * (s_end - s) > 0.0 {
        let remaining = (s_end - s).abs();
        let last = remaining <= step * s;
        let h = dir * if last { remaining } else { step * s };
        let k1 = rhs(y);
        let k2 = rhs(std::array::from_fn(|i| y[i] + 0.5 * h * k1[i]));
        let k3 = rhs(std::array::from_fn(|i| y[i] + 0.5 * h * k2[i]));
        let k4 = rhs(std::array::from_fn(|i| y[i] + h * k3[i]));
        let next: [f64; 3] =
            std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        if !(next[0] > 0.0) || !next.iter().all(|v| v.is_finite()) {
            truncated = true;
            break;
        }
        y = next;
        s = if last { s_end } else { s + h };
        states.push(FlowState {
            s,
            lambda: y[0],
            b: y[1],
        });
        elapsed.push(y[2]);
    }
    Ok(Trajectory {
        states,
        elapsed,
        truncated,
    })
}

/// `λ_app(s) = 2/(βs²)`, `b_app(s) = 2/s`.
pub fn app_solution(s: f64, beta: f64) -> (f64, f64) {
    (2.0 / (beta * s * s), 2.0 / s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeMaps {
    pub t_app: f64,
    pub c_s: f64,
    pub c_lambda: f64,
    pub c_b: f64,
}

pub fn time_maps(s: f64, beta: f64) -> Result<TimeMaps> {
    if !(beta > 0.0) || !(s > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "time maps need β > 0, s > 0 (β = {beta}, s = {s})"
        )));
    }
    let c_s = 4.0 / (3.0 * beta * beta);
    Ok(TimeMaps {
        t_app: -c_s / (s * s * s),
        c_s,
        c_lambda: 2.0 / beta * c_s.powf(-2.0 / 3.0),
        c_b: 2.0 * c_s.powf(-1.0 / 3.0),
    })
}

/// `λ_app` and `b_app` as functions of `t < 0`.
pub fn app_in_time(t: f64, beta: f64) -> Result<(f64, f64)> {
    let m = time_maps(1.0, beta)?;
    Ok((
        m.c_lambda * t.abs().powf(2.0 / 3.0),
        m.c_b * t.abs().powf(1.0 / 3.0),
    ))
}

/// `𝓕(λ) = ∫_λ^{λ₀} τ^{-3/2} (2β + C₀τ)^{-1/2} dτ`, integrated in `σ = √τ`.
pub fn script_f(lambda: f64, params: &LawParams) -> Result<f64> {
    if !(lambda > 0.0) || lambda > params.lambda0 {
        return Err(Error::InvalidParameter(format!(
            "𝓕 needs 0 < λ ≤ λ₀ (λ = {lambda}, λ₀ = {})",
            params.lambda0
        )));
    }
    let a = 2.0 * params.beta;
    let c = params.c0;
    let integrand = |sig: f64| 2.0 / (sig * sig * (a + c * sig * sig).sqrt());
    quad(integrand, lambda.sqrt(), params.lambda0.sqrt(), 1e-13)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalData {
    pub lambda1: f64,
    pub b1: f64,
    pub params: LawParams,
}

/// Solves `𝓕(λ₁) = s₁` by bisection and `b₁² = 2βλ₁ + C₀λ₁²`.
pub fn final_data(s1: f64, params: &LawParams) -> Result<FinalData> {
    if !(s1 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "s₁ = {s1} must be positive"
        )));
    }
    let f = |l: f64| script_f(l, params).map(|v| v - s1);
    let mut hi = params.lambda0;
    let mut lo = hi;
    let mut iterations = 0;
    while f(lo)? < 0.0 {
        lo *= 0.5;
        iterations += 1;
        if iterations > 2000 || lo < f64::MIN_POSITIVE {
            return Err(Error::InvalidParameter(format!(
                "s₁ = {s1} out of reach of 𝓕"
            )));
        }
    }
    if lo == hi {
        return Err(Error::InvalidParameter(format!(
            "s₁ = {s1} too small for the regime"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-15 * hi {
            break;
        }
    }
    let lambda1 = 0.5 * (lo + hi);
    let disc = 2.0 * params.beta * lambda1 + params.c0 * lambda1 * lambda1;
    if disc < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "negative discriminant {disc}"
        )));
    }
    Ok(FinalData {
        lambda1,
        b1: disc.sqrt(),
        params: *params,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortraitRow {
    pub lambda: f64,
    pub b: f64,
    pub d_lambda: f64,
    pub d_b: f64,
    pub on_parabola: bool,
}

/// Samples the vector field on a tensor grid. For `β > 0` rows with
/// `|b² − βλ| ≤ band·(b² + βλ)` are flagged.
pub fn phase_portrait(
    beta: f64,
    lambda_range: (f64, f64),
    b_range: (f64, f64),
    counts: (usize, usize),
    band: f64,
) -> Result<Vec<PortraitRow>> {
    if counts.0 == 0 || counts.1 == 0 {
        return Err(Error::InvalidParameter(
            "portrait grid counts must be positive".into(),
        ));
    }
    let lin = |(a, b): (f64, f64), n: usize, i: usize| {
        if n == 1 {
            a
        } else {
            a + (b - a) * i as f64 / (n - 1) as f64
        }
    };
    let mut rows = Vec::with_capacity(counts.0 * counts.1);
    for i in 0..counts.0 {
        let lambda = lin(lambda_range, counts.0, i);
        for j in 0..counts.1 {
            let b = lin(b_range, counts.1, j);
            let (d_lambda, d_b) = vector_field(&FlowState { s: 0.0, lambda, b }, beta);
            let on_parabola =
                beta > 0.0 && (b * b - beta * lambda).abs() <= band * (b * b + beta * lambda);
            rows.push(PortraitRow {
                lambda,
                b,
                d_lambda,
                d_b,
                on_parabola,
            });
        }
    }
    Ok(rows)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}
