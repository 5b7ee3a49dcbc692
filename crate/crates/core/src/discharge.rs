//! Bit-line-bar discharge dynamics.
//!
//! A precharged BLB capacitor discharges through the access transistor:
//! `C dV/dt = -I(V)`. With a constant gate voltage and the transistor held in
//! saturation the solution is a straight line (no channel-length modulation)
//! or a decaying exponential (with modulation). [`simulate_discharge`]
//! integrates the same equation numerically with a triode continuation and
//! serves as the cross-check for both closed forms.

use serde::{Deserialize, Serialize};

use crate::device::{region_of, saturation_current_unchecked, triode_current, Region, TechParams};
use crate::error::{Error, Result};

/// Which model produced a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DischargeModel {
    ClosedFormLinear,
    ClosedFormClm,
    Numeric,
}

impl DischargeModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            DischargeModel::ClosedFormLinear => "closed_form_linear",
            DischargeModel::ClosedFormClm => "closed_form_clm",
            DischargeModel::Numeric => "numeric",
        }
    }
}

/// Longest word-line pulse that keeps the access transistor saturated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseBound {
    /// No current flows, so the transistor never leaves saturation.
    Unbounded,
    Finite(f64),
}

impl PulseBound {
    /// The bound in seconds; `f64::INFINITY` when unbounded.
    pub fn seconds(&self) -> f64 {
        match *self {
            PulseBound::Unbounded => f64::INFINITY,
            PulseBound::Finite(s) => s,
        }
    }

    pub fn admits(&self, dwell: f64) -> bool {
        dwell <= self.seconds()
    }
}

/// Sampled BLB waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct DischargeTrace {
    pub times: Vec<f64>,
    pub voltages: Vec<f64>,
    pub model: DischargeModel,
    pub params_snapshot: TechParams,
    pub v_wl: f64,
    /// First sample time at which the waveform reached 0 V, if it did.
    pub clamped_at: Option<f64>,
}

impl DischargeTrace {
    fn from_samples(
        times: Vec<f64>,
        mut voltages: Vec<f64>,
        model: DischargeModel,
        params: &TechParams,
        v_wl: f64,
    ) -> Self {
        let mut clamped_at = None;
        let mut floor = params.v_dd;
        for (t, v) in times.iter().zip(voltages.iter_mut()) {
            *v = v.clamp(0.0, floor);
            floor = *v;
            if *v == 0.0 && clamped_at.is_none() {
                clamped_at = Some(*t);
            }
        }
        Self {
            times,
            voltages,
            model,
            params_snapshot: *params,
            v_wl,
            clamped_at,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_voltage(&self) -> f64 {
        *self.voltages.last().expect("trace is never empty")
    }
}

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::invalid(format!("t must be finite and >= 0, got {t}")));
    }
    Ok(())
}

fn check_wl(v_wl: f64) -> Result<()> {
    if !v_wl.is_finite() || v_wl < 0.0 {
        return Err(Error::invalid(format!(
            "v_wl must be finite and >= 0, got {v_wl}"
        )));
    }
    Ok(())
}

/// Linear discharge `v_dd - (I0/C) t`, clamped at 0 V.
pub fn v_blb_linear(params: &TechParams, v_wl: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    check_wl(v_wl)?;
    Ok(linear_unchecked(params, v_wl, t))
}

#[inline]
pub(crate) fn linear_unchecked(params: &TechParams, v_wl: f64, t: f64) -> f64 {
    let i0 = saturation_current_unchecked(params, v_wl);
    (params.v_dd - i0 * t / params.c_blb).max(0.0)
}

/// Exponential discharge under channel-length modulation,
/// `(v_dd + 1/lambda) exp(-lambda I0 t / C) - 1/lambda`, clamped at 0 V.
///
/// With `lambda == 0` this falls back to [`v_blb_linear`], the exact limit.
pub fn v_blb_clm(params: &TechParams, v_wl: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    check_wl(v_wl)?;
    Ok(clm_unchecked(params, v_wl, t))
}

#[inline]
pub(crate) fn clm_unchecked(params: &TechParams, v_wl: f64, t: f64) -> f64 {
    if params.lambda == 0.0 {
        return linear_unchecked(params, v_wl, t);
    }
    let i0 = saturation_current_unchecked(params, v_wl);
    let inv = 1.0 / params.lambda;
    // exp_m1 keeps precision when lambda -> 0
    let x = -params.lambda * i0 * t / params.c_blb;
    let v = params.v_dd + (params.v_dd + inv) * x.exp_m1();
    v.max(0.0)
}

/// Square-law discharge valid past the saturation window (lambda ignored):
/// linear until `v_blb` reaches the overdrive, then the closed-form triode
/// solution `V(t) = 2 Vov e / (1 + e)`, `e = exp(-beta Vov tau / C)`.
pub fn v_blb_square_law(params: &TechParams, v_wl: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    check_wl(v_wl)?;
    Ok(square_law_unchecked(params, v_wl, t))
}

pub(crate) fn square_law_unchecked(params: &TechParams, v_wl: f64, t: f64) -> f64 {
    let ov = v_wl - params.v_th;
    if ov <= 0.0 || t == 0.0 {
        return params.v_dd;
    }
    let i0 = 0.5 * params.beta * ov * ov;
    // time spent in saturation before the drain falls to the overdrive
    let t_sat = if params.v_dd > ov {
        (params.v_dd - ov) * params.c_blb / i0
    } else {
        0.0
    };
    if t <= t_sat {
        return params.v_dd - i0 * t / params.c_blb;
    }
    let v_start = params.v_dd.min(ov);
    let a = 2.0 * ov;
    // V/(a - V) decays as exp(-beta ov tau / C)
    let ratio0 = v_start / (a - v_start);
    let e = ratio0 * (-params.beta * ov * (t - t_sat) / params.c_blb).exp();
    a * e / (1.0 + e)
}

/// Saturation-preserving pulse-width bound `(C / I0)(v_dd + v_th - v_wl)`,
/// evaluated with the lambda = 0 current.
pub fn pw_max(params: &TechParams, v_wl: f64) -> Result<PulseBound> {
    check_wl(v_wl)?;
    Ok(pw_max_unchecked(params, v_wl))
}

pub(crate) fn pw_max_unchecked(params: &TechParams, v_wl: f64) -> PulseBound {
    let i0 = saturation_current_unchecked(params, v_wl);
    if i0 == 0.0 {
        return PulseBound::Unbounded;
    }
    let headroom = params.v_dd + params.v_th - v_wl;
    if headroom <= 0.0 {
        return PulseBound::Finite(0.0);
    }
    PulseBound::Finite(params.c_blb / i0 * headroom)
}

/// Saturation window of the exponential (lambda > 0) discharge: the time at
/// which it reaches the overdrive, `(C / (lambda I0)) ln((v_dd + 1/lambda) /
/// (v_wl - v_th + 1/lambda))`. Never longer than [`pw_max`], since modulation
/// only speeds the discharge up. Falls back to [`pw_max`] when lambda = 0.
pub fn pw_max_clm(params: &TechParams, v_wl: f64) -> Result<PulseBound> {
    check_wl(v_wl)?;
    if params.lambda == 0.0 {
        return Ok(pw_max_unchecked(params, v_wl));
    }
    let i0 = saturation_current_unchecked(params, v_wl);
    if i0 == 0.0 {
        return Ok(PulseBound::Unbounded);
    }
    let ov = v_wl - params.v_th;
    if ov >= params.v_dd {
        return Ok(PulseBound::Finite(0.0));
    }
    let inv = 1.0 / params.lambda;
    let t = params.c_blb / (params.lambda * i0) * ((params.v_dd + inv) / (ov + inv)).ln();
    Ok(PulseBound::Finite(t))
}

fn sample_times(duration: f64, dt: f64) -> Vec<f64> {
    let whole = (duration / dt + 1e-9).floor() as usize;
    let mut times: Vec<f64> = (0..=whole).map(|k| k as f64 * dt).collect();
    let last = *times.last().unwrap();
    if duration - last > 1e-9 * dt {
        times.push(duration);
    } else {
        *times.last_mut().unwrap() = duration;
    }
    times
}

fn check_grid(duration: f64, dt: f64) -> Result<()> {
    if !duration.is_finite() || duration <= 0.0 {
        return Err(Error::invalid(format!("duration must be > 0, got {duration}")));
    }
    if !dt.is_finite() || dt <= 0.0 || dt > duration {
        return Err(Error::invalid(format!(
            "dt must satisfy 0 < dt <= duration, got {dt}"
        )));
    }
    Ok(())
}

/// Samples a closed-form waveform on a uniform grid.
pub fn closed_form_trace(
    params: &TechParams,
    v_wl: f64,
    model: DischargeModel,
    duration: f64,
    dt: f64,
) -> Result<DischargeTrace> {
    check_wl(v_wl)?;
    check_grid(duration, dt)?;
    let times = sample_times(duration, dt);
    let eval: fn(&TechParams, f64, f64) -> f64 = match model {
        DischargeModel::ClosedFormLinear => linear_unchecked,
        DischargeModel::ClosedFormClm => clm_unchecked,
        DischargeModel::Numeric => {
            return simulate_discharge(params, v_wl, duration, dt);
        }
    };
    let voltages = times.iter().map(|&t| eval(params, v_wl, t)).collect();
    Ok(DischargeTrace::from_samples(
        times, voltages, model, params, v_wl,
    ))
}

fn discharge_rate(params: &TechParams, v_wl: f64, v: f64) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    let v = v.min(params.v_dd);
    let current = match region_of(params, v_wl, v) {
        Ok(Region::Saturation) => {
            saturation_current_unchecked(params, v_wl) * (1.0 + params.lambda * v)
        }
        Ok(Region::Triode) => triode_current(params, v_wl, v),
        Ok(Region::Cutoff) | Err(_) => 0.0,
    };
    -current / params.c_blb
}

/// Fixed-step RK4 integration of the KCL discharge equation.
///
/// Saturation current (with the lambda factor) is used while the transistor
/// is saturated; the square-law triode current takes over once the drain
/// drops below the overdrive.
pub fn simulate_discharge(
    params: &TechParams,
    v_wl: f64,
    duration: f64,
    dt: f64,
) -> Result<DischargeTrace> {
    check_wl(v_wl)?;
    check_grid(duration, dt)?;
    if duration / dt > 1e8 {
        return Err(Error::invalid("too many integration steps (duration/dt > 1e8)"));
    }
    let times = sample_times(duration, dt);
    let mut voltages = Vec::with_capacity(times.len());
    let mut v = params.v_dd;
    voltages.push(v);
    for w in times.windows(2) {
        let h = w[1] - w[0];
        let f = |x: f64| discharge_rate(params, v_wl, x);
        let k1 = f(v);
        let k2 = f(v + 0.5 * h * k1);
        let k3 = f(v + 0.5 * h * k2);
        let k4 = f(v + h * k3);
        v = (v + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).clamp(0.0, v);
        voltages.push(v);
    }
    Ok(DischargeTrace::from_samples(
        times,
        voltages,
        DischargeModel::Numeric,
        params,
        v_wl,
    ))
}
