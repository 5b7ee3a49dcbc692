//! Technology constants and the access-transistor current model.
//!
//! The access transistor is modeled with the long-channel square law. Only
//! the lumped transconductance factor `beta` (mobility x oxide capacitance x
//! W/L) is exposed; the individual factors never appear separately in any
//! equation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Technology and device constants shared by every equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TechParams {
    /// Transconductance factor, A/V^2.
    pub beta: f64,
    /// Threshold voltage, V.
    pub v_th: f64,
    /// Channel-length modulation, 1/V.
    pub lambda: f64,
    /// Supply voltage, V.
    pub v_dd: f64,
    /// Bit-line-bar capacitance, F.
    pub c_blb: f64,
    /// Absolute temperature, K.
    pub temperature: f64,
}

impl Default for TechParams {
    /// V_DD = 1 V, C_blb = 50 fF and lambda = 0.15 1/V are the reference
    /// operating point. V_TH = 0.615 V and beta = 150 uA/V^2 are calibrated:
    /// see README for the rationale.
    fn default() -> Self {
        Self {
            beta: 150e-6,
            v_th: 0.615,
            lambda: 0.15,
            v_dd: 1.0,
            c_blb: 50e-15,
            temperature: 300.0,
        }
    }
}

impl TechParams {
    pub fn new(
        beta: f64,
        v_th: f64,
        lambda: f64,
        v_dd: f64,
        c_blb: f64,
        temperature: f64,
    ) -> Result<Self> {
        let p = Self {
            beta,
            v_th,
            lambda,
            v_dd,
            c_blb,
            temperature,
        };
        p.validate()?;
        Ok(p)
    }

    /// Checks every field invariant, reporting the first violation with its
    /// field name.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("beta", self.beta),
            ("v_th", self.v_th),
            ("lambda", self.lambda),
            ("v_dd", self.v_dd),
            ("c_blb", self.c_blb),
            ("temperature", self.temperature),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::config(name, "must be finite"));
            }
        }
        if self.beta <= 0.0 {
            return Err(Error::config("beta", "beta > 0 violated"));
        }
        if self.c_blb <= 0.0 {
            return Err(Error::config("c_blb", "c_blb > 0 violated"));
        }
        if self.temperature <= 0.0 {
            return Err(Error::config("temperature", "temperature > 0 violated"));
        }
        if self.lambda < 0.0 {
            return Err(Error::config("lambda", "lambda >= 0 violated"));
        }
        if self.v_th <= 0.0 {
            return Err(Error::config("v_th", "v_th > 0 violated"));
        }
        if self.v_th >= self.v_dd {
            return Err(Error::config("v_th", "v_th < v_dd violated"));
        }
        Ok(())
    }

    /// Copy of these parameters with channel-length modulation disabled.
    pub fn without_clm(&self) -> Self {
        Self {
            lambda: 0.0,
            ..*self
        }
    }
}

/// Operating region of the access transistor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Cutoff,
    Saturation,
    Triode,
}

fn check_gate(v_gs: f64) -> Result<()> {
    if !v_gs.is_finite() || v_gs < 0.0 {
        return Err(Error::invalid(format!(
            "v_gs must be finite and non-negative, got {v_gs}"
        )));
    }
    Ok(())
}

/// Square-law saturation current `(beta/2)(v_gs - v_th)^2`, zero at and
/// below threshold.
pub fn saturation_current(params: &TechParams, v_gs: f64) -> Result<f64> {
    check_gate(v_gs)?;
    Ok(saturation_current_unchecked(params, v_gs))
}

#[inline]
pub(crate) fn saturation_current_unchecked(params: &TechParams, v_gs: f64) -> f64 {
    let ov = v_gs - params.v_th;
    if ov <= 0.0 {
        0.0
    } else {
        0.5 * params.beta * ov * ov
    }
}

/// Saturation current including the `(1 + lambda * v_blb)` channel-length
/// modulation factor.
pub fn clm_current(params: &TechParams, v_gs: f64, v_blb: f64) -> Result<f64> {
    check_gate(v_gs)?;
    if !(0.0..=params.v_dd).contains(&v_blb) {
        return Err(Error::invalid(format!(
            "v_blb must lie in [0, {}], got {v_blb}",
            params.v_dd
        )));
    }
    let i0 = saturation_current_unchecked(params, v_gs);
    if params.lambda == 0.0 {
        return Ok(i0);
    }
    Ok(i0 * (1.0 + params.lambda * v_blb))
}

/// Classifies the operating region. The boundary `v_ds == v_gs - v_th`
/// counts as saturation.
pub fn region_of(params: &TechParams, v_gs: f64, v_ds: f64) -> Result<Region> {
    if !v_gs.is_finite() || !v_ds.is_finite() {
        return Err(Error::invalid("voltages must be finite"));
    }
    let ov = v_gs - params.v_th;
    Ok(if ov <= 0.0 {
        Region::Cutoff
    } else if v_ds >= ov {
        Region::Saturation
    } else {
        Region::Triode
    })
}

/// Square-law triode current `beta((v_gs - v_th) v_ds - v_ds^2 / 2)`.
#[inline]
pub(crate) fn triode_current(params: &TechParams, v_gs: f64, v_ds: f64) -> f64 {
    let ov = v_gs - params.v_th;
    params.beta * (ov * v_ds - 0.5 * v_ds * v_ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> TechParams {
        TechParams::default()
    }

    #[test]
    fn saturation_current_examples() {
        let p = defaults();
        assert_eq!(saturation_current(&p, 0.615).unwrap(), 0.0);
        assert_eq!(saturation_current(&p, 0.5).unwrap(), 0.0);
        let i = saturation_current(&p, 1.0).unwrap();
        assert!((i - 11.116875e-6).abs() < 1e-15, "{i}");
    }

    #[test]
    fn saturation_current_rejects_bad_gate() {
        let p = defaults();
        assert!(saturation_current(&p, -0.1).is_err());
        assert!(saturation_current(&p, f64::NAN).is_err());
        assert!(saturation_current(&p, f64::INFINITY).is_err());
    }

    #[test]
    fn continuous_at_threshold() {
        let p = defaults();
        let above = saturation_current(&p, p.v_th + 1e-9).unwrap();
        assert!(above < 1e-20);
        assert_eq!(saturation_current(&p, p.v_th).unwrap(), 0.0);
    }

    #[test]
    fn clm_examples() {
        let p = defaults();
        let i = clm_current(&p, 1.0, 1.0).unwrap();
        assert!((i - 12.78440625e-6).abs() < 1e-15, "{i}");
        assert_eq!(clm_current(&p, 0.5, 0.7).unwrap(), 0.0);
        assert!(clm_current(&p, 1.0, 1.01).is_err());
        assert!(clm_current(&p, 1.0, -0.01).is_err());
    }

    #[test]
    fn clm_without_lambda_is_saturation_current() {
        let p = defaults().without_clm();
        for gi in 0..=60 {
            let v_gs = gi as f64 * 0.025;
            for di in 0..=20 {
                let v_blb = di as f64 * 0.05;
                assert_eq!(
                    clm_current(&p, v_gs, v_blb).unwrap(),
                    saturation_current(&p, v_gs).unwrap()
                );
            }
        }
    }

    #[test]
    fn region_examples() {
        let p = defaults();
        assert_eq!(region_of(&p, 0.5, 0.3).unwrap(), Region::Cutoff);
        assert_eq!(region_of(&p, 1.0, 1.0).unwrap(), Region::Saturation);
        assert_eq!(region_of(&p, 1.0, 0.2).unwrap(), Region::Triode);
        assert!(region_of(&p, f64::NAN, 0.2).is_err());
    }

    #[test]
    fn region_boundary_is_saturation() {
        let p = defaults();
        let v_gs = 1.0;
        let edge = v_gs - p.v_th;
        assert_eq!(region_of(&p, v_gs, edge).unwrap(), Region::Saturation);
        assert_eq!(region_of(&p, v_gs, edge - 1e-12).unwrap(), Region::Triode);
    }

    #[test]
    fn validation_messages() {
        let err = TechParams::new(150e-6, 1.5, 0.15, 1.0, 50e-15, 300.0).unwrap_err();
        assert!(err.to_string().contains("v_th < v_dd violated"));
        assert!(TechParams::new(0.0, 0.6, 0.15, 1.0, 50e-15, 300.0).is_err());
        assert!(TechParams::new(150e-6, 0.6, -0.1, 1.0, 50e-15, 300.0).is_err());
        assert!(TechParams::new(150e-6, 0.6, 0.1, 1.0, 0.0, 300.0).is_err());
        assert!(TechParams::new(150e-6, 0.6, 0.1, 1.0, 1e-15, 0.0).is_err());
        assert!(defaults().validate().is_ok());
    }
}
