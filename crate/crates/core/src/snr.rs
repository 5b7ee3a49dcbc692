//! Per-code signal steps, kT/C noise and SNR.
//!
//! Every BLB step carries the common prefactor `beta t0 / (2 C)`, including
//! the 1/2 of the square-law current. Only the code-dependent shape factor
//! differs between DAC laws, so the root-over-linear improvement is computed
//! from shape factors alone and is exactly independent of beta, t0, C and
//! temperature.

use serde::{Deserialize, Serialize};

use crate::device::{TechParams, BOLTZMANN};
use crate::discharge::pw_max_unchecked;
use crate::error::{Error, Result};
use crate::wl_dac::{DacConfig, DacMode};

/// Sampled-capacitor thermal noise, variance `k T / C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub temperature: f64,
    pub c_eff: f64,
}

impl NoiseModel {
    pub fn new(temperature: f64, c_eff: f64) -> Result<Self> {
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(Error::config("temperature", "temperature > 0 violated"));
        }
        if !(c_eff.is_finite() && c_eff > 0.0) {
            return Err(Error::config("c_eff", "c_eff > 0 violated"));
        }
        Ok(Self { temperature, c_eff })
    }

    /// Noise on the bit-line-bar capacitor at the technology temperature.
    pub fn for_tech(params: &TechParams) -> Self {
        Self {
            temperature: params.temperature,
            c_eff: params.c_blb,
        }
    }

    pub fn variance(&self) -> f64 {
        BOLTZMANN * self.temperature / self.c_eff
    }

    pub fn sigma(&self) -> f64 {
        self.variance().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrConfig {
    /// Sampling time, s.
    pub t0: f64,
    pub dac: DacConfig,
    pub params: TechParams,
}

impl SnrConfig {
    pub const DEFAULT_T0: f64 = 50e-12;

    pub fn new(t0: f64, dac: DacConfig, params: TechParams) -> Result<Self> {
        let c = Self { t0, dac, params };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.dac.validate()?;
        if !(self.t0.is_finite() && self.t0 > 0.0) {
            return Err(Error::config("t0", "t0 > 0 violated"));
        }
        for code in self.dac.codes() {
            let bound = pw_max_unchecked(&self.params, self.dac.encode(code)?);
            if !bound.admits(self.t0) {
                return Err(Error::SaturationViolation {
                    column: 0,
                    code,
                    dwell_s: self.t0,
                    pw_max_s: bound.seconds(),
                });
            }
        }
        Ok(())
    }

    fn prefactor(&self) -> f64 {
        self.params.beta * self.t0 / (2.0 * self.params.c_blb)
    }

    /// Code-dependent factor of the step between codes `i` and `i + 1`.
    fn shape(&self, code_i: u32) -> Result<f64> {
        let max = self.dac.max_code();
        if code_i >= max {
            return Err(Error::invalid(format!(
                "code {code_i} has no successor (max code {max})"
            )));
        }
        // lower effective code of the pair
        let k = if self.dac.inverted { max - code_i - 1 } else { code_i } as f64;
        let s = self.dac.step();
        Ok(match self.dac.mode {
            DacMode::Linear => s * s * (2.0 * k + 1.0),
            DacMode::RootPaperLiteral => s,
            DacMode::RootSupplyBounded => (self.dac.v_dd - self.dac.v_th) * s,
        })
    }
}

/// BLB voltage step between codes `code_i` and `code_i + 1`.
pub fn delta_v(config: &SnrConfig, code_i: u32) -> Result<f64> {
    Ok(config.prefactor() * config.shape(code_i)?)
}

/// `10 log10(dV^2 / sigma^2)` for the step above `code_i`.
pub fn snr_db(config: &SnrConfig, noise: &NoiseModel, code_i: u32) -> Result<f64> {
    let dv = delta_v(config, code_i)?;
    Ok(10.0 * (dv * dv / noise.variance()).log10())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImprovementRow {
    pub code: u32,
    pub snr_linear_db: f64,
    pub snr_root_db: f64,
    pub improvement_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImprovementTable {
    pub rows: Vec<ImprovementRow>,
    pub mean_linear_db: f64,
    pub mean_root_db: f64,
    pub mean_improvement_db: f64,
}

/// Root-law SNR gain over the linear law for every code pair, plus the mean.
pub fn snr_improvement(
    root: &SnrConfig,
    linear: &SnrConfig,
    noise: &NoiseModel,
) -> Result<ImprovementTable> {
    if !root.dac.mode.is_root() {
        return Err(Error::config("dac.mode", "first configuration must use a root law"));
    }
    if linear.dac.mode != DacMode::Linear {
        return Err(Error::config("dac.mode", "second configuration must use the linear law"));
    }
    if root.params != linear.params {
        return Err(Error::config("tech", "configurations must share technology parameters"));
    }
    if root.t0 != linear.t0 {
        return Err(Error::config("t0", "configurations must share t0"));
    }
    if root.dac.n_bits != linear.dac.n_bits || root.dac.inverted != linear.dac.inverted {
        return Err(Error::config("dac.n_bits", "configurations must share the DAC width"));
    }
    let rows = (0..root.dac.max_code())
        .map(|i| {
            Ok(ImprovementRow {
                code: i,
                snr_linear_db: snr_db(linear, noise, i)?,
                snr_root_db: snr_db(root, noise, i)?,
                improvement_db: 20.0 * (root.shape(i)? / linear.shape(i)?).log10(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = rows.len() as f64;
    let mean = |f: fn(&ImprovementRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    Ok(ImprovementTable {
        mean_linear_db: mean(|r| r.snr_linear_db),
        mean_root_db: mean(|r| r.snr_root_db),
        mean_improvement_db: mean(|r| r.improvement_db),
        rows,
    })
}
