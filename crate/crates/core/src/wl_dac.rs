//! Word-line DAC encoding laws.
//!
//! The linear law steps the gate voltage uniformly above threshold, so the
//! square-law current grows quadratically with the code. The root law takes
//! the square root of the code before adding it to the threshold, which makes
//! the current (and the sampled BLB step) linear in the code.

use serde::{Deserialize, Serialize};

use crate::device::{saturation_current_unchecked, TechParams};
use crate::discharge::{linear_unchecked, pw_max_unchecked};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DacMode {
    /// `v_th + code * s`
    Linear,
    /// `v_th + sqrt(code * s)`. Exceeds `v_dd` at the top codes with the
    /// default technology (a boosted word line).
    RootPaperLiteral,
    /// `v_th + (v_dd - v_th) sqrt(code / (2^n - 1))`; full scale lands on `v_dd`.
    RootSupplyBounded,
}

impl DacMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DacMode::Linear => "linear",
            DacMode::RootPaperLiteral => "root_paper_literal",
            DacMode::RootSupplyBounded => "root_supply_bounded",
        }
    }

    pub fn is_root(&self) -> bool {
        !matches!(self, DacMode::Linear)
    }
}

impl std::str::FromStr for DacMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(DacMode::Linear),
            "root_paper_literal" | "root" => Ok(DacMode::RootPaperLiteral),
            "root_supply_bounded" => Ok(DacMode::RootSupplyBounded),
            other => Err(Error::invalid(format!("unknown dac mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DacConfig {
    pub n_bits: u32,
    pub v_dd: f64,
    pub v_th: f64,
    pub mode: DacMode,
    /// Encode `2^n - 1 - code` instead of `code`.
    pub inverted: bool,
}

impl DacConfig {
    pub fn new(n_bits: u32, v_dd: f64, v_th: f64, mode: DacMode, inverted: bool) -> Result<Self> {
        let c = Self {
            n_bits,
            v_dd,
            v_th,
            mode,
            inverted,
        };
        c.validate()?;
        Ok(c)
    }

    /// Four-bit DAC matched to `params`.
    pub fn for_tech(params: &TechParams, mode: DacMode) -> Self {
        Self {
            n_bits: 4,
            v_dd: params.v_dd,
            v_th: params.v_th,
            mode,
            inverted: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bits == 0 || self.n_bits > 16 {
            return Err(Error::config("n_bits", "1 <= n_bits <= 16 violated"));
        }
        if !self.v_dd.is_finite() || !self.v_th.is_finite() {
            return Err(Error::config("v_th", "voltages must be finite"));
        }
        if self.v_th >= self.v_dd {
            return Err(Error::config("v_th", "v_th < v_dd violated"));
        }
        Ok(())
    }

    pub fn max_code(&self) -> u32 {
        (1u32 << self.n_bits) - 1
    }

    /// Step `(v_dd - v_th) / (2^n - 1)`.
    pub fn step(&self) -> f64 {
        (self.v_dd - self.v_th) / self.max_code() as f64
    }

    pub fn codes(&self) -> impl Iterator<Item = u32> {
        0..=self.max_code()
    }

    fn check_code(&self, code: u32) -> Result<()> {
        if code > self.max_code() {
            return Err(Error::invalid(format!(
                "code {code} outside [0, {}]",
                self.max_code()
            )));
        }
        Ok(())
    }

    fn check_matches(&self, params: &TechParams) -> Result<()> {
        if self.v_dd != params.v_dd {
            return Err(Error::config("dac.v_dd", "dac.v_dd must equal tech.v_dd"));
        }
        if self.v_th != params.v_th {
            return Err(Error::config("dac.v_th", "dac.v_th must equal tech.v_th"));
        }
        Ok(())
    }

    /// Square of the gate overdrive `(v_wl - v_th)^2` produced for `code`.
    ///
    /// Computed in closed form per mode so root modes stay exactly linear in
    /// the code.
    pub fn overdrive_sq(&self, code: u32) -> Result<f64> {
        self.check_code(code)?;
        let c = self.effective_code(code) as f64;
        let s = self.step();
        Ok(match self.mode {
            DacMode::Linear => (c * s) * (c * s),
            DacMode::RootPaperLiteral => c * s,
            DacMode::RootSupplyBounded => (self.v_dd - self.v_th) * (self.v_dd - self.v_th) * c
                / self.max_code() as f64,
        })
    }

    fn effective_code(&self, code: u32) -> u32 {
        if self.inverted {
            self.max_code() - code
        } else {
            code
        }
    }

    /// Word-line voltage for `code`.
    pub fn encode(&self, code: u32) -> Result<f64> {
        self.check_code(code)?;
        let c = self.effective_code(code) as f64;
        let s = self.step();
        Ok(match self.mode {
            DacMode::Linear => self.v_th + c * s,
            DacMode::RootPaperLiteral => self.v_th + (c * s).sqrt(),
            DacMode::RootSupplyBounded => {
                self.v_th + (self.v_dd - self.v_th) * (c / self.max_code() as f64).sqrt()
            }
        })
    }
}

/// One row of [`current_vs_code`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodeCurrent {
    pub code: u32,
    pub v_wl: f64,
    pub i0: f64,
}

/// Access-transistor saturation current for every code.
pub fn current_vs_code(params: &TechParams, config: &DacConfig) -> Result<Vec<CodeCurrent>> {
    config.validate()?;
    config.check_matches(params)?;
    config
        .codes()
        .map(|code| {
            let v_wl = config.encode(code)?;
            let i0 = 0.5 * params.beta * config.overdrive_sq(code)?;
            debug_assert!((i0 - saturation_current_unchecked(params, v_wl)).abs() <= 1e-9 * i0.max(1e-12));
            Ok(CodeCurrent { code, v_wl, i0 })
        })
        .collect()
}

/// BLB voltage sampled at `t0` for each code.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferPoint {
    pub code: u32,
    pub v_wl: f64,
    pub i0: f64,
    pub v_blb: f64,
}

/// BLB voltage at `t0` per code, using the linear (lambda = 0) discharge.
/// Fails if `t0` would drive any code out of saturation.
pub fn transfer_curve(
    params: &TechParams,
    config: &DacConfig,
    t0: f64,
) -> Result<Vec<TransferPoint>> {
    if !t0.is_finite() || t0 < 0.0 {
        return Err(Error::invalid(format!("t0 must be >= 0, got {t0}")));
    }
    current_vs_code(params, config)?
        .into_iter()
        .map(|row| {
            let bound = pw_max_unchecked(params, row.v_wl);
            if !bound.admits(t0) {
                return Err(Error::SaturationViolation {
                    column: 0,
                    code: row.code,
                    dwell_s: t0,
                    pw_max_s: bound.seconds(),
                });
            }
            let v_blb = (params.v_dd - row.i0 * t0 / params.c_blb).max(0.0);
            debug_assert!((v_blb - linear_unchecked(params, row.v_wl, t0)).abs() < 1e-9);
            Ok(TransferPoint {
                code: row.code,
                v_wl: row.v_wl,
                i0: row.i0,
                v_blb,
            })
        })
        .collect()
}
