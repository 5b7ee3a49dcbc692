//! Four-bit by four-bit in-memory multiplier.
//!
//! `j_s` is written into a column of 6T cells, one bit per column. The
//! multiplicand `d_in` is applied as a word-line amplitude through the DAC.
//! Each column holding a one discharges its BLB for a bit-weighted dwell
//! time, the columns are charge-shared onto one node, and the shared voltage
//! is sampled (with optional kT/C noise) and quantized by an ideal ADC.
//!
//! The sequence of phases is write (`t_wen`), precharge (`t_pre`), weighted
//! discharge (`2^(n-1) t0`) and sample (`t_sam`); see [`timing_total`].

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::device::{TechParams, BOLTZMANN};
use crate::discharge::{clm_unchecked, pw_max_unchecked, square_law_unchecked};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::snr::NoiseModel;
use crate::wl_dac::{DacConfig, DacMode};

/// Largest supported operand width.
pub const MAX_BITS: u32 = 8;

/// One 6T cell. `qb` always holds the complement of `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SramCell {
    q: bool,
    qb: bool,
}

impl Default for SramCell {
    fn default() -> Self {
        Self { q: false, qb: true }
    }
}

impl SramCell {
    pub fn q(&self) -> bool {
        self.q
    }

    pub fn qb(&self) -> bool {
        self.qb
    }

    pub fn write(&mut self, bit: bool) {
        self.q = bit;
        self.qb = !bit;
    }
}

/// Stores `bits` into `cells`, cell `j` receiving bit `j`.
pub fn write_word(cells: &mut [SramCell], bits: u32) -> Result<()> {
    let width = cells.len() as u32;
    if width < 32 && bits >> width != 0 {
        return Err(Error::invalid(format!(
            "word {bits} does not fit in {width} cells"
        )));
    }
    for (j, cell) in cells.iter_mut().enumerate() {
        cell.write(bits >> j & 1 == 1);
    }
    Ok(())
}

pub fn read_word(cells: &[SramCell]) -> u32 {
    cells
        .iter()
        .enumerate()
        .fold(0, |acc, (j, c)| acc | (c.q() as u32) << j)
}

/// How bit significance is imposed on the columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Column `j` conducts for `2^j t0`.
    TimeWeightedMsbLong,
    /// Column `j` conducts for `2^(n-1-j) t0`. Does not decode to the product.
    TimeWeightedMsbShort,
    /// Every column conducts for `t0`; column `j` is driven with overdrive
    /// squared scaled by `2^(j-(n-1))`, so the MSB column sees the DAC output.
    AmplitudeWeighted,
}

impl Weighting {
    pub fn as_str(&self) -> &'static str {
        match self {
            Weighting::TimeWeightedMsbLong => "time_weighted_msb_long",
            Weighting::TimeWeightedMsbShort => "time_weighted_msb_short",
            Weighting::AmplitudeWeighted => "amplitude_weighted",
        }
    }
}

impl std::str::FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "time_weighted_msb_long" => Ok(Weighting::TimeWeightedMsbLong),
            "time_weighted_msb_short" => Ok(Weighting::TimeWeightedMsbShort),
            "amplitude_weighted" => Ok(Weighting::AmplitudeWeighted),
            other => Err(Error::invalid(format!("unknown weighting '{other}'"))),
        }
    }
}

/// Column discharge law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnModel {
    /// Square law without channel-length modulation (linear in time while
    /// saturated, triode continuation past the pulse bound).
    #[default]
    SquareLaw,
    /// Exponential discharge with channel-length modulation.
    Clm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacConfig {
    pub n_bits: u32,
    /// Base pulse width, s.
    pub t0: f64,
    pub weighting: Weighting,
    pub t_wen: f64,
    pub t_pre: f64,
    pub t_sam: f64,
    pub dac: DacConfig,
    /// Per-column BLB capacitance, F. Each column discharges and shares
    /// through its own entry.
    pub share_caps: Vec<f64>,
    pub adc_bits: u32,
    /// Sample-and-hold capacitance, F. When non-zero it is precharged with
    /// the columns and joins the shared node.
    pub c_sh: f64,
    pub column_model: ColumnModel,
}

impl MacConfig {
    pub const DEFAULT_T0: f64 = 80e-12;

    /// Default pipeline for `params`: root DAC, MSB-long time weighting.
    pub fn default_for(params: &TechParams) -> Self {
        let n_bits = 4;
        Self {
            n_bits,
            t0: Self::DEFAULT_T0,
            weighting: Weighting::TimeWeightedMsbLong,
            t_wen: 2e-9,
            t_pre: 2e-9,
            t_sam: 0.36e-9,
            dac: DacConfig::for_tech(params, DacMode::RootPaperLiteral),
            share_caps: vec![params.c_blb; n_bits as usize],
            adc_bits: 8,
            c_sh: 0.0,
            column_model: ColumnModel::SquareLaw,
        }
    }

    pub fn with_dac_mode(mut self, mode: DacMode) -> Self {
        self.dac.mode = mode;
        self
    }

    pub fn max_operand(&self) -> u32 {
        (1u32 << self.n_bits) - 1
    }

    /// Checks field invariants and consistency with `params`.
    pub fn validate_fields(&self, params: &TechParams) -> Result<()> {
        params.validate()?;
        if self.n_bits == 0 || self.n_bits > MAX_BITS {
            return Err(Error::config(
                "mac.n_bits",
                format!("1 <= n_bits <= {MAX_BITS} violated"),
            ));
        }
        if self.dac.n_bits != self.n_bits {
            return Err(Error::config("dac.n_bits", "dac.n_bits must equal mac.n_bits"));
        }
        self.dac.validate()?;
        if self.dac.v_dd != params.v_dd {
            return Err(Error::config("dac.v_dd", "dac.v_dd must equal tech.v_dd"));
        }
        if self.dac.v_th != params.v_th {
            return Err(Error::config("dac.v_th", "dac.v_th must equal tech.v_th"));
        }
        if !(self.t0.is_finite() && self.t0 > 0.0) {
            return Err(Error::config("mac.t0", "t0 > 0 violated"));
        }
        for (name, v) in [("mac.t_wen", self.t_wen), ("mac.t_pre", self.t_pre), ("mac.t_sam", self.t_sam)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(name, "phase durations must be >= 0"));
            }
        }
        if self.share_caps.len() != self.n_bits as usize {
            return Err(Error::config(
                "mac.share_caps",
                format!("expected {} entries, got {}", self.n_bits, self.share_caps.len()),
            ));
        }
        if self.share_caps.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::config("mac.share_caps", "all capacitances must be > 0"));
        }
        if !(self.c_sh.is_finite() && self.c_sh >= 0.0) {
            return Err(Error::config("mac.c_sh", "c_sh >= 0 violated"));
        }
        if self.adc_bits == 0 || self.adc_bits > 24 {
            return Err(Error::config("mac.adc_bits", "1 <= adc_bits <= 24 violated"));
        }
        Ok(())
    }

    /// Full validation: [`MacConfig::validate_fields`] plus the requirement
    /// that every column stays saturated for every code.
    pub fn validate(&self, params: &TechParams) -> Result<()> {
        self.validate_fields(params)?;
        self.check_saturation(params)
    }

    /// Checks that the longest column dwell fits inside the saturation
    /// window at every code.
    pub fn check_saturation(&self, params: &TechParams) -> Result<()> {
        let nominal = self.nominal_columns(params);
        for code in 0..=self.max_operand() {
            for (j, col) in nominal.iter().enumerate() {
                let (v_wl, dwell) = self.column_drive(code, j)?;
                let bound = pw_max_unchecked(&col.tech(params), v_wl);
                if !bound.admits(dwell) {
                    return Err(Error::SaturationViolation {
                        column: j,
                        code,
                        dwell_s: dwell,
                        pw_max_s: bound.seconds(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Word-line voltage and dwell time seen by column `j` for `d_in`.
    pub fn column_drive(&self, d_in: u32, j: usize) -> Result<(f64, f64)> {
        let ov_sq = self.dac.overdrive_sq(d_in)?;
        let top = self.n_bits as i32 - 1;
        let j = j as i32;
        Ok(match self.weighting {
            Weighting::TimeWeightedMsbLong => {
                (self.dac.v_th + ov_sq.sqrt(), self.t0 * f64::powi(2.0, j))
            }
            Weighting::TimeWeightedMsbShort => {
                (self.dac.v_th + ov_sq.sqrt(), self.t0 * f64::powi(2.0, top - j))
            }
            Weighting::AmplitudeWeighted => (
                self.dac.v_th + (ov_sq * f64::powi(2.0, j - top)).sqrt(),
                self.t0,
            ),
        })
    }

    pub fn nominal_columns(&self, params: &TechParams) -> Vec<ColumnParams> {
        self.share_caps
            .iter()
            .map(|&cap| ColumnParams {
                v_th: params.v_th,
                beta: params.beta,
                cap,
            })
            .collect()
    }
}

/// Device values of one column (its access transistor and BLB capacitor).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnParams {
    pub v_th: f64,
    pub beta: f64,
    pub cap: f64,
}

impl ColumnParams {
    fn tech(&self, params: &TechParams) -> TechParams {
        TechParams {
            v_th: self.v_th,
            beta: self.beta,
            c_blb: self.cap,
            ..*params
        }
    }
}

/// What to do when a column dwells past its saturation bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaturationPolicy {
    Reject,
    /// Continue with the triode law and flag the result.
    Record,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacResult {
    pub d_in: u32,
    pub j_s: u32,
    /// Shared-node voltage before noise, V.
    pub v_shared: f64,
    /// Sampled voltage after noise, V.
    pub v_sampled: f64,
    pub adc_code: u32,
    pub ideal_product: u32,
    pub saturation_ok: bool,
    /// BLB voltage drop of each column, V.
    pub column_drops: Vec<f64>,
}

/// Ideal calibrated quantizer. One LSB is the full-scale swing divided by
/// the largest product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adc {
    pub v_dd: f64,
    pub full_scale: f64,
    pub lsb: f64,
    pub max_code: u32,
}

impl Adc {
    /// Ties within this fraction of an LSB round upward.
    const TIE_SLACK: f64 = 1e-9;

    pub fn quantize(&self, v: f64) -> Result<u32> {
        if !(v.is_finite() && (0.0..=self.v_dd).contains(&v)) {
            return Err(Error::invalid(format!("ADC input {v} outside [0, {}]", self.v_dd)));
        }
        Ok(self.quantize_clamped(v))
    }

    #[inline]
    fn quantize_clamped(&self, v: f64) -> u32 {
        let x = ((self.v_dd - v) / self.lsb + 0.5 + Self::TIE_SLACK).floor();
        x.clamp(0.0, self.max_code as f64) as u32
    }
}

/// A validated pipeline with its ADC calibration.
#[derive(Debug, Clone)]
pub struct Multiplier {
    config: MacConfig,
    params: TechParams,
    nominal: Vec<ColumnParams>,
    adc: Adc,
}

impl Multiplier {
    pub fn new(config: MacConfig, params: TechParams) -> Result<Self> {
        config.validate(&params)?;
        let nominal = config.nominal_columns(&params);
        let mut m = Self {
            config,
            params,
            nominal,
            adc: Adc {
                v_dd: params.v_dd,
                full_scale: 0.0,
                lsb: 0.0,
                max_code: 0,
            },
        };
        let top = m.config.max_operand();
        let (v_fs, _) = m.shared_voltage(top, top, &m.nominal, SaturationPolicy::Reject)?;
        let full_scale = params.v_dd - v_fs;
        if full_scale <= 0.0 {
            return Err(Error::config(
                "mac",
                "full-scale operands produce no discharge; ADC cannot be calibrated",
            ));
        }
        let top_product = top * top;
        let adc_max = ((1u64 << m.config.adc_bits) - 1).min(top_product as u64) as u32;
        m.adc = Adc {
            v_dd: params.v_dd,
            full_scale,
            lsb: full_scale / top_product as f64,
            max_code: adc_max,
        };
        Ok(m)
    }

    pub fn config(&self) -> &MacConfig {
        &self.config
    }

    pub fn params(&self) -> &TechParams {
        &self.params
    }

    pub fn adc(&self) -> &Adc {
        &self.adc
    }

    pub fn nominal_columns(&self) -> &[ColumnParams] {
        &self.nominal
    }

    fn check_operands(&self, d_in: u32, j_s: u32) -> Result<()> {
        let max = self.config.max_operand();
        if d_in > max || j_s > max {
            return Err(Error::invalid(format!(
                "operands ({d_in}, {j_s}) outside [0, {max}]"
            )));
        }
        Ok(())
    }

    /// Column voltage after its dwell and whether it stayed saturated.
    fn column_voltage(
        &self,
        d_in: u32,
        j: usize,
        col: &ColumnParams,
        policy: SaturationPolicy,
    ) -> Result<(f64, bool)> {
        let (v_wl, dwell) = self.config.column_drive(d_in, j)?;
        let tech = col.tech(&self.params);
        let bound = pw_max_unchecked(&tech, v_wl);
        let saturated = bound.admits(dwell);
        if !saturated && policy == SaturationPolicy::Reject {
            return Err(Error::SaturationViolation {
                column: j,
                code: d_in,
                dwell_s: dwell,
                pw_max_s: bound.seconds(),
            });
        }
        let v = match self.config.column_model {
            ColumnModel::SquareLaw => square_law_unchecked(&tech, v_wl, dwell),
            ColumnModel::Clm => clm_unchecked(&tech, v_wl, dwell),
        };
        Ok((v, saturated))
    }

    /// Charge-shared node voltage (no noise) for the given column devices.
    fn shared_voltage(
        &self,
        d_in: u32,
        j_s: u32,
        columns: &[ColumnParams],
        policy: SaturationPolicy,
    ) -> Result<(f64, bool)> {
        let v_dd = self.params.v_dd;
        let mut charge = self.config.c_sh * v_dd;
        let mut cap = self.config.c_sh;
        let mut all_saturated = true;
        for (j, col) in columns.iter().enumerate() {
            let v = if j_s >> j & 1 == 1 {
                let (v, sat) = self.column_voltage(d_in, j, col, policy)?;
                all_saturated &= sat;
                v
            } else {
                v_dd
            };
            charge += col.cap * v;
            cap += col.cap;
        }
        Ok((charge / cap, all_saturated))
    }

    fn sharing_capacitance(&self, columns: &[ColumnParams]) -> f64 {
        self.config.c_sh + columns.iter().map(|c| c.cap).sum::<f64>()
    }

    fn sample(&self, v_shared: f64, sigma: f64, rng: &mut impl Rng) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        (v_shared + sigma * z).clamp(0.0, self.params.v_dd)
    }

    /// Runs the full pipeline on nominal devices.
    ///
    /// With `noise`, its temperature sets the kT/C variance of the shared
    /// node (the capacitance is always the total sharing capacitance). A
    /// missing seed means seed 0.
    pub fn multiply(
        &self,
        d_in: u32,
        j_s: u32,
        noise: Option<&NoiseModel>,
        rng_seed: Option<u64>,
    ) -> Result<MacResult> {
        self.check_operands(d_in, j_s)?;
        let mut cells = vec![SramCell::default(); self.config.n_bits as usize];
        write_word(&mut cells, j_s)?;
        let stored = read_word(&cells);

        let (v_shared, saturation_ok) =
            self.shared_voltage(d_in, stored, &self.nominal, SaturationPolicy::Reject)?;
        let v_sampled = match noise {
            Some(n) => {
                let var = BOLTZMANN * n.temperature / self.sharing_capacitance(&self.nominal);
                let mut rng = ChaCha8Rng::seed_from_u64(rng_seed.unwrap_or(0));
                self.sample(v_shared, var.sqrt(), &mut rng)
            }
            None => v_shared,
        };
        let column_drops = (0..self.nominal.len())
            .map(|j| {
                if stored >> j & 1 == 1 {
                    let (v, _) =
                        self.column_voltage(d_in, j, &self.nominal[j], SaturationPolicy::Reject)?;
                    Ok(self.params.v_dd - v)
                } else {
                    Ok(0.0)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MacResult {
            d_in,
            j_s,
            v_shared,
            v_sampled,
            adc_code: self.adc.quantize(v_sampled)?,
            ideal_product: d_in * j_s,
            saturation_ok,
            column_drops,
        })
    }

    /// One pipeline evaluation on perturbed column devices. Returns the ADC
    /// code and whether every conducting column stayed saturated.
    pub fn multiply_perturbed(
        &self,
        d_in: u32,
        j_s: u32,
        columns: &[ColumnParams],
        temperature: Option<f64>,
        rng: &mut impl Rng,
    ) -> Result<(u32, bool)> {
        self.check_operands(d_in, j_s)?;
        if columns.len() != self.nominal.len() {
            return Err(Error::invalid("column count mismatch"));
        }
        let (v_shared, sat) = self.shared_voltage(d_in, j_s, columns, SaturationPolicy::Record)?;
        let v = match temperature {
            Some(t) => {
                let sigma = (BOLTZMANN * t / self.sharing_capacitance(columns)).sqrt();
                self.sample(v_shared, sigma, rng)
            }
            None => v_shared,
        };
        Ok((self.adc.quantize_clamped(v), sat))
    }

    /// Noiseless code for `(d_in, j_s)` on nominal devices.
    pub fn nominal_code(&self, d_in: u32, j_s: u32) -> Result<u32> {
        self.check_operands(d_in, j_s)?;
        let (v, _) = self.shared_voltage(d_in, j_s, &self.nominal, SaturationPolicy::Record)?;
        Ok(self.adc.quantize_clamped(v))
    }

    /// Noiseless results for every operand pair, ordered by `(d_in, j_s)`.
    pub fn sweep(&self, exec: Execution) -> Result<Vec<MacResult>> {
        let side = self.config.max_operand() as usize + 1;
        exec.map_indexed(side * side, |k| {
            self.multiply((k / side) as u32, (k % side) as u32, None, None)
        })
        .into_iter()
        .collect()
    }

    pub fn timing_total(&self) -> f64 {
        timing_total(&self.config)
    }

    pub fn energy_estimate(&self, result: &MacResult) -> EnergyEstimate {
        energy_estimate(&self.config, &self.params, result)
    }
}

/// Convenience wrapper building a [`Multiplier`] for a single product.
pub fn multiply(
    config: &MacConfig,
    params: &TechParams,
    d_in: u32,
    j_s: u32,
    noise: Option<&NoiseModel>,
    rng_seed: Option<u64>,
) -> Result<MacResult> {
    Multiplier::new(config.clone(), *params)?.multiply(d_in, j_s, noise, rng_seed)
}

pub fn adc_quantize(config: &MacConfig, params: &TechParams, v: f64) -> Result<u32> {
    Multiplier::new(config.clone(), *params)?.adc().quantize(v)
}

/// Multiply cycle `t_wen + t_pre + 2^(n-1) t0 + t_sam`.
pub fn timing_total(config: &MacConfig) -> f64 {
    let discharge = f64::powi(2.0, config.n_bits as i32 - 1) * config.t0;
    config.t_wen + config.t_pre + discharge + config.t_sam
}

/// First-order CV^2 energy estimate. Not a substitute for transistor-level
/// energy figures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyEstimate {
    /// Charge drawn back from the supply to restore the discharged columns, J.
    pub discharge_j: f64,
    /// Bound for precharging every column from 0 V, J.
    pub precharge_bound_j: f64,
}

impl EnergyEstimate {
    pub fn total_j(&self) -> f64 {
        self.discharge_j + self.precharge_bound_j
    }
}

pub fn energy_estimate(config: &MacConfig, params: &TechParams, result: &MacResult) -> EnergyEstimate {
    let v_dd = params.v_dd;
    let discharge_j = config
        .share_caps
        .iter()
        .zip(&result.column_drops)
        .map(|(c, dv)| c * v_dd * dv)
        .sum();
    let precharge_bound_j = config.share_caps.iter().map(|c| c * v_dd * v_dd).sum();
    EnergyEstimate {
        discharge_j,
        precharge_bound_j,
    }
}
