//! Seeded Monte Carlo mismatch study over the multiplier.
//!
//! Each sample perturbs every column's threshold voltage, beta and
//! capacitance with independent Gaussians and runs the pipeline with kT/C
//! sampling noise. The random stream of a sample is derived from
//! `(seed, d_in, j_s, sample index)` alone, so results are bit-identical for
//! any execution strategy or thread count.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::device::TechParams;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mac::{ColumnParams, MacConfig, Multiplier};

/// Unit of the reported code spread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StdUnits {
    /// ADC LSBs.
    #[default]
    Lsb,
    /// Fraction of the largest product code.
    FullScale,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationSpec {
    /// Absolute std of per-column threshold voltage, V.
    pub sigma_vth: f64,
    /// Relative std of per-column beta.
    pub sigma_beta_rel: f64,
    /// Relative std of per-column capacitance.
    pub sigma_c_rel: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Inject kT/C noise at the sampling instant.
    pub noise: bool,
    pub std_units: StdUnits,
}

impl Default for VariationSpec {
    fn default() -> Self {
        Self {
            sigma_vth: 0.020,
            sigma_beta_rel: 0.03,
            sigma_c_rel: 0.02,
            n_samples: 1000,
            seed: 42,
            noise: true,
            std_units: StdUnits::Lsb,
        }
    }
}

impl VariationSpec {
    /// No variation and no noise.
    pub fn degenerate(n_samples: usize, seed: u64) -> Self {
        Self {
            sigma_vth: 0.0,
            sigma_beta_rel: 0.0,
            sigma_c_rel: 0.0,
            n_samples,
            seed,
            noise: false,
            std_units: StdUnits::Lsb,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("variation.sigma_vth", self.sigma_vth),
            ("variation.sigma_beta_rel", self.sigma_beta_rel),
            ("variation.sigma_c_rel", self.sigma_c_rel),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(name, "sigma >= 0 violated"));
            }
        }
        if self.n_samples == 0 {
            return Err(Error::config("variation.n_samples", "n_samples >= 1 violated"));
        }
        Ok(())
    }
}

/// Statistics of one operand pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McStats {
    pub d_in: u32,
    pub j_s: u32,
    /// Noiseless nominal code the samples are scored against.
    pub reference_code: u32,
    pub mean_code: f64,
    pub std_code: f64,
    /// Fraction of samples whose code differs from `reference_code`.
    pub error_rate: f64,
    /// Fraction of samples in which some column left saturation.
    pub saturation_violation_rate: f64,
    pub seed: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the random stream for one sample of one operand pair.
pub fn substream_seed(seed: u64, d_in: u32, j_s: u32, sample: usize) -> u64 {
    let pair = (d_in as u64) << 32 | j_s as u64;
    splitmix64(splitmix64(splitmix64(seed) ^ pair) ^ sample as u64)
}

fn relative(nominal: f64, sigma_rel: f64, z: f64) -> f64 {
    let v = nominal * (1.0 + sigma_rel * z.clamp(-4.0, 4.0));
    v.max(nominal * 1e-3)
}

fn perturb(
    nominal: &[ColumnParams],
    spec: &VariationSpec,
    rng: &mut impl Rng,
    out: &mut Vec<ColumnParams>,
) {
    out.clear();
    for col in nominal {
        let z_vth: f64 = rng.sample(StandardNormal);
        let z_beta: f64 = rng.sample(StandardNormal);
        let z_c: f64 = rng.sample(StandardNormal);
        out.push(ColumnParams {
            v_th: col.v_th + spec.sigma_vth * z_vth,
            beta: relative(col.beta, spec.sigma_beta_rel, z_beta),
            cap: relative(col.cap, spec.sigma_c_rel, z_c),
        });
    }
}

fn one_sample(
    mult: &Multiplier,
    spec: &VariationSpec,
    d_in: u32,
    j_s: u32,
    sample: usize,
    scratch: &mut Vec<ColumnParams>,
) -> Result<(u32, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(spec.seed, d_in, j_s, sample));
    perturb(mult.nominal_columns(), spec, &mut rng, scratch);
    let temperature = spec.noise.then_some(mult.params().temperature);
    mult.multiply_perturbed(d_in, j_s, scratch, temperature, &mut rng)
}

fn summarize(
    mult: &Multiplier,
    spec: &VariationSpec,
    d_in: u32,
    j_s: u32,
    samples: &[(u32, bool)],
) -> Result<McStats> {
    let reference_code = mult.nominal_code(d_in, j_s)?;
    let n = samples.len() as f64;
    let mean = samples.iter().map(|&(c, _)| c as f64).sum::<f64>() / n;
    let var = if samples.len() > 1 {
        samples
            .iter()
            .map(|&(c, _)| (c as f64 - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0)
    } else {
        0.0
    };
    let scale = match spec.std_units {
        StdUnits::Lsb => 1.0,
        StdUnits::FullScale => 1.0 / (mult.config().max_operand() as f64).powi(2),
    };
    let errors = samples.iter().filter(|&&(c, _)| c != reference_code).count();
    let violations = samples.iter().filter(|&&(_, sat)| !sat).count();
    Ok(McStats {
        d_in,
        j_s,
        reference_code,
        mean_code: mean,
        std_code: var.sqrt() * scale,
        error_rate: errors as f64 / n,
        saturation_violation_rate: violations as f64 / n,
        seed: spec.seed,
    })
}

/// Monte Carlo statistics for one operand pair, parallel over samples.
pub fn run_mc_with(
    mult: &Multiplier,
    spec: &VariationSpec,
    d_in: u32,
    j_s: u32,
    exec: Execution,
) -> Result<McStats> {
    spec.validate()?;
    let samples = exec
        .map_indexed(spec.n_samples, |k| {
            one_sample(mult, spec, d_in, j_s, k, &mut Vec::with_capacity(8))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    summarize(mult, spec, d_in, j_s, &samples)
}

pub fn run_mc(
    config: &MacConfig,
    params: &TechParams,
    spec: &VariationSpec,
    d_in: u32,
    j_s: u32,
) -> Result<McStats> {
    let mult = Multiplier::new(config.clone(), *params)?;
    run_mc_with(&mult, spec, d_in, j_s, Execution::default())
}

fn run_pair_sequential(mult: &Multiplier, spec: &VariationSpec, d_in: u32, j_s: u32) -> Result<McStats> {
    let mut scratch = Vec::with_capacity(mult.nominal_columns().len());
    let samples = (0..spec.n_samples)
        .map(|k| one_sample(mult, spec, d_in, j_s, k, &mut scratch))
        .collect::<Result<Vec<_>>>()?;
    summarize(mult, spec, d_in, j_s, &samples)
}

/// Statistics for every operand pair, row-major in `(d_in, j_s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct McGrid {
    pub side: usize,
    pub cells: Vec<McStats>,
}

impl McGrid {
    pub fn get(&self, d_in: u32, j_s: u32) -> &McStats {
        &self.cells[d_in as usize * self.side + j_s as usize]
    }

    /// Cell with the largest code spread (first one on ties).
    pub fn worst_std(&self) -> &McStats {
        self.cells
            .iter()
            .reduce(|a, b| if b.std_code > a.std_code { b } else { a })
            .expect("grid is never empty")
    }

    pub fn worst_error_rate(&self) -> f64 {
        self.cells.iter().map(|c| c.error_rate).fold(0.0, f64::max)
    }

    /// Sum of error rates over pairs whose product satisfies `keep`.
    pub fn error_mass(&self, keep: impl Fn(u32) -> bool) -> f64 {
        self.cells
            .iter()
            .filter(|c| keep(c.d_in * c.j_s))
            .map(|c| c.error_rate)
            .sum()
    }
}

/// Full operand grid, parallel over pairs.
pub fn sweep_grid_with(mult: &Multiplier, spec: &VariationSpec, exec: Execution) -> Result<McGrid> {
    spec.validate()?;
    let side = mult.config().max_operand() as usize + 1;
    let cells = exec
        .map_indexed(side * side, |k| {
            run_pair_sequential(mult, spec, (k / side) as u32, (k % side) as u32)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(McGrid { side, cells })
}

pub fn sweep_grid(config: &MacConfig, params: &TechParams, spec: &VariationSpec) -> Result<McGrid> {
    let mult = Multiplier::new(config.clone(), *params)?;
    sweep_grid_with(&mult, spec, Execution::default())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DacComparison {
    pub root: McGrid,
    pub linear: McGrid,
    /// Among nonzero-product pairs, fraction where the root error rate does
    /// not exceed the linear one.
    pub root_le_linear_fraction: f64,
    pub root_worst_error_rate: f64,
    pub linear_worst_error_rate: f64,
}

/// Runs the same variation draws against a root-DAC and a linear-DAC
/// pipeline that are otherwise identical.
pub fn compare_dacs_with(
    root: &Multiplier,
    linear: &Multiplier,
    spec: &VariationSpec,
    exec: Execution,
) -> Result<DacComparison> {
    let mut aligned = linear.config().clone();
    aligned.dac.mode = root.config().dac.mode;
    if &aligned != root.config() || root.params() != linear.params() {
        return Err(Error::config(
            "dac.mode",
            "configurations must differ only in DAC mode",
        ));
    }
    let root_grid = sweep_grid_with(root, spec, exec)?;
    let linear_grid = sweep_grid_with(linear, spec, exec)?;
    let (mut considered, mut dominated) = (0usize, 0usize);
    for (r, l) in root_grid.cells.iter().zip(&linear_grid.cells) {
        if r.d_in * r.j_s == 0 {
            continue;
        }
        considered += 1;
        if r.error_rate <= l.error_rate {
            dominated += 1;
        }
    }
    Ok(DacComparison {
        root_le_linear_fraction: dominated as f64 / considered.max(1) as f64,
        root_worst_error_rate: root_grid.worst_error_rate(),
        linear_worst_error_rate: linear_grid.worst_error_rate(),
        root: root_grid,
        linear: linear_grid,
    })
}

pub fn compare_dacs(
    config_root: &MacConfig,
    config_linear: &MacConfig,
    params: &TechParams,
    spec: &VariationSpec,
) -> Result<DacComparison> {
    let root = Multiplier::new(config_root.clone(), *params)?;
    let linear = Multiplier::new(config_linear.clone(), *params)?;
    compare_dacs_with(&root, &linear, spec, Execution::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wl_dac::DacMode;

    fn mult(mode: DacMode) -> Multiplier {
        let p = TechParams::default();
        Multiplier::new(MacConfig::default_for(&p).with_dac_mode(mode), p).unwrap()
    }

    #[test]
    fn degenerate_distribution() {
        let m = mult(DacMode::RootPaperLiteral);
        let s = run_mc_with(&m, &VariationSpec::degenerate(50, 1), 13, 11, Execution::Sequential)
            .unwrap();
        assert_eq!(s.std_code, 0.0);
        assert_eq!(s.error_rate, 0.0);
        assert_eq!(s.mean_code, 143.0);
        assert_eq!(s.reference_code, 143);
    }

    #[test]
    fn same_seed_same_stats() {
        let m = mult(DacMode::RootPaperLiteral);
        let spec = VariationSpec { n_samples: 200, ..Default::default() };
        let a = run_mc_with(&m, &spec, 9, 7, Execution::Sequential).unwrap();
        let b = run_mc_with(&m, &spec, 9, 7, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        let other = run_mc_with(&m, &VariationSpec { seed: 43, ..spec }, 9, 7, Execution::Sequential)
            .unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn grid_cell_matches_single_pair() {
        let m = mult(DacMode::RootPaperLiteral);
        let spec = VariationSpec { n_samples: 20, ..Default::default() };
        let grid = sweep_grid_with(&m, &spec, Execution::Parallel).unwrap();
        let single = run_mc_with(&m, &spec, 12, 3, Execution::Sequential).unwrap();
        assert_eq!(grid.get(12, 3), &single);
    }

    #[test]
    fn full_scale_units() {
        let m = mult(DacMode::RootPaperLiteral);
        let spec = VariationSpec { n_samples: 100, ..Default::default() };
        let lsb = run_mc_with(&m, &spec, 15, 15, Execution::Sequential).unwrap();
        let fs = run_mc_with(
            &m,
            &VariationSpec { std_units: StdUnits::FullScale, ..spec },
            15,
            15,
            Execution::Sequential,
        )
        .unwrap();
        assert!((fs.std_code * 225.0 - lsb.std_code).abs() < 1e-12);
    }

    #[test]
    fn substreams_differ() {
        let a = substream_seed(42, 1, 2, 3);
        assert_ne!(a, substream_seed(42, 2, 1, 3));
        assert_ne!(a, substream_seed(42, 1, 2, 4));
        assert_ne!(a, substream_seed(41, 1, 2, 3));
    }

    #[test]
    fn truncation_and_floor() {
        assert_eq!(relative(1.0, 0.1, 10.0), 1.4);
        assert_eq!(relative(1.0, 0.5, -10.0), 1e-3);
    }

    #[test]
    fn spec_validation() {
        assert!(VariationSpec { n_samples: 0, ..Default::default() }.validate().is_err());
        assert!(VariationSpec { sigma_vth: -1.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn compare_requires_matching_configs() {
        let p = TechParams::default();
        let root = mult(DacMode::RootPaperLiteral);
        let mut cfg = MacConfig::default_for(&p).with_dac_mode(DacMode::Linear);
        cfg.t0 = 70e-12;
        let lin = Multiplier::new(cfg, p).unwrap();
        let spec = VariationSpec::degenerate(1, 0);
        assert!(compare_dacs_with(&root, &lin, &spec, Execution::Sequential).is_err());
    }
}
