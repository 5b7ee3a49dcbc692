//! Command-line front end: JSON configuration and CSV-emitting subcommands.
//!
//! Every physical quantity is in SI units, both in the configuration file and
//! in the CSV output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::device::{saturation_current_unchecked, TechParams};
use crate::discharge::{closed_form_trace, pw_max, DischargeModel};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mac::{ColumnModel, MacConfig, Multiplier, Weighting};
use crate::snr::{snr_improvement, NoiseModel, SnrConfig};
use crate::varsim::{compare_dacs_with, run_mc_with, substream_seed, sweep_grid_with, StdUnits, VariationSpec};
use crate::wl_dac::{current_vs_code, transfer_curve, DacConfig, DacMode};

/// Environment variable naming the default configuration file.
pub const CONFIG_ENV: &str = "SRAMCIM_CONFIG";

/// Exit status for usage errors (unknown subcommand, bad flags).
pub const EXIT_USAGE: i32 = 64;

/// Fully validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub tech: TechParams,
    pub dac: DacConfig,
    pub mac: MacConfig,
    pub variation: VariationSpec,
    pub output_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config("{}").expect("defaults are valid")
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TechFile {
    beta: Option<f64>,
    v_th: Option<f64>,
    lambda: Option<f64>,
    v_dd: Option<f64>,
    c_blb: Option<f64>,
    temperature: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DacFile {
    n_bits: Option<u32>,
    v_dd: Option<f64>,
    v_th: Option<f64>,
    mode: Option<DacMode>,
    inverted: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MacFile {
    n_bits: Option<u32>,
    t0: Option<f64>,
    weighting: Option<Weighting>,
    t_wen: Option<f64>,
    t_pre: Option<f64>,
    t_sam: Option<f64>,
    share_caps: Option<Vec<f64>>,
    adc_bits: Option<u32>,
    c_sh: Option<f64>,
    column_model: Option<ColumnModel>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariationFile {
    sigma_vth: Option<f64>,
    sigma_beta_rel: Option<f64>,
    sigma_c_rel: Option<f64>,
    n_samples: Option<usize>,
    seed: Option<u64>,
    noise: Option<bool>,
    std_units: Option<StdUnits>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunFile {
    #[serde(default)]
    tech: TechFile,
    #[serde(default)]
    dac: DacFile,
    #[serde(default)]
    mac: MacFile,
    #[serde(default)]
    variation: VariationFile,
    output_path: Option<PathBuf>,
}

fn scoped(section: &str, e: Error) -> Error {
    match e {
        Error::Config { path, message } if !path.contains('.') => {
            Error::config(format!("{section}.{path}"), message)
        }
        Error::Config { path, message } => Error::config(path, message),
        other => other,
    }
}

/// Parses and validates a JSON configuration document. Omitted fields take
/// their defaults; unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let file: RunFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;

    let d = TechParams::default();
    let t = &file.tech;
    let tech = TechParams {
        beta: t.beta.unwrap_or(d.beta),
        v_th: t.v_th.unwrap_or(d.v_th),
        lambda: t.lambda.unwrap_or(d.lambda),
        v_dd: t.v_dd.unwrap_or(d.v_dd),
        c_blb: t.c_blb.unwrap_or(d.c_blb),
        temperature: t.temperature.unwrap_or(d.temperature),
    };
    tech.validate().map_err(|e| scoped("tech", e))?;

    let n_bits = match (file.dac.n_bits, file.mac.n_bits) {
        (Some(a), Some(b)) if a != b => {
            return Err(Error::config("mac.n_bits", "mac.n_bits must equal dac.n_bits"))
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => 4,
    };
    let dac = DacConfig {
        n_bits,
        v_dd: file.dac.v_dd.unwrap_or(tech.v_dd),
        v_th: file.dac.v_th.unwrap_or(tech.v_th),
        mode: file.dac.mode.unwrap_or(DacMode::RootPaperLiteral),
        inverted: file.dac.inverted.unwrap_or(false),
    };
    dac.validate().map_err(|e| scoped("dac", e))?;
    if dac.v_dd != tech.v_dd {
        return Err(Error::config("dac.v_dd", "dac.v_dd must equal tech.v_dd"));
    }
    if dac.v_th != tech.v_th {
        return Err(Error::config("dac.v_th", "dac.v_th must equal tech.v_th"));
    }

    let base = MacConfig::default_for(&tech);
    let m = file.mac;
    let mac = MacConfig {
        n_bits,
        t0: m.t0.unwrap_or(base.t0),
        weighting: m.weighting.unwrap_or(base.weighting),
        t_wen: m.t_wen.unwrap_or(base.t_wen),
        t_pre: m.t_pre.unwrap_or(base.t_pre),
        t_sam: m.t_sam.unwrap_or(base.t_sam),
        dac,
        share_caps: m
            .share_caps
            .unwrap_or_else(|| vec![tech.c_blb; n_bits as usize]),
        adc_bits: m.adc_bits.unwrap_or(base.adc_bits),
        c_sh: m.c_sh.unwrap_or(base.c_sh),
        column_model: m.column_model.unwrap_or(base.column_model),
    };
    mac.validate_fields(&tech).map_err(|e| scoped("mac", e))?;

    let dv = VariationSpec::default();
    let v = file.variation;
    let variation = VariationSpec {
        sigma_vth: v.sigma_vth.unwrap_or(dv.sigma_vth),
        sigma_beta_rel: v.sigma_beta_rel.unwrap_or(dv.sigma_beta_rel),
        sigma_c_rel: v.sigma_c_rel.unwrap_or(dv.sigma_c_rel),
        n_samples: v.n_samples.unwrap_or(dv.n_samples),
        seed: v.seed.unwrap_or(dv.seed),
        noise: v.noise.unwrap_or(dv.noise),
        std_units: v.std_units.unwrap_or(dv.std_units),
    };
    variation.validate()?;

    Ok(RunConfig {
        tech,
        dac,
        mac,
        variation,
        output_path: file.output_path,
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Formats a number for CSV: up to 13 significant digits in scientific
/// notation, trailing zeros trimmed (`5.0e-9`, `1.925e-3`).
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0.0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("scientific format");
    let mut m = mantissa.trim_end_matches('0').to_string();
    if m.ends_with('.') {
        m.push('0');
    }
    format!("{m}e{exp}")
}

#[derive(Debug, Parser)]
#[command(name = "sramcim", version, about = "In-SRAM analog multiplication simulator")]
pub struct Cli {
    /// JSON configuration file (defaults to $SRAMCIM_CONFIG when set).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write CSV here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Overrides the configured random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for sweeps (1 = sequential, 0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct MacFlags {
    /// DAC law (defaults to the configured one).
    #[arg(long)]
    pub mode: Option<DacMode>,
    #[arg(long)]
    pub weighting: Option<Weighting>,
    /// Use the channel-length-modulation column model.
    #[arg(long)]
    pub clm: bool,
    /// Disable kT/C sampling noise.
    #[arg(long)]
    pub no_noise: bool,
}

#[derive(Debug, Args)]
pub struct VariationFlags {
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub sigma_vth: Option<f64>,
    #[arg(long)]
    pub sigma_beta_rel: Option<f64>,
    #[arg(long)]
    pub sigma_c_rel: Option<f64>,
    /// Disable kT/C sampling noise.
    #[arg(long)]
    pub no_noise: bool,
    /// Report spread as a fraction of full scale instead of LSBs.
    #[arg(long)]
    pub full_scale_units: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// BLB waveform for one word-line voltage.
    Discharge {
        #[arg(long, default_value_t = 1.0)]
        vwl: f64,
        #[arg(long, default_value_t = 2e-9)]
        duration: f64,
        #[arg(long, default_value_t = 1e-12)]
        dt: f64,
        #[arg(long, default_value = "numeric")]
        model: DischargeModel,
    },
    /// Saturation pulse-width bound versus word-line voltage.
    Pwmax {
        #[arg(long, default_value_t = 41)]
        points: usize,
    },
    /// Word-line voltage, current and sampled BLB voltage per DAC code.
    DacSweep {
        #[arg(long)]
        mode: Option<DacMode>,
        #[arg(long, default_value_t = SnrConfig::DEFAULT_T0)]
        t0: f64,
    },
    /// Sampled BLB voltage and step size per code.
    Transfer {
        #[arg(long)]
        mode: Option<DacMode>,
        #[arg(long, default_value_t = SnrConfig::DEFAULT_T0)]
        t0: f64,
    },
    /// Per-code SNR of the linear and root laws and their difference.
    Snr {
        /// Root law to compare against the linear one.
        #[arg(long)]
        mode: Option<DacMode>,
        #[arg(long, default_value_t = SnrConfig::DEFAULT_T0)]
        t0: f64,
    },
    /// One multiplication.
    Mac {
        #[arg(long)]
        din: u32,
        #[arg(long)]
        js: u32,
        #[command(flatten)]
        flags: MacFlags,
    },
    /// All operand pairs.
    MacSweep {
        #[command(flatten)]
        flags: MacFlags,
    },
    /// Monte Carlo mismatch statistics over the operand grid.
    Montecarlo {
        #[arg(long)]
        mode: Option<DacMode>,
        /// Restrict to one operand pair (requires --js).
        #[arg(long, requires = "js")]
        din: Option<u32>,
        #[arg(long, requires = "din")]
        js: Option<u32>,
        #[command(flatten)]
        variation: VariationFlags,
    },
    /// Root versus linear DAC error rates under identical draws.
    CompareDacs {
        #[command(flatten)]
        variation: VariationFlags,
    },
    /// Multiply cycle time.
    Timing,
}

impl std::str::FromStr for DischargeModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed_form_linear" | "linear" => Ok(DischargeModel::ClosedFormLinear),
            "closed_form_clm" | "clm" => Ok(DischargeModel::ClosedFormClm),
            "numeric" => Ok(DischargeModel::Numeric),
            other => Err(Error::invalid(format!("unknown discharge model '{other}'"))),
        }
    }
}

struct Csv(String);

impl Csv {
    fn new(header: &str) -> Self {
        let mut s = String::with_capacity(4096);
        s.push_str(header);
        s.push('\n');
        Csv(s)
    }

    fn row(&mut self, fields: &[String]) {
        self.0.push_str(&fields.join(","));
        self.0.push('\n');
    }
}

fn mac_config(cfg: &RunConfig, flags: &MacFlags) -> MacConfig {
    let mut mac = cfg.mac.clone();
    if let Some(mode) = flags.mode {
        mac.dac.mode = mode;
    }
    if let Some(w) = flags.weighting {
        mac.weighting = w;
    }
    if flags.clm {
        mac.column_model = ColumnModel::Clm;
    }
    mac
}

fn variation(cfg: &RunConfig, flags: &VariationFlags, seed: Option<u64>) -> VariationSpec {
    let v = cfg.variation;
    VariationSpec {
        sigma_vth: flags.sigma_vth.unwrap_or(v.sigma_vth),
        sigma_beta_rel: flags.sigma_beta_rel.unwrap_or(v.sigma_beta_rel),
        sigma_c_rel: flags.sigma_c_rel.unwrap_or(v.sigma_c_rel),
        n_samples: flags.samples.unwrap_or(v.n_samples),
        seed: seed.unwrap_or(v.seed),
        noise: v.noise && !flags.no_noise,
        std_units: if flags.full_scale_units { StdUnits::FullScale } else { v.std_units },
    }
}

fn exec_for(threads: usize) -> Execution {
    if threads == 1 {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn mac_row(csv: &mut Csv, m: &Multiplier, r: &crate::mac::MacResult) {
    csv.row(&[
        r.d_in.to_string(),
        r.j_s.to_string(),
        r.ideal_product.to_string(),
        fmt_num(r.v_shared),
        fmt_num(r.v_sampled),
        r.adc_code.to_string(),
        fmt_num(m.timing_total()),
        fmt_num(m.energy_estimate(r).total_j()),
    ]);
}

const MAC_HEADER: &str = "d_in,j_s,ideal,v_shared_v,v_sampled_v,adc_code,t_mu_s,energy_est_j";

/// Produces the CSV text for a parsed command line and configuration.
pub fn render(cli: &Cli, cfg: &RunConfig) -> Result<String> {
    let tech = &cfg.tech;
    let exec = exec_for(cli.threads);
    let csv = match &cli.command {
        Command::Discharge { vwl, duration, dt, model } => {
            let trace = closed_form_trace(tech, *vwl, *model, *duration, *dt)?;
            let mut csv = Csv::new("t_s,v_blb_v,model");
            for (t, v) in trace.times.iter().zip(&trace.voltages) {
                csv.row(&[fmt_num(*t), fmt_num(*v), trace.model.as_str().into()]);
            }
            csv
        }
        Command::Pwmax { points } => {
            if *points < 2 {
                return Err(Error::invalid("--points must be >= 2"));
            }
            let mut csv = Csv::new("v_wl_v,i0_a,pw_max_s");
            // grid over (v_th, v_th + v_dd]
            for k in 1..=*points {
                let v_wl = tech.v_th + tech.v_dd * k as f64 / *points as f64;
                let i0 = saturation_current_unchecked(tech, v_wl);
                let bound = pw_max(tech, v_wl)?;
                csv.row(&[fmt_num(v_wl), fmt_num(i0), fmt_num(bound.seconds())]);
            }
            csv
        }
        Command::DacSweep { mode, t0 } => {
            let dac = DacConfig { mode: mode.unwrap_or(cfg.dac.mode), ..cfg.dac };
            let rows = current_vs_code(tech, &dac)?;
            let mut csv = Csv::new("code,v_wl_v,i0_a,v_blb_v");
            for r in rows {
                let v_blb = crate::discharge::v_blb_linear(tech, r.v_wl, *t0)?;
                csv.row(&[r.code.to_string(), fmt_num(r.v_wl), fmt_num(r.i0), fmt_num(v_blb)]);
            }
            csv
        }
        Command::Transfer { mode, t0 } => {
            let dac = DacConfig { mode: mode.unwrap_or(cfg.dac.mode), ..cfg.dac };
            let pts = transfer_curve(tech, &dac, *t0)?;
            let mut csv = Csv::new("code,v_blb_v,step_v");
            for (k, p) in pts.iter().enumerate() {
                let step = if k == 0 { 0.0 } else { pts[k - 1].v_blb - p.v_blb };
                csv.row(&[p.code.to_string(), fmt_num(p.v_blb), fmt_num(step)]);
            }
            csv
        }
        Command::Snr { mode, t0 } => {
            let root_mode = match mode {
                Some(m) if m.is_root() => *m,
                Some(_) => return Err(Error::invalid("--mode must name a root law")),
                None if cfg.dac.mode.is_root() => cfg.dac.mode,
                None => DacMode::RootPaperLiteral,
            };
            let root = SnrConfig::new(*t0, DacConfig { mode: root_mode, ..cfg.dac }, *tech)?;
            let linear = SnrConfig::new(*t0, DacConfig { mode: DacMode::Linear, ..cfg.dac }, *tech)?;
            let table = snr_improvement(&root, &linear, &NoiseModel::for_tech(tech))?;
            let mut csv = Csv::new("code,snr_linear_db,snr_root_db,improvement_db");
            for r in &table.rows {
                csv.row(&[
                    r.code.to_string(),
                    fmt_num(r.snr_linear_db),
                    fmt_num(r.snr_root_db),
                    fmt_num(r.improvement_db),
                ]);
            }
            csv.row(&[
                "mean".into(),
                fmt_num(table.mean_linear_db),
                fmt_num(table.mean_root_db),
                fmt_num(table.mean_improvement_db),
            ]);
            csv
        }
        Command::Mac { din, js, flags } => {
            let m = Multiplier::new(mac_config(cfg, flags), *tech)?;
            let noise = (!flags.no_noise).then(|| NoiseModel::for_tech(tech));
            let seed = cli.seed.unwrap_or(cfg.variation.seed);
            let r = m.multiply(*din, *js, noise.as_ref(), Some(seed))?;
            let mut csv = Csv::new(MAC_HEADER);
            mac_row(&mut csv, &m, &r);
            csv
        }
        Command::MacSweep { flags } => {
            let m = Multiplier::new(mac_config(cfg, flags), *tech)?;
            let noise = (!flags.no_noise).then(|| NoiseModel::for_tech(tech));
            let seed = cli.seed.unwrap_or(cfg.variation.seed);
            let side = m.config().max_operand() as usize + 1;
            let results = exec
                .map_indexed(side * side, |k| {
                    let (d, j) = ((k / side) as u32, (k % side) as u32);
                    m.multiply(d, j, noise.as_ref(), Some(substream_seed(seed, d, j, 0)))
                })
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            let mut csv = Csv::new(MAC_HEADER);
            for r in &results {
                mac_row(&mut csv, &m, r);
            }
            csv
        }
        Command::Montecarlo { mode, din, js, variation: vf } => {
            let mut mac = cfg.mac.clone();
            if let Some(mode) = mode {
                mac.dac.mode = *mode;
            }
            let m = Multiplier::new(mac, *tech)?;
            let spec = variation(cfg, vf, cli.seed);
            let cells = match (din, js) {
                (Some(d), Some(j)) => vec![run_mc_with(&m, &spec, *d, *j, exec)?],
                _ => sweep_grid_with(&m, &spec, exec)?.cells,
            };
            let mut csv = Csv::new("d_in,j_s,mean_code,std_code_lsb,error_rate");
            for c in &cells {
                csv.row(&[
                    c.d_in.to_string(),
                    c.j_s.to_string(),
                    fmt_num(c.mean_code),
                    fmt_num(c.std_code),
                    fmt_num(c.error_rate),
                ]);
            }
            let worst = cells
                .iter()
                .reduce(|a, b| if b.std_code > a.std_code { b } else { a })
                .expect("at least one cell");
            csv.row(&["worst_std".into(), "worst_pair".into()]);
            csv.row(&[fmt_num(worst.std_code), format!("{}x{}", worst.d_in, worst.j_s)]);
            csv
        }
        Command::CompareDacs { variation: vf } => {
            let root_cfg = if cfg.mac.dac.mode.is_root() {
                cfg.mac.clone()
            } else {
                cfg.mac.clone().with_dac_mode(DacMode::RootPaperLiteral)
            };
            let root = Multiplier::new(root_cfg.clone(), *tech)?;
            let linear = Multiplier::new(root_cfg.with_dac_mode(DacMode::Linear), *tech)?;
            let spec = variation(cfg, vf, cli.seed);
            let cmp = compare_dacs_with(&root, &linear, &spec, exec)?;
            let mut csv = Csv::new("d_in,j_s,error_rate_root,error_rate_linear");
            for (r, l) in cmp.root.cells.iter().zip(&cmp.linear.cells) {
                csv.row(&[
                    r.d_in.to_string(),
                    r.j_s.to_string(),
                    fmt_num(r.error_rate),
                    fmt_num(l.error_rate),
                ]);
            }
            csv.row(&[
                "root_le_linear_fraction".into(),
                "root_worst_error_rate".into(),
                "linear_worst_error_rate".into(),
            ]);
            csv.row(&[
                fmt_num(cmp.root_le_linear_fraction),
                fmt_num(cmp.root_worst_error_rate),
                fmt_num(cmp.linear_worst_error_rate),
            ]);
            csv
        }
        Command::Timing => {
            let mut csv = Csv(String::new());
            csv.row(&["t_mu_s".into(), fmt_num(crate::mac::timing_total(&cfg.mac))]);
            csv
        }
    };
    Ok(csv.0)
}

fn resolve_config(cli: &Cli, env_config: Option<PathBuf>) -> Result<RunConfig> {
    match cli.config.clone().or(env_config) {
        Some(path) => load_config(&path),
        None => Ok(RunConfig::default()),
    }
}

fn execute(cli: &Cli, cfg: &RunConfig) -> Result<String> {
    #[cfg(feature = "parallel")]
    if cli.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build()
            .map_err(|e| Error::Io(e.to_string()))?;
        return pool.install(|| render(cli, cfg));
    }
    render(cli, cfg)
}

/// Runs the tool and returns the process exit status.
///
/// 0 on success, 1 on configuration or validation errors, 2 on simulation or
/// output errors, 64 on usage errors.
pub fn run<I, T>(args: I, env_config: Option<PathBuf>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::error::ErrorKind;

    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    let result = resolve_config(&cli, env_config).and_then(|cfg| {
        let text = execute(&cli, &cfg)?;
        match cli.output.as_ref().or(cfg.output_path.as_ref()) {
            Some(path) => fs::write(path, text)?,
            None => out.write_all(text.as_bytes())?,
        }
        Ok(())
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
