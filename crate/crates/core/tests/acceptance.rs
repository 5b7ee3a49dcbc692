//! Exit criteria. Each test prints one `[PASS]`/`[FAIL]` line and then
//! asserts. Run with `cargo test --test acceptance -- --nocapture`.

use std::time::{Duration, Instant};

use sramcim::cli::run;
use sramcim::discharge::{pw_max, pw_max_clm, simulate_discharge, v_blb_clm, v_blb_linear};
use sramcim::snr::{snr_db, snr_improvement};
use sramcim::varsim::{compare_dacs_with, sweep_grid_with, McGrid};
use sramcim::{
    DacConfig, DacMode, Execution, MacConfig, Multiplier, NoiseModel, SnrConfig, TechParams,
    VariationSpec,
};

fn report(id: u32, name: &str, ok: bool, detail: String) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {id}: {name} ({detail})");
    assert!(ok, "criterion {id} failed: {detail}");
}

fn cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["sramcim"];
    argv.extend_from_slice(args);
    let code = run(argv, None, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap())
}

fn default_multiplier(mode: DacMode) -> Multiplier {
    let p = TechParams::default();
    Multiplier::new(MacConfig::default_for(&p).with_dac_mode(mode), p).unwrap()
}

/// Independent closed form of the mean improvement.
fn improvement_oracle(v_th: f64, v_dd: f64, n_bits: u32) -> f64 {
    let levels = (1u32 << n_bits) - 1;
    let s = (v_dd - v_th) / levels as f64;
    let mean_log = (0..levels)
        .map(|i| ((2 * i + 1) as f64).log10())
        .sum::<f64>()
        / levels as f64;
    -20.0 * (s.log10() + mean_log)
}

#[test]
fn criterion_1_snr_headline() {
    let start = Instant::now();
    let (code, out) = cli(&["snr"]);
    assert_eq!(code, 0);
    let mean_row = out.lines().last().unwrap();
    let reported: f64 = mean_row.split(',').nth(3).unwrap().parse().unwrap();

    let p = TechParams::default();
    let root = SnrConfig::new(50e-12, DacConfig::for_tech(&p, DacMode::RootPaperLiteral), p).unwrap();
    let lin = SnrConfig::new(50e-12, DacConfig::for_tech(&p, DacMode::Linear), p).unwrap();
    let noise = NoiseModel::for_tech(&p);
    let simulated = (0..15)
        .map(|i| snr_db(&root, &noise, i).unwrap() - snr_db(&lin, &noise, i).unwrap())
        .sum::<f64>()
        / 15.0;
    let oracle = improvement_oracle(0.615, 1.0, 4);
    let elapsed = start.elapsed();

    let ok = (reported - 10.77).abs() <= 0.05
        && (simulated - oracle).abs() <= 1e-9
        && (reported - oracle).abs() <= 1e-9
        && elapsed < Duration::from_secs(1);
    report(
        1,
        "mean SNR improvement 10.77 +/- 0.05 dB",
        ok,
        format!("cli={reported:.6} simulated={simulated:.12} oracle={oracle:.12} t={elapsed:?}"),
    );
}

#[test]
fn criterion_2_parameter_cancellation() {
    let start = Instant::now();
    let base = TechParams::default();
    let table = |p: TechParams, t0: f64| {
        let root = SnrConfig::new(t0, DacConfig::for_tech(&p, DacMode::RootPaperLiteral), p).unwrap();
        let lin = SnrConfig::new(t0, DacConfig::for_tech(&p, DacMode::Linear), p).unwrap();
        let t = snr_improvement(&root, &lin, &NoiseModel::for_tech(&p)).unwrap();
        let mut bits: Vec<u64> = t.rows.iter().map(|r| r.improvement_db.to_bits()).collect();
        bits.push(t.mean_improvement_db.to_bits());
        bits
    };
    let reference = table(base, 50e-12);
    let variants = [
        ("beta", TechParams { beta: base.beta * 10.0, ..base }, 50e-12),
        ("t0", base, 500e-12),
        ("c_blb", TechParams { c_blb: base.c_blb * 10.0, ..base }, 50e-12),
        ("temperature", TechParams { temperature: base.temperature * 10.0, ..base }, 50e-12),
        (
            "all",
            TechParams {
                beta: base.beta * 10.0,
                c_blb: base.c_blb * 10.0,
                temperature: base.temperature * 10.0,
                ..base
            },
            500e-12,
        ),
    ];
    let mismatched: Vec<&str> = variants
        .iter()
        .filter(|(_, p, t0)| table(*p, *t0) != reference)
        .map(|(n, _, _)| *n)
        .collect();
    let elapsed = start.elapsed();
    report(
        2,
        "improvement table bit-identical under 10x rescaling",
        mismatched.is_empty() && elapsed < Duration::from_secs(1),
        format!("mismatched={mismatched:?} t={elapsed:?}"),
    );
}

#[test]
fn criterion_3_closed_form_consistency() {
    let start = Instant::now();
    let p = TechParams::default();

    let tiny = TechParams { lambda: 1e-9, ..p };
    let mut limit_err: f64 = 0.0;
    for v_wl in [0.7, 0.85, 1.0, 1.2355] {
        for k in 0..=2000 {
            let t = k as f64 * 1e-12;
            let d = v_blb_clm(&tiny, v_wl, t).unwrap() - v_blb_linear(&tiny, v_wl, t).unwrap();
            limit_err = limit_err.max(d.abs());
        }
    }

    let mut worst_lin: f64 = 0.0;
    let mut worst_clm: f64 = 0.0;
    for v_wl in [0.8, 1.0, 1.2355] {
        let flat = p.without_clm();
        let window = pw_max(&flat, v_wl).unwrap().seconds();
        let tr = simulate_discharge(&flat, v_wl, window, 1e-12).unwrap();
        for (&t, &v) in tr.times.iter().zip(&tr.voltages) {
            worst_lin = worst_lin.max((v - v_blb_linear(&flat, v_wl, t).unwrap()).abs());
        }
        let window = pw_max_clm(&p, v_wl).unwrap().seconds();
        let tr = simulate_discharge(&p, v_wl, window, 1e-12).unwrap();
        for (&t, &v) in tr.times.iter().zip(&tr.voltages) {
            worst_clm = worst_clm.max((v - v_blb_clm(&p, v_wl, t).unwrap()).abs());
        }
    }
    let elapsed = start.elapsed();
    let ok = limit_err <= 1e-6
        && worst_lin <= 0.5e-3
        && worst_clm <= 0.5e-3
        && elapsed < Duration::from_secs(5);
    report(
        3,
        "closed forms agree with each other and with the integrator",
        ok,
        format!("lambda->0 {limit_err:.3e} V, numeric/linear {worst_lin:.3e} V, numeric/clm {worst_clm:.3e} V, t={elapsed:?}"),
    );
}

#[test]
fn criterion_4_exhaustive_products() {
    let start = Instant::now();
    let (code, out) = cli(&["mac-sweep", "--no-noise"]);
    assert_eq!(code, 0);
    let mut mismatches = 0;
    let mut rows = 0;
    for line in out.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (d, j): (u32, u32) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        let adc: u32 = f[5].parse().unwrap();
        rows += 1;
        if adc != d * j {
            mismatches += 1;
        }
    }

    let m = default_multiplier(DacMode::RootPaperLiteral);
    let results = m.sweep(Execution::default()).unwrap();
    let lib_mismatch = results.iter().filter(|r| r.adc_code != r.d_in * r.j_s).count();
    let slope = (1.0 - results.last().unwrap().v_shared) / 225.0;
    let worst_rel = results
        .iter()
        .filter(|r| r.d_in * r.j_s > 0)
        .map(|r| ((1.0 - r.v_shared) / (r.d_in * r.j_s) as f64 - slope).abs() / slope)
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    let ok = rows == 256
        && mismatches == 0
        && lib_mismatch == 0
        && worst_rel <= 1e-12
        && elapsed < Duration::from_secs(5);
    report(
        4,
        "all 256 noiseless products decode exactly",
        ok,
        format!("rows={rows} mismatches={mismatches}/{lib_mismatch} proportionality={worst_rel:.3e} t={elapsed:?}"),
    );
}

#[test]
fn criterion_5_saturation_bound() {
    let p = TechParams::default();
    let cfg = MacConfig::default_for(&p);
    let mut violations = 0;
    let mut checked = 0;
    for d in 0..16u32 {
        for j_s in 0..16u32 {
            for col in 0..4usize {
                if j_s >> col & 1 == 0 {
                    continue;
                }
                let (v_wl, dwell) = cfg.column_drive(d, col).unwrap();
                checked += 1;
                if !pw_max(&p, v_wl).unwrap().admits(dwell) {
                    violations += 1;
                }
            }
        }
    }
    let (v_wl, msb_dwell) = cfg.column_drive(15, 3).unwrap();
    let msb_bound = pw_max(&p, v_wl).unwrap().seconds();
    let margin_ok = (msb_dwell - 0.64e-9).abs() < 1e-21
        && (msb_bound - 0.657e-9).abs() < 0.5e-12
        && msb_dwell < msb_bound;
    report(
        5,
        "every conducting column stays inside pw_max",
        violations == 0 && margin_ok,
        format!("checked={checked} violations={violations} msb dwell={msb_dwell:e} s bound={msb_bound:e} s"),
    );
}

#[test]
fn criterion_6_timing() {
    let (code, out) = cli(&["timing"]);
    let t_mu = MacConfig::default_for(&TechParams::default());
    let t = sramcim::mac::timing_total(&t_mu);
    report(
        6,
        "T_MU = 5.0 ns (200 MHz)",
        code == 0 && out == "t_mu_s,5.0e-9\n" && (t - 5e-9).abs() < 1e-20,
        format!("output={:?} frequency={:.3} MHz", out.trim(), 1e-6 / t),
    );
}

fn chebyshev_from_top(grid: &McGrid) -> u32 {
    let w = grid.worst_std();
    (15 - w.d_in).max(15 - w.j_s)
}

/// Pinned regression for the default variation model at seed 42: std of the
/// (15, 15) code in LSBs. Recorded from the first run.
const PINNED_STD_15_15: f64 = 5.704626785931438;

#[test]
fn criterion_7_monte_carlo_determinism_and_shape() {
    let m = default_multiplier(DacMode::RootPaperLiteral);
    let spec = VariationSpec::default();
    assert_eq!(spec.n_samples, 1000);

    let sequential = sweep_grid_with(&m, &spec, Execution::Sequential).unwrap();
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let one = pool(1).install(|| sweep_grid_with(&m, &spec, Execution::Parallel).unwrap());
    let four = pool(4).install(|| sweep_grid_with(&m, &spec, Execution::Parallel).unwrap());
    let deterministic = sequential == one && one == four;

    let (c1, a) = cli(&["montecarlo", "--samples", "200", "--threads", "1"]);
    let (c2, b) = cli(&["montecarlo", "--samples", "200", "--threads", "3"]);
    let cli_identical = c1 == 0 && c2 == 0 && a == b;

    let zero = sweep_grid_with(&m, &VariationSpec::degenerate(1000, 42), Execution::default()).unwrap();
    let zero_exact = zero.cells.iter().all(|c| {
        c.mean_code == (c.d_in * c.j_s) as f64 && c.std_code == 0.0 && c.error_rate == 0.0
    });

    let dist = chebyshev_from_top(&sequential);
    let pinned = sequential.get(15, 15).std_code;
    let pinned_ok = (pinned - PINNED_STD_15_15).abs() <= 1e-9 * PINNED_STD_15_15;

    let (_, mac_out) = cli(&["mac", "--din", "15", "--js", "15", "--no-noise"]);
    let labeled = mac_out.starts_with("d_in,j_s,ideal,v_shared_v,v_sampled_v,adc_code,t_mu_s,energy_est_j");

    let w = sequential.worst_std();
    report(
        7,
        "seeded Monte Carlo is reproducible and peaks near (15,15)",
        deterministic && cli_identical && zero_exact && dist <= 1 && pinned_ok && labeled,
        format!(
            "deterministic={deterministic} cli={cli_identical} zero_sigma_exact={zero_exact} worst=({},{}) std={:.4} LSB, pinned std(15,15)={pinned:.6}",
            w.d_in, w.j_s, w.std_code
        ),
    );
}

#[test]
fn criterion_8_dac_comparison() {
    let start = Instant::now();
    let root = default_multiplier(DacMode::RootPaperLiteral);
    let linear = default_multiplier(DacMode::Linear);
    let cmp = compare_dacs_with(&root, &linear, &VariationSpec::default(), Execution::default())
        .unwrap();
    let elapsed = start.elapsed();
    let low = cmp.linear.error_mass(|p| p <= 5);
    let high = cmp.linear.error_mass(|p| p >= 200);
    let ok = cmp.root_worst_error_rate < cmp.linear_worst_error_rate
        && low > high
        && elapsed < Duration::from_secs(60);
    report(
        8,
        "root DAC beats linear DAC on worst-pair error rate; linear errors concentrate at low products",
        ok,
        format!(
            "worst root={} linear={} linear mass <=5: {low:.3} >=200: {high:.3} t={elapsed:?}",
            cmp.root_worst_error_rate, cmp.linear_worst_error_rate
        ),
    );
}
