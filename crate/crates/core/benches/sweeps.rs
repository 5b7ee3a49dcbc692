use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use sramcim::varsim::{run_mc_with, sweep_grid_with};
use sramcim::{Execution, MacConfig, Multiplier, TechParams, VariationSpec};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn multiplier() -> Multiplier {
    let p = TechParams::default();
    Multiplier::new(MacConfig::default_for(&p), p).unwrap()
}

fn mac_sweep(c: &mut Criterion) {
    let m = multiplier();
    let mut g = c.benchmark_group("mac_sweep");
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| black_box(m.sweep(exec).unwrap())));
    }
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let m = multiplier();
    let mut g = c.benchmark_group("monte_carlo");
    g.sample_size(10);
    for samples in [1000, 10_000] {
        let spec = VariationSpec { n_samples: samples, ..Default::default() };
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, samples), &spec, |b, spec| {
                b.iter(|| black_box(run_mc_with(&m, spec, 15, 15, exec).unwrap()))
            });
        }
    }
    g.finish();
}

fn grid(c: &mut Criterion) {
    let m = multiplier();
    let spec = VariationSpec { n_samples: 100, ..Default::default() };
    let mut g = c.benchmark_group("mc_grid_100");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| black_box(sweep_grid_with(&m, &spec, exec).unwrap())));
    }
    g.finish();
}

criterion_group!(benches, mac_sweep, monte_carlo, grid);
criterion_main!(benches);
