use std::hint::black_box;

use cocogen::baselines::radg_average_with;
use cocogen::experiment::{run_sweep, SweepConfig};
use cocogen::scaling::HeterogeneityPresets;
use cocogen::scenario::{sample_scenario, Cell, Range, SamplingOptions, SweepGrid};
use cocogen::solver::grid_oracle;
use cocogen::{Execution, Scenario, ScalingLaw};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn scenario(n: usize, d_max: u64) -> Scenario {
    let opts = SamplingOptions {
        n,
        eta: 7e19,
        mu: 7e19,
        bounds: cocogen::model::StrategyBounds { d_min: 0, d_max },
        ..Default::default()
    };
    let cell = Cell {
        gamma_level: 0,
        gamma: Range::new(0.0, 1.0),
        alpha_level: 0,
        alpha_d: 0.5,
    };
    sample_scenario(&cell, &ScalingLaw::new(2.5, 0.3, 0.06).unwrap(), &opts, 1).unwrap()
}

fn oracle(c: &mut Criterion) {
    let s = scenario(2, 1500);
    let mut g = c.benchmark_group("grid_oracle_n2");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| grid_oracle(black_box(&s), 1, exec).unwrap())
        });
    }
    g.finish();
}

fn sweep(c: &mut Criterion) {
    let cfg = SweepConfig {
        grid: SweepGrid {
            gamma_levels: vec![Range::new(0.0, 0.5), Range::new(0.5, 1.0)],
            alpha_d_levels: vec![0.1, 0.9],
            repetitions: 10,
            base_seed: 3,
        },
        sampling: SamplingOptions {
            eta: 7e19,
            mu: 7e19,
            ..Default::default()
        },
        solver: Default::default(),
        radg_draws: 20,
    };
    let presets = HeterogeneityPresets::builtin();
    let mut g = c.benchmark_group("sweep_40_jobs");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_sweep(black_box(&cfg), &presets, exec))
        });
    }
    g.finish();
}

fn radg(c: &mut Criterion) {
    let s = scenario(10, 3000);
    let mut g = c.benchmark_group("radg_2000_draws");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| radg_average_with(black_box(&s), 2000, 9, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, oracle, sweep, radg);
criterion_main!(benches);
