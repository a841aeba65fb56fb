mod common;

use cocogen::exec::Execution;
use cocogen::experiment::{run_sweep, SweepConfig};
use cocogen::model::{validate_scenario, PayoffMode, Scenario};
use cocogen::report::{is_timestamp_line, write_results_csv, RunManifest};
use cocogen::scaling::HeterogeneityPresets;
use cocogen::scenario::{expand_sweep, sample_scenario, Range, SamplingOptions, SweepGrid};
use common::*;
use proptest::prelude::*;

fn small_sweep() -> SweepConfig {
    SweepConfig {
        grid: SweepGrid {
            gamma_levels: vec![Range::new(0.0, 0.5), Range::new(0.5, 1.0)],
            alpha_d_levels: vec![0.1, 0.5, 0.9],
            repetitions: 3,
            base_seed: 99,
        },
        sampling: SamplingOptions { eta: 7e19, mu: 7e19, ..SamplingOptions::default() },
        solver: Default::default(),
        radg_draws: 10,
    }
}

fn csv_bytes(cfg: &SweepConfig, exec: Execution, stamp: &str) -> Vec<u8> {
    let rows = run_sweep(cfg, &HeterogeneityPresets::builtin(), exec);
    let mut m = RunManifest::new("sweep", vec!["mem".into()], cfg.grid.base_seed);
    m.started = stamp.into();
    m.finished = stamp.into();
    let mut out = Vec::new();
    write_results_csv(&mut out, &m, &rows).unwrap();
    out
}

fn strip_timestamps(bytes: &[u8]) -> String {
    String::from_utf8(bytes.to_vec())
        .unwrap()
        .split("\r\n")
        .filter(|l| !is_timestamp_line(l))
        .collect::<Vec<_>>()
        .join("\r\n")
}

#[test]
fn repeated_sweeps_are_byte_identical() {
    let cfg = small_sweep();
    let a = csv_bytes(&cfg, Execution::Parallel, "t0");
    let b = csv_bytes(&cfg, Execution::Sequential, "t1");
    assert_ne!(a, b);
    assert_eq!(strip_timestamps(&a), strip_timestamps(&b));
}

#[test]
fn base_seed_changes_results() {
    let cfg = small_sweep();
    let mut other = cfg.clone();
    other.grid.base_seed += 1;
    assert_ne!(
        strip_timestamps(&csv_bytes(&cfg, Execution::Sequential, "t")),
        strip_timestamps(&csv_bytes(&other, Execution::Sequential, "t"))
    );
}

#[test]
fn sampled_scenarios_validate_and_round_trip() {
    let cfg = small_sweep();
    let presets = HeterogeneityPresets::builtin();
    for job in expand_sweep(&cfg.grid) {
        let s = sample_scenario(&job.cell, &presets.get(job.cell.alpha_d).unwrap(), &cfg.sampling, job.seed).unwrap();
        assert!(validate_scenario(&s).is_ok());
        let back = Scenario::from_json_str(&s.to_json_string()).unwrap();
        assert_eq!(back, s);
    }
}

#[test]
fn shipped_sweep_file_parses() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../config/sweep.json");
    let cfg = SweepConfig::load(path).unwrap();
    assert_eq!(expand_sweep(&cfg.grid).len(), 900);
    let example = concat!(env!("CARGO_MANIFEST_DIR"), "/../../config/example_scenario.json");
    assert_eq!(Scenario::load(example).unwrap().n(), 10);
}

#[test]
fn unknown_fields_are_rejected() {
    let s = random_scenario(&mut rng(1), 2, 1e20, 3000, PayoffMode::LiteralReportOnly);
    let mut v: serde_json::Value = serde_json::from_str(&s.to_json_string()).unwrap();
    v["market"]["extra"] = serde_json::json!(1);
    assert!(Scenario::from_json_str(&v.to_string()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn json_round_trip_is_exact(seed in any::<u64>(), n in 1usize..8, anti in any::<bool>()) {
        let mode = if anti { PayoffMode::AntisymmetricNetTransfer } else { PayoffMode::LiteralReportOnly };
        let s = random_scenario(&mut rng(seed), n, 1e20, 3000, mode);
        let back = Scenario::from_json_str(&s.to_json_string()).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(back.to_json_string(), s.to_json_string());
    }

    #[test]
    fn validation_is_idempotent(seed in any::<u64>(), n in 1usize..6, bump in -2.0f64..2.0) {
        let mut s = random_scenario(&mut rng(seed), n, 1e20, 3000, PayoffMode::LiteralReportOnly);
        s.market.gamma[0][n - 1] += bump;
        let first = validate_scenario(&s).map_err(|e| e.to_string());
        let second = validate_scenario(&s).map_err(|e| e.to_string());
        prop_assert_eq!(first, second);
    }
}
