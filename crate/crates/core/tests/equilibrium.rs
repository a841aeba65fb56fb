mod common;

use cocogen::economics;
use cocogen::exec::Execution;
use cocogen::game;
use cocogen::model::{PayoffMode, Scenario};
use cocogen::solver::{
    fpi_solve, grid_oracle, verify_ne, CaseLabel, CaseMode, InitStrategy, SolverConfig, UpdateSchedule,
};
use common::*;
use rand::Rng;

fn instance(seed: u64, n: usize) -> Scenario {
    let mut r = rng(seed);
    let eta = 10f64.powf(r.random_range(19.0..21.5));
    let d_max = if n == 3 { 150 } else { 3000 };
    random_scenario(&mut r, n, eta, d_max, PayoffMode::LiteralReportOnly)
}

fn agrees_with_oracle(s: &Scenario) {
    let rep = fpi_solve(s, &SolverConfig::default()).unwrap();
    assert!(rep.converged);
    let oracle = grid_oracle(s, 1, Execution::default()).unwrap();
    let rel = (rep.potential - oracle.f_min).abs() / oracle.f_min.abs();
    assert!(rel <= 1e-6, "F {} vs oracle {}", rep.potential, oracle.f_min);
    for (a, b) in rep.profile.d_gen.iter().zip(&oracle.profile.d_gen) {
        assert!((a - b).abs() <= 1.0, "{:?} vs {:?}", rep.profile.d_gen, oracle.profile.d_gen);
    }
}

#[test]
fn single_organization_matches_oracle() {
    for seed in 0..20 {
        agrees_with_oracle(&instance(seed, 1));
    }
}

#[test]
fn pairs_match_oracle() {
    for seed in 100..110 {
        agrees_with_oracle(&instance(seed, 2));
    }
}

#[test]
fn triples_match_oracle() {
    for seed in 200..210 {
        agrees_with_oracle(&instance(seed, 3));
    }
}

#[test]
fn instance_family_exercises_every_case() {
    let mut seen = [false; 3];
    for seed in 0..40 {
        let s = instance(seed, 2);
        for c in fpi_solve(&s, &SolverConfig::default()).unwrap().cases {
            seen[c as usize] = true;
        }
    }
    assert_eq!(seen, [true; 3], "{:?}", [CaseLabel::LowerBound, CaseLabel::UpperBound, CaseLabel::Interior]);
}

#[test]
fn solutions_are_certified_equilibria() {
    let mut r = rng(7);
    for _ in 0..5 {
        let eta = 10f64.powf(r.random_range(19.5..20.5));
        let s = random_scenario(&mut r, 6, eta, 3000, PayoffMode::LiteralReportOnly);
        let rep = fpi_solve(&s, &SolverConfig::default()).unwrap();
        assert!(rep.converged);
        let cert = verify_ne(&s, &rep.profile, 1).unwrap();
        assert!(cert.is_ne, "{cert:?}");
    }
}

#[test]
fn perturbed_profile_is_not_an_equilibrium() {
    let (s, rep, k) = (100..200)
        .find_map(|seed| {
            let s = instance(seed, 2);
            let rep = fpi_solve(&s, &SolverConfig::default()).unwrap();
            let k = rep.cases.iter().position(|&c| c == CaseLabel::Interior)?;
            Some((s, rep, k))
        })
        .expect("an instance with an interior organization");
    let d = rep.profile.d_gen[k];
    let off = if d > 1500.0 { d - 1000.0 } else { d + 1000.0 };
    let cert = verify_ne(&s, &rep.profile.with(k, off), 1).unwrap();
    assert!(!cert.is_ne);
    assert_eq!(cert.worst_deviation.unwrap().org, k);
}

#[test]
fn starting_point_and_schedule_do_not_change_the_answer() {
    let s = instance(3, 2);
    let base = fpi_solve(&s, &SolverConfig::default()).unwrap();
    for init in [InitStrategy::AllMax, InitStrategy::Midpoint] {
        for schedule in [UpdateSchedule::Jacobi, UpdateSchedule::GaussSeidel] {
            let cfg = SolverConfig { init: init.clone(), schedule, tol: 1e-13, ..Default::default() };
            let rep = fpi_solve(&s, &cfg).unwrap();
            for (a, b) in rep.profile.d_gen.iter().zip(&base.profile.d_gen) {
                assert!((a - b).abs() <= 1.0);
            }
        }
    }
}

#[test]
fn looser_tolerance_stops_no_later() {
    let mut r = rng(21);
    let s = random_scenario(&mut r, 8, 1e20, 3000, PayoffMode::LiteralReportOnly);
    let loose = fpi_solve(&s, &SolverConfig { tol: 1e-3, ..Default::default() }).unwrap();
    let tight = fpi_solve(&s, &SolverConfig { tol: 1e-9, ..Default::default() }).unwrap();
    assert!(loose.iterations <= tight.iterations);
    assert!(loose.iterations >= 1);
}

#[test]
fn potential_trace_is_non_increasing() {
    let mut r = rng(22);
    for _ in 0..5 {
        let s = random_scenario(&mut r, 8, 1e20, 3000, PayoffMode::LiteralReportOnly);
        let rep = fpi_solve(&s, &SolverConfig::default()).unwrap();
        for w in rep.potential_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-15, "{:?}", rep.potential_trace);
        }
    }
}

#[test]
fn printed_case_rule_does_worse_on_the_potential() {
    let s = instance(104, 2);
    let good = fpi_solve(&s, &SolverConfig::default()).unwrap();
    let printed = fpi_solve(&s, &SolverConfig { case_mode: CaseMode::Printed, max_iters: 50, ..Default::default() }).unwrap();
    assert!(printed.potential >= good.potential);
}

#[test]
fn report_carries_constraint_verdicts() {
    let mut r = rng(5);
    let s = random_scenario(&mut r, 5, 1e20, 3000, PayoffMode::LiteralReportOnly);
    let rep = fpi_solve(&s, &SolverConfig::default()).unwrap();
    assert_eq!(rep.ir.len(), 5);
    assert_eq!(rep.ir, economics::check_ir(&s, &rep.profile).unwrap());
    assert_eq!(rep.bb, economics::check_bb(&s, &rep.profile).unwrap());
    assert_eq!(rep.potential, game::potential(&s, &rep.profile).unwrap());
}

#[test]
fn oracle_execution_modes_agree() {
    let s = instance(105, 2);
    assert_eq!(
        grid_oracle(&s, 1, Execution::Sequential).unwrap(),
        grid_oracle(&s, 1, Execution::Parallel).unwrap()
    );
}
