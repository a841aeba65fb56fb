//! Acceptance criteria as plain functions, one per criterion. Each returns an
//! [`Outcome`]; the `acceptance` test target prints them. Thresholds are fixed
//! here and never tuned to the observed numbers.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use cocogen::economics;
use cocogen::exec::Execution;
use cocogen::experiment::{aggregate, find_cell, run_sweep, CellSummary, ResultRow, Scheme, SweepConfig};
use cocogen::game;
use cocogen::model::{PayoffMode, Scenario, ScalingLaw, StrategyBounds, StrategyProfile};
use cocogen::report::is_timestamp_line;
use cocogen::scaling::{fit_scaling_law, synthetic_curve, CurvePoint, FitConfig, HeterogeneityPresets};
use cocogen::scenario::{sample_scenario, Cell, Range, SamplingOptions};
use cocogen::solver::{fpi_solve, grid_oracle, verify_ne, SolverConfig};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Scenario drawn from the standard parameter ranges, with a random law,
/// competitive intensities on `[0, 1)` and a log-uniform workload scale.
fn draw(r: &mut StdRng, n: usize, eta_exp: (f64, f64), d_max: u64, mode: PayoffMode, symmetric: bool) -> Scenario {
    let eta = log_uniform(r, eta_exp.0, eta_exp.1);
    let law = ScalingLaw::new(r.random_range(1.5..3.5), r.random_range(0.1..0.6), r.random_range(0.0..0.1)).unwrap();
    let opts = SamplingOptions {
        n,
        eta,
        mu: eta,
        bounds: StrategyBounds { d_min: 0, d_max },
        bb_mode: mode,
        symmetric_gamma: symmetric,
        ..Default::default()
    };
    let cell = Cell {
        gamma_level: 0,
        gamma: Range::new(0.0, 1.0),
        alpha_level: 0,
        alpha_d: 0.5,
    };
    sample_scenario(&cell, &law, &opts, r.random()).unwrap()
}

fn random_profile(r: &mut StdRng, s: &Scenario) -> StrategyProfile {
    StrategyProfile::new((0..s.n()).map(|_| r.random_range(s.bounds.lo()..=s.bounds.hi())).collect())
}

fn log_uniform(r: &mut StdRng, lo_exp: f64, hi_exp: f64) -> f64 {
    10f64.powf(r.random_range(lo_exp..hi_exp))
}

fn timed(limit: Duration, pass: bool, start: Instant, detail: String) -> Outcome {
    let took = start.elapsed();
    Outcome::new(pass && took < limit, format!("{detail}; {:.2?} (limit {:?})", took, limit))
}

pub fn potential_identity() -> Outcome {
    let start = Instant::now();
    let mut r = StdRng::seed_from_u64(1);
    let (mut triples, mut bad, mut worst) = (0, 0, 0.0f64);
    while triples < 1200 {
        let n = r.random_range(1..=10);
        let s = draw(&mut r, n, (4.0, 21.5), 3000, PayoffMode::LiteralReportOnly, false);
        for _ in 0..4 {
            let p = random_profile(&mut r, &s);
            let k = r.random_range(0..n);
            let alt = r.random_range(s.bounds.lo()..=s.bounds.hi());
            let du = economics::utility(&s, &p.with(k, alt), k).unwrap().utility
                - economics::utility(&s, &p, k).unwrap().utility;
            let res = game::weighted_potential_residual(&s, &p, k, alt).unwrap();
            let scaled = res.abs() / (1.0 + du.abs());
            worst = worst.max(scaled);
            bad += (scaled > 1e-9) as usize;
            triples += 1;
        }
    }
    timed(
        Duration::from_secs(10),
        bad == 0,
        start,
        format!("{triples} triples, {bad} over 1e-9, worst scaled residual {worst:.2e}"),
    )
}

pub fn gradient_check() -> Outcome {
    let start = Instant::now();
    let mut r = StdRng::seed_from_u64(2);
    let (mut points, mut bad, mut worst) = (0, 0, 0.0f64);
    let h = 1e-3;
    while points < 600 {
        let n = r.random_range(1..=10);
        let s = draw(&mut r, n, (4.0, 21.5), 3000, PayoffMode::LiteralReportOnly, false);
        let p = StrategyProfile::new((0..n).map(|_| r.random_range(1.0..2999.0)).collect());
        let g = game::potential_gradient(&s, &p).unwrap();
        for k in 0..n {
            let up = p.with(k, p.d_gen[k] + h);
            let down = p.with(k, p.d_gen[k] - h);
            let fd = game::potential_difference(&s, &up, &down).unwrap() / (2.0 * h);
            let rel = (fd - g[k]).abs() / g[k].abs();
            worst = worst.max(rel);
            bad += (rel > 1e-6) as usize;
        }
        points += 1;
    }
    timed(
        Duration::from_secs(10),
        bad == 0,
        start,
        format!("{points} points, {bad} coordinates over 1e-6, worst {worst:.2e}"),
    )
}

pub fn convexity() -> Outcome {
    let start = Instant::now();
    let mut r = StdRng::seed_from_u64(3);
    let mut violations = 0;
    for k in 0..20 {
        let s = draw(&mut r, 10, (4.0, 21.5), 3000, PayoffMode::LiteralReportOnly, false);
        violations += game::convexity_probe(&s, 1000, k).unwrap().violations;
    }
    timed(
        Duration::from_secs(30),
        violations == 0,
        start,
        format!("20 scenarios x 1000 pairs, {violations} violations"),
    )
}

pub fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut r = StdRng::seed_from_u64(4);
    let mut failures = Vec::new();
    let mut worst_f = 0.0f64;
    for n in 1..=3 {
        // The three-organization grid has (d_max + 1)^3 points.
        let d_max = if n == 3 { 150 } else { 3000 };
        for i in 0..50 {
            let s = draw(&mut r, n, (19.0, 21.5), d_max, PayoffMode::LiteralReportOnly, false);
            let rep = fpi_solve(&s, &SolverConfig::default()).unwrap();
            let oracle = grid_oracle(&s, 1, Execution::default()).unwrap();
            let rel = (rep.potential - oracle.f_min).abs() / oracle.f_min.abs();
            worst_f = worst_f.max(rel);
            let close = rep.profile.d_gen.iter().zip(&oracle.profile.d_gen).all(|(a, b)| (a - b).abs() <= 1.0);
            if !rep.converged || rel > 1e-6 || !close {
                failures.push(format!("N={n}#{i}"));
            }
        }
    }
    timed(
        Duration::from_secs(300),
        failures.is_empty(),
        start,
        format!("150 instances, worst F rel {worst_f:.2e}, failures {failures:?}"),
    )
}

pub fn ne_certification() -> Outcome {
    let start = Instant::now();
    let root = repo_root();
    let sweep = SweepConfig::load(root.join("config/sweep.json")).unwrap();
    let presets = HeterogeneityPresets::builtin();
    let mut scenarios = vec![("default".to_string(), Scenario::load(root.join("config/example_scenario.json")).unwrap())];
    let mut r = StdRng::seed_from_u64(5);
    for i in 0..20 {
        let gamma = sweep.grid.gamma_levels[i % 3];
        let alpha_d = sweep.grid.alpha_d_levels[(i / 3) % 3];
        let cell = Cell { gamma_level: i % 3, gamma, alpha_level: (i / 3) % 3, alpha_d };
        let law = presets.get(alpha_d).unwrap();
        scenarios.push((format!("random#{i}"), sample_scenario(&cell, &law, &sweep.sampling, r.random()).unwrap()));
    }
    let mut failures = Vec::new();
    for (name, s) in &scenarios {
        let rep = fpi_solve(s, &sweep.solver).unwrap();
        if !rep.converged || !verify_ne(s, &rep.profile, 1).unwrap().is_ne {
            failures.push(name.clone());
        }
    }
    timed(
        Duration::from_secs(120),
        failures.is_empty(),
        start,
        format!("{} scenarios, failures {failures:?}", scenarios.len()),
    )
}

/// The shipped 3x3x100 sweep, shared by criteria 6, 7 and 10.
pub struct SweepRun {
    rows: Vec<ResultRow>,
    cells: Vec<CellSummary>,
    cfg: SweepConfig,
    took: Duration,
}

pub fn shipped_sweep() -> SweepRun {
    let start = Instant::now();
    let cfg = SweepConfig::load(repo_root().join("config/sweep.json")).unwrap();
    let rows = run_sweep(&cfg, &HeterogeneityPresets::builtin(), Execution::default());
    let cells = aggregate(&rows);
    SweepRun { rows, cells, cfg, took: start.elapsed() }
}

fn welfare(run: &SweepRun, g: usize, a: f64, scheme: Scheme) -> f64 {
    find_cell(&run.cells, g, a, scheme).unwrap().welfare.mean
}

pub fn impact_trends(run: &SweepRun) -> Outcome {
    let grid = &run.cfg.grid;
    let (ng, alphas) = (grid.gamma_levels.len(), &grid.alpha_d_levels);
    let cell = |g: usize, a: f64| find_cell(&run.cells, g, a, Scheme::CoCoGen).unwrap();
    let mut broken = Vec::new();
    for &a in alphas {
        for g in 1..ng {
            let (w0, w1) = (cell(g - 1, a).welfare.mean, cell(g, a).welfare.mean);
            if w1 > w0 {
                broken.push(format!("welfare up in gamma at alpha_d {a}: {w0:.2} -> {w1:.2}"));
            }
        }
    }
    for g in 0..ng {
        for k in 1..alphas.len() {
            let (c0, c1) = (cell(g, alphas[k - 1]), cell(g, alphas[k]));
            if c1.welfare.mean < c0.welfare.mean {
                broken.push(format!("welfare down in alpha_d at gamma level {g}"));
            }
            if c1.mean_d_gen.mean > c0.mean_d_gen.mean {
                broken.push(format!("generation up in alpha_d at gamma level {g}"));
            }
        }
    }
    let failed = run.rows.iter().filter(|r| !r.is_ok()).count();
    let pass = broken.is_empty() && failed == 0 && run.took < Duration::from_secs(600);
    Outcome::new(
        pass,
        format!("{} rows, {failed} failed jobs, {:.2?}; violations {broken:?}", run.rows.len(), run.took),
    )
}

pub fn scheme_ordering(run: &SweepRun) -> Outcome {
    let grid = &run.cfg.grid;
    let mut broken = Vec::new();
    let mut tightest = f64::INFINITY;
    for g in 0..grid.gamma_levels.len() {
        for &a in &grid.alpha_d_levels {
            let w = [Scheme::CoCoGen, Scheme::Radg, Scheme::Wco, Scheme::Vcfl].map(|s| welfare(run, g, a, s));
            for pair in w.windows(2) {
                tightest = tightest.min(pair[0] - pair[1]);
            }
            if w.windows(2).any(|p| p[0] < p[1]) {
                broken.push(format!("gamma level {g}, alpha_d {a}: {w:?}"));
            }
        }
    }
    Outcome::new(
        broken.is_empty(),
        format!("{} cells, tightest gap {tightest:.3}; violations {broken:?}", grid.n_cells()),
    )
}

pub fn scaling_fit() -> Outcome {
    let start = Instant::now();
    let ds: Vec<u64> = (0..25).map(|i| (50.0 * 1000f64.powf(i as f64 / 24.0)).round() as u64).collect();
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let mut r = StdRng::seed_from_u64(8);
    let mut worst_clean = 0.0f64;
    for _ in 0..50 {
        let truth =
            ScalingLaw::new(r.random_range(0.5..5.0), r.random_range(0.1..0.8), r.random_range(0.01..0.3)).unwrap();
        let fit = fit_scaling_law(&synthetic_curve(&truth, &ds), &FitConfig::default()).unwrap();
        worst_clean = worst_clean
            .max(rel(fit.law.alpha(), truth.alpha()))
            .max(rel(fit.law.beta(), truth.beta()))
            .max(rel(fit.law.delta(), truth.delta()));
    }

    let truth = ScalingLaw::new(2.5, 0.3, 0.06).unwrap();
    let clean = synthetic_curve(&truth, &ds);
    let noise = Normal::new(0.0, 0.005).unwrap();
    let mut errors: Vec<f64> = (0..100u64)
        .map(|seed| {
            let mut r = StdRng::seed_from_u64(seed);
            let pts: Vec<CurvePoint> =
                clean.iter().map(|p| CurvePoint { d: p.d, eps: p.eps + noise.sample(&mut r) }).collect();
            rel(fit_scaling_law(&pts, &FitConfig::default()).unwrap().law.beta(), truth.beta())
        })
        .collect();
    errors.sort_by(f64::total_cmp);
    let p95 = errors[94];
    timed(
        Duration::from_secs(30),
        worst_clean <= 1e-6 && p95 <= 0.10,
        start,
        format!("noiseless worst rel {worst_clean:.2e}, noisy beta p95 rel {p95:.4}"),
    )
}

fn run_cli_sweep(out: &Path) -> Result<(), String> {
    let sweep = repo_root().join("config/sweep.json");
    let args = [
        "cocogen".as_ref(),
        "sweep".as_ref(),
        sweep.as_os_str(),
        "--out-dir".as_ref(),
        out.as_os_str(),
    ];
    match cocogen_cli::run_args(args) {
        0 => Ok(()),
        code => Err(format!("sweep exited with {code}")),
    }
}

fn without_timestamps(path: &Path) -> Result<Vec<u8>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(text
        .split_inclusive('\n')
        .filter(|l| !is_timestamp_line(l))
        .collect::<String>()
        .into_bytes())
}

pub fn determinism() -> Outcome {
    let compare = || -> Result<Vec<String>, String> {
        let a = tempfile::tempdir().map_err(|e| e.to_string())?;
        let b = tempfile::tempdir().map_err(|e| e.to_string())?;
        run_cli_sweep(a.path())?;
        run_cli_sweep(b.path())?;
        let mut differing = Vec::new();
        for name in ["results.csv", "impact.csv", "schemes.csv"] {
            if without_timestamps(&a.path().join(name))? != without_timestamps(&b.path().join(name))? {
                differing.push(name.to_string());
            }
        }
        Ok(differing)
    };
    match compare() {
        Ok(d) => Outcome::new(d.is_empty(), format!("two CLI sweeps, differing files {d:?}")),
        Err(e) => Outcome::new(false, e),
    }
}

pub fn constraints(run: &SweepRun) -> Outcome {
    let mut r = StdRng::seed_from_u64(10);
    let mut missing = 0;
    let mut unbalanced = 0;
    let mut worst = 0.0f64;
    let mut checked = 0;
    for i in 0..200 {
        let n = r.random_range(2..=10);
        let s = draw(&mut r, n, (19.0, 21.5), 3000, PayoffMode::AntisymmetricNetTransfer, true);
        let rep = fpi_solve(&s, &SolverConfig::default()).unwrap();
        if rep.ir.len() != n || !rep.bb.sum.is_finite() {
            missing += 1;
        }
        let profiles = if i % 2 == 0 { vec![rep.profile] } else { vec![random_profile(&mut r, &s)] };
        for p in profiles {
            let bb = economics::check_bb(&s, &p).unwrap();
            let scaled = bb.sum.abs() / bb.abs_pairwise.max(f64::MIN_POSITIVE);
            worst = worst.max(scaled);
            unbalanced += (bb.sum.abs() > 1e-9 * bb.abs_pairwise) as usize;
            checked += 1;
        }
    }
    missing += run.rows.iter().filter(|r| r.is_ok() && !r.bb_sum.is_finite()).count();
    Outcome::new(
        missing == 0 && unbalanced == 0,
        format!(
            "{checked} antisymmetric profiles, {unbalanced} unbalanced, worst |sum P|/sum|p| {worst:.2e}; \
             {missing} solves without verdicts"
        ),
    )
}
