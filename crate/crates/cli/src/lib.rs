//! Command implementations behind the `cocogen` binary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cocogen::exec::{self, Execution};
use cocogen::experiment::{self, Scheme, SweepConfig};
use cocogen::model::{PayoffMode, Scenario};
use cocogen::report::{self, RunManifest};
use cocogen::scaling::{self, FitConfig, FitError, HeterogeneityPresets};
use cocogen::scenario::{self, Cell, Range, SamplingOptions};
use cocogen::solver::{self, CaseMode, InitStrategy, SolverConfig, UpdateSchedule};

const EXIT_INPUT: u8 = 2;
const EXIT_FIT: u8 = 3;
const EXIT_NONCONVERGED: u8 = 4;

/// Error carrying the process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Self { code, error: error.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Self { code: 1, error }
    }
}

type Outcome = Result<(), Failure>;

#[derive(Parser)]
#[command(name = "cocogen", version, about = "Coopetitive data-generation game: fit, solve, sweep, compare")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a learning curve from a `d,eps` CSV.
    Fit {
        curve: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one scenario for its Nash equilibrium.
    Solve {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
        /// Write the potential trace (`iteration,F`) to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Certify the result by scanning unilateral deviations.
        #[arg(long)]
        verify_ne: bool,
        /// Deviation grid step for `--verify-ne`.
        #[arg(long, default_value_t = 1)]
        ne_step: u64,
        /// Exit 0 even when the iteration hits `--max-iters`.
        #[arg(long)]
        allow_nonconverged: bool,
    },
    /// Run every scheme over a sweep grid.
    Sweep {
        sweep: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Worker threads (default: logical cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Override the grid's base seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        payoff_mode: Option<PayoffArg>,
        #[arg(long, value_enum)]
        case_mode: Option<CaseArg>,
    },
    /// Evaluate all four schemes on one scenario.
    Compare {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverFlags,
        #[arg(long, default_value_t = experiment::DEFAULT_RADG_DRAWS)]
        radg_draws: usize,
        /// RaDG seed (default: the scenario's seed).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Draw one scenario and write it as JSON.
    Sample {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        gamma_lo: f64,
        #[arg(long, default_value_t = 0.5)]
        gamma_hi: f64,
        #[arg(long, default_value_t = 0.5)]
        alpha_d: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Take sampling options from this sweep file.
        #[arg(long)]
        sweep: Option<PathBuf>,
        #[arg(long)]
        symmetric_gamma: bool,
        #[arg(long, value_enum)]
        payoff_mode: Option<PayoffArg>,
    },
}

#[derive(Args, Clone)]
struct SolverFlags {
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    damping: Option<f64>,
    #[arg(long, value_enum)]
    init: Option<InitArg>,
    #[arg(long, value_enum)]
    schedule: Option<ScheduleArg>,
    #[arg(long, value_enum)]
    case_mode: Option<CaseArg>,
    #[arg(long, value_enum)]
    payoff_mode: Option<PayoffArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Min,
    Max,
    Mid,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScheduleArg {
    Jacobi,
    GaussSeidel,
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    Gradient,
    Printed,
}

#[derive(Clone, Copy, ValueEnum)]
enum PayoffArg {
    Literal,
    Antisymmetric,
}

impl From<CaseArg> for CaseMode {
    fn from(c: CaseArg) -> Self {
        match c {
            CaseArg::Gradient => CaseMode::Gradient,
            CaseArg::Printed => CaseMode::Printed,
        }
    }
}

impl From<PayoffArg> for PayoffMode {
    fn from(p: PayoffArg) -> Self {
        match p {
            PayoffArg::Literal => PayoffMode::LiteralReportOnly,
            PayoffArg::Antisymmetric => PayoffMode::AntisymmetricNetTransfer,
        }
    }
}

impl SolverFlags {
    fn apply(&self, mut cfg: SolverConfig) -> SolverConfig {
        if let Some(t) = self.tol {
            cfg.tol = t;
        }
        if let Some(m) = self.max_iters {
            cfg.max_iters = m;
        }
        if let Some(d) = self.damping {
            cfg.damping = d;
        }
        if let Some(i) = self.init {
            cfg.init = match i {
                InitArg::Min => InitStrategy::AllMin,
                InitArg::Max => InitStrategy::AllMax,
                InitArg::Mid => InitStrategy::Midpoint,
            };
        }
        if let Some(s) = self.schedule {
            cfg.schedule = match s {
                ScheduleArg::Jacobi => UpdateSchedule::Jacobi,
                ScheduleArg::GaussSeidel => UpdateSchedule::GaussSeidel,
            };
        }
        if let Some(c) = self.case_mode {
            cfg.case_mode = c.into();
        }
        cfg
    }

    fn apply_scenario(&self, s: &mut Scenario) {
        if let Some(p) = self.payoff_mode {
            s.economy.bb_mode = p.into();
        }
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn write_file(path: &Path, f: impl FnOnce(&mut fs::File) -> std::io::Result<()>) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f(&mut file).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    Scenario::load(path).map_err(|e| Failure::new(EXIT_INPUT, anyhow!("{}: {e}", path.display())))
}

fn cmd_fit(curve: &Path, out: &Path) -> Outcome {
    let mut manifest = RunManifest::new("fit", vec![path_str(curve)], 0);
    manifest.started = now();
    let points = scaling::load_curve(curve).map_err(|e| Failure::new(EXIT_INPUT, e))?;
    let fit = scaling::fit_scaling_law(&points, &FitConfig::default()).map_err(|e| match e {
        FitError::Parse(_) | FitError::Io { .. } => Failure::new(EXIT_INPUT, e),
        other => Failure::new(EXIT_FIT, other),
    })?;
    manifest.finished = now();
    let text = report::to_json_with_manifest(&manifest, "fit", &fit);
    write_file(out, |f| f.write_all(text.as_bytes()))?;
    println!(
        "alpha = {:.6e}  beta = {:.6e}  delta = {:.6e}  rmse = {:.3e}  ({} points)",
        fit.law.alpha(),
        fit.law.beta(),
        fit.law.delta(),
        fit.rmse,
        fit.n_points
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    path: &Path,
    out: &Path,
    flags: &SolverFlags,
    trace: Option<&Path>,
    verify: bool,
    ne_step: u64,
    allow_nonconverged: bool,
) -> Outcome {
    let mut s = load_scenario(path)?;
    flags.apply_scenario(&mut s);
    let cfg = flags.apply(SolverConfig::default());
    let mut manifest = RunManifest::new("solve", vec![path_str(path)], s.seed);
    manifest.started = now();
    let mut rep = solver::fpi_solve(&s, &cfg).map_err(|e| Failure::new(EXIT_INPUT, e))?;
    if verify {
        let cert = solver::verify_ne(&s, &rep.profile, ne_step).map_err(|e| Failure::new(EXIT_INPUT, e))?;
        rep.ne_certificate = Some(cert);
    }
    manifest.finished = now();
    let text = report::to_json_with_manifest(&manifest, "report", &rep);
    write_file(out, |f| f.write_all(text.as_bytes()))?;
    if let Some(t) = trace {
        write_file(t, |f| report::write_trace_csv(f, &manifest, &rep.potential_trace))?;
    }
    println!(
        "converged = {}  iterations = {}  welfare = {:.6e}  F = {:.12e}  ir_all = {}  bb_sum = {:.3e}",
        rep.converged,
        rep.iterations,
        rep.welfare,
        rep.potential,
        rep.ir.iter().all(|&b| b),
        rep.bb.sum
    );
    if let Some(c) = &rep.ne_certificate {
        println!("is_ne = {} (grid step {})", c.is_ne, c.grid_step);
    }
    if !rep.converged && !allow_nonconverged {
        return Err(Failure::new(
            EXIT_NONCONVERGED,
            anyhow!("no convergence after {} iterations", rep.iterations),
        ));
    }
    Ok(())
}

fn cmd_sweep(
    path: &Path,
    out_dir: &Path,
    jobs: Option<usize>,
    seed: Option<u64>,
    payoff: Option<PayoffArg>,
    case: Option<CaseArg>,
) -> Outcome {
    let mut cfg = SweepConfig::load(path).map_err(|e| Failure::new(EXIT_INPUT, e))?;
    if let Some(seed) = seed {
        cfg.grid.base_seed = seed;
    }
    if let Some(p) = payoff {
        cfg.sampling.bb_mode = p.into();
    }
    if let Some(c) = case {
        cfg.solver.case_mode = c.into();
    }
    let presets = HeterogeneityPresets::load().map_err(|e| Failure::new(EXIT_INPUT, e))?;
    let exec = match jobs {
        Some(0) => return Err(Failure::new(EXIT_INPUT, anyhow!("--jobs must be at least 1"))),
        Some(1) => Execution::Sequential,
        Some(n) => {
            exec::init_workers(n);
            Execution::default()
        }
        None => Execution::default(),
    };

    let mut manifest = RunManifest::new("sweep", vec![path_str(path)], cfg.grid.base_seed);
    manifest.started = now();
    let rows = experiment::run_sweep(&cfg, &presets, exec);
    let cells = experiment::aggregate(&rows);
    manifest.finished = now();

    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    write_file(&out_dir.join("results.csv"), |f| report::write_results_csv(f, &manifest, &rows))?;
    write_file(&out_dir.join("impact.csv"), |f| {
        report::write_summary_csv(f, &manifest, &cells, &[Scheme::CoCoGen])
    })?;
    write_file(&out_dir.join("schemes.csv"), |f| {
        report::write_summary_csv(f, &manifest, &cells, &Scheme::ALL)
    })?;

    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    println!(
        "{} rows written to {} ({} failed)",
        rows.len(),
        out_dir.display(),
        failed
    );
    if failed == rows.len() {
        return Err(Failure::new(1, anyhow!("every job failed; first error: {}", rows[0].status)));
    }
    Ok(())
}

fn cmd_compare(path: &Path, out: Option<&Path>, flags: &SolverFlags, draws: usize, seed: Option<u64>) -> Outcome {
    let mut s = load_scenario(path)?;
    flags.apply_scenario(&mut s);
    let cfg = flags.apply(SolverConfig::default());
    if draws == 0 {
        return Err(Failure::new(EXIT_INPUT, anyhow!("--radg-draws must be at least 1")));
    }
    let seed = seed.unwrap_or(s.seed);
    let mut manifest = RunManifest::new("compare", vec![path_str(path)], seed);
    manifest.started = now();
    let outcomes = experiment::compare(&s, &cfg, draws, seed).map_err(|e| Failure::new(EXIT_INPUT, e))?;
    manifest.finished = now();

    println!("{:<8} {:>16} {:>12} {:>7} {:>12} {:>9}", "scheme", "welfare", "mean_d_gen", "ir_all", "bb_sum", "converged");
    for o in &outcomes {
        println!(
            "{:<8} {:>16.8e} {:>12.3} {:>7} {:>12.3e} {:>9}",
            o.scheme.name(),
            o.welfare,
            o.mean_d_gen,
            o.ir_all,
            o.bb_sum,
            o.converged
        );
    }
    if let Some(out) = out {
        write_file(out, |f| {
            for line in manifest.comment_lines() {
                write!(f, "{line}\r\n")?;
            }
            write!(f, "scheme,welfare,mean_d_gen,ir_all,bb_sum,converged,iterations\r\n")?;
            for o in &outcomes {
                write!(
                    f,
                    "{},{},{},{},{},{},{}\r\n",
                    o.scheme.name(),
                    report::fmt_f64(o.welfare),
                    report::fmt_f64(o.mean_d_gen),
                    o.ir_all,
                    report::fmt_f64(o.bb_sum),
                    o.converged,
                    o.iterations
                )?;
            }
            Ok(())
        })?;
    }
    if outcomes.iter().any(|o| !o.converged) {
        return Err(Failure::new(EXIT_NONCONVERGED, anyhow!("an equilibrium solve did not converge")));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sample(
    out: &Path,
    gamma: Range,
    alpha_d: f64,
    seed: u64,
    sweep: Option<&Path>,
    symmetric: bool,
    payoff: Option<PayoffArg>,
) -> Outcome {
    let mut opts = match sweep {
        Some(p) => SweepConfig::load(p).map_err(|e| Failure::new(EXIT_INPUT, e))?.sampling,
        None => SamplingOptions::default(),
    };
    opts.symmetric_gamma |= symmetric;
    if let Some(p) = payoff {
        opts.bb_mode = p.into();
    }
    let presets = HeterogeneityPresets::load().map_err(|e| Failure::new(EXIT_INPUT, e))?;
    let law = presets
        .get(alpha_d)
        .ok_or_else(|| Failure::new(EXIT_INPUT, anyhow!("no preset for alpha_d = {alpha_d}")))?;
    let cell = Cell {
        gamma_level: 0,
        gamma,
        alpha_level: 0,
        alpha_d,
    };
    if !(0.0..=1.0).contains(&gamma.lo) || !(0.0..=1.0).contains(&gamma.hi) || gamma.lo > gamma.hi {
        return Err(Failure::new(EXIT_INPUT, anyhow!("gamma range must lie within [0, 1]")));
    }
    let s = scenario::sample_scenario(&cell, &law, &opts, seed).map_err(|e| Failure::new(EXIT_INPUT, e))?;
    s.save(out).map_err(|e| Failure::new(1, e))?;
    println!("wrote {} organizations to {}", s.n(), out.display());
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Fit { curve, out } => cmd_fit(&curve, &out),
        Command::Solve {
            scenario,
            out,
            solver,
            trace,
            verify_ne,
            ne_step,
            allow_nonconverged,
        } => cmd_solve(&scenario, &out, &solver, trace.as_deref(), verify_ne, ne_step, allow_nonconverged),
        Command::Sweep {
            sweep,
            out_dir,
            jobs,
            seed,
            payoff_mode,
            case_mode,
        } => cmd_sweep(&sweep, &out_dir, jobs, seed, payoff_mode, case_mode),
        Command::Compare {
            scenario,
            out,
            solver,
            radg_draws,
            seed,
        } => cmd_compare(&scenario, out.as_deref(), &solver, radg_draws, seed),
        Command::Sample {
            out,
            gamma_lo,
            gamma_hi,
            alpha_d,
            seed,
            sweep,
            symmetric_gamma,
            payoff_mode,
        } => cmd_sample(
            &out,
            Range::new(gamma_lo, gamma_hi),
            alpha_d,
            seed,
            sweep.as_deref(),
            symmetric_gamma,
            payoff_mode,
        ),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors are reported on stderr.
pub fn run_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.code
        }
    }
}
