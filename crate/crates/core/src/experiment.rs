//! Sweep execution and aggregation.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{self, BaselineKind};
use crate::economics;
use crate::exec::Execution;
use crate::model::Scenario;
use crate::scaling::HeterogeneityPresets;
use crate::scenario::{expand_sweep, sample_scenario, Job, SamplingOptions, ScenarioError, SweepGrid};
use crate::solver::{fpi_solve, SolverConfig, SolverError};

#[derive(Debug, Error)]
pub enum SweepFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed sweep file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] ScenarioError),
}

pub const DEFAULT_RADG_DRAWS: usize = 100;

/// Sweep definition file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub grid: SweepGrid,
    #[serde(default)]
    pub sampling: SamplingOptions,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_radg_draws")]
    pub radg_draws: usize,
}

fn default_radg_draws() -> usize {
    DEFAULT_RADG_DRAWS
}

impl SweepConfig {
    pub fn from_json_str(text: &str) -> Result<Self, SweepFileError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SweepFileError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SweepFileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn check(&self) -> Result<(), ScenarioError> {
        self.grid.check()?;
        self.sampling.check()?;
        if self.radg_draws == 0 {
            return Err(ScenarioError::InvalidOptions("radg_draws must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "CoCoGen")]
    CoCoGen,
    #[serde(rename = "VCFL")]
    Vcfl,
    #[serde(rename = "WCO")]
    Wco,
    #[serde(rename = "RaDG")]
    Radg,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::CoCoGen, Scheme::Vcfl, Scheme::Wco, Scheme::Radg];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::CoCoGen => "CoCoGen",
            Scheme::Vcfl => "VCFL",
            Scheme::Wco => "WCO",
            Scheme::Radg => "RaDG",
        }
    }
}

impl From<BaselineKind> for Scheme {
    fn from(k: BaselineKind) -> Self {
        match k {
            BaselineKind::Vcfl => Scheme::Vcfl,
            BaselineKind::Wco => Scheme::Wco,
            BaselineKind::Radg => Scheme::Radg,
        }
    }
}

/// One scheme evaluated on one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeOutcome {
    pub scheme: Scheme,
    pub welfare: f64,
    pub mean_d_gen: f64,
    /// For RaDG: every draw individually rational.
    pub ir_all: bool,
    pub bb_sum: f64,
    /// Solver convergence; always true for schemes that do not iterate.
    pub converged: bool,
    pub iterations: usize,
}

/// Evaluates all four schemes on one scenario. WCO is priced under the
/// scenario's own competition structure.
pub fn compare(
    s: &Scenario,
    solver: &SolverConfig,
    radg_draws: usize,
    radg_seed: u64,
) -> Result<Vec<SchemeOutcome>, SolverError> {
    let co = fpi_solve(s, solver)?;
    let cocogen = SchemeOutcome {
        scheme: Scheme::CoCoGen,
        welfare: co.welfare,
        mean_d_gen: co.profile.mean(),
        ir_all: co.ir.iter().all(|&b| b),
        bb_sum: co.bb.sum,
        converged: co.converged,
        iterations: co.iterations,
    };

    let vp = baselines::vcfl_profile(s);
    let vu = economics::utilities(s, &vp)?;
    let vcfl = SchemeOutcome {
        scheme: Scheme::Vcfl,
        welfare: economics::welfare_of(&vu),
        mean_d_gen: vp.mean(),
        ir_all: economics::ir_of(&vu).iter().all(|&b| b),
        bb_sum: economics::check_bb(s, &vp)?.sum,
        converged: true,
        iterations: 0,
    };

    let w = baselines::wco_solve(s, solver)?;
    let wco = SchemeOutcome {
        scheme: Scheme::Wco,
        welfare: w.welfare_original,
        mean_d_gen: w.solve.profile.mean(),
        ir_all: economics::ir_of(&w.utilities_original).iter().all(|&b| b),
        bb_sum: economics::check_bb(s, &w.solve.profile)?.sum,
        converged: w.solve.converged,
        iterations: w.solve.iterations,
    };

    let r = baselines::radg_average(s, radg_draws, radg_seed)?;
    let radg = SchemeOutcome {
        scheme: Scheme::Radg,
        welfare: r.mean_welfare,
        mean_d_gen: r.mean_d_gen,
        ir_all: r.ir_rate == 1.0,
        bb_sum: r.mean_bb_sum,
        converged: true,
        iterations: 0,
    };
    Ok(vec![cocogen, vcfl, wco, radg])
}

/// One long-format result row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub job: usize,
    pub gamma_level: usize,
    pub gamma_lo: f64,
    pub gamma_hi: f64,
    pub alpha_d: f64,
    pub repetition: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub welfare: f64,
    pub mean_d_gen: f64,
    pub ir_all: bool,
    pub bb_sum: f64,
    pub converged: bool,
    pub realized_gamma_bar: f64,
    /// `ok` or an error message.
    pub status: String,
}

impl ResultRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

fn run_job(job: &Job, cfg: &SweepConfig, presets: &HeterogeneityPresets) -> Vec<ResultRow> {
    let row = |scheme: Scheme, gamma_bar: f64| ResultRow {
        job: job.index,
        gamma_level: job.cell.gamma_level,
        gamma_lo: job.cell.gamma.lo,
        gamma_hi: job.cell.gamma.hi,
        alpha_d: job.cell.alpha_d,
        repetition: job.repetition,
        seed: job.seed,
        scheme,
        welfare: f64::NAN,
        mean_d_gen: f64::NAN,
        ir_all: false,
        bb_sum: f64::NAN,
        converged: false,
        realized_gamma_bar: gamma_bar,
        status: String::new(),
    };
    let failed = |msg: String, gamma_bar: f64| -> Vec<ResultRow> {
        Scheme::ALL
            .iter()
            .map(|&sc| ResultRow {
                status: format!("error: {msg}"),
                ..row(sc, gamma_bar)
            })
            .collect()
    };

    let law = match presets.get(job.cell.alpha_d) {
        Some(l) => l,
        None => return failed(ScenarioError::MissingPreset(job.cell.alpha_d).to_string(), f64::NAN),
    };
    let s = match sample_scenario(&job.cell, &law, &cfg.sampling, job.seed) {
        Ok(s) => s,
        Err(e) => return failed(e.to_string(), f64::NAN),
    };
    let gamma_bar = s.market.mean_gamma();
    match compare(&s, &cfg.solver, cfg.radg_draws, job.seed) {
        Ok(outcomes) => outcomes
            .into_iter()
            .map(|o| ResultRow {
                welfare: o.welfare,
                mean_d_gen: o.mean_d_gen,
                ir_all: o.ir_all,
                bb_sum: o.bb_sum,
                converged: o.converged,
                status: "ok".into(),
                ..row(o.scheme, gamma_bar)
            })
            .collect(),
        Err(e) => failed(e.to_string(), gamma_bar),
    }
}

/// Runs every job for every scheme. Rows come back in job order, then scheme
/// order, whatever the execution mode.
pub fn run_sweep(cfg: &SweepConfig, presets: &HeterogeneityPresets, exec: Execution) -> Vec<ResultRow> {
    let jobs = expand_sweep(&cfg.grid);
    let per_job = exec.map(&jobs, |job| {
        let rows = run_job(job, cfg, presets);
        log::info!(
            "job {} gamma_level {} alpha_d {} rep {}: {}",
            job.index,
            job.cell.gamma_level,
            job.cell.alpha_d,
            job.repetition,
            rows[0].status
        );
        rows
    });
    per_job.into_iter().flatten().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Sample mean and (n-1) standard deviation; NaN mean when empty.
    pub fn of(xs: &[f64]) -> Self {
        if xs.is_empty() {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        let k = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / k;
        let std = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub gamma_level: usize,
    pub gamma_lo: f64,
    pub gamma_hi: f64,
    pub alpha_d: f64,
    pub scheme: Scheme,
    pub n_ok: usize,
    pub n_failed: usize,
    pub welfare: MeanStd,
    pub mean_d_gen: MeanStd,
    pub realized_gamma_bar: MeanStd,
    pub ir_rate: f64,
    pub converged_rate: f64,
}

/// Mean and spread per (gamma level, alpha_d, scheme), in first-seen order.
pub fn aggregate(rows: &[ResultRow]) -> Vec<CellSummary> {
    let mut keys: Vec<(usize, u64, Scheme)> = Vec::new();
    for r in rows {
        let k = (r.gamma_level, r.alpha_d.to_bits(), r.scheme);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(g, a, scheme)| {
            let group: Vec<&ResultRow> = rows
                .iter()
                .filter(|r| r.gamma_level == g && r.alpha_d.to_bits() == a && r.scheme == scheme)
                .collect();
            let ok: Vec<&ResultRow> = group.iter().copied().filter(|r| r.is_ok()).collect();
            let col = |f: fn(&ResultRow) -> f64| MeanStd::of(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
            let frac = |f: fn(&ResultRow) -> bool| {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().filter(|r| f(r)).count() as f64 / ok.len() as f64
                }
            };
            CellSummary {
                gamma_level: g,
                gamma_lo: group[0].gamma_lo,
                gamma_hi: group[0].gamma_hi,
                alpha_d: f64::from_bits(a),
                scheme,
                n_ok: ok.len(),
                n_failed: group.len() - ok.len(),
                welfare: col(|r| r.welfare),
                mean_d_gen: col(|r| r.mean_d_gen),
                realized_gamma_bar: col(|r| r.realized_gamma_bar),
                ir_rate: frac(|r| r.ir_all),
                converged_rate: frac(|r| r.converged),
            }
        })
        .collect()
}

pub fn find_cell(summaries: &[CellSummary], gamma_level: usize, alpha_d: f64, scheme: Scheme) -> Option<&CellSummary> {
    summaries
        .iter()
        .find(|c| c.gamma_level == gamma_level && c.alpha_d == alpha_d && c.scheme == scheme)
}
