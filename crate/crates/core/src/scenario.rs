//! Seeded scenario sampling and sweep expansion.
//!
//! Each parameter family draws from its own ChaCha20 stream keyed by the job
//! seed, so adding or reordering draws in one family never shifts another.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{
    EconomyParams, Eps0Mode, Market, Organization, PayoffMode, Scenario, ScalingLaw, StrategyBounds,
    ValidationErrors, DEFAULT_C_CMP, DEFAULT_WORKLOAD_CYCLES,
};
use crate::rng::{family, StreamRng};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid sweep grid: {0}")]
    InvalidGrid(String),
    #[error("invalid sampling options: {0}")]
    InvalidOptions(String),
    #[error("no preset for alpha_d = {0}")]
    MissingPreset(f64),
    #[error(transparent)]
    Validation(#[from] ValidationErrors),
}

/// Closed interval for uniform draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    fn valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi
    }
}

pub type GammaRange = Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntRange {
    pub lo: u64,
    pub hi: u64,
}

/// Distributions and fixed values used to build one scenario. Defaults follow
/// the standard experimental setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingOptions {
    pub n: usize,
    pub kappa: Range,
    pub d_loc: IntRange,
    pub phi: Range,
    pub psi: Range,
    /// Chip frequency in GHz.
    pub freq: Range,
    pub xi: f64,
    pub varrho: f64,
    pub bounds: StrategyBounds,
    pub eta: f64,
    pub mu: f64,
    pub c_cmp: f64,
    pub c0: f64,
    pub eps0_mode: Eps0Mode,
    pub bb_mode: PayoffMode,
    /// Draw the upper triangle only and mirror it.
    pub symmetric_gamma: bool,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        Self {
            n: 10,
            kappa: Range::new(2e-18, 5e-18),
            d_loc: IntRange { lo: 1000, hi: 3000 },
            phi: Range::new(200.0, 300.0),
            psi: Range::new(600.0, 900.0),
            freq: Range::new(1.0, 2.0),
            xi: 20.0,
            varrho: 20.0,
            bounds: StrategyBounds { d_min: 0, d_max: 3000 },
            eta: DEFAULT_WORKLOAD_CYCLES,
            mu: DEFAULT_WORKLOAD_CYCLES,
            c_cmp: DEFAULT_C_CMP,
            c0: 0.0,
            eps0_mode: Eps0Mode::AtZeroGeneration,
            bb_mode: PayoffMode::LiteralReportOnly,
            symmetric_gamma: false,
        }
    }
}

impl SamplingOptions {
    pub fn check(&self) -> Result<(), ScenarioError> {
        let bad = |m: &str| Err(ScenarioError::InvalidOptions(m.to_string()));
        if self.n == 0 {
            return bad("n must be at least 1");
        }
        for (name, r) in [
            ("kappa", self.kappa),
            ("phi", self.phi),
            ("psi", self.psi),
            ("freq", self.freq),
        ] {
            if !r.valid() {
                return bad(&format!("{name} range must satisfy lo <= hi"));
            }
        }
        if self.d_loc.lo > self.d_loc.hi {
            return bad("d_loc range must satisfy lo <= hi");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub gamma_levels: Vec<GammaRange>,
    pub alpha_d_levels: Vec<f64>,
    pub repetitions: usize,
    pub base_seed: u64,
}

impl SweepGrid {
    pub fn check(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::InvalidGrid(m));
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if self.gamma_levels.is_empty() || self.alpha_d_levels.is_empty() {
            return bad("grid needs at least one gamma level and one alpha_d level".into());
        }
        for (i, g) in self.gamma_levels.iter().enumerate() {
            if !(g.valid() && g.lo >= 0.0 && g.hi <= 1.0) {
                return bad(format!("gamma level {i} [{}, {}] must lie within [0, 1]", g.lo, g.hi));
            }
        }
        if let Some(a) = self.alpha_d_levels.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return bad(format!("alpha_d level {a} must be positive"));
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.gamma_levels.len() * self.alpha_d_levels.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub gamma_level: usize,
    pub gamma: GammaRange,
    pub alpha_level: usize,
    pub alpha_d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub index: usize,
    pub cell: Cell,
    pub repetition: usize,
    pub seed: u64,
}

const JOB_SEED_TAG: &[u8] = b"cocogen/job-seed/v1";

/// `base_seed` XOR the first eight bytes (little endian) of
/// SHA-256(tag, gamma bounds, alpha_d, repetition).
pub fn job_seed(base_seed: u64, cell: &Cell, repetition: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(JOB_SEED_TAG);
    h.update(cell.gamma.lo.to_bits().to_le_bytes());
    h.update(cell.gamma.hi.to_bits().to_le_bytes());
    h.update(cell.alpha_d.to_bits().to_le_bytes());
    h.update((repetition as u64).to_le_bytes());
    let digest = h.finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    base_seed ^ u64::from_le_bytes(head)
}

/// Jobs in gamma-major, then alpha_d, then repetition order.
pub fn expand_sweep(grid: &SweepGrid) -> Vec<Job> {
    let mut jobs = Vec::with_capacity(grid.n_cells() * grid.repetitions);
    for (gi, &gamma) in grid.gamma_levels.iter().enumerate() {
        for (ai, &alpha_d) in grid.alpha_d_levels.iter().enumerate() {
            let cell = Cell {
                gamma_level: gi,
                gamma,
                alpha_level: ai,
                alpha_d,
            };
            for rep in 0..grid.repetitions {
                jobs.push(Job {
                    index: jobs.len(),
                    cell,
                    repetition: rep,
                    seed: job_seed(grid.base_seed, &cell, rep),
                });
            }
        }
    }
    jobs
}

/// Draws a full scenario for `cell`; every organization uses `law`.
pub fn sample_scenario(
    cell: &Cell,
    law: &ScalingLaw,
    opts: &SamplingOptions,
    seed: u64,
) -> Result<Scenario, ScenarioError> {
    opts.check()?;
    let n = opts.n;
    let mut kappa = StreamRng::new(seed, family::KAPPA);
    let mut d_loc = StreamRng::new(seed, family::D_LOC);
    let mut phi = StreamRng::new(seed, family::PHI);
    let mut psi = StreamRng::new(seed, family::PSI);
    let mut freq = StreamRng::new(seed, family::FREQ);
    let mut gamma_rng = StreamRng::new(seed, family::GAMMA);

    let organizations = (0..n)
        .map(|id| Organization {
            id,
            d_loc: d_loc.uniform_int(opts.d_loc.lo, opts.d_loc.hi),
            f: freq.uniform(opts.freq.lo, opts.freq.hi),
            kappa: kappa.uniform(opts.kappa.lo, opts.kappa.hi),
            eta: opts.eta,
            mu: opts.mu,
            c_cmp: opts.c_cmp,
            psi: psi.uniform(opts.psi.lo, opts.psi.hi),
            law: *law,
        })
        .collect();

    let mut gamma = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j || (opts.symmetric_gamma && j < i) {
                continue;
            }
            let g = gamma_rng.uniform(cell.gamma.lo, cell.gamma.hi);
            gamma[i][j] = g;
            if opts.symmetric_gamma {
                gamma[j][i] = g;
            }
        }
    }
    let phi = (0..n).map(|_| phi.uniform(opts.phi.lo, opts.phi.hi)).collect();

    let s = Scenario {
        organizations,
        market: Market {
            gamma,
            xi: opts.xi,
            phi,
        },
        economy: EconomyParams {
            varrho: opts.varrho,
            c0: opts.c0,
            eps0_mode: opts.eps0_mode,
            bb_mode: opts.bb_mode,
        },
        bounds: opts.bounds,
        seed,
    };
    Ok(s.validated()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> SweepGrid {
        SweepGrid {
            gamma_levels: vec![Range::new(0.0, 0.5), Range::new(0.0, 1.0), Range::new(0.5, 1.0)],
            alpha_d_levels: vec![0.1, 0.5, 0.9],
            repetitions: 100,
            base_seed: 2024,
        }
    }

    fn law() -> ScalingLaw {
        ScalingLaw::new(2.4, 0.3, 0.03).unwrap()
    }

    #[test]
    fn full_grid_has_900_jobs_in_order() {
        let jobs = expand_sweep(&grid());
        assert_eq!(jobs.len(), 900);
        assert!(jobs.iter().enumerate().all(|(i, j)| j.index == i));
        assert_eq!(jobs[0].cell.gamma_level, 0);
        assert_eq!(jobs[100].cell.alpha_level, 1);
        assert_eq!(jobs[300].cell.gamma_level, 1);
        assert_eq!(jobs[899].repetition, 99);
    }

    #[test]
    fn job_seeds_do_not_collide() {
        let mut seeds: Vec<u64> = expand_sweep(&grid()).iter().map(|j| j.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 900);
    }

    #[test]
    fn single_cell_grid() {
        let g = SweepGrid {
            gamma_levels: vec![Range::new(0.1, 0.2)],
            alpha_d_levels: vec![0.5],
            repetitions: 7,
            base_seed: 0,
        };
        let jobs = expand_sweep(&g);
        assert_eq!(jobs.len(), 7);
        assert!(jobs.iter().all(|j| j.cell == jobs[0].cell));
    }

    #[test]
    fn base_seed_enters_by_xor() {
        let mut g = grid();
        let a = expand_sweep(&g);
        g.base_seed ^= 0xdead_beef;
        let b = expand_sweep(&g);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.seed ^ y.seed, 0xdead_beef);
        }
    }

    #[test]
    fn grid_validation() {
        assert!(grid().check().is_ok());
        let mut g = grid();
        g.repetitions = 0;
        assert!(g.check().is_err());
        let mut g = grid();
        g.gamma_levels[1].hi = 1.5;
        assert!(g.check().is_err());
        let mut g = grid();
        g.alpha_d_levels.push(0.0);
        assert!(g.check().is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_in_range() {
        let cell = expand_sweep(&grid())[0].cell;
        let opts = SamplingOptions::default();
        let a = sample_scenario(&cell, &law(), &opts, 77).unwrap();
        let b = sample_scenario(&cell, &law(), &opts, 77).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_scenario(&cell, &law(), &opts, 78).unwrap());
        assert_eq!(a.n(), 10);
        for o in &a.organizations {
            assert!((2e-18..=5e-18).contains(&o.kappa));
            assert!((1000..=3000).contains(&o.d_loc));
            assert!((600.0..=900.0).contains(&o.psi));
            assert!((1.0..=2.0).contains(&o.f));
        }
        assert!(a.market.phi.iter().all(|p| (200.0..=300.0).contains(p)));
        for (i, row) in a.market.gamma.iter().enumerate() {
            for (j, g) in row.iter().enumerate() {
                if i == j {
                    assert_eq!(*g, 0.0);
                } else {
                    assert!((0.0..=0.5).contains(g));
                }
            }
        }
        assert_eq!(a.market.xi, 20.0);
        assert_eq!(a.economy.varrho, 20.0);
        assert_eq!(a.bounds, StrategyBounds { d_min: 0, d_max: 3000 });
    }

    #[test]
    fn realized_mean_gamma_near_range_midpoint() {
        let cell = expand_sweep(&grid())[0].cell;
        let opts = SamplingOptions::default();
        let mean: f64 = (0..200)
            .map(|s| sample_scenario(&cell, &law(), &opts, s).unwrap().market.mean_gamma())
            .sum::<f64>()
            / 200.0;
        assert!((mean - 0.25).abs() < 0.005, "{mean}");
    }

    #[test]
    fn symmetric_option_mirrors_gamma() {
        let cell = expand_sweep(&grid())[400].cell;
        let opts = SamplingOptions {
            symmetric_gamma: true,
            ..SamplingOptions::default()
        };
        let s = sample_scenario(&cell, &law(), &opts, 5).unwrap();
        assert!(s.market.is_symmetric());
    }

    #[test]
    fn families_are_independent() {
        let cell = expand_sweep(&grid())[0].cell;
        let a = sample_scenario(&cell, &law(), &SamplingOptions::default(), 9).unwrap();
        let opts = SamplingOptions {
            n: 12,
            ..SamplingOptions::default()
        };
        let b = sample_scenario(&cell, &law(), &opts, 9).unwrap();
        for n in 0..10 {
            assert_eq!(a.organizations[n].kappa, b.organizations[n].kappa);
            assert_eq!(a.organizations[n].d_loc, b.organizations[n].d_loc);
        }
    }
}
