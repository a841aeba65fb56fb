//! Comparison schemes: no generation (VCFL), a competition-blind solve (WCO)
//! and uniformly random generation (RaDG). All of them are priced with the
//! same economics as the equilibrium solve.

use serde::{Deserialize, Serialize};

use crate::economics::{self, EconError, UtilityBreakdown};
use crate::exec::Execution;
use crate::model::{Scenario, StrategyProfile};
use crate::rng::{family, StreamRng};
use crate::solver::{fpi_solve, SolveReport, SolverConfig, SolverError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaselineKind {
    #[serde(rename = "VCFL")]
    Vcfl,
    #[serde(rename = "WCO")]
    Wco,
    #[serde(rename = "RaDG")]
    Radg,
}

/// Every organization at `d_min`.
pub fn vcfl_profile(s: &Scenario) -> StrategyProfile {
    s.all_min()
}

/// Copy of `s` with all competitive intensities zeroed.
pub fn without_competition(s: &Scenario) -> Scenario {
    let mut clone = s.clone();
    for row in &mut clone.market.gamma {
        row.iter_mut().for_each(|g| *g = 0.0);
    }
    clone
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WcoReport {
    /// Solve on the competition-free clone; its welfare figures are priced there.
    pub solve: SolveReport,
    pub welfare_clone: f64,
    /// The clone's equilibrium priced in the original competitive market.
    pub welfare_original: f64,
    pub utilities_original: Vec<UtilityBreakdown>,
}

pub fn wco_solve(s: &Scenario, cfg: &SolverConfig) -> Result<WcoReport, SolverError> {
    let clone = without_competition(s);
    let solve = fpi_solve(&clone, cfg)?;
    let utilities_original = economics::utilities(s, &solve.profile)?;
    Ok(WcoReport {
        welfare_clone: solve.welfare,
        welfare_original: economics::welfare_of(&utilities_original),
        utilities_original,
        solve,
    })
}

/// Independent uniform integer draws on `[d_min, d_max]`.
pub fn radg_profile(s: &Scenario, seed: u64) -> StrategyProfile {
    let mut rng = StreamRng::new(seed, family::RADG);
    StrategyProfile::new(
        (0..s.n())
            .map(|_| rng.uniform_int(s.bounds.d_min, s.bounds.d_max) as f64)
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadgSummary {
    pub draws: usize,
    pub mean_welfare: f64,
    pub std_welfare: f64,
    pub mean_d_gen: f64,
    /// Fraction of draws in which every organization is individually rational.
    pub ir_rate: f64,
    pub mean_bb_sum: f64,
}

/// Averages RaDG over `draws` independent profiles.
pub fn radg_average(s: &Scenario, draws: usize, seed: u64) -> Result<RadgSummary, EconError> {
    radg_average_with(s, draws, seed, Execution::default())
}

/// [`radg_average`] with an explicit execution mode. Draw seeds come from one
/// stream up front and results are reduced in draw order, so the summary is
/// the same in every mode.
pub fn radg_average_with(
    s: &Scenario,
    draws: usize,
    seed: u64,
    exec: Execution,
) -> Result<RadgSummary, EconError> {
    assert!(draws > 0, "RaDG needs at least one draw");
    let mut rng = StreamRng::new(seed, family::RADG);
    let seeds: Vec<u64> = (0..draws).map(|_| rng.next_u64()).collect();
    let per_draw = exec.map(&seeds, |&k| -> Result<(f64, f64, bool, f64), EconError> {
        let profile = radg_profile(s, k);
        let utils = economics::utilities(s, &profile)?;
        Ok((
            economics::welfare_of(&utils),
            profile.mean(),
            economics::ir_of(&utils).iter().all(|&b| b),
            economics::check_bb(s, &profile)?.sum,
        ))
    });
    let mut welfare = Vec::with_capacity(draws);
    let mut d_sum = 0.0;
    let mut ir_ok = 0usize;
    let mut bb_sum = 0.0;
    for r in per_draw {
        let (w, d, ir, bb) = r?;
        welfare.push(w);
        d_sum += d;
        ir_ok += ir as usize;
        bb_sum += bb;
    }
    let k = draws as f64;
    let mean = welfare.iter().sum::<f64>() / k;
    let var = if draws > 1 {
        welfare.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    Ok(RadgSummary {
        draws,
        mean_welfare: mean,
        std_welfare: var.sqrt(),
        mean_d_gen: d_sum / k,
        ir_rate: ir_ok as f64 / k,
        mean_bb_sum: bb_sum / k,
    })
}
