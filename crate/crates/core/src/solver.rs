//! Equilibrium computation.
//!
//! Each organization's first-order condition on the potential has a closed
//! form once the average local error is frozen. [`fpi_solve`] iterates that
//! map, clipped to the strategy box, until the potential stops moving.
//! [`grid_oracle`] minimizes the potential exhaustively on small instances
//! and [`verify_ne`] certifies a profile by scanning unilateral deviations.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::economics::{self, BudgetBalance, EconError, UtilityBreakdown};
use crate::exec::Execution;
use crate::game::{self, GameError};
use crate::model::{validate_scenario, Scenario, StrategyProfile, ValidationErrors};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(#[from] ValidationErrors),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Econ(#[from] EconError),
    #[error("grid oracle limited to 3 organizations and 3001 steps per axis (got {n} organizations, {steps} steps)")]
    InstanceTooLarge { n: usize, steps: u64 },
}

impl From<GameError> for SolverError {
    fn from(e: GameError) -> Self {
        match e {
            GameError::Econ(e) => SolverError::Econ(e),
            other => SolverError::InvalidConfig(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseLabel {
    LowerBound,
    UpperBound,
    Interior,
}

/// Which rule assigns the bound cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CaseMode {
    /// Sign of the potential's coordinate gradient at the box edges.
    #[default]
    Gradient,
    /// Benefit above the cost slope selects `d_min`, below selects `d_max`.
    /// Kept for comparison only; it moves away from the minimizer.
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum UpdateSchedule {
    /// Every organization updates from the same previous iterate.
    #[default]
    Jacobi,
    /// Organizations update in index order, each seeing earlier updates.
    GaussSeidel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    #[default]
    AllMin,
    AllMax,
    Midpoint,
    Given(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Stop once `|F^k - F^(k-1)| <= tol`.
    pub tol: f64,
    pub max_iters: usize,
    /// Mixing factor `lambda` in `d <- (1 - lambda) d_old + lambda d_new`.
    pub damping: f64,
    pub init: InitStrategy,
    pub schedule: UpdateSchedule,
    pub case_mode: CaseMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iters: 500,
            damping: 1.0,
            init: InitStrategy::AllMin,
            schedule: UpdateSchedule::Jacobi,
            case_mode: CaseMode::Gradient,
        }
    }
}

impl SolverConfig {
    fn check(&self, s: &Scenario) -> Result<(), SolverError> {
        if !(self.tol > 0.0) {
            return Err(SolverError::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters < 1 {
            return Err(SolverError::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(SolverError::InvalidConfig(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        if let InitStrategy::Given(d) = &self.init {
            if d.len() != s.n() || !StrategyProfile::new(d.clone()).within(&s.bounds) {
                return Err(SolverError::InvalidConfig(
                    "initial profile must have one in-bounds entry per organization".into(),
                ));
            }
        }
        Ok(())
    }

    fn initial_profile(&self, s: &Scenario) -> StrategyProfile {
        match &self.init {
            InitStrategy::AllMin => s.all_min(),
            InitStrategy::AllMax => s.all_max(),
            InitStrategy::Midpoint => {
                StrategyProfile::uniform(s.n(), 0.5 * (s.bounds.lo() + s.bounds.hi()))
            }
            InitStrategy::Given(d) => StrategyProfile::new(d.clone()),
        }
    }
}

/// Quantities entering organization `n`'s closed-form update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseQuantities {
    /// Average local error at the current iterate.
    pub a1: f64,
    /// Cost slope divided by `z_n`; negative.
    pub a2: f64,
    /// `(d_loc + d_gen)^(-beta - 1)`.
    pub a3: f64,
}

pub fn case_quantities(
    s: &Scenario,
    profile: &StrategyProfile,
    n: usize,
) -> Result<CaseQuantities, SolverError> {
    if n >= s.n() {
        return Err(EconError::IndexOutOfRange { n, len: s.n() }.into());
    }
    let errs = economics::local_errors(s, profile)?;
    let a1 = errs.iter().sum::<f64>() / s.n() as f64;
    Ok(quantities_from(s, profile, n, a1))
}

fn quantities_from(s: &Scenario, profile: &StrategyProfile, n: usize, a1: f64) -> CaseQuantities {
    let org = &s.organizations[n];
    CaseQuantities {
        a1,
        a2: game::linear_coefficient(s, n),
        a3: (org.d_loc as f64 + profile.d_gen[n]).powf(-org.law.beta() - 1.0),
    }
}

/// Marginal error reduction `A3 * alpha beta / (N varrho) * exp((A1 - 1) / varrho)`.
pub fn marginal_benefit(s: &Scenario, n: usize, q: &CaseQuantities) -> f64 {
    let law = &s.organizations[n].law;
    let scale = s.n() as f64 * s.economy.varrho;
    q.a3 * law.alpha() * law.beta() / scale * ((q.a1 - 1.0) / s.economy.varrho).exp()
}

/// Unclipped stationary point of organization `n` with `A1` frozen.
pub fn stationary_point(s: &Scenario, n: usize, q: &CaseQuantities) -> f64 {
    let org = &s.organizations[n];
    let law = &org.law;
    let varrho = s.economy.varrho;
    let base = -q.a2 * s.n() as f64 * varrho / (law.alpha() * law.beta())
        * (-(q.a1 - 1.0) / varrho).exp();
    base.powf(-1.0 / (law.beta() + 1.0)) - org.d_loc as f64
}

fn gradient_at(s: &Scenario, profile: &StrategyProfile, n: usize, d: f64) -> Result<f64, SolverError> {
    Ok(game::potential_gradient(s, &profile.with(n, d))?[n])
}

fn classify_with(
    s: &Scenario,
    profile: &StrategyProfile,
    n: usize,
    q: &CaseQuantities,
) -> Result<CaseLabel, SolverError> {
    let d = stationary_point(s, n, q);
    let (lo, hi) = (s.bounds.lo(), s.bounds.hi());
    if d <= lo && gradient_at(s, profile, n, lo)? >= 0.0 {
        return Ok(CaseLabel::LowerBound);
    }
    if d >= hi && gradient_at(s, profile, n, hi)? <= 0.0 {
        return Ok(CaseLabel::UpperBound);
    }
    Ok(CaseLabel::Interior)
}

fn printed_with(s: &Scenario, n: usize, q: &CaseQuantities) -> CaseLabel {
    let benefit = marginal_benefit(s, n, q);
    if benefit > -q.a2 {
        CaseLabel::LowerBound
    } else if benefit < -q.a2 {
        CaseLabel::UpperBound
    } else {
        CaseLabel::Interior
    }
}

/// Case of organization `n` from the gradient sign at the box edges.
pub fn classify_case(s: &Scenario, profile: &StrategyProfile, n: usize) -> Result<CaseLabel, SolverError> {
    let q = case_quantities(s, profile, n)?;
    classify_with(s, profile, n, &q)
}

/// Case of organization `n` by the benefit-versus-cost comparison rule.
pub fn printed_case(s: &Scenario, profile: &StrategyProfile, n: usize) -> Result<CaseLabel, SolverError> {
    let q = case_quantities(s, profile, n)?;
    Ok(printed_with(s, n, &q))
}

/// Closed-form stationary value for `n`, clipped to the box.
pub fn interior_update(s: &Scenario, profile: &StrategyProfile, n: usize) -> Result<f64, SolverError> {
    let q = case_quantities(s, profile, n)?;
    Ok(s.bounds.clip(stationary_point(s, n, &q)))
}

struct Proposal {
    label: CaseLabel,
    value: f64,
    disagrees: bool,
}

fn propose(
    s: &Scenario,
    profile: &StrategyProfile,
    n: usize,
    a1: f64,
    mode: CaseMode,
) -> Result<Proposal, SolverError> {
    let q = quantities_from(s, profile, n, a1);
    let by_gradient = classify_with(s, profile, n, &q)?;
    let by_printed = printed_with(s, n, &q);
    let label = match mode {
        CaseMode::Gradient => by_gradient,
        CaseMode::Printed => by_printed,
    };
    let value = match label {
        CaseLabel::LowerBound => s.bounds.lo(),
        CaseLabel::UpperBound => s.bounds.hi(),
        CaseLabel::Interior => s.bounds.clip(stationary_point(s, n, &q)),
    };
    Ok(Proposal {
        label,
        value,
        disagrees: by_gradient != by_printed,
    })
}

fn mean_local_error(s: &Scenario, profile: &StrategyProfile) -> Result<f64, SolverError> {
    Ok(economics::local_errors(s, profile)?.iter().sum::<f64>() / s.n() as f64)
}

/// Result of unilateral-deviation scanning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub org: usize,
    pub d_alt: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeCertificate {
    pub is_ne: bool,
    pub grid_step: u64,
    pub worst_deviation: Option<Deviation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Integer equilibrium profile.
    pub profile: StrategyProfile,
    /// Real-relaxed fixed point before integer restoration.
    pub relaxed_profile: StrategyProfile,
    pub cases: Vec<CaseLabel>,
    pub iterations: usize,
    pub potential_trace: Vec<f64>,
    pub converged: bool,
    pub potential: f64,
    pub utilities: Vec<UtilityBreakdown>,
    pub welfare: f64,
    pub ir: Vec<bool>,
    pub bb: BudgetBalance,
    /// Final-sweep organizations where the two case rules disagree.
    pub printed_case_disagreements: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ne_certificate: Option<NeCertificate>,
}

/// Fixed-point iteration on the potential's first-order conditions.
///
/// Non-convergence is reported through `converged = false`, not as an error.
pub fn fpi_solve(s: &Scenario, cfg: &SolverConfig) -> Result<SolveReport, SolverError> {
    validate_scenario(s)?;
    cfg.check(s)?;
    let n = s.n();
    let lambda = cfg.damping;

    let mut d = cfg.initial_profile(s);
    let mut f_prev = game::potential(s, &d)?;
    let mut trace = vec![f_prev];
    let mut cases = vec![CaseLabel::Interior; n];
    let mut disagreements;
    let mut converged = false;
    let mut k = 0;

    // Always take at least one step: with F^-1 = F^0 the loop test would
    // otherwise pass trivially on entry.
    loop {
        k += 1;
        disagreements = 0;
        match cfg.schedule {
            UpdateSchedule::Jacobi => {
                let a1 = mean_local_error(s, &d)?;
                let mut next = d.clone();
                for m in 0..n {
                    let p = propose(s, &d, m, a1, cfg.case_mode)?;
                    cases[m] = p.label;
                    disagreements += p.disagrees as usize;
                    next.d_gen[m] = (1.0 - lambda) * d.d_gen[m] + lambda * p.value;
                }
                d = next;
            }
            UpdateSchedule::GaussSeidel => {
                for m in 0..n {
                    let a1 = mean_local_error(s, &d)?;
                    let p = propose(s, &d, m, a1, cfg.case_mode)?;
                    cases[m] = p.label;
                    disagreements += p.disagrees as usize;
                    d.d_gen[m] = (1.0 - lambda) * d.d_gen[m] + lambda * p.value;
                }
            }
        }
        let f = game::potential(s, &d)?;
        trace.push(f);
        if (f - f_prev).abs() <= cfg.tol {
            converged = true;
            break;
        }
        if k >= cfg.max_iters {
            break;
        }
        f_prev = f;
    }
    if disagreements > 0 {
        log::debug!("{disagreements} organization(s) where the printed case rule disagrees with the gradient rule");
    }

    let relaxed = d.clone();
    let profile = restore_integers(s, d)?;
    let utilities = economics::utilities(s, &profile)?;
    Ok(SolveReport {
        potential: game::potential(s, &profile)?,
        welfare: economics::welfare_of(&utilities),
        ir: economics::ir_of(&utilities),
        bb: economics::check_bb(s, &profile)?,
        utilities,
        profile,
        relaxed_profile: relaxed,
        cases,
        iterations: k,
        potential_trace: trace,
        converged,
        printed_case_disagreements: disagreements,
        ne_certificate: None,
    })
}

/// Rounds each coordinate, in index order, to whichever of floor/ceil gives
/// the lower potential (floor on ties).
fn restore_integers(s: &Scenario, mut d: StrategyProfile) -> Result<StrategyProfile, SolverError> {
    for m in 0..s.n() {
        let lo = s.bounds.clip(d.d_gen[m].floor());
        let hi = s.bounds.clip(d.d_gen[m].ceil());
        let floor = d.with(m, lo);
        if hi == lo {
            d = floor;
            continue;
        }
        let ceil = d.with(m, hi);
        d = if game::potential_difference(s, &ceil, &floor)? < 0.0 {
            ceil
        } else {
            floor
        };
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub profile: StrategyProfile,
    pub f_min: f64,
}

pub const ORACLE_MAX_ORGS: usize = 3;
pub const ORACLE_MAX_STEPS: u64 = 3001;

/// Exhaustive minimization of the potential over `[d_min : step : d_max]^N`.
/// Ties resolve to the lexicographically smallest profile.
pub fn grid_oracle(s: &Scenario, step: u64, exec: Execution) -> Result<OracleResult, SolverError> {
    validate_scenario(s)?;
    if step == 0 {
        return Err(SolverError::InvalidConfig("grid step must be positive".into()));
    }
    let n = s.n();
    let steps = (s.bounds.d_max - s.bounds.d_min) / step;
    if n > ORACLE_MAX_ORGS || steps > ORACLE_MAX_STEPS {
        return Err(SolverError::InstanceTooLarge { n, steps });
    }
    let len = steps as usize + 1;
    let grid: Vec<f64> = (0..len).map(|i| (s.bounds.d_min + i as u64 * step) as f64).collect();

    let mut err_table = Vec::with_capacity(n);
    let mut lin_table = Vec::with_capacity(n);
    for (m, org) in s.organizations.iter().enumerate() {
        let a2 = game::linear_coefficient(s, m);
        let errs = grid
            .iter()
            .map(|&d| {
                economics::local_error(&org.law, org.d_loc as f64, d)
                    .map_err(|_| SolverError::Econ(EconError::ZeroTotalData { n: m }))
            })
            .collect::<Result<Vec<_>, _>>()?;
        err_table.push(errs);
        lin_table.push(grid.iter().map(|&d| a2 * d).collect::<Vec<_>>());
    }

    // Same summation order as `game::potential`, so values agree bitwise.
    let value = |idx: &[usize]| {
        let mut e = 0.0;
        let mut l = 0.0;
        for (m, &i) in idx.iter().enumerate() {
            e += err_table[m][i];
        }
        for (m, &i) in idx.iter().enumerate() {
            l += lin_table[m][i];
        }
        economics::aggregate(s, e) - l
    };

    let inner = len.pow(n.saturating_sub(1) as u32);
    let per_outer = exec.map_range(len, |i0| {
        let mut best = (f64::INFINITY, usize::MAX);
        let mut idx = vec![0usize; n];
        idx[0] = i0;
        for flat in 0..inner {
            let mut rest = flat;
            for m in (1..n).rev() {
                idx[m] = rest % len;
                rest /= len;
            }
            let v = value(&idx);
            if v < best.0 {
                best = (v, flat);
            }
        }
        best
    });

    let mut best = (f64::INFINITY, 0usize, 0usize);
    for (i0, &(v, flat)) in per_outer.iter().enumerate() {
        if v < best.0 {
            best = (v, i0, flat);
        }
    }
    let mut idx = vec![0usize; n];
    idx[0] = best.1;
    let mut rest = best.2;
    for m in (1..n).rev() {
        idx[m] = rest % len;
        rest /= len;
    }
    Ok(OracleResult {
        profile: StrategyProfile::new(idx.iter().map(|&i| grid[i]).collect()),
        f_min: best.0,
    })
}

/// Relative slack on a deviation's utility gain.
pub const NE_TOLERANCE: f64 = 1e-6;

/// Scans every unilateral deviation on `[d_min : step : d_max]`.
pub fn verify_ne(s: &Scenario, profile: &StrategyProfile, grid_step: u64) -> Result<NeCertificate, SolverError> {
    if grid_step == 0 {
        return Err(SolverError::InvalidConfig("grid step must be positive".into()));
    }
    let base = economics::utilities(s, profile)?;
    let mut worst: Option<Deviation> = None;
    let mut is_ne = true;
    for (m, u) in base.iter().enumerate() {
        let slack = NE_TOLERANCE * (1.0 + u.utility.abs());
        let mut d = s.bounds.d_min;
        while d <= s.bounds.d_max {
            let alt = d as f64;
            let gain = economics::utility(s, &profile.with(m, alt), m)?.utility - u.utility;
            if gain > slack {
                is_ne = false;
            }
            if worst.as_ref().is_none_or(|w| gain > w.gain) {
                worst = Some(Deviation { org: m, d_alt: alt, gain });
            }
            d += grid_step;
        }
    }
    Ok(NeCertificate {
        is_ne,
        grid_step,
        worst_deviation: worst,
    })
}
