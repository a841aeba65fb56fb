//! Economic quantities of one stage game: learning errors, costs, revenues,
//! payoff transfers, coopetition losses, utilities and welfare.
//!
//! The counterfactual error for organization `n` holds the organization count
//! fixed and resets `d_gen[n]` to `d_min`. It therefore never depends on
//! `d_gen[n]`, which is what makes the game a weighted potential game.
//!
//! Contributions follow the printed sign: `mc_n = eps(d) - eps(d_-n) <= 0`.
//! Transfers and coopetition losses built from it are non-positive and are
//! reported as signed values.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Eps0Mode, Organization, PayoffMode, Scenario, ScalingLaw, StrategyProfile};

/// Absolute slack on the individual-rationality check.
pub const IR_TOLERANCE: f64 = 1e-9;
/// Relative slack on the budget-balance check.
pub const BB_RELATIVE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EconError {
    #[error("organization {n} has zero total data (d_loc + d_gen = 0)")]
    ZeroTotalData { n: usize },
    #[error("organization index {n} out of range for {len} organizations")]
    IndexOutOfRange { n: usize, len: usize },
    #[error("payoff transfer from organization {n} to itself")]
    SameOrganization { n: usize },
    #[error("profile has {found} entries, scenario has {expected} organizations")]
    ProfileLength { expected: usize, found: usize },
}

/// Utility of one organization split into its terms (all in currency).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityBreakdown {
    pub revenue: f64,
    pub payoff_in: f64,
    pub cost: f64,
    pub server_fee: f64,
    pub coopetition_loss: f64,
    pub utility: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetBalance {
    /// `sum_n P_n`.
    pub sum: f64,
    /// `sum_n |P_n|`.
    pub abs_total: f64,
    /// `sum_{n != m} |p_{n,m}|`.
    pub abs_pairwise: f64,
    pub balanced: bool,
}

/// Local error of one organization at `d_loc + d_gen` samples.
pub fn local_error(law: &ScalingLaw, d_loc: f64, d_gen: f64) -> Result<f64, EconError> {
    let total = d_loc + d_gen;
    if !(total > 0.0) {
        return Err(EconError::ZeroTotalData { n: 0 });
    }
    Ok(law.error_at(total))
}

fn org_error(org: &Organization, n: usize, d_gen: f64) -> Result<f64, EconError> {
    local_error(&org.law, org.d_loc as f64, d_gen).map_err(|_| EconError::ZeroTotalData { n })
}

fn check_profile(s: &Scenario, profile: &StrategyProfile) -> Result<(), EconError> {
    if profile.len() != s.n() {
        return Err(EconError::ProfileLength {
            expected: s.n(),
            found: profile.len(),
        });
    }
    Ok(())
}

fn check_index(s: &Scenario, n: usize) -> Result<(), EconError> {
    if n >= s.n() {
        return Err(EconError::IndexOutOfRange { n, len: s.n() });
    }
    Ok(())
}

/// Local errors of every organization at `profile`.
pub fn local_errors(s: &Scenario, profile: &StrategyProfile) -> Result<Vec<f64>, EconError> {
    check_profile(s, profile)?;
    s.organizations
        .iter()
        .zip(&profile.d_gen)
        .enumerate()
        .map(|(n, (org, &d))| org_error(org, n, d))
        .collect()
}

/// Maps the summed local errors to the global error.
#[inline]
pub(crate) fn aggregate(s: &Scenario, local_sum: f64) -> f64 {
    let mean = local_sum / s.n() as f64;
    ((mean - 1.0) / s.economy.varrho).exp()
}

pub fn global_error(s: &Scenario, profile: &StrategyProfile) -> Result<f64, EconError> {
    let sum: f64 = local_errors(s, profile)?.iter().sum();
    Ok(aggregate(s, sum))
}

pub fn epsilon_zero(s: &Scenario) -> Result<f64, EconError> {
    match s.economy.eps0_mode {
        Eps0Mode::Fixed(v) => Ok(v),
        Eps0Mode::AtZeroGeneration => global_error(s, &s.all_min()),
    }
}

/// Global error with `d_gen[n]` reset to `d_min`.
pub fn counterfactual_error(
    s: &Scenario,
    profile: &StrategyProfile,
    n: usize,
) -> Result<f64, EconError> {
    check_index(s, n)?;
    check_profile(s, profile)?;
    global_error(s, &profile.with(n, s.bounds.lo()))
}

/// `eps(d) - eps(d_-n)`; never positive.
pub fn marginal_contribution(
    s: &Scenario,
    profile: &StrategyProfile,
    n: usize,
) -> Result<f64, EconError> {
    check_index(s, n)?;
    Ok(Contributions::new(s, profile)?.mc[n])
}

/// Energy for one round: `kappa * (eta * d_mix + mu * d_gen) * f^2`.
pub fn energy(org: &Organization, d_gen: f64) -> f64 {
    let d_mix = org.d_loc as f64 + d_gen;
    org.kappa * (org.eta * d_mix + org.mu * d_gen) * org.f * org.f
}

pub fn compute_cost(org: &Organization, d_gen: f64) -> f64 {
    org.c_cmp * energy(org, d_gen)
}

/// Global errors needed to price one profile.
#[derive(Debug, Clone)]
pub(crate) struct Contributions {
    pub eps: f64,
    pub eps0: f64,
    /// `eps - eps(d_-n)` per organization.
    pub mc: Vec<f64>,
}

impl Contributions {
    pub fn new(s: &Scenario, profile: &StrategyProfile) -> Result<Self, EconError> {
        let errs = local_errors(s, profile)?;
        let lo = s.bounds.lo();
        let at_min: Vec<f64> = s
            .organizations
            .iter()
            .enumerate()
            .map(|(n, org)| org_error(org, n, lo))
            .collect::<Result<_, _>>()?;

        let eps = aggregate(s, errs.iter().sum());
        let eps0 = match s.economy.eps0_mode {
            Eps0Mode::Fixed(v) => v,
            Eps0Mode::AtZeroGeneration => aggregate(s, at_min.iter().sum()),
        };
        // Summation order matches a fresh global_error call on the substituted
        // profile, so results agree bitwise with counterfactual_error.
        let mc = (0..s.n())
            .map(|n| {
                let sum: f64 = errs
                    .iter()
                    .enumerate()
                    .map(|(m, &e)| if m == n { at_min[n] } else { e })
                    .sum();
                eps - aggregate(s, sum)
            })
            .collect();
        Ok(Self { eps, eps0, mc })
    }

    fn transfer(&self, s: &Scenario, n: usize, m: usize) -> f64 {
        let g = s.market.xi * s.market.gamma[n][m];
        match s.economy.bb_mode {
            PayoffMode::LiteralReportOnly => g * self.mc[n],
            PayoffMode::AntisymmetricNetTransfer => g * (self.mc[n] - self.mc[m]),
        }
    }

    fn total_payoff(&self, s: &Scenario, n: usize) -> f64 {
        (0..s.n()).filter(|&m| m != n).map(|m| self.transfer(s, n, m)).sum()
    }

    fn coopetition_loss(&self, s: &Scenario, n: usize) -> f64 {
        let gamma = &s.market.gamma[n];
        (0..s.n())
            .filter(|&m| m != n)
            .map(|m| s.market.phi[m] * gamma[m] * self.mc[n])
            .sum()
    }

    fn utility(&self, s: &Scenario, profile: &StrategyProfile, n: usize) -> UtilityBreakdown {
        let org = &s.organizations[n];
        let revenue = org.psi * (self.eps0 - self.eps);
        let payoff_in = self.total_payoff(s, n);
        let cost = compute_cost(org, profile.d_gen[n]);
        let server_fee = s.economy.c0;
        let coopetition_loss = self.coopetition_loss(s, n);
        UtilityBreakdown {
            revenue,
            payoff_in,
            cost,
            server_fee,
            coopetition_loss,
            utility: revenue + payoff_in - cost - server_fee - coopetition_loss,
        }
    }
}

pub fn revenue(s: &Scenario, profile: &StrategyProfile, n: usize) -> Result<f64, EconError> {
    check_index(s, n)?;
    let c = Contributions::new(s, profile)?;
    Ok(s.organizations[n].psi * (c.eps0 - c.eps))
}

/// Transfer `p_{n,m}` organization `n` receives from competitor `m`.
pub fn payoff_transfer(
    s: &Scenario,
    profile: &StrategyProfile,
    n: usize,
    m: usize,
) -> Result<f64, EconError> {
    check_index(s, n)?;
    check_index(s, m)?;
    if n == m {
        return Err(EconError::SameOrganization { n });
    }
    Ok(Contributions::new(s, profile)?.transfer(s, n, m))
}

pub fn total_payoff(s: &Scenario, profile: &StrategyProfile, n: usize) -> Result<f64, EconError> {
    check_index(s, n)?;
    Ok(Contributions::new(s, profile)?.total_payoff(s, n))
}

pub fn coopetition_loss(
    s: &Scenario,
    profile: &StrategyProfile,
    n: usize,
) -> Result<f64, EconError> {
    check_index(s, n)?;
    Ok(Contributions::new(s, profile)?.coopetition_loss(s, n))
}

pub fn utility(
    s: &Scenario,
    profile: &StrategyProfile,
    n: usize,
) -> Result<UtilityBreakdown, EconError> {
    check_index(s, n)?;
    Ok(Contributions::new(s, profile)?.utility(s, profile, n))
}

/// Breakdowns for every organization, sharing one pass over the errors.
pub fn utilities(
    s: &Scenario,
    profile: &StrategyProfile,
) -> Result<Vec<UtilityBreakdown>, EconError> {
    let c = Contributions::new(s, profile)?;
    Ok((0..s.n()).map(|n| c.utility(s, profile, n)).collect())
}

pub fn welfare_of(utilities: &[UtilityBreakdown]) -> f64 {
    utilities.iter().map(|u| u.utility).sum()
}

pub fn social_welfare(s: &Scenario, profile: &StrategyProfile) -> Result<f64, EconError> {
    Ok(welfare_of(&utilities(s, profile)?))
}

pub fn ir_of(utilities: &[UtilityBreakdown]) -> Vec<bool> {
    utilities.iter().map(|u| u.utility >= -IR_TOLERANCE).collect()
}

pub fn check_ir(s: &Scenario, profile: &StrategyProfile) -> Result<Vec<bool>, EconError> {
    Ok(ir_of(&utilities(s, profile)?))
}

pub fn check_bb(s: &Scenario, profile: &StrategyProfile) -> Result<BudgetBalance, EconError> {
    let c = Contributions::new(s, profile)?;
    let n = s.n();
    let mut sum = 0.0;
    let mut abs_total = 0.0;
    let mut abs_pairwise = 0.0;
    for i in 0..n {
        let p = c.total_payoff(s, i);
        sum += p;
        abs_total += p.abs();
        for j in (0..n).filter(|&j| j != i) {
            abs_pairwise += c.transfer(s, i, j).abs();
        }
    }
    Ok(BudgetBalance {
        sum,
        abs_total,
        abs_pairwise,
        balanced: sum.abs() <= BB_RELATIVE_TOLERANCE * (1.0 + abs_total),
    })
}
