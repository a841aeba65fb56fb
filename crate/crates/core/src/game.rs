//! Weighted potential of the data-generation game.
//!
//! `F(d) = eps(d) - sum_n A2_n * d_n` with `A2_n = kappa c_cmp (eta + mu) f^2 / z_n`.
//! A unilateral move by `n` changes its utility by exactly `z_n` times the
//! change in `F`. Since every `z_n < 0`, equilibria are minimizers of `F`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::economics::{self, EconError};
use crate::model::{Scenario, StrategyProfile};
use crate::rng::{family, StreamRng};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error(transparent)]
    Econ(#[from] EconError),
    #[error("organization {n} has non-negative potential weight z = {z}")]
    NonNegativeZWeight { n: usize, z: f64 },
    #[error("convexity violated: {0:?}")]
    ConvexityViolation(Box<ConvexityWitness>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialEvaluation {
    pub value: f64,
    pub gradient: Vec<f64>,
}

pub fn z_weight(s: &Scenario, n: usize) -> Result<f64, GameError> {
    if n >= s.n() {
        return Err(EconError::IndexOutOfRange { n, len: s.n() }.into());
    }
    let z = s.z_weight(n);
    if z < 0.0 {
        Ok(z)
    } else {
        Err(GameError::NonNegativeZWeight { n, z })
    }
}

/// Cost slope `kappa * c_cmp * (eta + mu) * f^2` of organization `n`, per generated sample.
pub fn cost_slope(s: &Scenario, n: usize) -> f64 {
    let o = &s.organizations[n];
    o.kappa * o.c_cmp * (o.eta + o.mu) * o.f * o.f
}

/// `A2_n = cost_slope / z_n`; negative on every validated scenario.
pub fn linear_coefficient(s: &Scenario, n: usize) -> f64 {
    cost_slope(s, n) / s.z_weight(n)
}

pub fn potential(s: &Scenario, profile: &StrategyProfile) -> Result<f64, GameError> {
    let eps = economics::global_error(s, profile)?;
    let linear: f64 = (0..s.n())
        .map(|n| linear_coefficient(s, n) * profile.d_gen[n])
        .sum();
    Ok(eps - linear)
}

/// `F(p) - F(q)` evaluated without subtracting two values near 1.
///
/// Local-error gaps use `expm1`/`ln_1p`, and the exponential gap is factored
/// as `exp(b) * expm1(a - b)`. Plain subtraction loses about seven digits
/// for sub-sample perturbations.
pub fn potential_difference(
    s: &Scenario,
    p: &StrategyProfile,
    q: &StrategyProfile,
) -> Result<f64, GameError> {
    let n = s.n();
    for prof in [p, q] {
        if prof.len() != n {
            return Err(EconError::ProfileLength {
                expected: n,
                found: prof.len(),
            }
            .into());
        }
    }
    let base = economics::local_errors(s, q)?;
    let mut gap_sum = 0.0;
    let mut linear = 0.0;
    for (m, org) in s.organizations.iter().enumerate() {
        let dp = p.d_gen[m];
        let dq = q.d_gen[m];
        if dp == dq {
            continue;
        }
        let tq = org.d_loc as f64 + dq;
        let tp = org.d_loc as f64 + dp;
        if !(tp > 0.0) {
            return Err(EconError::ZeroTotalData { n: m }.into());
        }
        let law = &org.law;
        let ratio = ((dp - dq) / tq).ln_1p();
        gap_sum += law.alpha() * tq.powf(-law.beta()) * (-law.beta() * ratio).exp_m1();
        linear += linear_coefficient(s, m) * (dp - dq);
    }
    let scale = n as f64 * s.economy.varrho;
    let b = (base.iter().sum::<f64>() / n as f64 - 1.0) / s.economy.varrho;
    Ok(b.exp() * (gap_sum / scale).exp_m1() - linear)
}

/// Analytic gradient of the potential.
pub fn potential_gradient(s: &Scenario, profile: &StrategyProfile) -> Result<Vec<f64>, GameError> {
    let errs = economics::local_errors(s, profile)?;
    let n = s.n() as f64;
    let varrho = s.economy.varrho;
    let a1 = errs.iter().sum::<f64>() / n;
    let growth = ((a1 - 1.0) / varrho).exp();
    Ok(s.organizations
        .iter()
        .enumerate()
        .map(|(m, org)| {
            let law = &org.law;
            let a3 = (org.d_loc as f64 + profile.d_gen[m]).powf(-law.beta() - 1.0);
            -(law.alpha() * law.beta() / (n * varrho)) * a3 * growth - linear_coefficient(s, m)
        })
        .collect())
}

pub fn evaluate_potential(
    s: &Scenario,
    profile: &StrategyProfile,
) -> Result<PotentialEvaluation, GameError> {
    Ok(PotentialEvaluation {
        value: potential(s, profile)?,
        gradient: potential_gradient(s, profile)?,
    })
}

/// `[U_n(d_alt) - U_n(d_n)] - z_n [F(d_alt) - F(d_n)]` for a unilateral move.
/// Vanishes under the literal payoff rule; the antisymmetric rule couples
/// `P_n` to rivals' counterfactuals and breaks the identity.
pub fn weighted_potential_residual(
    s: &Scenario,
    profile: &StrategyProfile,
    n: usize,
    d_alt: f64,
) -> Result<f64, GameError> {
    let z = z_weight(s, n)?;
    let alt = profile.with(n, d_alt);
    let du = economics::utility(s, &alt, n)?.utility - economics::utility(s, profile, n)?.utility;
    let df = potential_difference(s, &alt, profile)?;
    Ok(du - z * df)
}

/// Worst case found by [`convexity_probe`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityWitness {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub lambda: f64,
    /// `F(mix) - [lambda F(p) + (1 - lambda) F(q)]`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub trials: usize,
    pub violations: usize,
    pub worst: Option<ConvexityWitness>,
    /// Smallest directional second difference seen (per sample squared).
    pub min_second_difference: f64,
}

const CONVEXITY_SLACK: f64 = 1e-12;
const CURVATURE_SLACK: f64 = 1e-9;

/// Samples random chords and directions and checks convexity of `F` along them.
pub fn convexity_probe(s: &Scenario, trials: usize, seed: u64) -> Result<ConvexityReport, GameError> {
    let mut rng = StreamRng::new(seed, family::PROBE);
    let (lo, hi) = (s.bounds.lo(), s.bounds.hi());
    let n = s.n();
    let h = 1.0;
    let mut violations = 0;
    let mut worst: Option<ConvexityWitness> = None;
    let mut min_second = f64::INFINITY;

    for _ in 0..trials {
        let p = StrategyProfile::new((0..n).map(|_| rng.uniform(lo, hi)).collect());
        let q = StrategyProfile::new((0..n).map(|_| rng.uniform(lo, hi)).collect());
        let lambda = rng.uniform(0.0, 1.0).max(f64::MIN_POSITIVE);
        let mix = StrategyProfile::new(
            p.d_gen
                .iter()
                .zip(&q.d_gen)
                .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                .collect(),
        );
        let fp = potential(s, &p)?;
        let fq = potential(s, &q)?;
        let fm = potential(s, &mix)?;
        let gap = fm - (lambda * fp + (1.0 - lambda) * fq);
        let violated = gap > CONVEXITY_SLACK * fm.abs();
        if violated {
            violations += 1;
        }
        if worst.as_ref().is_none_or(|w| gap > w.gap) {
            worst = Some(ConvexityWitness {
                p: p.d_gen.clone(),
                q: q.d_gen.clone(),
                lambda,
                gap,
            });
        }

        if hi - lo > 2.0 * h {
            let x = StrategyProfile::new((0..n).map(|_| rng.uniform(lo + h, hi - h)).collect());
            let mut dir: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let norm = dir.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
            dir.iter_mut().for_each(|v| *v /= norm);
            let shift = |sign: f64| {
                StrategyProfile::new(x.d_gen.iter().zip(&dir).map(|(a, v)| a + sign * h * v).collect())
            };
            let up = potential_difference(s, &shift(1.0), &x)?;
            let down = potential_difference(s, &shift(-1.0), &x)?;
            let second = (up + down) / (h * h);
            min_second = min_second.min(second);
            if second < -CURVATURE_SLACK {
                violations += 1;
            }
        }
    }

    let report = ConvexityReport {
        trials,
        violations,
        worst,
        min_second_difference: min_second,
    };
    if violations > 0 {
        let witness = report.worst.clone().expect("violation implies a witness");
        return Err(GameError::ConvexityViolation(Box::new(witness)));
    }
    Ok(report)
}
