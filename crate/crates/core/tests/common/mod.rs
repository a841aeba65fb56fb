//! Shared fixtures and a from-scratch pricing model used as an oracle.
#![allow(dead_code)]

use cocogen::model::{
    EconomyParams, Eps0Mode, Market, Organization, PayoffMode, Scenario, ScalingLaw, StrategyBounds,
    StrategyProfile, DEFAULT_C_CMP,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Random scenario with the standard parameter ranges. `eta` scales the
/// per-sample workload so that generation has a visible cost.
pub fn random_scenario(r: &mut StdRng, n: usize, eta: f64, d_max: u64, mode: PayoffMode) -> Scenario {
    let law = ScalingLaw::new(r.random_range(1.5..3.5), r.random_range(0.1..0.6), r.random_range(0.0..0.1)).unwrap();
    let organizations = (0..n)
        .map(|id| Organization {
            id,
            d_loc: r.random_range(1000..=3000),
            f: r.random_range(1.0..2.0),
            kappa: r.random_range(2e-18..5e-18),
            eta,
            mu: eta,
            c_cmp: DEFAULT_C_CMP,
            psi: r.random_range(600.0..900.0),
            law,
        })
        .collect();
    let gamma = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 0.0 } else { r.random_range(0.0..1.0) }).collect())
        .collect();
    Scenario {
        organizations,
        market: Market {
            gamma,
            xi: 20.0,
            phi: (0..n).map(|_| r.random_range(200.0..300.0)).collect(),
        },
        economy: EconomyParams {
            varrho: 20.0,
            c0: 0.0,
            eps0_mode: Eps0Mode::AtZeroGeneration,
            bb_mode: mode,
        },
        bounds: StrategyBounds { d_min: 0, d_max },
        seed: r.random(),
    }
}

pub fn symmetrize(s: &mut Scenario) {
    let n = s.n();
    for i in 0..n {
        for j in 0..i {
            s.market.gamma[i][j] = s.market.gamma[j][i];
        }
    }
}

pub fn random_profile(r: &mut StdRng, s: &Scenario) -> StrategyProfile {
    StrategyProfile::new(
        (0..s.n())
            .map(|_| r.random_range(s.bounds.lo()..=s.bounds.hi()))
            .collect(),
    )
}

fn global_error_naive(s: &Scenario, d: &[f64]) -> f64 {
    let mut total = 0.0;
    for (o, &g) in s.organizations.iter().zip(d) {
        let x = o.d_loc as f64 + g;
        total += o.law.alpha() * x.powf(-o.law.beta()) - o.law.delta();
    }
    ((total / s.n() as f64 - 1.0) / s.economy.varrho).exp()
}

/// Utility of every organization, priced directly from the model definition.
pub fn utilities_naive(s: &Scenario, d: &[f64]) -> Vec<f64> {
    let n = s.n();
    let eps = global_error_naive(s, d);
    let eps0 = match s.economy.eps0_mode {
        Eps0Mode::Fixed(v) => v,
        Eps0Mode::AtZeroGeneration => global_error_naive(s, &vec![s.bounds.lo(); n]),
    };
    let mc: Vec<f64> = (0..n)
        .map(|k| {
            let mut alt = d.to_vec();
            alt[k] = s.bounds.lo();
            eps - global_error_naive(s, &alt)
        })
        .collect();
    (0..n)
        .map(|k| {
            let o = &s.organizations[k];
            let revenue = o.psi * (eps0 - eps);
            let mut payoff = 0.0;
            let mut loss = 0.0;
            for m in (0..n).filter(|&m| m != k) {
                let g = s.market.gamma[k][m];
                payoff += match s.economy.bb_mode {
                    PayoffMode::LiteralReportOnly => s.market.xi * g * mc[k],
                    PayoffMode::AntisymmetricNetTransfer => s.market.xi * g * (mc[k] - mc[m]),
                };
                loss += s.market.phi[m] * g * mc[k];
            }
            let energy = o.kappa * (o.eta * (o.d_loc as f64 + d[k]) + o.mu * d[k]) * o.f * o.f;
            revenue + payoff - o.c_cmp * energy - s.economy.c0 - loss
        })
        .collect()
}
