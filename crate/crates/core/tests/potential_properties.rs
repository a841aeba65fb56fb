mod common;

use cocogen::economics;
use cocogen::game;
use cocogen::model::{PayoffMode, StrategyProfile};
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(200)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn utilities_match_direct_pricing(seed in any::<u64>(), n in 1usize..6, log_eta in 4.0f64..21.0, anti in any::<bool>()) {
        let mut r = rng(seed);
        let mode = if anti { PayoffMode::AntisymmetricNetTransfer } else { PayoffMode::LiteralReportOnly };
        let s = random_scenario(&mut r, n, 10f64.powf(log_eta), 3000, mode);
        let p = random_profile(&mut r, &s);
        let got = economics::utilities(&s, &p).unwrap();
        let want = utilities_naive(&s, &p.d_gen);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g.utility - w).abs() <= 1e-10 * (1.0 + w.abs()), "{} vs {}", g.utility, w);
        }
    }

    #[test]
    fn utility_change_is_weighted_potential_change(seed in any::<u64>(), n in 1usize..8, log_eta in 4.0f64..21.0) {
        let mut r = rng(seed);
        let s = random_scenario(&mut r, n, 10f64.powf(log_eta), 3000, PayoffMode::LiteralReportOnly);
        let p = random_profile(&mut r, &s);
        let k = (seed as usize) % n;
        let alt = random_profile(&mut r, &s).d_gen[0];
        let du = economics::utility(&s, &p.with(k, alt), k).unwrap().utility
            - economics::utility(&s, &p, k).unwrap().utility;
        let res = game::weighted_potential_residual(&s, &p, k, alt).unwrap();
        prop_assert!(res.abs() <= 1e-9 * (1.0 + du.abs()), "residual {res}, du {du}");
    }

    #[test]
    fn gradient_matches_central_differences(seed in any::<u64>(), n in 1usize..8, log_eta in 4.0f64..21.0) {
        let mut r = rng(seed);
        let mut s = random_scenario(&mut r, n, 10f64.powf(log_eta), 3000, PayoffMode::LiteralReportOnly);
        s.bounds.d_min = 1;
        let p = StrategyProfile::new((0..n).map(|_| r.random_range(2.0..2999.0)).collect());
        let g = game::potential_gradient(&s, &p).unwrap();
        let h = 1e-3;
        for k in 0..n {
            let up = p.with(k, p.d_gen[k] + h);
            let down = p.with(k, p.d_gen[k] - h);
            let fd = game::potential_difference(&s, &up, &down).unwrap() / (2.0 * h);
            prop_assert!((fd - g[k]).abs() <= 1e-6 * g[k].abs(), "k={k}: fd {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn stable_difference_agrees_with_subtraction(seed in any::<u64>(), n in 1usize..6) {
        let mut r = rng(seed);
        let s = random_scenario(&mut r, n, 1e20, 3000, PayoffMode::LiteralReportOnly);
        let p = random_profile(&mut r, &s);
        let q = random_profile(&mut r, &s);
        let direct = game::potential(&s, &p).unwrap() - game::potential(&s, &q).unwrap();
        let stable = game::potential_difference(&s, &p, &q).unwrap();
        prop_assert!((direct - stable).abs() <= 1e-14);
        prop_assert_eq!(game::potential_difference(&s, &p, &p).unwrap(), 0.0);
    }

    #[test]
    fn potential_is_midpoint_convex(seed in any::<u64>(), n in 1usize..8, log_eta in 4.0f64..21.0) {
        let mut r = rng(seed);
        let s = random_scenario(&mut r, n, 10f64.powf(log_eta), 3000, PayoffMode::LiteralReportOnly);
        let p = random_profile(&mut r, &s);
        let q = random_profile(&mut r, &s);
        let mid = StrategyProfile::new(p.d_gen.iter().zip(&q.d_gen).map(|(a, b)| 0.5 * (a + b)).collect());
        // F(mid) - (F(p) + F(q)) / 2 <= 0, computed from stable differences.
        let gap = 0.5 * (game::potential_difference(&s, &mid, &p).unwrap()
            + game::potential_difference(&s, &mid, &q).unwrap());
        prop_assert!(gap <= 1e-15, "gap {gap}");
    }

    #[test]
    fn antisymmetric_transfers_balance_under_symmetric_gamma(seed in any::<u64>(), n in 2usize..10) {
        let mut r = rng(seed);
        let mut s = random_scenario(&mut r, n, 1e20, 3000, PayoffMode::AntisymmetricNetTransfer);
        symmetrize(&mut s);
        let p = random_profile(&mut r, &s);
        let bb = economics::check_bb(&s, &p).unwrap();
        prop_assert!(bb.sum.abs() <= 1e-9 * bb.abs_pairwise.max(f64::MIN_POSITIVE), "{bb:?}");
        prop_assert!(bb.balanced);
        for a in 0..n {
            for b in (0..n).filter(|&b| b != a) {
                let pab = economics::payoff_transfer(&s, &p, a, b).unwrap();
                let pba = economics::payoff_transfer(&s, &p, b, a).unwrap();
                prop_assert!((pab + pba).abs() <= 1e-15 * (1.0 + pab.abs()));
            }
        }
    }

    #[test]
    fn marginal_contributions_never_positive(seed in any::<u64>(), n in 1usize..8) {
        let mut r = rng(seed);
        let s = random_scenario(&mut r, n, 1e20, 3000, PayoffMode::LiteralReportOnly);
        let p = random_profile(&mut r, &s);
        for k in 0..n {
            prop_assert!(economics::marginal_contribution(&s, &p, k).unwrap() <= 0.0);
        }
    }

    #[test]
    fn welfare_is_sum_of_breakdowns(seed in any::<u64>(), n in 1usize..8) {
        let mut r = rng(seed);
        let s = random_scenario(&mut r, n, 1e20, 3000, PayoffMode::LiteralReportOnly);
        let p = random_profile(&mut r, &s);
        let u = economics::utilities(&s, &p).unwrap();
        let parts: f64 = u.iter().map(|b| b.revenue + b.payoff_in - b.cost - b.server_fee - b.coopetition_loss).sum();
        let w = economics::social_welfare(&s, &p).unwrap();
        prop_assert!((w - parts).abs() <= 1e-12 * (1.0 + w.abs()));
    }
}

#[test]
fn antisymmetric_mode_breaks_the_potential_identity() {
    let mut r = rng(3);
    let s = random_scenario(&mut r, 4, 1e20, 3000, PayoffMode::AntisymmetricNetTransfer);
    let p = random_profile(&mut r, &s);
    let du = economics::utility(&s, &p.with(0, 2500.0), 0).unwrap().utility
        - economics::utility(&s, &p, 0).unwrap().utility;
    let res = game::weighted_potential_residual(&s, &p, 0, 2500.0).unwrap();
    assert!(res.abs() > 10.0 * 1e-9 * (1.0 + du.abs()), "residual {res}, du {du}");
}

#[test]
fn probe_finds_no_violations_on_random_scenarios() {
    let mut r = rng(11);
    for k in 0..5 {
        let s = random_scenario(&mut r, 6, 1e20, 3000, PayoffMode::LiteralReportOnly);
        let rep = game::convexity_probe(&s, 300, k).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(rep.min_second_difference >= -1e-9);
    }
}
