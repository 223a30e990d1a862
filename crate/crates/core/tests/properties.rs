use proptest::prelude::*;

use teamsearch::*;

fn bounds() -> ScopeBounds {
    ScopeBounds { lo: 0.01, hi: 50.0 }
}

fn wellordered() -> impl Strategy<Value = (f64, Vec<f64>)> {
    (0.5f64..2.0, prop::collection::vec(1.0f64..5.0, 1..=5)).prop_map(|(b, mut rest)| {
        rest.sort_by(f64::total_cmp);
        rest.insert(0, 1.0);
        (b, rest)
    })
}

fn team(b: f64, betas: &[f64]) -> Vec<CostSpec> {
    betas.iter().map(|&x| CostSpec::exponential(b, x)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phases_add_up(g0 in 0.0f64..1.0, a in 0.01f64..1.0, b in 0.01f64..1.0, s in 0.1f64..5.0) {
        let (g1, g2) = (g0 + a, g0 + a + b);
        let (x1, t1) = phase_stats(g0, g1, s).unwrap();
        let (x2, t2) = phase_stats(g1, g2, s).unwrap();
        let (x, t) = phase_stats(g0, g2, s).unwrap();
        prop_assert!((x1 + x2 - x).abs() < 1e-12);
        prop_assert!((t1 + t2 - t).abs() < 1e-12 * t.max(1.0));
    }

    #[test]
    fn equilibrium_scopes_solve_first_order_conditions((b, betas) in wellordered()) {
        let costs = team(b, &betas);
        let p = solve_equilibrium_scopes(&Alliance::full(costs.len()), &costs, &bounds()).unwrap();
        prop_assert!((p.total - 2.0 / b).abs() < 1e-9);
        for (a, sigma) in p.iter() {
            let c = &costs[a];
            if sigma > bounds().lo && sigma < bounds().hi {
                let r = 2.0 * c.cost(sigma).unwrap() / c.dcost(sigma).unwrap();
                prop_assert!((r - p.total).abs() < 1e-9 * p.total);
            }
        }
    }

    #[test]
    fn schedule_partitions_team_with_rising_triggers((b, betas) in wellordered()) {
        let costs = team(b, &betas);
        let s = equilibrium_exit_schedule(&costs, &bounds()).unwrap();
        s.check().unwrap();
        prop_assert!(s.triggers().windows(2).all(|w| w[0] < w[1]));
        for a in 0..costs.len() {
            prop_assert!(s.wave_of(a).is_some());
        }
        let exited: usize = s.waves.iter().map(|w| w.exiting.len()).sum();
        prop_assert_eq!(exited, costs.len());
        prop_assert!(equilibrium::wellordered_exit_order_check(&s, &betas));
    }

    #[test]
    fn greedy_chain_is_feasible_and_beats_the_grand_alliance((b, betas) in wellordered()) {
        let costs = team(b, &betas);
        let (chain, trace) = greedy_wellordered_sequence(&costs, &bounds()).unwrap();
        prop_assert!(chain.feasible);
        prop_assert!(chain.drawdowns.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(trace.len(), chain.len());
        prop_assert!(planner::exit_order_consistent(&chain));
        let grand = build_chain(vec![Alliance::full(costs.len())], &costs, &bounds()).unwrap();
        let w = chain_welfare(&chain, &costs).unwrap().total;
        let g = chain_welfare(&grand, &costs).unwrap().total;
        prop_assert!(w >= g * (1.0 - 1e-12));
    }

    #[test]
    fn welfare_is_sum_of_agents((b, betas) in wellordered()) {
        let costs = team(b, &betas);
        let s = equilibrium_exit_schedule(&costs, &bounds()).unwrap();
        let w = chain_welfare(&s, &costs).unwrap();
        let sum: f64 = w.per_agent.iter().sum();
        prop_assert!((sum - w.total).abs() < 1e-12 * w.total.abs().max(1.0));
    }

    #[test]
    fn penalty_threshold_rises_with_alpha(beta_f in 5.0f64..40.0, a in 0.0f64..1.0, gap in 0.0f64..1.0) {
        let costs = team(1.0, &[1.0, beta_f]);
        let make = |alpha: f64| penalty_policy(&PenaltyConfig::new(alpha, &costs, ScopeBounds { lo: 0.1, hi: 10.0 }).unwrap()).unwrap();
        let low = make(a * (1.0 - gap));
        let high = make(a);
        prop_assert!(high.threshold >= low.threshold);
        prop_assert!(high.continuation_probability() >= low.continuation_probability());
        prop_assert_eq!(&high.team_scopes, &low.team_scopes);
    }
}
