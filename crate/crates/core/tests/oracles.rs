//! Independent cross-checks: a lattice random walk for the phase moments,
//! discretisation convergence, grid refinement and the welfare orderings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use teamsearch::scan::scan_grid;
use teamsearch::scenario::ScanSection;
use teamsearch::stats::{ks_test, mean_se};
use teamsearch::welfare::solo_payoff;
use teamsearch::*;

/// Simple ±h random walk, time step `(h/S)²`, started `g0` below its maximum
/// and stopped when the gap reaches `d`. Returns (max gain, duration) samples.
/// On the lattice the mean gain is exactly `d - g0` and the mean duration is
/// `(d² - g0² + h(d - g0))/S²`.
fn lattice_phase(g0: f64, d: f64, scope: f64, h: f64, n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (start, stop) = ((g0 / h).round() as i64, (d / h).round() as i64);
    let dt = (h / scope).powi(2);
    let mut gains = Vec::with_capacity(n);
    let mut times = Vec::with_capacity(n);
    for _ in 0..n {
        let (mut x, mut m, mut steps) = (-start, 0i64, 0u64);
        while m - x < stop {
            x += if rng.random::<bool>() { 1 } else { -1 };
            m = m.max(x);
            steps += 1;
        }
        gains.push(m as f64 * h);
        times.push(steps as f64 * dt);
    }
    (gains, times)
}

#[test]
fn phase_moments_match_lattice_walk() {
    for (g0, d, scope, seed) in [(0.0, 1.0, 1.0, 1u64), (0.4, 1.2, 2.0, 2), (0.25, 0.5, 0.7, 3)] {
        let (gain, dur) = phase_stats(g0, d, scope).unwrap();
        let h = 0.05;
        let (gs, ts) = lattice_phase(g0, d, scope, h, 20_000, seed);
        let lattice_dur = dur + h * (d - g0) / (scope * scope);
        let (gm, gse) = mean_se(&gs);
        let (tm, tse) = mean_se(&ts);
        assert!((gm - gain).abs() < 4.0 * gse, "gain {gm} ± {gse} vs {gain}");
        assert!(
            (tm - lattice_dur).abs() < 4.0 * tse,
            "duration {tm} ± {tse} vs {lattice_dur}"
        );
    }
}

#[test]
fn ks_accepts_true_law_and_rejects_shift() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let exp = Exp::new(2.0).unwrap();
    let xs: Vec<f64> = (0..5000).map(|_| exp.sample(&mut rng)).collect();
    let right = ks_test(&xs, |x| 1.0 - (-2.0 * x).exp(), 0.01);
    assert!(right.pass, "{right:?}");
    let wrong = ks_test(&xs, |x| 1.0 - (-1.6 * x).exp(), 0.01);
    assert!(!wrong.pass, "{wrong:?}");
}

fn single() -> (ExitSchedule, Vec<CostSpec>) {
    let costs = vec![CostSpec::exponential(1.0, 1.0)];
    let s = equilibrium_exit_schedule(&costs, &ScopeBounds { lo: 0.1, hi: 10.0 }).unwrap();
    (s, costs)
}

#[test]
fn discretisation_bias_shrinks_with_dt() {
    let (schedule, costs) = single();
    let target = schedule.waves[0].trigger;
    let mut last = f64::INFINITY;
    for dt in [4e-3, 2e-3, 1e-3, 5e-4] {
        let cfg = SimConfig {
            dt,
            n_paths: 20_000,
            seed: 4,
            bridge_correction: false,
            ..SimConfig::default()
        };
        let out = simulate_schedule(&schedule, &costs, &cfg).unwrap();
        let err = (out.waves[0].mean_max - target).abs();
        assert!(err < last, "dt {dt}: error {err} not below {last}");
        last = err;

        let bridged = simulate_schedule(
            &schedule,
            &costs,
            &SimConfig {
                bridge_correction: true,
                ..cfg
            },
        )
        .unwrap();
        let w = &bridged.waves[0];
        assert!(
            (w.mean_max - target).abs() < 3.0 * w.max_se,
            "bridged dt {dt}: {} ± {}",
            w.mean_max,
            w.max_se
        );
    }
}

#[test]
fn refined_scan_has_no_isolated_cells() {
    let base = CostSpec::exponential(1.0, 1.0);
    let bounds = ScopeBounds { lo: 0.1, hi: 10.0 };
    let coarse = ScanSection {
        beta2_range: [1.0, 3.0],
        beta3_range: [1.0, 9.0],
        steps: 16,
    };
    let fine = ScanSection { steps: 64, ..coarse };
    let c = scan_grid(&base, 1.0, &coarse, &bounds);
    let f = scan_grid(&base, 1.0, &fine, &bounds);
    let n = fine.steps;
    let at = |i: usize, j: usize| f[i * n + j].eq_label.as_str();
    for i in 0..n {
        for j in 0..n {
            let l = at(i, j);
            if l == "invalid" {
                continue;
            }
            let neighbours = [(i.wrapping_sub(1), j), (i + 1, j), (i, j.wrapping_sub(1)), (i, j + 1)];
            let same = neighbours
                .iter()
                .filter(|&&(a, b)| a < n && b < n && at(a, b) == l)
                .count();
            assert!(
                same > 0,
                "isolated {l} at ({}, {})",
                f[i * n + j].beta2,
                f[i * n + j].beta3
            );
        }
    }
    let labels = |cells: &[teamsearch::scan::ScanCell]| {
        let mut v: Vec<String> = cells.iter().map(|c| c.eq_label.clone()).collect();
        v.sort();
        v.dedup();
        v
    };
    assert_eq!(labels(&c), labels(&f));
}

fn random_team(rng: &mut ChaCha8Rng) -> Vec<CostSpec> {
    let n = rng.random_range(1..=6);
    let b = rng.random_range(0.5..2.0);
    let mut betas: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..6.0)).collect();
    betas.sort_by(f64::total_cmp);
    betas.iter().map(|&x| CostSpec::exponential(b, x)).collect()
}

#[test]
fn equilibrium_payoff_beats_searching_alone() {
    let bounds = ScopeBounds { lo: 0.01, hi: 50.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let costs = random_team(&mut rng);
        let schedule = equilibrium_exit_schedule(&costs, &bounds).unwrap();
        let w = equilibrium_payoffs(&schedule, &costs).unwrap();
        for (a, &payoff) in w.per_agent.iter().enumerate() {
            let solo = solve_equilibrium_scopes(&Alliance::new(vec![a]), &costs, &bounds).unwrap();
            let alone = solo_payoff(&solo, &costs).unwrap();
            assert!(
                payoff >= alone * (1.0 - 1e-12),
                "agent {a}: {payoff} < {alone} in {}",
                schedule.label()
            );
        }
    }
}

#[test]
fn planner_welfare_dominates_equilibrium() {
    let bounds = ScopeBounds { lo: 0.01, hi: 50.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let costs = random_team(&mut rng);
        let schedule = equilibrium_exit_schedule(&costs, &bounds).unwrap();
        let (chain, _) = greedy_wellordered_sequence(&costs, &bounds).unwrap();
        let eq = chain_welfare(&schedule, &costs).unwrap().total;
        let sp = chain_welfare(&chain, &costs).unwrap().total;
        assert!(sp >= eq * (1.0 - 1e-12), "{sp} < {eq} for {}", schedule.label());
    }
}
