//! Equilibrium versus planner, analytically and on common random numbers.

use crate::cost::{CostSpec, ScopeBounds};
use crate::equilibrium::{equilibrium_exit_schedule, ExitSchedule};
use crate::error::Result;
use crate::planner::{
    brute_force_optimal_sequence, check_proportional, greedy_wellordered_sequence, AllianceChain, GreedyStep,
};
use crate::sim::{simulate_schedule, SimConfig, SimOutcome};
use crate::stats::mean_se;
use crate::welfare::{chain_welfare, WelfareReport};

/// Planner-optimal chain: greedy for proportional ordered costs (with its
/// trace), exhaustive enumeration otherwise.
pub fn planner_optimal_chain(
    costs: &[CostSpec],
    bounds: &ScopeBounds,
) -> Result<(AllianceChain, Option<Vec<GreedyStep>>)> {
    if check_proportional(costs).is_ok() {
        let (chain, trace) = greedy_wellordered_sequence(costs, bounds)?;
        Ok((chain, Some(trace)))
    } else {
        let (chain, _) = brute_force_optimal_sequence(costs, bounds, false)?;
        Ok((chain, None))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub schedule: ExitSchedule,
    pub chain: AllianceChain,
    pub eq_analytic: WelfareReport,
    pub sp_analytic: WelfareReport,
    pub eq_sim: SimOutcome,
    pub sp_sim: SimOutcome,
    /// Planner minus equilibrium, per agent: `(mean, standard error)` of the
    /// path-wise difference.
    pub agent_gaps: Vec<(f64, f64)>,
    pub total_gap: (f64, f64),
}

/// Simulate both policies with the same seed, so path `p` of each run uses
/// the same random stream, and report paired payoff gaps.
pub fn simulate_equilibrium_vs_planner(
    costs: &[CostSpec],
    bounds: &ScopeBounds,
    config: &SimConfig,
) -> Result<Comparison> {
    let schedule = equilibrium_exit_schedule(costs, bounds)?;
    let (chain, _) = planner_optimal_chain(costs, bounds)?;
    let eq_analytic = chain_welfare(&schedule, costs)?;
    let sp_analytic = chain_welfare(&chain, costs)?;
    let eq_sim = simulate_schedule(&schedule, costs, config)?;
    let sp_sim = simulate_schedule(&chain, costs, config)?;

    let n = costs.len();
    let paths = eq_sim.n_paths;
    let agent_gaps = (0..n)
        .map(|a| {
            let diffs: Vec<f64> = (0..paths)
                .map(|p| sp_sim.path_payoffs[p * n + a] - eq_sim.path_payoffs[p * n + a])
                .collect();
            mean_se(&diffs)
        })
        .collect();
    let totals: Vec<f64> = (0..paths)
        .map(|p| sp_sim.path_total(p) - eq_sim.path_total(p))
        .collect();
    let total_gap = mean_se(&totals);
    Ok(Comparison {
        schedule,
        chain,
        eq_analytic,
        sp_analytic,
        eq_sim,
        sp_sim,
        agent_gaps,
        total_gap,
    })
}
