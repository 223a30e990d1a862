//! Multi-agent search with drawdown stopping.
//!
//! A team searches along a driftless Brownian path whose volatility is the
//! sum of the members' search scopes; every member pays a convex cost rate
//! for its own scope and is rewarded with the running maximum when it stops.
//! The crate solves the equilibrium and planner scope profiles, builds exit
//! schedules and optimal alliance chains, evaluates their expected payoffs in
//! closed form and checks them by Monte Carlo.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod compare;
pub mod cost;
pub mod equilibrium;
pub mod error;
pub mod penalty;
pub mod planner;
pub mod report;
pub mod scan;
pub mod scenario;
pub mod scope;
pub mod sim;
pub mod stats;
pub mod welfare;

pub use cost::{validate_spec, CostSpec, ScopeBounds, ValidationReport};
pub use equilibrium::{equilibrium_drawdowns, equilibrium_exit_schedule, DrawdownSet, ExitSchedule, ExitWave};
pub use error::{Error, Result};
pub use penalty::{penalty_policy, simulate_penalty, PenaltyConfig, PenaltyPolicy, PenaltyRegime};
pub use planner::{
    brute_force_optimal_sequence, build_chain, greedy_wellordered_sequence, planner_drawdown, AllianceChain,
};
pub use scenario::ScenarioConfig;
pub use scope::{interior_capacity, solve_equilibrium_scopes, solve_planner_scopes, Alliance, ScopeProfile};
pub use sim::{simulate_schedule, SimConfig, SimOutcome};
pub use welfare::{chain_welfare, equilibrium_payoffs, phase_stats, WelfareReport};
