//! Closed-form expected payoffs of drawdown-stopped schedules.
//!
//! For driftless Brownian motion with total scope `S`, started at gap `g₀`
//! below its running maximum and stopped when the gap reaches `d`, the running
//! maximum gains `d - g₀` in expectation and the phase lasts
//! `(d² - g₀²)/S²` in expectation. A schedule is a sequence of such phases
//! with gaps `0 = d₀ < d₁ < … < d_K`; an agent exiting at wave `k` collects
//! `d_k` in expectation and pays its cost rate over every phase it was active.

use crate::cost::CostSpec;
use crate::error::{Error, Result};
use crate::scope::{Alliance, ScopeProfile};

/// Expected gain of the running maximum and expected duration of one phase.
pub fn phase_stats(start_gap: f64, stop_gap: f64, total_scope: f64) -> Result<(f64, f64)> {
    if !(start_gap >= 0.0) || !(start_gap < stop_gap) || !stop_gap.is_finite() {
        return Err(Error::Domain(format!(
            "phase requires 0 <= start gap < stop gap, got {start_gap} and {stop_gap}"
        )));
    }
    if !(total_scope > 0.0) || !total_scope.is_finite() {
        return Err(Error::Domain(format!(
            "total scope must be positive, got {total_scope}"
        )));
    }
    Ok((
        stop_gap - start_gap,
        (stop_gap * stop_gap - start_gap * start_gap) / (total_scope * total_scope),
    ))
}

/// One phase of a schedule: `scopes.alliance` searches until the gap reaches
/// `stop_gap`, then `exiting` leaves.
#[derive(Debug, Clone, Copy)]
pub struct Stage<'a> {
    pub scopes: &'a ScopeProfile,
    pub exiting: &'a Alliance,
    pub stop_gap: f64,
}

/// Anything that can be read as a sequence of drawdown-stopped phases.
pub trait Staged {
    fn team_size(&self) -> usize;
    fn stages(&self) -> Vec<Stage<'_>>;
}

impl Staged for crate::equilibrium::ExitSchedule {
    fn team_size(&self) -> usize {
        self.team_size
    }

    fn stages(&self) -> Vec<Stage<'_>> {
        self.waves
            .iter()
            .map(|w| Stage {
                scopes: &w.scopes,
                exiting: &w.exiting,
                stop_gap: w.trigger,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseReport {
    pub expected_gain: f64,
    pub expected_duration: f64,
    /// `(agent, expected cost paid during this phase)`
    pub costs: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WelfareReport {
    /// Expected payoff from `(M, X) = (0, 0)`, indexed by agent.
    pub per_agent: Vec<f64>,
    pub total: f64,
    pub phases: Vec<PhaseReport>,
}

/// Expected payoffs of a schedule given as explicit stages.
pub fn stage_welfare(team_size: usize, stages: &[Stage<'_>], costs: &[CostSpec]) -> Result<WelfareReport> {
    let mut per_agent = vec![0.0; team_size];
    let mut phases = Vec::with_capacity(stages.len());
    let mut start = 0.0;
    let mut expected_max = 0.0;
    for (k, st) in stages.iter().enumerate() {
        if !(st.stop_gap > start) || !st.stop_gap.is_finite() {
            return Err(Error::InfeasibleChain(format!(
                "stage {} drawdown {} does not exceed the previous {start}",
                k + 1,
                st.stop_gap
            )));
        }
        let (gain, duration) = phase_stats(start, st.stop_gap, st.scopes.total)?;
        expected_max += gain;
        let mut phase_costs = Vec::with_capacity(st.scopes.alliance.len());
        for (agent, sigma) in st.scopes.iter() {
            let paid = costs[agent].cost(sigma)? * duration;
            per_agent[agent] -= paid;
            phase_costs.push((agent, paid));
        }
        for &agent in st.exiting.members() {
            per_agent[agent] += expected_max;
        }
        phases.push(PhaseReport {
            expected_gain: gain,
            expected_duration: duration,
            costs: phase_costs,
        });
        start = st.stop_gap;
    }
    let total = per_agent.iter().sum();
    Ok(WelfareReport {
        per_agent,
        total,
        phases,
    })
}

/// Expected payoffs of a planner chain or equilibrium schedule.
pub fn chain_welfare<S: Staged + ?Sized>(plan: &S, costs: &[CostSpec]) -> Result<WelfareReport> {
    stage_welfare(plan.team_size(), &plan.stages(), costs)
}

/// Each agent's expected equilibrium payoff under `schedule`.
pub fn equilibrium_payoffs(schedule: &crate::equilibrium::ExitSchedule, costs: &[CostSpec]) -> Result<WelfareReport> {
    chain_welfare(schedule, costs)
}

/// Expected payoff of searching alone at the optimal drawdown: `σ²/(4c(σ))`.
pub fn solo_payoff(scopes: &ScopeProfile, costs: &[CostSpec]) -> Result<f64> {
    let (agent, sigma) = scopes.iter().next().ok_or(Error::EmptyAlliance)?;
    Ok(sigma * sigma / (4.0 * costs[agent].cost(sigma)?))
}
