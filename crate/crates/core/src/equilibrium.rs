//! Equilibrium drawdown boundaries and the exit-wave cascade.

use crate::cost::{CostSpec, ScopeBounds};
use crate::error::{Error, Result};
use crate::scope::{solve_equilibrium_scopes, Alliance, ScopeProfile};

/// Drawdowns within this distance of the minimum exit together.
pub const TIE_TOL: f64 = 1e-12;

fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Per-member drawdown sizes `d_i = S² / (2 c_i(σ_i))` within one alliance.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawdownSet {
    pub alliance: Alliance,
    /// Aligned with `alliance.members()`.
    pub drawdowns: Vec<f64>,
    pub trigger: f64,
    pub first_exiters: Alliance,
}

impl DrawdownSet {
    pub fn drawdown_of(&self, agent: usize) -> Option<f64> {
        let k = self.alliance.members().binary_search(&agent).ok()?;
        Some(self.drawdowns[k])
    }
}

pub fn equilibrium_drawdowns(scopes: &ScopeProfile, costs: &[CostSpec]) -> Result<DrawdownSet> {
    if scopes.alliance.is_empty() {
        return Err(Error::EmptyAlliance);
    }
    let s2 = scopes.total * scopes.total;
    let mut drawdowns = Vec::with_capacity(scopes.scopes.len());
    for (agent, sigma) in scopes.iter() {
        let d = s2 / (2.0 * costs[agent].cost(sigma)?);
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::Domain(format!(
                "drawdown of agent {} in {} is {d}",
                agent + 1,
                scopes.alliance
            )));
        }
        drawdowns.push(d);
    }
    let trigger = drawdowns.iter().copied().fold(f64::INFINITY, f64::min);
    let first_exiters = scopes
        .alliance
        .members()
        .iter()
        .zip(&drawdowns)
        .filter(|(_, &d)| ties(d, trigger))
        .map(|(&a, _)| a)
        .collect();
    Ok(DrawdownSet {
        alliance: scopes.alliance.clone(),
        drawdowns,
        trigger,
        first_exiters,
    })
}

/// One exit wave: the agents in `exiting` stop together once the gap between
/// the running maximum and the current value reaches `trigger`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitWave {
    /// Alliance searching up to this wave.
    pub alliance: Alliance,
    pub scopes: ScopeProfile,
    pub exiting: Alliance,
    pub trigger: f64,
}

/// Ordered partition of the team into exit waves.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitSchedule {
    pub team_size: usize,
    pub waves: Vec<ExitWave>,
}

impl ExitSchedule {
    pub fn len(&self) -> usize {
        self.waves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waves.is_empty()
    }

    /// Index of the wave in which `agent` exits.
    pub fn wave_of(&self, agent: usize) -> Option<usize> {
        self.waves.iter().position(|w| w.exiting.contains(agent))
    }

    /// Label like `{1,2}{3}`.
    pub fn label(&self) -> String {
        self.waves.iter().map(|w| w.exiting.label()).collect()
    }

    pub fn triggers(&self) -> Vec<f64> {
        self.waves.iter().map(|w| w.trigger).collect()
    }

    /// Check the partition, nesting and strictly increasing triggers.
    pub fn check(&self) -> Result<()> {
        let mut remaining = Alliance::full(self.team_size);
        let mut last = 0.0;
        for (k, w) in self.waves.iter().enumerate() {
            if w.alliance != remaining {
                return Err(Error::InfeasibleChain(format!(
                    "wave {} alliance {} differs from the remaining agents {}",
                    k + 1,
                    w.alliance,
                    remaining
                )));
            }
            if w.exiting.is_empty() || !w.exiting.members().iter().all(|&a| remaining.contains(a)) {
                return Err(Error::InfeasibleChain(format!(
                    "wave {} exit set {} is invalid",
                    k + 1,
                    w.exiting
                )));
            }
            if !(w.trigger > last) {
                return Err(Error::InfeasibleChain(format!(
                    "wave {} trigger {} does not exceed {last}",
                    k + 1,
                    w.trigger
                )));
            }
            last = w.trigger;
            remaining = remaining.minus(&w.exiting);
        }
        if !remaining.is_empty() {
            return Err(Error::InfeasibleChain(format!("agents {remaining} never exit")));
        }
        Ok(())
    }
}

fn solve_in(alliance: &Alliance, costs: &[CostSpec], bounds: &ScopeBounds) -> Result<(ScopeProfile, DrawdownSet)> {
    let scopes = solve_equilibrium_scopes(alliance, costs, bounds).map_err(|e| e.in_alliance(alliance))?;
    let dd = equilibrium_drawdowns(&scopes, costs).map_err(|e| e.in_alliance(alliance))?;
    Ok((scopes, dd))
}

/// Deterministic equilibrium exit schedule of the team `0..costs.len()`.
///
/// In each alliance the binding drawdown fires first; every remaining agent
/// whose drawdown in the shrunken alliance is at or below that gap exits in
/// the same instant, repeatedly, until the remainder would keep searching.
pub fn equilibrium_exit_schedule(costs: &[CostSpec], bounds: &ScopeBounds) -> Result<ExitSchedule> {
    if costs.is_empty() {
        return Err(Error::EmptyAlliance);
    }
    let mut remaining = Alliance::full(costs.len());
    let mut waves = Vec::new();
    while !remaining.is_empty() {
        let (scopes, dd) = solve_in(&remaining, costs, bounds)?;
        let trigger = dd.trigger;
        let mut exiting = dd.first_exiters.clone();
        loop {
            let rest = remaining.minus(&exiting);
            if rest.is_empty() {
                break;
            }
            let (_, rest_dd) = solve_in(&rest, costs, bounds)?;
            let joining: Alliance = rest
                .members()
                .iter()
                .zip(&rest_dd.drawdowns)
                .filter(|(_, &d)| d < trigger || ties(d, trigger))
                .map(|(&a, _)| a)
                .collect();
            if joining.is_empty() {
                break;
            }
            exiting = exiting.union(&joining);
        }
        if let Some(prev) = waves.last().map(|w: &ExitWave| w.trigger) {
            assert!(
                trigger > prev,
                "exit-wave triggers must increase: {prev} then {trigger}"
            );
        }
        let next = remaining.minus(&exiting);
        waves.push(ExitWave {
            alliance: remaining,
            scopes,
            exiting,
            trigger,
        });
        remaining = next;
    }
    Ok(ExitSchedule {
        team_size: costs.len(),
        waves,
    })
}

/// True when no agent with a smaller `β` (higher cost) exits after an agent
/// with a larger one.
pub fn wellordered_exit_order_check(schedule: &ExitSchedule, betas: &[f64]) -> bool {
    let waves: Vec<Option<usize>> = (0..betas.len()).map(|a| schedule.wave_of(a)).collect();
    for i in 0..betas.len() {
        for j in 0..betas.len() {
            if betas[i] < betas[j] {
                match (waves[i], waves[j]) {
                    (Some(wi), Some(wj)) if wi <= wj => {}
                    _ => return false,
                }
            }
        }
    }
    true
}
