//! Socially optimal alliance chains.
//!
//! For a fixed nested chain `A₁ ⊋ A₂ ⊋ … ⊋ A_K` with planner scopes, the
//! optimal drawdown of `A_k` is
//!
//! ```text
//! d_k = |A_k \ A_{k+1}| / (2 (C_k/S_k² − C_{k+1}/S_{k+1}²))
//! ```
//!
//! where `C/S²` is an alliance's cost per unit of squared scope (zero for
//! the empty successor). With proportional costs the optimal chain consists
//! of suffix alliances `B_k = {k, …, N}` and is found greedily from the last
//! alliance backwards; [`brute_force_optimal_sequence`] checks that by
//! enumeration.

use std::collections::HashMap;

use crate::cost::{CostSpec, ScopeBounds};
use crate::error::{Error, Result};
use crate::scope::{solve_planner_scopes, Alliance, ScopeProfile};
use crate::welfare::{chain_welfare, Stage, Staged, WelfareReport};

pub const ARGMAX_TOL: f64 = 1e-12;
pub const WELLORDERED_CAP: usize = 10;
pub const GENERAL_CAP: usize = 6;

/// A nested chain of alliances with planner scopes and drawdowns.
#[derive(Debug, Clone, PartialEq)]
pub struct AllianceChain {
    pub team_size: usize,
    pub alliances: Vec<Alliance>,
    pub scopes: Vec<ScopeProfile>,
    /// `alliances[k] \ alliances[k+1]`
    pub exiting: Vec<Alliance>,
    pub drawdowns: Vec<f64>,
    pub feasible: bool,
}

impl AllianceChain {
    pub fn len(&self) -> usize {
        self.alliances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alliances.is_empty()
    }

    /// Partition label such as `{1}{2,3}`.
    pub fn label(&self) -> String {
        self.exiting.iter().map(Alliance::label).collect()
    }

    pub fn stage_of(&self, agent: usize) -> Option<usize> {
        self.exiting.iter().position(|z| z.contains(agent))
    }
}

impl Staged for AllianceChain {
    fn team_size(&self) -> usize {
        self.team_size
    }

    fn stages(&self) -> Vec<Stage<'_>> {
        self.scopes
            .iter()
            .zip(&self.exiting)
            .zip(&self.drawdowns)
            .map(|((scopes, exiting), &stop_gap)| Stage {
                scopes,
                exiting,
                stop_gap,
            })
            .collect()
    }
}

/// Memoised planner scope profiles, keyed by alliance.
pub struct PlannerScopes<'a> {
    costs: &'a [CostSpec],
    bounds: ScopeBounds,
    cache: HashMap<Alliance, ScopeProfile>,
}

impl<'a> PlannerScopes<'a> {
    pub fn new(costs: &'a [CostSpec], bounds: &ScopeBounds) -> Self {
        PlannerScopes {
            costs,
            bounds: *bounds,
            cache: HashMap::new(),
        }
    }

    pub fn get(&mut self, alliance: &Alliance) -> Result<ScopeProfile> {
        if let Some(p) = self.cache.get(alliance) {
            return Ok(p.clone());
        }
        let p = solve_planner_scopes(alliance, self.costs, &self.bounds).map_err(|e| e.in_alliance(alliance))?;
        self.cache.insert(alliance.clone(), p.clone());
        Ok(p)
    }

    fn cost_per_speed(&mut self, alliance: &Alliance) -> Result<f64> {
        if alliance.is_empty() {
            return Ok(0.0);
        }
        let costs = self.costs;
        self.get(alliance)?.cost_per_speed(costs)
    }

    pub fn drawdown(&mut self, current: &Alliance, successor: &Alliance) -> Result<f64> {
        if !current.is_strict_superset_of(successor) {
            return Err(Error::InfeasibleChain(format!(
                "successor {successor} is not a strict subset of {current}"
            )));
        }
        let leaving = (current.len() - successor.len()) as f64;
        let gap = self.cost_per_speed(current)? - self.cost_per_speed(successor)?;
        Ok(leaving / (2.0 * gap))
    }

    pub fn chain(&mut self, alliances: Vec<Alliance>) -> Result<AllianceChain> {
        let team_size = self.costs.len();
        if alliances.first() != Some(&Alliance::full(team_size)) {
            return Err(Error::InfeasibleChain("a chain must start with the full team".into()));
        }
        let mut scopes = Vec::with_capacity(alliances.len());
        let mut exiting = Vec::with_capacity(alliances.len());
        let mut drawdowns = Vec::with_capacity(alliances.len());
        let empty = Alliance::empty();
        for (k, a) in alliances.iter().enumerate() {
            let next = alliances.get(k + 1).unwrap_or(&empty);
            scopes.push(self.get(a)?);
            exiting.push(a.minus(next));
            drawdowns.push(self.drawdown(a, next)?);
        }
        let feasible = drawdowns.iter().all(|d| d.is_finite() && *d > 0.0) && drawdowns.windows(2).all(|w| w[1] > w[0]);
        Ok(AllianceChain {
            team_size,
            alliances,
            scopes,
            exiting,
            drawdowns,
            feasible,
        })
    }
}

/// Planner drawdown of `current` when followed by `successor` (possibly empty).
///
/// May be non-positive or infinite for chains the planner would never use.
pub fn planner_drawdown(
    current: &Alliance,
    successor: &Alliance,
    costs: &[CostSpec],
    bounds: &ScopeBounds,
) -> Result<f64> {
    PlannerScopes::new(costs, bounds).drawdown(current, successor)
}

/// Planner drawdowns and feasibility for an explicit chain.
pub fn build_chain(alliances: Vec<Alliance>, costs: &[CostSpec], bounds: &ScopeBounds) -> Result<AllianceChain> {
    PlannerScopes::new(costs, bounds).chain(alliances)
}

/// One step of the greedy backward construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyStep {
    /// Zero-based start index `k` of the selected suffix `B_k`.
    pub start: usize,
    /// Its drawdown when followed by the previously selected alliance.
    pub drawdown: f64,
}

pub fn check_proportional(costs: &[CostSpec]) -> Result<Vec<f64>> {
    let first = costs.first().ok_or(Error::EmptyAlliance)?;
    for (k, c) in costs.iter().enumerate() {
        if !first.proportional_to(c) {
            return Err(Error::NotProportional(format!(
                "agent {} cost {c:?} is not a multiple of agent 1's {first:?}",
                k + 1
            )));
        }
    }
    let betas: Vec<f64> = costs.iter().map(CostSpec::beta).collect();
    if betas.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::NotProportional(format!(
            "cost divisors {betas:?} are not ordered"
        )));
    }
    Ok(betas)
}

/// Greedy optimal chain for proportional, ordered costs, plus its trace
/// `L₁, L₂, …` (last alliance first).
pub fn greedy_wellordered_sequence(
    costs: &[CostSpec],
    bounds: &ScopeBounds,
) -> Result<(AllianceChain, Vec<GreedyStep>)> {
    check_proportional(costs)?;
    let n = costs.len();
    let mut planner = PlannerScopes::new(costs, bounds);
    let mut trace = Vec::new();
    let mut upper = n;
    while upper > 0 {
        let successor = Alliance::suffix(upper, n);
        let mut scored = Vec::with_capacity(upper);
        for k in 0..upper {
            scored.push((k, planner.drawdown(&Alliance::suffix(k, n), &successor)?));
        }
        let (best_k, best_d) = scored
            .iter()
            .copied()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty candidate set");
        if best_d.is_nan() {
            return Err(Error::Domain(format!("drawdown of B_{} is NaN", best_k + 1)));
        }
        if let Some((k2, d2)) = scored
            .iter()
            .copied()
            .find(|&(k, d)| k != best_k && (d == best_d || (d - best_d).abs() <= ARGMAX_TOL * best_d.abs().max(1.0)))
        {
            return Err(Error::NonUniqueArgmax(format!(
                "B_{} and B_{} both reach drawdown {best_d} (vs {d2})",
                best_k + 1,
                k2 + 1
            )));
        }
        trace.push(GreedyStep {
            start: best_k,
            drawdown: best_d,
        });
        upper = best_k;
    }
    let alliances = trace.iter().rev().map(|s| Alliance::suffix(s.start, n)).collect();
    let chain = planner.chain(alliances)?;
    Ok((chain, trace))
}

/// Chain skeletons starting at the full team.
///
/// Well-ordered: every chain of suffix alliances (`2^{N-1}` of them).
/// General: every strictly nested chain of non-empty subsets.
pub fn enumerate_chains(team_size: usize, wellordered: bool) -> Result<Vec<Vec<Alliance>>> {
    let cap = if wellordered { WELLORDERED_CAP } else { GENERAL_CAP };
    if team_size == 0 {
        return Err(Error::EmptyAlliance);
    }
    if team_size > cap {
        return Err(Error::EnumerationCap { size: team_size, cap });
    }
    if wellordered {
        let n = team_size;
        let chains = (0u32..1 << (n - 1))
            .map(|mask| {
                std::iter::once(0)
                    .chain((1..n).filter(|k| mask & (1 << (k - 1)) != 0))
                    .map(|k| Alliance::suffix(k, n))
                    .collect()
            })
            .collect();
        return Ok(chains);
    }
    fn extend(prefix: &mut Vec<Alliance>, out: &mut Vec<Vec<Alliance>>) {
        out.push(prefix.clone());
        let last = prefix.last().expect("non-empty prefix").clone();
        let members = last.members();
        // proper, non-empty subsets of `last`
        for mask in 1u32..(1 << members.len()) - 1 {
            let sub: Alliance = members
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &a)| a)
                .collect();
            prefix.push(sub);
            extend(prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    extend(&mut vec![Alliance::full(team_size)], &mut out);
    Ok(out)
}

/// Welfare-maximal chain by exhaustive enumeration.
///
/// Chains whose drawdowns are not positive and strictly increasing are
/// skipped; the collapsed chain they degenerate to is enumerated separately.
pub fn brute_force_optimal_sequence(
    costs: &[CostSpec],
    bounds: &ScopeBounds,
    wellordered: bool,
) -> Result<(AllianceChain, WelfareReport)> {
    if wellordered {
        check_proportional(costs)?;
    }
    let skeletons = enumerate_chains(costs.len(), wellordered)?;
    let mut planner = PlannerScopes::new(costs, bounds);
    let mut best: Option<(AllianceChain, WelfareReport)> = None;
    for alliances in skeletons {
        let chain = planner.chain(alliances)?;
        if !chain.feasible {
            continue;
        }
        let report = chain_welfare(&chain, costs)?;
        if best.as_ref().is_none_or(|(_, b)| report.total > b.total) {
            best = Some((chain, report));
        }
    }
    best.ok_or_else(|| Error::InfeasibleChain("every enumerated chain is infeasible".into()))
}

/// Agents with a larger index never leave before agents with a smaller one.
pub fn exit_order_consistent(chain: &AllianceChain) -> bool {
    let stages: Vec<Option<usize>> = (0..chain.team_size).map(|a| chain.stage_of(a)).collect();
    stages
        .windows(2)
        .all(|w| matches!((w[0], w[1]), (Some(a), Some(b)) if a <= b))
}
