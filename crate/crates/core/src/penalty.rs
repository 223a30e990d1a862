//! Two-agent search where the later stopper only collects `α` times the
//! maximum it stops at.
//!
//! While both agents search, scopes and the leader's drawdown are those of
//! the undiscounted game. Once the leader stops at maximum `M`, the follower
//! keeps searching alone only if `M < M̄`, with the shortened drawdown
//! `α σ_F² / (2 c_F(σ_F))`; otherwise it stops together with the leader.

use crate::cost::{CostSpec, ScopeBounds};
use crate::equilibrium::{equilibrium_drawdowns, equilibrium_exit_schedule, ExitSchedule};
use crate::error::{Error, Result};
use crate::scope::{solve_equilibrium_scopes, Alliance, ScopeProfile};
use crate::sim::{simulate_plan, Gate, PathPhase, PathPlan, SimConfig, SimOutcome};
use crate::welfare::phase_stats;

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyConfig {
    pub alpha: f64,
    pub costs: [CostSpec; 2],
    pub bounds: ScopeBounds,
}

impl PenaltyConfig {
    pub fn new(alpha: f64, costs: &[CostSpec], bounds: ScopeBounds) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!("discount alpha must lie in [0, 1], got {alpha}")));
        }
        let costs: [CostSpec; 2] = costs.try_into().map_err(|_| {
            Error::Unsupported(format!(
                "the late-stopper discount is defined for exactly two agents, got {}",
                costs.len()
            ))
        })?;
        Ok(PenaltyConfig { alpha, costs, bounds })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyRegime {
    /// Both agents stop at the leader's drawdown on every path.
    JointExit,
    /// The follower continues alone whenever the leader stops below `M̄`.
    ConditionalContinuation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyPolicy {
    pub alpha: f64,
    pub leader: usize,
    pub follower: usize,
    /// Full-team equilibrium profile; identical to the undiscounted game.
    pub team_scopes: ScopeProfile,
    /// Leader's drawdown in the full team.
    pub leader_drawdown: f64,
    pub follower_solo: ScopeProfile,
    /// Undiscounted solo drawdown `σ_F² / (2 c_F(σ_F))`.
    pub follower_solo_drawdown: f64,
    /// `α σ_F² / (2 c_F(σ_F))`
    pub continuation_drawdown: f64,
    /// `M̄`; `+∞` at `α = 1`, zero under joint exit.
    pub threshold: f64,
    pub regime: PenaltyRegime,
    pub baseline: ExitSchedule,
}

/// Leader and follower boundaries for the discounted two-agent game.
pub fn penalty_policy(config: &PenaltyConfig) -> Result<PenaltyPolicy> {
    let costs = &config.costs;
    let alpha = config.alpha;
    let baseline = equilibrium_exit_schedule(costs, &config.bounds)?;
    let team_scopes = solve_equilibrium_scopes(&Alliance::full(2), costs, &config.bounds)?;
    let dd = equilibrium_drawdowns(&team_scopes, costs)?;
    let tie = dd.first_exiters.len() == 2;
    let leader = dd.first_exiters.members()[0];
    let follower = 1 - leader;
    let leader_drawdown = dd.trigger;

    let solo = Alliance::new(vec![follower]);
    let follower_solo = solve_equilibrium_scopes(&solo, costs, &config.bounds).map_err(|e| e.in_alliance(&solo))?;
    let follower_solo_drawdown = equilibrium_drawdowns(&follower_solo, costs)?.trigger;
    let continuation_drawdown = alpha * follower_solo_drawdown;

    let sigma_f = follower_solo.total;
    let c_f = costs[follower].cost(sigma_f)?;
    let regime = if !tie && continuation_drawdown > leader_drawdown {
        PenaltyRegime::ConditionalContinuation
    } else {
        PenaltyRegime::JointExit
    };
    // Under joint exit nobody continues, whatever M is.
    let threshold = match regime {
        PenaltyRegime::JointExit => 0.0,
        _ if alpha == 1.0 => f64::INFINITY,
        _ => {
            let gap = continuation_drawdown - leader_drawdown;
            c_f / (sigma_f * sigma_f) * gap * gap / (1.0 - alpha)
        }
    };
    Ok(PenaltyPolicy {
        alpha,
        leader,
        follower,
        team_scopes,
        leader_drawdown,
        follower_solo,
        follower_solo_drawdown,
        continuation_drawdown,
        threshold,
        regime,
        baseline,
    })
}

impl PenaltyPolicy {
    /// Probability that the follower continues: `P(M_{τ_L} < M̄)` with
    /// `M_{τ_L}` exponential with mean `d_L`.
    pub fn continuation_probability(&self) -> f64 {
        match self.regime {
            PenaltyRegime::JointExit => 0.0,
            PenaltyRegime::ConditionalContinuation => -(-self.threshold / self.leader_drawdown).exp_m1(),
        }
    }

    pub fn path_plan(&self, costs: &[CostSpec]) -> Result<PathPlan> {
        let mut team_rates = Vec::with_capacity(2);
        for (a, s) in self.team_scopes.iter() {
            team_rates.push((a, costs[a].cost(s)?));
        }
        let plan = match self.regime {
            PenaltyRegime::JointExit => PathPlan {
                team_size: 2,
                phases: vec![PathPhase {
                    scope: self.team_scopes.total,
                    stop_gap: self.leader_drawdown,
                    exits: vec![0, 1],
                    reward: 1.0,
                    cost_rates: team_rates,
                }],
                gate: None,
            },
            PenaltyRegime::ConditionalContinuation => PathPlan {
                team_size: 2,
                phases: vec![
                    PathPhase {
                        scope: self.team_scopes.total,
                        stop_gap: self.leader_drawdown,
                        exits: vec![self.leader],
                        reward: 1.0,
                        cost_rates: team_rates,
                    },
                    PathPhase {
                        scope: self.follower_solo.total,
                        stop_gap: self.continuation_drawdown,
                        exits: vec![self.follower],
                        reward: self.alpha,
                        cost_rates: vec![(self.follower, costs[self.follower].cost(self.follower_solo.total)?)],
                    },
                ],
                gate: Some(Gate {
                    after_phase: 0,
                    continue_below: self.threshold,
                }),
            },
        };
        Ok(plan)
    }

    /// Closed-form expected payoffs `[agent 1, agent 2]`.
    pub fn expected_payoffs(&self, costs: &[CostSpec]) -> Result<[f64; 2]> {
        let d_l = self.leader_drawdown;
        let (gain, team_time) = phase_stats(0.0, d_l, self.team_scopes.total)?;
        let team_cost = |a: usize| -> Result<f64> {
            Ok(costs[a].cost(self.team_scopes.scope_of(a).expect("team member"))? * team_time)
        };
        let mut out = [0.0; 2];
        out[self.leader] = gain - team_cost(self.leader)?;
        out[self.follower] = match self.regime {
            PenaltyRegime::JointExit => gain - team_cost(self.follower)?,
            PenaltyRegime::ConditionalContinuation => {
                let sigma_f = self.follower_solo.total;
                let (extra, solo_time) = phase_stats(d_l, self.continuation_drawdown, sigma_f)?;
                let continue_net = self.alpha * extra - costs[self.follower].cost(sigma_f)? * solo_time;
                // M at the leader's exit is exponential with mean d_L.
                let (p_cont, m_below, m_above) = if self.threshold.is_infinite() {
                    (1.0, d_l, 0.0)
                } else {
                    let tail = (-self.threshold / d_l).exp();
                    let above = (self.threshold + d_l) * tail;
                    (1.0 - tail, d_l - above, above)
                };
                p_cont * continue_net + self.alpha * m_below + m_above - team_cost(self.follower)?
            }
        };
        Ok(out)
    }
}

/// Monte Carlo run of the discounted game.
pub fn simulate_penalty(policy: &PenaltyPolicy, costs: &[CostSpec], config: &SimConfig) -> Result<SimOutcome> {
    simulate_plan(&policy.path_plan(costs)?, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn bounds() -> ScopeBounds {
        ScopeBounds { lo: 0.1, hi: 10.0 }
    }

    fn instance(alpha: f64) -> (PenaltyConfig, Vec<CostSpec>) {
        let costs = vec![CostSpec::exponential(1.0, 1.0), CostSpec::exponential(1.0, 20.0)];
        (PenaltyConfig::new(alpha, &costs, bounds()).unwrap(), costs)
    }

    #[test]
    fn reference_instance() {
        let (cfg, _) = instance(0.5);
        let p = penalty_policy(&cfg).unwrap();
        assert_eq!((p.leader, p.follower), (0, 1));
        assert!((p.leader_drawdown - 2.0 / E).abs() < 1e-12);
        assert!((p.follower_solo_drawdown - 40.0 / (E * E)).abs() < 1e-12);
        assert!((p.follower_solo_drawdown - 5.413).abs() < 1e-3);
        assert!((p.continuation_drawdown - 2.7067).abs() < 1e-4);
        let expect = 2.0 * (E * E / 80.0) * (20.0 / (E * E) - 2.0 / E).powi(2);
        assert!((p.threshold - expect).abs() < 1e-12);
        assert!((p.threshold - 0.7175).abs() < 1e-4);
        assert_eq!(p.regime, PenaltyRegime::ConditionalContinuation);
    }

    #[test]
    fn follower_indifferent_at_threshold() {
        // Continuing from (M̄, gap d_L) to the shortened drawdown pays exactly M̄.
        let (cfg, costs) = instance(0.5);
        let p = penalty_policy(&cfg).unwrap();
        let (gain, time) = phase_stats(p.leader_drawdown, p.continuation_drawdown, p.follower_solo.total).unwrap();
        let c_f = costs[1].cost(p.follower_solo.total).unwrap();
        let value = cfg.alpha * (p.threshold + gain) - c_f * time;
        assert!((value - p.threshold).abs() < 1e-12, "{value} vs {}", p.threshold);
    }

    #[test]
    fn alpha_extremes() {
        let (cfg, _) = instance(1.0);
        let p = penalty_policy(&cfg).unwrap();
        assert!(p.threshold.is_infinite());
        assert_eq!(p.regime, PenaltyRegime::ConditionalContinuation);
        assert_eq!(p.continuation_drawdown, p.baseline.waves[1].trigger);

        let (cfg, _) = instance(0.0);
        let p = penalty_policy(&cfg).unwrap();
        assert_eq!(p.regime, PenaltyRegime::JointExit);
        assert_eq!(p.continuation_probability(), 0.0);
        assert_eq!(p.threshold, 0.0);
    }

    #[test]
    fn team_profile_is_alpha_invariant() {
        let base = penalty_policy(&instance(1.0).0).unwrap();
        for alpha in [0.0, 0.2, 0.5, 0.9] {
            let p = penalty_policy(&instance(alpha).0).unwrap();
            assert_eq!(p.team_scopes, base.team_scopes);
            assert_eq!(p.leader_drawdown, base.leader_drawdown);
            assert_eq!(p.team_scopes, base.baseline.waves[0].scopes);
        }
    }

    #[test]
    fn threshold_increases_with_alpha() {
        let mut last = 0.0;
        for k in 0..10 {
            let alpha = 0.3 + 0.07 * k as f64;
            let p = penalty_policy(&instance(alpha).0).unwrap();
            assert_eq!(p.regime, PenaltyRegime::ConditionalContinuation, "{alpha}");
            assert!(p.threshold > last);
            last = p.threshold;
        }
    }

    #[test]
    fn joint_exit_when_baseline_has_one_wave() {
        let costs = vec![CostSpec::exponential(1.0, 1.0), CostSpec::exponential(1.0, 1.2)];
        let p = penalty_policy(&PenaltyConfig::new(0.8, &costs, bounds()).unwrap()).unwrap();
        assert_eq!(p.baseline.len(), 1);
        assert_eq!(p.regime, PenaltyRegime::JointExit);
        let sym = vec![CostSpec::exponential(1.0, 2.0); 2];
        let p = penalty_policy(&PenaltyConfig::new(1.0, &sym, bounds()).unwrap()).unwrap();
        assert_eq!(p.regime, PenaltyRegime::JointExit);
    }

    #[test]
    fn rejects_other_team_sizes() {
        let three = vec![CostSpec::exponential(1.0, 1.0); 3];
        assert!(matches!(
            PenaltyConfig::new(0.5, &three, bounds()),
            Err(Error::Unsupported(_))
        ));
        assert!(PenaltyConfig::new(1.5, &three[..2], bounds()).is_err());
    }

    #[test]
    fn expected_payoffs_at_alpha_one_match_baseline() {
        let (cfg, costs) = instance(1.0);
        let p = penalty_policy(&cfg).unwrap();
        let analytic = p.expected_payoffs(&costs).unwrap();
        let base = crate::welfare::equilibrium_payoffs(&p.baseline, &costs).unwrap();
        for (a, b) in analytic.iter().zip(&base.per_agent) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
