//! Monte Carlo simulation of the controlled discovery path.
//!
//! Each path follows `dX = S_k dB` while alliance `k` is active, tracks the
//! running maximum `M`, and executes wave `k` once `M − X` reaches its
//! drawdown. Every path draws from its own ChaCha stream keyed by
//! `(seed, path index)`, and results are reduced in path order, so outcomes
//! do not depend on the thread count.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::CostSpec;
use crate::error::{Error, Result};
use crate::stats::{ks_test, mean_se, KsReport};
use crate::welfare::Staged;

/// Fraction of censored paths above which strict mode fails.
pub const CENSOR_LIMIT: f64 = 0.01;
/// Default horizon guard as a multiple of the analytic expected duration.
pub const T_MAX_FACTOR: f64 = 50.0;

// Bridge probabilities below e^-40 are treated as zero.
const BRIDGE_CUTOFF: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Horizon guard; `None` means [`T_MAX_FACTOR`] times the analytic
    /// expected duration of the full schedule.
    pub t_max: Option<f64>,
    pub bridge_correction: bool,
    /// Escalate excessive censoring to an error.
    pub strict: bool,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-4,
            n_paths: 20_000,
            seed: 0,
            t_max: None,
            bridge_correction: true,
            strict: false,
            threads: None,
        }
    }
}

impl SimConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidSimConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidSimConfig("n_paths must be at least 1".into()));
        }
        if let Some(t) = self.t_max {
            if !(t > 0.0) {
                return Err(Error::InvalidSimConfig(format!("t_max must be positive, got {t}")));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidSimConfig("threads must be at least 1".into()));
        }
        Ok(())
    }
}

/// One alliance phase of a simulated path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPhase {
    pub scope: f64,
    pub stop_gap: f64,
    /// Agents paid when this phase ends.
    pub exits: Vec<usize>,
    /// Multiplier on `M` paid to `exits`.
    pub reward: f64,
    /// `(agent, cost rate)` for every active agent.
    pub cost_rates: Vec<(usize, f64)>,
}

/// After phase `after_phase`, the remaining agents continue only while
/// `M < continue_below`; otherwise they all exit at once with reward `M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gate {
    pub after_phase: usize,
    pub continue_below: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathPlan {
    pub team_size: usize,
    pub phases: Vec<PathPhase>,
    pub gate: Option<Gate>,
}

impl PathPlan {
    pub fn from_stages<S: Staged + ?Sized>(plan: &S, costs: &[CostSpec]) -> Result<Self> {
        let mut phases = Vec::new();
        for st in plan.stages() {
            let mut cost_rates = Vec::with_capacity(st.scopes.alliance.len());
            for (agent, sigma) in st.scopes.iter() {
                cost_rates.push((agent, costs[agent].cost(sigma)?));
            }
            phases.push(PathPhase {
                scope: st.scopes.total,
                stop_gap: st.stop_gap,
                exits: st.exiting.members().to_vec(),
                reward: 1.0,
                cost_rates,
            });
        }
        let plan = PathPlan {
            team_size: plan.team_size(),
            phases,
            gate: None,
        };
        plan.check()?;
        Ok(plan)
    }

    pub fn check(&self) -> Result<()> {
        if self.phases.is_empty() {
            return Err(Error::InfeasibleChain("schedule has no phases".into()));
        }
        let mut last = 0.0;
        for (k, p) in self.phases.iter().enumerate() {
            if !(p.stop_gap > last) || !p.stop_gap.is_finite() {
                return Err(Error::InfeasibleChain(format!(
                    "phase {} drawdown {} does not exceed {last}",
                    k + 1,
                    p.stop_gap
                )));
            }
            if !(p.scope > 0.0) || !p.scope.is_finite() {
                return Err(Error::InfeasibleChain(format!(
                    "phase {} scope {} is not positive",
                    k + 1,
                    p.scope
                )));
            }
            last = p.stop_gap;
        }
        Ok(())
    }

    /// Expected time until the last phase ends, ignoring any gate.
    pub fn expected_duration(&self) -> f64 {
        let mut start: f64 = 0.0;
        let mut t = 0.0;
        for p in &self.phases {
            t += (p.stop_gap * p.stop_gap - start * start) / (p.scope * p.scope);
            start = p.stop_gap;
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq)]
struct PathRecord {
    exit_time: Vec<f64>,
    exit_max: Vec<f64>,
    payoffs: Vec<f64>,
    censored: bool,
    continued: bool,
}

fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Running maximum after one step from `x` to `b`, given the maximum `m`
/// before the step and a uniform draw `u` in (0, 1].
#[inline]
fn bridge_max(m: f64, x: f64, b: f64, var: f64, u: f64) -> f64 {
    if b < m {
        let arg = 2.0 * (m - x) * (m - b) / var;
        if arg > BRIDGE_CUTOFF {
            return m;
        }
    }
    let top = 0.5 * (x + b + ((b - x) * (b - x) - 2.0 * var * u.ln()).sqrt());
    m.max(top)
}

/// Whether the Brownian bridge from `x` to `b` dips to `level` within the step.
#[inline]
fn bridge_crosses(level: f64, x: f64, b: f64, var: f64, u: f64) -> bool {
    if b <= level || x <= level {
        return true;
    }
    let arg = 2.0 * (x - level) * (b - level) / var;
    arg < BRIDGE_CUTOFF && u < (-arg).exp()
}

fn run_path(plan: &PathPlan, cfg: &SimConfig, t_max: f64, path: u64) -> PathRecord {
    let mut rng = path_rng(cfg.seed, path);
    let n_phases = plan.phases.len();
    let mut exit_time = vec![0.0; n_phases];
    let mut exit_max = vec![0.0; n_phases];
    let mut reward = vec![0.0; plan.team_size];
    let mut phase_time = vec![0.0; n_phases];
    let sqrt_dt = cfg.dt.sqrt();
    let (mut x, mut m, mut t) = (0.0f64, 0.0f64, 0.0f64);
    let mut censored = false;
    let mut continued = plan.gate.is_some();

    let mut k = 0;
    while k < n_phases {
        let ph = &plan.phases[k];
        let sd = ph.scope * sqrt_dt;
        let var = sd * sd;
        let d = ph.stop_gap;
        let mut fired = m - x >= d;
        while !fired {
            if t >= t_max {
                censored = true;
                break;
            }
            let z: f64 = rng.sample(StandardNormal);
            let b = x + sd * z;
            let crossed = if cfg.bridge_correction {
                let u_max = 1.0 - rng.random::<f64>();
                let u_cross = rng.random::<f64>();
                let crossed = bridge_crosses(m - d, x, b, var, u_cross);
                m = bridge_max(m, x, b, var, u_max);
                crossed
            } else {
                m = m.max(b);
                false
            };
            x = b;
            t += cfg.dt;
            phase_time[k] += cfg.dt;
            fired = crossed || m - x >= d;
        }
        if censored {
            for j in k..n_phases {
                exit_time[j] = t;
                exit_max[j] = m;
                for &a in &plan.phases[j].exits {
                    reward[a] = plan.phases[j].reward * m;
                }
            }
            break;
        }
        exit_time[k] = t;
        exit_max[k] = m;
        for &a in &ph.exits {
            reward[a] = ph.reward * m;
        }
        if let Some(g) = plan.gate {
            if g.after_phase == k && !(m < g.continue_below) {
                continued = false;
                for j in k + 1..n_phases {
                    exit_time[j] = t;
                    exit_max[j] = m;
                    for &a in &plan.phases[j].exits {
                        reward[a] = m;
                    }
                }
                break;
            }
        }
        k += 1;
    }

    let mut payoffs = reward;
    for (ph, &dur) in plan.phases.iter().zip(&phase_time) {
        for &(a, c) in &ph.cost_rates {
            payoffs[a] -= c * dur;
        }
    }
    PathRecord {
        exit_time,
        exit_max,
        payoffs,
        censored,
        continued,
    }
}

fn in_pool<T: Send, F: FnOnce() -> T + Send>(threads: Option<usize>, f: F) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidSimConfig(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveStats {
    pub mean_tau: f64,
    pub tau_se: f64,
    pub mean_max: f64,
    pub max_se: f64,
}

/// Monte Carlo statistics of a simulated schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub n_paths: usize,
    pub team_size: usize,
    pub t_max: f64,
    pub mean_payoff: Vec<f64>,
    pub payoff_se: Vec<f64>,
    pub mean_total: f64,
    pub total_se: f64,
    pub waves: Vec<WaveStats>,
    /// `samples[wave][path] = (M_τ, τ)`
    pub samples: Vec<Vec<(f64, f64)>>,
    /// Row-major `[path][agent]`.
    pub path_payoffs: Vec<f64>,
    pub censored: usize,
    /// Paths on which a gated continuation went ahead.
    pub continued: Option<usize>,
    pub warnings: Vec<String>,
}

impl SimOutcome {
    pub fn path_total(&self, path: usize) -> f64 {
        self.path_payoffs[path * self.team_size..(path + 1) * self.team_size]
            .iter()
            .sum()
    }

    /// Delimited dump: `path_id,wave,tau,M_tau,payoff_1,…`, one row per
    /// (path, wave).
    pub fn write_samples<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "path_id,wave,tau,M_tau")?;
        for a in 0..self.team_size {
            write!(out, ",payoff_{}", a + 1)?;
        }
        writeln!(out)?;
        for p in 0..self.n_paths {
            for (w, wave) in self.samples.iter().enumerate() {
                let (m, tau) = wave[p];
                write!(
                    out,
                    "{p},{},{},{}",
                    w + 1,
                    crate::report::fmt_sig(tau),
                    crate::report::fmt_sig(m)
                )?;
                for a in 0..self.team_size {
                    write!(
                        out,
                        ",{}",
                        crate::report::fmt_sig(self.path_payoffs[p * self.team_size + a])
                    )?;
                }
                writeln!(out)?;
            }
        }
        Ok(())
    }

    pub fn dump_samples(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_samples(std::io::BufWriter::new(f))
    }
}

/// Simulate an arbitrary phase plan.
pub fn simulate_plan(plan: &PathPlan, config: &SimConfig) -> Result<SimOutcome> {
    config.check()?;
    plan.check()?;
    let t_max = config.t_max.unwrap_or(T_MAX_FACTOR * plan.expected_duration());
    let records: Vec<PathRecord> = in_pool(config.threads, || {
        (0..config.n_paths as u64)
            .into_par_iter()
            .map(|p| run_path(plan, config, t_max, p))
            .collect()
    })?;

    let n = records.len();
    let team = plan.team_size;
    let mut path_payoffs = Vec::with_capacity(n * team);
    for r in &records {
        path_payoffs.extend_from_slice(&r.payoffs);
    }
    let mut mean_payoff = Vec::with_capacity(team);
    let mut payoff_se = Vec::with_capacity(team);
    for a in 0..team {
        let v: Vec<f64> = records.iter().map(|r| r.payoffs[a]).collect();
        let (m, se) = mean_se(&v);
        mean_payoff.push(m);
        payoff_se.push(se);
    }
    let totals: Vec<f64> = records.iter().map(|r| r.payoffs.iter().sum()).collect();
    let (mean_total, total_se) = mean_se(&totals);

    let mut waves = Vec::with_capacity(plan.phases.len());
    let mut samples = Vec::with_capacity(plan.phases.len());
    for w in 0..plan.phases.len() {
        let taus: Vec<f64> = records.iter().map(|r| r.exit_time[w]).collect();
        let maxes: Vec<f64> = records.iter().map(|r| r.exit_max[w]).collect();
        let (mean_tau, tau_se) = mean_se(&taus);
        let (mean_max, max_se) = mean_se(&maxes);
        waves.push(WaveStats {
            mean_tau,
            tau_se,
            mean_max,
            max_se,
        });
        samples.push(maxes.into_iter().zip(taus).collect());
    }

    let censored = records.iter().filter(|r| r.censored).count();
    let mut warnings = Vec::new();
    if censored as f64 > CENSOR_LIMIT * n as f64 {
        if config.strict {
            return Err(Error::Censored {
                censored,
                paths: n,
                t_max,
            });
        }
        warnings.push(format!("{censored} of {n} paths hit the horizon guard t_max = {t_max}"));
    }
    let continued = plan.gate.map(|_| records.iter().filter(|r| r.continued).count());

    Ok(SimOutcome {
        n_paths: n,
        team_size: team,
        t_max,
        mean_payoff,
        payoff_se,
        mean_total,
        total_se,
        waves,
        samples,
        path_payoffs,
        censored,
        continued,
        warnings,
    })
}

/// Simulate an equilibrium schedule or planner chain.
pub fn simulate_schedule<S: Staged + ?Sized>(plan: &S, costs: &[CostSpec], config: &SimConfig) -> Result<SimOutcome> {
    simulate_plan(&PathPlan::from_stages(plan, costs)?, config)
}

/// Mean and standard error of the running maximum at a fixed horizon, for a
/// path with constant scope and no stopping.
pub fn running_max_at(scope: f64, horizon: f64, config: &SimConfig) -> Result<(f64, f64)> {
    config.check()?;
    if !(scope > 0.0) || !(horizon > 0.0) {
        return Err(Error::Domain(format!(
            "scope {scope} and horizon {horizon} must be positive"
        )));
    }
    let steps = (horizon / config.dt).round().max(1.0) as u64;
    let sd = scope * config.dt.sqrt();
    let var = sd * sd;
    let maxima: Vec<f64> = in_pool(config.threads, || {
        (0..config.n_paths as u64)
            .into_par_iter()
            .map(|p| {
                let mut rng = path_rng(config.seed, p);
                let (mut x, mut m) = (0.0f64, 0.0f64);
                for _ in 0..steps {
                    let z: f64 = rng.sample(StandardNormal);
                    let b = x + sd * z;
                    m = if config.bridge_correction {
                        let u = 1.0 - rng.random::<f64>();
                        bridge_max(m, x, b, var, u)
                    } else {
                        m.max(b)
                    };
                    x = b;
                }
                m
            })
            .collect()
    })?;
    Ok(mean_se(&maxima))
}

/// Kolmogorov–Smirnov test of the maximum at the first time the drawdown
/// reaches `drawdown` against an exponential law with mean `null_mean`.
pub fn stopped_max_distribution_test(
    drawdown: f64,
    scope: f64,
    null_mean: f64,
    config: &SimConfig,
) -> Result<KsReport> {
    let plan = PathPlan {
        team_size: 1,
        phases: vec![PathPhase {
            scope,
            stop_gap: drawdown,
            exits: vec![0],
            reward: 1.0,
            cost_rates: vec![],
        }],
        gate: None,
    };
    let out = simulate_plan(&plan, config)?;
    let maxima: Vec<f64> = out.samples[0].iter().map(|&(m, _)| m).collect();
    Ok(ks_test(&maxima, |x| 1.0 - (-x.max(0.0) / null_mean).exp(), 0.01))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(scope: f64, d: f64, c: f64) -> PathPlan {
        PathPlan {
            team_size: 1,
            phases: vec![PathPhase {
                scope,
                stop_gap: d,
                exits: vec![0],
                reward: 1.0,
                cost_rates: vec![(0, c)],
            }],
            gate: None,
        }
    }

    fn cfg(n: usize) -> SimConfig {
        SimConfig {
            n_paths: n,
            seed: 7,
            ..SimConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig { dt: 0.0, ..cfg(1) }.check().is_err());
        assert!(SimConfig { n_paths: 0, ..cfg(1) }.check().is_err());
        assert!(SimConfig {
            t_max: Some(-1.0),
            ..cfg(1)
        }
        .check()
        .is_err());
        assert!(cfg(1).check().is_ok());
    }

    #[test]
    fn reproducible_and_thread_independent() {
        let plan = single(1.0, 0.3, 1.0);
        let a = simulate_plan(&plan, &cfg(300)).unwrap();
        let b = simulate_plan(&plan, &cfg(300)).unwrap();
        let c = simulate_plan(
            &plan,
            &SimConfig {
                threads: Some(3),
                ..cfg(300)
            },
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        let d = simulate_plan(&plan, &SimConfig { seed: 8, ..cfg(300) }).unwrap();
        assert_ne!(a.mean_total, d.mean_total);
    }

    #[test]
    fn max_dominates_value_on_every_path() {
        // Reconstruct one path step by step and check M ≥ X, M non-decreasing.
        let c = cfg(1);
        let mut rng = path_rng(c.seed, 0);
        let (mut x, mut m) = (0.0f64, 0.0f64);
        let sd = 2.0 * c.dt.sqrt();
        for _ in 0..10_000 {
            let z: f64 = rng.sample(StandardNormal);
            let b = x + sd * z;
            let u = 1.0 - rng.random::<f64>();
            let _ = rng.random::<f64>();
            let next = bridge_max(m, x, b, sd * sd, u);
            assert!(next >= m && next >= b && next >= x);
            m = next;
            x = b;
        }
    }

    #[test]
    fn censoring_is_counted_and_strict_fails() {
        let plan = single(1.0, 100.0, 1.0);
        let out = simulate_plan(
            &plan,
            &SimConfig {
                t_max: Some(0.01),
                ..cfg(50)
            },
        )
        .unwrap();
        assert_eq!(out.censored, 50);
        assert!(!out.warnings.is_empty());
        // censored paths still contribute M minus accrued cost
        for p in 0..50 {
            let (m, tau) = out.samples[0][p];
            assert!((out.path_payoffs[p] - (m - tau)).abs() < 1e-12);
        }
        let err = simulate_plan(
            &plan,
            &SimConfig {
                t_max: Some(0.01),
                strict: true,
                ..cfg(50)
            },
        );
        assert!(matches!(err, Err(Error::Censored { .. })));
    }

    #[test]
    fn sample_dump_layout() {
        let out = simulate_plan(&single(1.0, 0.2, 1.0), &cfg(3)).unwrap();
        let mut buf = Vec::new();
        out.write_samples(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "path_id,wave,tau,M_tau,payoff_1");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,1,"));
    }

    #[test]
    fn gate_closes_above_threshold() {
        let mut plan = single(1.0, 0.2, 0.0);
        plan.team_size = 2;
        plan.phases.push(PathPhase {
            scope: 1.0,
            stop_gap: 0.5,
            exits: vec![1],
            reward: 0.5,
            cost_rates: vec![],
        });
        plan.gate = Some(Gate {
            after_phase: 0,
            continue_below: 0.0,
        });
        let out = simulate_plan(&plan, &cfg(100)).unwrap();
        assert_eq!(out.continued, Some(0));
        for p in 0..100 {
            assert_eq!(out.samples[0][p], out.samples[1][p]);
        }
    }
}
