//! Constant search scopes within an alliance.
//!
//! Equilibrium scopes solve `2c_i(σ_i)/c_i′(σ_i) = S` for every member, where
//! `S` is the alliance total. The planner's scopes equalise marginal costs at
//! `λ = 2Σc_i/S`. Both systems are solved by bracketing the total (or the
//! common marginal cost) and bisecting, with scopes clipped to the bounds.

use std::fmt;

use crate::cost::{validate_spec, CostSpec, ScopeBounds};
use crate::error::{Error, Result};

/// Bisection stops once the bracket is narrower than this.
pub const BISECTION_TOL: f64 = 1e-12;
pub const BISECTION_MAX_ITER: usize = 200;
/// Sign-scan resolution before bisecting.
pub const SCAN_POINTS: usize = 512;
/// Tolerance on the first-order residuals of a returned profile.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Largest team size probed by [`interior_capacity`].
pub const CAPACITY_CAP: usize = 1024;

/// Sorted set of agent indices still searching.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Alliance(Vec<usize>);

impl Alliance {
    pub fn new(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        Alliance(members)
    }

    pub fn full(n: usize) -> Self {
        Alliance((0..n).collect())
    }

    /// `{k, k+1, …, n-1}`
    pub fn suffix(k: usize, n: usize) -> Self {
        Alliance((k..n).collect())
    }

    pub fn empty() -> Self {
        Alliance(Vec::new())
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, agent: usize) -> bool {
        self.0.binary_search(&agent).is_ok()
    }

    pub fn minus(&self, other: &Alliance) -> Alliance {
        Alliance(self.0.iter().copied().filter(|a| !other.contains(*a)).collect())
    }

    pub fn union(&self, other: &Alliance) -> Alliance {
        Alliance::new(self.0.iter().chain(other.0.iter()).copied().collect())
    }

    pub fn is_strict_superset_of(&self, other: &Alliance) -> bool {
        self.len() > other.len() && other.0.iter().all(|a| self.contains(*a))
    }

    /// One-based label such as `{1,2,3}`.
    pub fn label(&self) -> String {
        let inner: Vec<String> = self.0.iter().map(|a| (a + 1).to_string()).collect();
        format!("{{{}}}", inner.join(","))
    }
}

impl fmt::Display for Alliance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromIterator<usize> for Alliance {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Alliance::new(iter.into_iter().collect())
    }
}

/// Per-agent scopes of one alliance.
#[derive(Debug, Clone, PartialEq)]
pub struct ScopeProfile {
    pub alliance: Alliance,
    /// Aligned with `alliance.members()`.
    pub scopes: Vec<f64>,
    pub total: f64,
    /// Every member satisfies its first-order condition exactly.
    pub interior: bool,
    /// The split among members was selected by the equal-treatment rule.
    pub degenerate: bool,
    /// Other consistent totals found on the scan grid (excluding `total`).
    pub alternative_totals: Vec<f64>,
    pub warnings: Vec<String>,
}

impl ScopeProfile {
    pub fn scope_of(&self, agent: usize) -> Option<f64> {
        let k = self.alliance.members().binary_search(&agent).ok()?;
        Some(self.scopes[k])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.alliance.members().iter().copied().zip(self.scopes.iter().copied())
    }

    /// `Σ c_i(σ_i)` over the alliance.
    pub fn total_cost(&self, costs: &[CostSpec]) -> Result<f64> {
        self.iter().map(|(a, s)| costs[a].cost(s)).sum()
    }

    /// `Σ c_i / S²`, the alliance's cost per unit of squared scope.
    pub fn cost_per_speed(&self, costs: &[CostSpec]) -> Result<f64> {
        Ok(self.total_cost(costs)? / (self.total * self.total))
    }
}

fn check_inputs(alliance: &Alliance, costs: &[CostSpec], bounds: &ScopeBounds) -> Result<()> {
    if alliance.is_empty() {
        return Err(Error::EmptyAlliance);
    }
    bounds.check()?;
    for &a in alliance.members() {
        let spec = costs
            .get(a)
            .ok_or_else(|| Error::InvalidSpec(format!("no cost specification for agent {}", a + 1)))?;
        validate_spec(spec, bounds).into_result().map_err(|e| match e {
            Error::InvalidSpec(m) => Error::InvalidSpec(format!("agent {}: {m}", a + 1)),
            e => e,
        })?;
    }
    Ok(())
}

/// Smallest positive root of `ratio(σ) = total` when the ratio is not constant.
fn ratio_root(spec: &CostSpec, total: f64) -> Option<f64> {
    match *spec {
        CostSpec::ScaledExponential { .. } => None,
        CostSpec::ScaledPower { p, .. } => Some(p * total / 2.0),
        CostSpec::AffineQuadratic { a2, a1, a0 } => {
            // 2c - S c' = 2a2 σ² + 2(a1 - a2 S) σ + (2a0 - S a1)
            let qa = 2.0 * a2;
            let qb = 2.0 * (a1 - a2 * total);
            let qc = 2.0 * a0 - total * a1;
            let disc = qb * qb - 4.0 * qa * qc;
            if disc < 0.0 {
                return None;
            }
            let sq = disc.sqrt();
            let mut roots = [(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)];
            roots.sort_by(f64::total_cmp);
            roots.into_iter().find(|r| *r > 0.0)
        }
    }
}

/// Clipped per-agent response to a conjectured alliance total, for agents
/// whose ratio varies with scope.
fn response(spec: &CostSpec, total: f64, bounds: &ScopeBounds) -> f64 {
    match ratio_root(spec, total) {
        Some(root) => bounds.clamp(root),
        None => {
            let gap = |s: f64| (spec.ratio(s).unwrap_or(f64::INFINITY) - total).abs();
            if gap(bounds.lo) <= gap(bounds.hi) {
                bounds.lo
            } else {
                bounds.hi
            }
        }
    }
}

/// Members whose ratio is the same constant; the system leaves their split
/// indeterminate.
struct DegenerateClass {
    ratio: f64,
    slots: Vec<usize>,
}

struct EquilibriumSystem<'a> {
    specs: Vec<&'a CostSpec>,
    bounds: ScopeBounds,
    classes: Vec<DegenerateClass>,
    /// slot -> class index, for degenerate members
    class_of: Vec<Option<usize>>,
}

impl<'a> EquilibriumSystem<'a> {
    fn new(alliance: &Alliance, costs: &'a [CostSpec], bounds: ScopeBounds) -> Self {
        let specs: Vec<&CostSpec> = alliance.members().iter().map(|&a| &costs[a]).collect();
        let mut classes: Vec<DegenerateClass> = Vec::new();
        let mut class_of = vec![None; specs.len()];
        for (slot, spec) in specs.iter().enumerate() {
            if let Some(ratio) = spec.constant_ratio() {
                let k = match classes.iter().position(|c| c.ratio == ratio) {
                    Some(k) => k,
                    None => {
                        classes.push(DegenerateClass {
                            ratio,
                            slots: Vec::new(),
                        });
                        classes.len() - 1
                    }
                };
                classes[k].slots.push(slot);
                class_of[slot] = Some(k);
            }
        }
        EquilibriumSystem {
            specs,
            bounds,
            classes,
            class_of,
        }
    }

    /// Responses at `total`, with every degenerate class pinned to a corner.
    fn responses(&self, total: f64) -> Vec<f64> {
        self.specs
            .iter()
            .enumerate()
            .map(|(slot, spec)| match self.class_of[slot] {
                Some(k) => {
                    if self.classes[k].ratio > total {
                        self.bounds.hi
                    } else {
                        self.bounds.lo
                    }
                }
                None => response(spec, total, &self.bounds),
            })
            .collect()
    }

    fn excess(&self, total: f64) -> f64 {
        self.responses(total).iter().sum::<f64>() - total
    }

    /// Profile at `total` = the constant ratio of class `k`, with the class
    /// absorbing whatever the other members leave. `None` if the equal split
    /// falls outside the bounds.
    fn absorbed(&self, k: usize) -> Option<Vec<f64>> {
        let class = &self.classes[k];
        let total = class.ratio;
        let mut scopes = self.responses(total);
        let others: f64 = scopes
            .iter()
            .enumerate()
            .filter(|(slot, _)| self.class_of[*slot] != Some(k))
            .map(|(_, s)| *s)
            .sum();
        let share = (total - others) / class.slots.len() as f64;
        let slack = 1e-12 * total.max(1.0);
        if share < self.bounds.lo - slack || share > self.bounds.hi + slack {
            return None;
        }
        let share = self.bounds.clamp(share);
        for &slot in &class.slots {
            scopes[slot] = share;
        }
        Some(scopes)
    }
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, fa: f64) -> f64 {
    let positive_left = fa > 0.0;
    for _ in 0..BISECTION_MAX_ITER {
        if (b - a).abs() <= BISECTION_TOL.max(4.0 * f64::EPSILON * b.abs()) {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm > 0.0) == positive_left {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|k| if k == n { b } else { a + (b - a) * k as f64 / n as f64 })
        .collect()
}

/// Equilibrium scope profile of `alliance`.
///
/// `costs` is indexed by agent over the whole team. When several totals are
/// consistent the smallest is returned and the others are listed in
/// [`ScopeProfile::alternative_totals`].
pub fn solve_equilibrium_scopes(alliance: &Alliance, costs: &[CostSpec], bounds: &ScopeBounds) -> Result<ScopeProfile> {
    check_inputs(alliance, costs, bounds)?;
    let sys = EquilibriumSystem::new(alliance, costs, *bounds);
    let n = alliance.len() as f64;
    let (lo, hi) = (n * bounds.lo, n * bounds.hi);

    // (total, scopes, absorbing class)
    let mut candidates: Vec<(f64, Vec<f64>, Option<usize>)> = Vec::new();
    for k in 0..sys.classes.len() {
        let r = sys.classes[k].ratio;
        if r >= lo * (1.0 - 1e-12) && r <= hi * (1.0 + 1e-12) {
            if let Some(scopes) = sys.absorbed(k) {
                candidates.push((r, scopes, Some(k)));
            }
        }
    }

    let near_class_ratio = |a: f64, b: f64| {
        sys.classes
            .iter()
            .any(|c| c.ratio >= a - 1e-9 * a.abs().max(1.0) && c.ratio <= b + 1e-9 * b.abs().max(1.0))
    };
    let accept = |s: f64, candidates: &mut Vec<(f64, Vec<f64>, Option<usize>)>| {
        let h = sys.excess(s);
        if h.abs() <= 1e-9 * s.max(1.0) {
            candidates.push((s, sys.responses(s), None));
        }
    };

    let grid = linspace(lo, hi, SCAN_POINTS);
    let values: Vec<f64> = grid.iter().map(|&s| sys.excess(s)).collect();
    for k in 0..grid.len() {
        // all-corner profiles sit exactly on the bracket ends
        if values[k].abs() <= 1e-12 * grid[k].max(1.0) && !near_class_ratio(grid[k], grid[k]) {
            accept(grid[k], &mut candidates);
        }
        if k + 1 < grid.len() && values[k] * values[k + 1] < 0.0 {
            let root = bisect(|s| sys.excess(s), grid[k], grid[k + 1], values[k]);
            let w = 1e-9 * root.max(1.0);
            if !near_class_ratio(root - w, root + w) {
                accept(root, &mut candidates);
            }
        }
    }

    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    candidates.dedup_by(|b, a| (a.0 - b.0).abs() <= 1e-9 * a.0.max(1.0));
    if candidates.is_empty() {
        return Err(Error::NoConsistentProfile {
            alliance: alliance.clone(),
            detail: format!("no root of sum(responses) - S on [{lo}, {hi}]"),
        });
    }

    let (_, scopes, absorbing) = candidates[0].clone();
    let alternative_totals: Vec<f64> = candidates[1..].iter().map(|c| c.0).collect();
    let total: f64 = scopes.iter().sum();

    let mut warnings = Vec::new();
    if !alternative_totals.is_empty() {
        warnings.push(format!(
            "multiple consistent totals {:?}; selected the smallest",
            std::iter::once(candidates[0].0)
                .chain(alternative_totals.iter().copied())
                .collect::<Vec<_>>()
        ));
    }
    let mut interior = true;
    for (slot, (&agent, &s)) in alliance.members().iter().zip(&scopes).enumerate() {
        let r = sys.specs[slot].ratio(s)?;
        if (r - total).abs() <= RESIDUAL_TOL * total.max(1.0) {
            continue;
        }
        interior = false;
        let kkt_ok = (s == bounds.hi && r > total) || (s == bounds.lo && r < total);
        if !kkt_ok {
            warnings.push(format!(
                "agent {} clipped at {s} with ratio {r} against total {total}; not a best response",
                agent + 1
            ));
        }
    }
    let degenerate = absorbing.is_some_and(|k| sys.classes[k].slots.len() > 1);

    Ok(ScopeProfile {
        alliance: alliance.clone(),
        scopes,
        total,
        interior,
        degenerate,
        alternative_totals,
        warnings,
    })
}

fn planner_scopes_at(specs: &[&CostSpec], lambda: f64, bounds: &ScopeBounds) -> Vec<f64> {
    specs
        .iter()
        .map(|spec| bounds.clamp(spec.inverse_marginal(lambda).unwrap_or(0.0)))
        .collect()
}

fn planner_excess(specs: &[&CostSpec], lambda: f64, bounds: &ScopeBounds) -> f64 {
    let scopes = planner_scopes_at(specs, lambda, bounds);
    let cost: f64 = specs
        .iter()
        .zip(&scopes)
        .map(|(c, &s)| c.cost(s).unwrap_or(f64::INFINITY))
        .sum();
    let total: f64 = scopes.iter().sum();
    2.0 * cost - lambda * total
}

/// Socially optimal scope profile of `alliance`: minimises `Σc_i/S²`.
pub fn solve_planner_scopes(alliance: &Alliance, costs: &[CostSpec], bounds: &ScopeBounds) -> Result<ScopeProfile> {
    check_inputs(alliance, costs, bounds)?;
    let specs: Vec<&CostSpec> = alliance.members().iter().map(|&a| &costs[a]).collect();
    let n = specs.len() as f64;

    let sum_cost = |s: f64| -> Result<f64> { specs.iter().map(|c| c.cost(s)).sum() };
    let mut lam_lo = f64::INFINITY;
    let mut lam_hi: f64 = 0.0;
    for c in &specs {
        lam_lo = lam_lo.min(c.dcost(bounds.lo)?);
        lam_hi = lam_hi.max(c.dcost(bounds.hi)?);
    }
    lam_lo = 0.5 * lam_lo.min(2.0 * sum_cost(bounds.lo)? / (n * bounds.lo));
    lam_hi = 2.0 * lam_hi.max(2.0 * sum_cost(bounds.hi)? / (n * bounds.hi));

    let (la, lb) = (lam_lo.ln(), lam_hi.ln());
    let grid: Vec<f64> = linspace(la, lb, SCAN_POINTS).into_iter().map(f64::exp).collect();
    let values: Vec<f64> = grid.iter().map(|&l| planner_excess(&specs, l, bounds)).collect();
    let mut roots = Vec::new();
    for k in 0..grid.len() {
        if values[k] == 0.0 {
            roots.push(grid[k]);
        }
        if k + 1 < grid.len() && values[k] * values[k + 1] < 0.0 {
            let g = |ln_l: f64| planner_excess(&specs, ln_l.exp(), bounds);
            roots.push(bisect(g, grid[k].ln(), grid[k + 1].ln(), values[k]).exp());
        }
    }
    if roots.is_empty() {
        return Err(Error::NoConsistentProfile {
            alliance: alliance.clone(),
            detail: format!("no sign change of 2*sum(c) - lambda*S for lambda in [{lam_lo}, {lam_hi}]"),
        });
    }

    // Among stationary points keep the one with the lowest cost per speed.
    let per_speed = |l: f64| {
        let s = planner_scopes_at(&specs, l, bounds);
        let c: f64 = specs
            .iter()
            .zip(&s)
            .map(|(c, &x)| c.cost(x).unwrap_or(f64::INFINITY))
            .sum();
        let t: f64 = s.iter().sum();
        c / (t * t)
    };
    let best = roots
        .iter()
        .copied()
        .min_by(|a, b| per_speed(*a).total_cmp(&per_speed(*b)))
        .expect("non-empty");
    let scopes = planner_scopes_at(&specs, best, bounds);
    let total: f64 = scopes.iter().sum();
    let mut alternative_totals: Vec<f64> = roots
        .iter()
        .filter(|&&l| l != best)
        .map(|&l| planner_scopes_at(&specs, l, bounds).iter().sum())
        .collect();
    alternative_totals.sort_by(f64::total_cmp);
    let mut warnings = Vec::new();
    if !alternative_totals.is_empty() {
        warnings.push(format!(
            "{} stationary marginal costs found; kept the lowest cost per speed",
            roots.len()
        ));
    }
    let mut interior = true;
    for (c, &s) in specs.iter().zip(&scopes) {
        let m = c.dcost(s)?;
        if (m - best).abs() > 1e-9 * best {
            interior = false;
        }
    }
    Ok(ScopeProfile {
        alliance: alliance.clone(),
        scopes,
        total,
        interior,
        degenerate: false,
        alternative_totals,
        warnings,
    })
}

/// Largest team of agents sharing `cost` for which the equilibrium profile is
/// interior; `0` when not even a single agent is.
pub fn interior_capacity(cost: &CostSpec, bounds: &ScopeBounds) -> Result<usize> {
    let interior_at = |n: usize| -> Result<bool> {
        let costs = vec![*cost; n];
        Ok(solve_equilibrium_scopes(&Alliance::full(n), &costs, bounds)?.interior)
    };
    let mut best = 0;
    for n in 1..=CAPACITY_CAP {
        if interior_at(n)? {
            best = n;
        } else {
            return Ok(best);
        }
    }
    Err(Error::Unsupported(format!(
        "interior capacity exceeds the probe cap of {CAPACITY_CAP} agents"
    )))
}
