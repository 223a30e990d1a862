//! Parametric convex cost families for search scope.
//!
//! Every family has closed-form first and second derivatives, so the
//! fixed-point solvers never differentiate numerically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strong-convexity floor used by [`validate_spec`].
pub const CONVEXITY_FLOOR: f64 = 1e-9;

/// Number of uniform grid points used by [`validate_spec`].
pub const VALIDATION_GRID: usize = 1001;

fn one() -> f64 {
    1.0
}

/// Cost rate `c(σ)` paid per unit time by an agent searching with scope `σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostSpec {
    /// `c(σ) = e^{bσ} / β`
    ScaledExponential {
        b: f64,
        #[serde(default = "one")]
        beta: f64,
    },
    /// `c(σ) = a σ^p / β`
    ScaledPower {
        a: f64,
        p: f64,
        #[serde(default = "one")]
        beta: f64,
    },
    /// `c(σ) = a2 σ² + a1 σ + a0`
    AffineQuadratic { a2: f64, a1: f64, a0: f64 },
}

/// Admissible range `[lo, hi]` for every individual search scope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScopeBounds {
    pub lo: f64,
    pub hi: f64,
}

impl ScopeBounds {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let b = ScopeBounds { lo, hi };
        b.check()?;
        Ok(b)
    }

    pub fn check(&self) -> Result<()> {
        if self.lo.is_finite() && self.hi.is_finite() && self.lo > 0.0 && self.lo <= self.hi {
            Ok(())
        } else {
            Err(Error::InvalidBounds {
                lo: self.lo,
                hi: self.hi,
            })
        }
    }

    pub fn clamp(&self, sigma: f64) -> f64 {
        sigma.clamp(self.lo, self.hi)
    }

    /// `n` points evenly spaced over `[lo, hi]` (inclusive).
    pub fn grid(&self, n: usize) -> impl Iterator<Item = f64> + '_ {
        let step = if n > 1 {
            (self.hi - self.lo) / (n - 1) as f64
        } else {
            0.0
        };
        (0..n).map(move |k| if k + 1 == n { self.hi } else { self.lo + step * k as f64 })
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "scope must be finite and non-negative, got {sigma}"
        )))
    }
}

fn finite(v: f64, what: &str, sigma: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("{what} is not finite at sigma = {sigma}")))
    }
}

impl CostSpec {
    pub fn exponential(b: f64, beta: f64) -> Self {
        CostSpec::ScaledExponential { b, beta }
    }

    pub fn power(a: f64, p: f64, beta: f64) -> Self {
        CostSpec::ScaledPower { a, p, beta }
    }

    pub fn affine_quadratic(a2: f64, a1: f64, a0: f64) -> Self {
        CostSpec::AffineQuadratic { a2, a1, a0 }
    }

    /// Cost multiplier divisor; `1` for families without one.
    pub fn beta(&self) -> f64 {
        match *self {
            CostSpec::ScaledExponential { beta, .. } | CostSpec::ScaledPower { beta, .. } => beta,
            CostSpec::AffineQuadratic { .. } => 1.0,
        }
    }

    /// Same spec with the divisor replaced. Families without a divisor are
    /// returned unchanged.
    pub fn with_beta(&self, beta: f64) -> Self {
        match *self {
            CostSpec::ScaledExponential { b, .. } => CostSpec::ScaledExponential { b, beta },
            CostSpec::ScaledPower { a, p, .. } => CostSpec::ScaledPower { a, p, beta },
            c @ CostSpec::AffineQuadratic { .. } => c,
        }
    }

    /// True when `other` differs from `self` at most by the divisor `β`.
    pub fn proportional_to(&self, other: &CostSpec) -> bool {
        match (*self, *other) {
            (CostSpec::ScaledExponential { b: b1, .. }, CostSpec::ScaledExponential { b: b2, .. }) => b1 == b2,
            (CostSpec::ScaledPower { a: a1, p: p1, .. }, CostSpec::ScaledPower { a: a2, p: p2, .. }) => {
                a1 == a2 && p1 == p2
            }
            (a @ CostSpec::AffineQuadratic { .. }, b @ CostSpec::AffineQuadratic { .. }) => a == b,
            _ => false,
        }
    }

    /// The constant value of `2c/c′` when it does not depend on `σ`.
    ///
    /// Only the exponential family has this property; its agents' individual
    /// scopes are then not pinned down by the equilibrium system.
    pub fn constant_ratio(&self) -> Option<f64> {
        match *self {
            CostSpec::ScaledExponential { b, .. } => Some(2.0 / b),
            _ => None,
        }
    }

    fn raw_cost(&self, s: f64) -> f64 {
        match *self {
            CostSpec::ScaledExponential { b, beta } => (b * s).exp() / beta,
            CostSpec::ScaledPower { a, p, beta } => a * s.powf(p) / beta,
            CostSpec::AffineQuadratic { a2, a1, a0 } => (a2 * s + a1) * s + a0,
        }
    }

    fn raw_dcost(&self, s: f64) -> f64 {
        match *self {
            CostSpec::ScaledExponential { b, beta } => b * (b * s).exp() / beta,
            CostSpec::ScaledPower { a, p, beta } => a * p * s.powf(p - 1.0) / beta,
            CostSpec::AffineQuadratic { a2, a1, .. } => 2.0 * a2 * s + a1,
        }
    }

    fn raw_d2cost(&self, s: f64) -> f64 {
        match *self {
            CostSpec::ScaledExponential { b, beta } => b * b * (b * s).exp() / beta,
            CostSpec::ScaledPower { a, p, beta } => a * p * (p - 1.0) * s.powf(p - 2.0) / beta,
            CostSpec::AffineQuadratic { a2, .. } => 2.0 * a2,
        }
    }

    /// `c(σ)`.
    pub fn cost(&self, sigma: f64) -> Result<f64> {
        check_sigma(sigma)?;
        finite(self.raw_cost(sigma), "cost", sigma)
    }

    /// `c′(σ)`.
    pub fn dcost(&self, sigma: f64) -> Result<f64> {
        check_sigma(sigma)?;
        finite(self.raw_dcost(sigma), "marginal cost", sigma)
    }

    /// `c″(σ)`.
    pub fn d2cost(&self, sigma: f64) -> Result<f64> {
        check_sigma(sigma)?;
        finite(self.raw_d2cost(sigma), "cost curvature", sigma)
    }

    /// `2c(σ)/c′(σ)`, the scope at which an agent's cost per unit of squared
    /// total scope is stationary.
    pub fn ratio(&self, sigma: f64) -> Result<f64> {
        check_sigma(sigma)?;
        let r = match *self {
            CostSpec::ScaledExponential { b, .. } => 2.0 / b,
            CostSpec::ScaledPower { p, .. } => 2.0 * sigma / p,
            CostSpec::AffineQuadratic { .. } => 2.0 * self.raw_cost(sigma) / self.raw_dcost(sigma),
        };
        finite(r, "cost ratio", sigma)
    }

    /// Inverse of the marginal cost: the scope `σ ≥ 0` with `c′(σ) = λ`,
    /// or `None` when `λ` lies below `c′(0)`.
    pub fn inverse_marginal(&self, lambda: f64) -> Option<f64> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return None;
        }
        let s = match *self {
            CostSpec::ScaledExponential { b, beta } => (lambda * beta / b).ln() / b,
            CostSpec::ScaledPower { a, p, beta } => (lambda * beta / (a * p)).powf(1.0 / (p - 1.0)),
            CostSpec::AffineQuadratic { a2, a1, .. } => (lambda - a1) / (2.0 * a2),
        };
        (s.is_finite() && s >= 0.0).then_some(s)
    }

    /// Parameter-domain check, independent of any scope range.
    pub fn check_params(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        let all_finite = match *self {
            CostSpec::ScaledExponential { b, beta } => b.is_finite() && beta.is_finite(),
            CostSpec::ScaledPower { a, p, beta } => a.is_finite() && p.is_finite() && beta.is_finite(),
            CostSpec::AffineQuadratic { a2, a1, a0 } => a2.is_finite() && a1.is_finite() && a0.is_finite(),
        };
        if !all_finite {
            return bad(format!("{self:?} has non-finite parameters"));
        }
        match *self {
            CostSpec::ScaledExponential { b, beta } => {
                if b <= 0.0 {
                    return bad(format!("exponential rate b must be positive, got {b}"));
                }
                if beta < 1.0 {
                    return bad(format!("cost divisor beta must be at least 1, got {beta}"));
                }
            }
            CostSpec::ScaledPower { a, p, beta } => {
                if a <= 0.0 {
                    return bad(format!("power coefficient a must be positive, got {a}"));
                }
                if p < 2.0 {
                    return bad(format!("power exponent p must be at least 2, got {p}"));
                }
                if beta < 1.0 {
                    return bad(format!("cost divisor beta must be at least 1, got {beta}"));
                }
            }
            CostSpec::AffineQuadratic { a2, a1, a0 } => {
                if a2 <= 0.0 {
                    return bad(format!("quadratic coefficient a2 must be positive, got {a2}"));
                }
                if a1 < 0.0 {
                    return bad(format!("linear coefficient a1 must be non-negative, got {a1}"));
                }
                if a0 <= 0.0 {
                    return bad(format!("constant a0 must be positive, got {a0}"));
                }
            }
        }
        Ok(())
    }
}

/// Outcome of [`validate_spec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub valid: bool,
    /// `(log c)″ ≥ 0` on the whole grid.
    pub log_convex: bool,
    pub issues: Vec<String>,
}

impl ValidationReport {
    pub fn into_result(self) -> Result<Self> {
        if self.valid {
            Ok(self)
        } else {
            Err(Error::InvalidSpec(self.issues.join("; ")))
        }
    }
}

/// Grid check of positivity, monotonicity and strong convexity on `bounds`,
/// plus the log-convexity flag.
pub fn validate_spec(spec: &CostSpec, bounds: &ScopeBounds) -> ValidationReport {
    let mut issues = Vec::new();
    if let Err(e) = bounds.check() {
        issues.push(e.to_string());
    }
    if let Err(e) = spec.check_params() {
        issues.push(e.to_string());
    }
    let mut log_convex = true;
    let mut first = [true; 4];
    if issues.iter().all(|i| !i.starts_with("invalid scope bounds")) {
        for s in bounds.grid(VALIDATION_GRID) {
            let (c, dc, d2c) = (spec.raw_cost(s), spec.raw_dcost(s), spec.raw_d2cost(s));
            let checks = [
                (c.is_finite() && dc.is_finite() && d2c.is_finite(), "non-finite cost"),
                (c > 0.0, "cost not positive"),
                (dc > 0.0, "cost not increasing"),
                (d2c >= CONVEXITY_FLOOR, "cost not strongly convex"),
            ];
            for (k, (ok, msg)) in checks.iter().enumerate() {
                if !ok && first[k] {
                    first[k] = false;
                    issues.push(format!("{msg} at sigma = {s}"));
                }
            }
            // (log c)'' = (c c'' - c'^2) / c^2
            if d2c * c - dc * dc < -1e-10 * dc * dc {
                log_convex = false;
            }
        }
    }
    ValidationReport {
        valid: issues.is_empty(),
        log_convex: log_convex && issues.is_empty(),
        issues,
    }
}
