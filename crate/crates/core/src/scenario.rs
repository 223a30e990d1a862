//! Scenario files: the team's cost functions, scope bounds and optional
//! simulation, penalty and scan settings, read from TOML.
//!
//! ```toml
//! [scope_bounds]
//! lo = 0.1
//! hi = 10.0
//!
//! [well_ordered]
//! betas = [1.0, 1.2, 2.0]
//! cost = { family = "scaled_exponential", b = 1.0 }
//!
//! [sim]
//! n_paths = 20000
//! seed = 42
//! ```
//!
//! Agents may instead be listed one by one as `[[agents]]` tables.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cost::{validate_spec, CostSpec, ScopeBounds};
use crate::error::{Error, Result};
use crate::sim::SimConfig;

/// Proportional costs `c_i = c / β_i` built from one base family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WellOrdered {
    pub betas: Vec<f64>,
    pub cost: CostSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltySection {
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub beta2_range: [f64; 2],
    pub beta3_range: [f64; 2],
    pub steps: usize,
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection {
            beta2_range: [0.0, 24.0],
            beta3_range: [0.0, 24.0],
            steps: 96,
        }
    }
}

impl ScanSection {
    /// Cell centres along one axis.
    pub fn axis(range: [f64; 2], steps: usize) -> Vec<f64> {
        let w = (range[1] - range[0]) / steps as f64;
        (0..steps).map(|i| range[0] + (i as f64 + 0.5) * w).collect()
    }

    pub fn check(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Config("scan.steps must be at least 1".into()));
        }
        for (name, r) in [("beta2_range", self.beta2_range), ("beta3_range", self.beta3_range)] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] < r[1]) {
                return Err(Error::Config(format!(
                    "scan.{name} must be an increasing pair, got {r:?}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    scope_bounds: Option<ScopeBounds>,
    #[serde(default)]
    agents: Vec<CostSpec>,
    well_ordered: Option<WellOrdered>,
    sim: Option<SimConfig>,
    penalty: Option<PenaltySection>,
    scan: Option<ScanSection>,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub agents: Vec<CostSpec>,
    pub scope_bounds: ScopeBounds,
    /// Present when agents came from a `[well_ordered]` template.
    pub template: Option<WellOrdered>,
    pub sim: Option<SimConfig>,
    pub penalty: Option<PenaltySection>,
    pub scan: Option<ScanSection>,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        Self::from_raw(raw)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    fn from_raw(raw: RawScenario) -> Result<Self> {
        let bounds = raw
            .scope_bounds
            .ok_or_else(|| Error::Config("missing [scope_bounds] table".into()))?;
        bounds.check().map_err(|e| Error::Config(e.to_string()))?;

        let agents = match (&raw.well_ordered, raw.agents.is_empty()) {
            (Some(_), false) => {
                return Err(Error::Config(
                    "give either [[agents]] or [well_ordered], not both".into(),
                ));
            }
            (None, true) => return Err(Error::Config("scenario has no agents".into())),
            (None, false) => raw.agents.clone(),
            (Some(t), true) => expand_template(t)?,
        };
        for (k, spec) in agents.iter().enumerate() {
            validate_spec(spec, &bounds)
                .into_result()
                .map_err(|e| Error::Config(format!("agent {}: {e}", k + 1)))?;
        }
        if let Some(sim) = &raw.sim {
            sim.check().map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(p) = &raw.penalty {
            if !(0.0..=1.0).contains(&p.alpha) {
                return Err(Error::Config(format!(
                    "penalty.alpha must lie in [0, 1], got {}",
                    p.alpha
                )));
            }
        }
        if let Some(scan) = &raw.scan {
            scan.check()?;
            let ok = matches!(&raw.well_ordered, Some(t) if t.betas.len() == 3
                && matches!(t.cost, CostSpec::ScaledExponential { .. }));
            if !ok {
                return Err(Error::Config(
                    "[scan] needs a three-agent [well_ordered] template with a scaled_exponential cost".into(),
                ));
            }
        }
        Ok(ScenarioConfig {
            agents,
            scope_bounds: bounds,
            template: raw.well_ordered,
            sim: raw.sim,
            penalty: raw.penalty,
            scan: raw.scan,
        })
    }

    /// Normalized TOML echo with every agent spelled out.
    pub fn to_toml(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "[scope_bounds]\nlo = {:?}\nhi = {:?}",
            self.scope_bounds.lo, self.scope_bounds.hi
        );
        for a in &self.agents {
            out.push_str("\n[[agents]]\n");
            out.push_str(&toml::to_string(a).expect("cost spec serializes"));
        }
        if let Some(sim) = &self.sim {
            out.push_str("\n[sim]\n");
            out.push_str(&toml::to_string(sim).expect("sim config serializes"));
        }
        if let Some(p) = &self.penalty {
            let _ = writeln!(out, "\n[penalty]\nalpha = {:?}", p.alpha);
        }
        if let Some(s) = &self.scan {
            out.push_str("\n[scan]\n");
            out.push_str(&toml::to_string(s).expect("scan section serializes"));
        }
        out
    }

    pub fn sim_config(&self) -> SimConfig {
        self.sim.unwrap_or_default()
    }

    pub fn scan_section(&self) -> ScanSection {
        self.scan.unwrap_or_default()
    }
}

fn expand_template(t: &WellOrdered) -> Result<Vec<CostSpec>> {
    if t.betas.is_empty() {
        return Err(Error::Config("well_ordered.betas is empty".into()));
    }
    if matches!(t.cost, CostSpec::AffineQuadratic { .. }) {
        return Err(Error::Config(
            "well_ordered.cost must be scaled_exponential or scaled_power".into(),
        ));
    }
    if t.cost.beta() != 1.0 {
        return Err(Error::Config(
            "well_ordered.cost must not set beta; use well_ordered.betas".into(),
        ));
    }
    for (k, &b) in t.betas.iter().enumerate() {
        if !(b.is_finite() && b >= 1.0) {
            return Err(Error::Config(format!(
                "well_ordered.betas[{k}] = {b}; multipliers must be at least 1"
            )));
        }
    }
    if t.betas.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config(format!(
            "well_ordered.betas {:?} must be non-decreasing",
            t.betas
        )));
    }
    Ok(t.betas.iter().map(|&b| t.cost.with_beta(b)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE: &str = r#"
[scope_bounds]
lo = 0.1
hi = 10.0

[well_ordered]
betas = [1.0, 1.2, 2.0]
cost = { family = "scaled_exponential", b = 1.0 }
"#;

    #[test]
    fn template_expands() {
        let s = ScenarioConfig::from_toml_str(THREE).unwrap();
        assert_eq!(s.agents.len(), 3);
        assert_eq!(s.agents[1], CostSpec::exponential(1.0, 1.2));
        assert_eq!(s.sim_config(), SimConfig::default());
    }

    #[test]
    fn echo_round_trips() {
        let s = ScenarioConfig::from_toml_str(&format!("{THREE}\n[sim]\nseed = 3\n[penalty]\nalpha = 0.5\n")).unwrap();
        let echo = s.to_toml();
        let back = ScenarioConfig::from_toml_str(&echo).unwrap();
        assert_eq!(back.agents, s.agents);
        assert_eq!(back.sim, s.sim);
        assert_eq!(back.penalty, s.penalty);
    }

    #[test]
    fn rejections() {
        let small_beta = THREE.replace("1.2, 2.0", "0.8, 2.0");
        assert!(matches!(
            ScenarioConfig::from_toml_str(&small_beta),
            Err(Error::Config(_))
        ));
        let no_bounds = THREE.replace("[scope_bounds]\nlo = 0.1\nhi = 10.0\n", "");
        let e = ScenarioConfig::from_toml_str(&no_bounds).unwrap_err();
        assert!(e.to_string().contains("scope_bounds"), "{e}");
        let unknown = format!("{THREE}\n[sim]\nbogus = 1\n");
        assert!(ScenarioConfig::from_toml_str(&unknown).is_err());
        let bad_family = THREE.replace("scaled_exponential", "cubic");
        assert!(ScenarioConfig::from_toml_str(&bad_family).is_err());
    }

    #[test]
    fn explicit_agents() {
        let text = r#"
[scope_bounds]
lo = 0.5
hi = 5.0

[[agents]]
family = "scaled_power"
a = 1.0
p = 2.0

[[agents]]
family = "affine_quadratic"
a2 = 1.0
a1 = 0.0
a0 = 1.0
"#;
        let s = ScenarioConfig::from_toml_str(text).unwrap();
        assert_eq!(s.agents[0], CostSpec::power(1.0, 2.0, 1.0));
        assert!(s.template.is_none());
        let scan = format!("{text}\n[scan]\nsteps = 4\n");
        assert!(ScenarioConfig::from_toml_str(&scan).is_err());
    }

    #[test]
    fn scan_axis_is_cell_centred() {
        let xs = ScanSection::axis([0.0, 24.0], 96);
        assert_eq!(xs.len(), 96);
        assert_eq!(xs[0], 0.125);
        assert_eq!(xs[95], 23.875);
    }
}
