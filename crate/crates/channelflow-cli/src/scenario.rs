//! Scenario configuration: JSON schema and validation.

use anyhow::{bail, Context, Result};
use channelflow::mesh::Grading;
use channelflow::shear::Convention;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileConfig {
    pub f1: String,
    pub f2: String,
    /// declared lower width bound
    pub d: f64,
    /// declared wall slope bound
    pub beta: f64,
    /// declared |f'' f| bound
    pub gamma_pp: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Truncation {
    /// Omega_{-t, t}
    Symmetric { t: f64 },
    /// Omega_{h(-t), h(t)} in the width-adapted variable
    Hat { t: f64 },
    Explicit { a: f64, b: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshConfig {
    pub nx: usize,
    pub ny: usize,
    pub grading: Grading,
    #[serde(default = "default_strength")]
    pub strength: f64,
}

fn default_strength() -> f64 {
    2.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol_rel: f64,
    #[serde(default = "default_picard")]
    pub max_picard: usize,
    #[serde(default = "default_newton")]
    pub max_newton: usize,
    #[serde(default = "default_damping")]
    pub damping: f64,
    #[serde(default = "default_steps")]
    pub continuation_steps: usize,
}

fn default_tol() -> f64 {
    1e-10
}
fn default_picard() -> usize {
    60
}
fn default_newton() -> usize {
    12
}
fn default_damping() -> f64 {
    1.0
}
fn default_steps() -> usize {
    1
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_rel: default_tol(),
            max_picard: default_picard(),
            max_newton: default_newton(),
            damping: default_damping(),
            continuation_steps: default_steps(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Thresholds {
    #[serde(default = "d_fit_resid")]
    pub fit_rel_residual: f64,
    #[serde(default = "d_fit_stab")]
    pub fit_stability: f64,
    #[serde(default = "d_uniform")]
    pub uniform_local: f64,
    #[serde(default = "d_decay")]
    pub decay_rate: f64,
    #[serde(default = "d_lower")]
    pub lower_bound_max_over_median: f64,
    #[serde(default = "d_flux")]
    pub flux_defect: f64,
}

fn d_fit_resid() -> f64 {
    0.10
}
fn d_fit_stab() -> f64 {
    0.25
}
fn d_uniform() -> f64 {
    3.0
}
fn d_decay() -> f64 {
    5.0
}
fn d_lower() -> f64 {
    3.0
}
fn d_flux() -> f64 {
    1e-7
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            fit_rel_residual: d_fit_resid(),
            fit_stability: d_fit_stab(),
            uniform_local: d_uniform(),
            decay_rate: d_decay(),
            lower_bound_max_over_median: d_lower(),
            flux_defect: d_flux(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FarFieldConfig {
    #[serde(default)]
    pub k_start: f64,
    #[serde(default = "d_decay_frac")]
    pub decay_frac: f64,
    /// above this flux a failed far-field check reports Inconclusive
    #[serde(default = "d_small_flux")]
    pub small_flux_threshold: f64,
}

fn d_decay_frac() -> f64 {
    1e-3
}
fn d_small_flux() -> f64 {
    1.0
}

impl Default for FarFieldConfig {
    fn default() -> Self {
        FarFieldConfig {
            k_start: 0.0,
            decay_frac: d_decay_frac(),
            small_flux_threshold: d_small_flux(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default = "schema_default")]
    pub schema_version: u32,
    pub name: String,
    pub profile: ProfileConfig,
    pub alpha: f64,
    #[serde(default = "default_convention")]
    pub convention: Convention,
    pub phi: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    pub truncation: Truncation,
    pub mesh: MeshConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_end")]
    pub end_condition: String,
    #[serde(default)]
    pub checks: Vec<String>,
    #[serde(default)]
    pub far_field: FarFieldConfig,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub uniqueness_seeds: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn schema_default() -> u32 {
    SCHEMA_VERSION
}
fn default_convention() -> Convention {
    Convention::WeakFormConsistent
}
fn default_eps() -> f64 {
    0.25
}
fn default_end() -> String {
    "Zero".to_string()
}
fn default_seed() -> u64 {
    42
}

pub const KNOWN_CHECKS: &[&str] = &[
    "flux",
    "energy_profile",
    "fit_growth_linear",
    "fit_growth_weight",
    "lower_bound",
    "uniform_local",
    "far_field",
    "decay_rate",
    "condition",
    "uniqueness_probe",
];

impl Scenario {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading scenario {}", path.display()))?;
        let sc: Scenario = serde_json::from_str(&text).context("ConfigInvalid: parse error")?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!("ConfigInvalid: schema_version must be {SCHEMA_VERSION}");
        }
        if self.phi < 0.0 {
            bail!("ConfigInvalid: phi must be nonnegative");
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            bail!("ConfigInvalid: eps must lie in (0, 1)");
        }
        if self.alpha < 0.0 {
            bail!("ConfigInvalid: alpha must be nonnegative");
        }
        if self.mesh.nx < 2 || self.mesh.ny < 2 {
            bail!("ConfigInvalid: mesh.nx and mesh.ny must be at least 2");
        }
        if self.profile.d <= 0.0 {
            bail!("ConfigInvalid: profile.d must be positive");
        }
        match self.truncation {
            Truncation::Symmetric { t } | Truncation::Hat { t } => {
                if t <= 0.0 {
                    bail!("ConfigInvalid: truncation.t must be positive");
                }
            }
            Truncation::Explicit { a, b } => {
                if b <= a {
                    bail!("ConfigInvalid: truncation requires a < b");
                }
            }
        }
        if self.end_condition != "Zero" && self.end_condition != "ShearLift" {
            bail!("ConfigInvalid: end_condition must be Zero or ShearLift");
        }
        for c in &self.checks {
            if !KNOWN_CHECKS.contains(&c.as_str()) {
                bail!("ConfigInvalid: unknown check `{c}`");
            }
        }
        if self.checks.iter().any(|c| c == "uniqueness_probe") && self.uniqueness_seeds < 2 {
            bail!("ConfigInvalid: uniqueness_seeds must be >= 2 for the uniqueness_probe check");
        }
        Ok(())
    }
}
