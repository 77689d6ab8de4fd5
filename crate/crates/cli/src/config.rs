//! Run configuration: a single JSON file, paths relative to that file.

use std::path::{Path, PathBuf};

use afree_core::measure::{AfreeOptions, Window};
use afree_core::singularity::{dyadic_epsilons, ScaleFunctions, SetStrategy};
use serde::{Deserialize, Serialize};

/// Desk-scale cap on `d`, `m` and `n`.
pub const MAX_SIZE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Sampled,
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonSchedule {
    /// `ε_i = 2^{-(first + i)}`.
    pub first: i32,
    pub count: usize,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule { first: 1, count: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative singular-value threshold for sampled cones.
    pub cone: f64,
    /// A-free residual and pointwise kernel residual.
    pub residual: f64,
    pub certificate: f64,
    /// Blow-up gap, vanishing limit and Plancherel agreement (relative).
    pub blowup: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { cone: 1e-10, residual: 1e-10, certificate: 1e-6, blowup: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertificateSettings {
    pub p: f64,
    pub q: f64,
    pub strategy: SetStrategy,
}

impl Default for CertificateSettings {
    fn default() -> Self {
        CertificateSettings { p: 2.0, q: 0.5, strategy: SetStrategy::CarrierBall }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AfreeSettings {
    pub resolution: usize,
    pub scales: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
}

impl Default for AfreeSettings {
    fn default() -> Self {
        let d = AfreeOptions::default();
        AfreeSettings { resolution: d.resolution, scales: d.scales, window: None }
    }
}

/// Test function for the `blowup` subcommand: a tensor bump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSettings {
    pub center: Vec<f64>,
    pub scale: f64,
}

fn default_resolution() -> usize {
    64
}
fn default_padding() -> f64 {
    4.0
}
fn default_samples() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub operator: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<PathBuf>,
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_resolution")]
    pub grid_resolution: usize,
    #[serde(default = "default_padding")]
    pub padding: f64,
    #[serde(default)]
    pub epsilons: EpsilonSchedule,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub certificate: CertificateSettings,
    #[serde(default = "default_samples")]
    pub cone_samples: usize,
    #[serde(default)]
    pub afree: AfreeSettings,
    #[serde(default)]
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_function: Option<BumpSettings>,
    /// Directory that relative paths are resolved against; not serialized.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    /// A config with defaults for everything but the operator file.
    pub fn for_operator(operator: impl Into<PathBuf>) -> Self {
        serde_json::from_value::<RunConfig>(serde_json::json!({ "operator": operator.into() }))
            .expect("defaults deserialize")
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut config: RunConfig =
            serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), String> {
        let t = &self.tolerances;
        if [t.cone, t.residual, t.certificate, t.blowup].iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err("tolerances must be positive and finite".into());
        }
        if self.epsilons.count < 4 {
            return Err(format!("the ε schedule needs at least 4 values, got {}", self.epsilons.count));
        }
        let (p, q) = (self.certificate.p, self.certificate.q);
        if !(p > 1.0 && q > 0.0 && q < 1.0) {
            return Err(format!("certificate exponents need p > 1 and 0 < q < 1, got p = {p}, q = {q}"));
        }
        if !self.grid_resolution.is_power_of_two() || self.grid_resolution < 8 {
            return Err(format!("grid resolution must be a power of two ≥ 8, got {}", self.grid_resolution));
        }
        if self.cone_samples == 0 {
            return Err("cone_samples must be positive".into());
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn epsilon_values(&self) -> Vec<f64> {
        dyadic_epsilons(self.epsilons.first, self.epsilons.count)
    }

    pub fn scales(&self) -> ScaleFunctions {
        ScaleFunctions::Power { p: self.certificate.p, q: self.certificate.q }
    }

    pub fn afree_options(&self) -> AfreeOptions {
        AfreeOptions {
            window: self.afree.window.clone(),
            resolution: self.afree.resolution,
            scales: self.afree.scales,
            tol: self.tolerances.residual,
        }
    }
}
