//! Run configuration: one JSON document per run.
//!
//! Unknown keys are rejected at every level so typos fail loudly.
//! Documented defaults: rel_tol = 1e-10, abs_tol = 1e-12, z0 = 1e-6,
//! eps_cut = 1e-8, z_max = 10, 5 × 50 verification grid.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use collapsar_core::{exponents_for, PhysicalParams, SolutionCase};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub case: SolutionCase,
    pub params: ParamsConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub thresholds: ThresholdConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub n_dim: u32,
    #[serde(default = "one")]
    pub k: f64,
    #[serde(default)]
    pub kappa: f64,
    /// Adiabatic exponent; omitted = the case-exact value (2N−2)/N.
    #[serde(default)]
    pub gamma: Option<f64>,
    /// Viscosity exponent; omitted = the case-exact value.
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub delta: i8,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "minus_one")]
    pub m: f64,
    #[serde(default = "one")]
    pub n: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    /// Source constant μ of the legacy profile equations.
    #[serde(default)]
    pub mu: f64,
    /// Constant λ of the legacy scaling equation ä = −λ/a^{N−1}.
    #[serde(default)]
    pub lambda_legacy: f64,
}

fn one() -> f64 {
    1.0
}

fn minus_one() -> f64 {
    -1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub z_max: f64,
    pub t_samples: usize,
    pub r_samples: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub z0: f64,
    pub eps_cut: f64,
    /// Upper end of the verification time grid; omitted = 0.9·T for
    /// blowup cases, 1.0 otherwise.
    pub t_max: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            z_max: 10.0,
            t_samples: 5,
            r_samples: 50,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            z0: 1e-6,
            eps_cut: 1e-8,
            t_max: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: Option<PathBuf>,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: None,
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdConfig {
    pub mass_scaled_max: f64,
    pub momentum_scaled_max: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            mass_scaled_max: 1e-10,
            momentum_scaled_max: 1e-6,
        }
    }
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("malformed config {}: {e}", path.display())))
    }

    /// Physical parameters with the exponents resolved (config values win,
    /// mismatches are caught by validation downstream).
    pub fn physical_params(&self) -> Result<PhysicalParams, CliError> {
        let (gamma_exact, theta_exact) = exponents_for(self.case, self.params.n_dim)
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(PhysicalParams {
            n_dim: self.params.n_dim,
            k_pressure: self.params.k,
            kappa: self.params.kappa,
            gamma: self.params.gamma.unwrap_or(gamma_exact),
            theta: self.params.theta.unwrap_or(theta_exact),
            delta: self.params.delta,
            lambda: self.params.lambda,
            m: self.params.m,
            n: self.params.n,
            alpha_ic: self.params.alpha,
            lambda_legacy: self.params.lambda_legacy,
        })
    }
}
