//! Experiment configuration: a JSON document whose fields can be overridden
//! from the command line.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sprp_core::limits::RhoSpec;
use sprp_core::{load_tabulated_csv, JumpDensity, ModelParams};

use crate::error::CliError;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub model: ModelBlock,
    #[serde(default)]
    pub run: RunBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub d: Option<usize>,
    pub theta: Option<f64>,
    pub density: Option<DensitySpec>,
    pub n: Option<usize>,
    pub rho: Option<RhoSpec>,
    pub side: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    Gaussian { covariance: Vec<Vec<f64>> },
    /// `variance · I` in the model dimension.
    Isotropic { variance: f64 },
    /// One-dimensional density tabulated in a two-column CSV file.
    Tabulated { path: PathBuf },
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    pub replicas: Option<usize>,
    pub seed: Option<u64>,
    pub epsilon: Option<f64>,
    pub bins: Option<usize>,
    pub tau: Option<f64>,
    pub steps: Option<usize>,
    pub t: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    /// Data file (CSV or JSONL); standard output when absent.
    pub data: Option<PathBuf>,
    /// JSON report file.
    pub report: Option<PathBuf>,
    /// Histogram CSV, where the subcommand produces one.
    pub histogram: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }

    pub fn replicas(&self) -> Result<usize, CliError> {
        match self.run.replicas.unwrap_or(1) {
            0 => Err(CliError::Config("run.replicas must be at least 1".into())),
            m => Ok(m),
        }
    }

    pub fn seed(&self) -> u64 {
        self.run.seed.unwrap_or(0)
    }

    fn theta(&self) -> Result<f64, CliError> {
        let theta = self.model.theta.unwrap_or(1.0);
        if theta > 0.0 && theta.is_finite() {
            Ok(theta)
        } else {
            Err(CliError::Config(format!("model.theta must be positive, got {theta}")))
        }
    }

    pub fn density(&self) -> Result<Arc<JumpDensity>, CliError> {
        let spec = self.model.density.as_ref().ok_or_else(|| CliError::Config("model.density is required".into()))?;
        let density = match spec {
            DensitySpec::Gaussian { covariance } => {
                let d = covariance.len();
                if d == 0 || covariance.iter().any(|row| row.len() != d) {
                    return Err(CliError::Config("model.density.covariance must be a square matrix".into()));
                }
                let flat: Vec<f64> = covariance.iter().flatten().copied().collect();
                JumpDensity::gaussian(DMatrix::from_row_slice(d, d, &flat))
            }
            DensitySpec::Isotropic { variance } => {
                let d = self.model.d.ok_or_else(|| CliError::Config("model.d is required for an isotropic density".into()))?;
                JumpDensity::isotropic(d, *variance)
            }
            DensitySpec::Tabulated { path } => load_tabulated_csv(path),
        }
        .map_err(|e| CliError::Config(format!("model.density: {e}")))?;
        if let Some(d) = self.model.d {
            if d != density.dim() {
                return Err(CliError::Config(format!("model.d = {d} but the density has dimension {}", density.dim())));
            }
        }
        Ok(Arc::new(density))
    }

    pub fn rho_spec(&self) -> Result<RhoSpec, CliError> {
        self.model.rho.ok_or_else(|| CliError::Config("model.rho is required here".into()))
    }

    /// Model parameters at the configured `N`.
    pub fn params(&self) -> Result<ModelParams, CliError> {
        let n = self.model.n.ok_or_else(|| CliError::Config("model.n is required".into()))?;
        self.params_at(n)
    }

    pub fn params_at(&self, n: usize) -> Result<ModelParams, CliError> {
        let density = self.density()?;
        let theta = self.theta()?;
        let built = match (self.model.rho, self.model.side) {
            (Some(_), Some(_)) => return Err(CliError::Config("give either model.rho or model.side, not both".into())),
            (None, None) => return Err(CliError::Config("one of model.rho or model.side is required".into())),
            (Some(spec), None) => ModelParams::with_density(density, theta, n, spec.at(n)),
            (None, Some(side)) => ModelParams::new(density, theta, n, side),
        };
        built.map_err(|e| CliError::Config(format!("model: {e}")))
    }

    pub fn theta_value(&self) -> Result<f64, CliError> {
        self.theta()
    }
}
