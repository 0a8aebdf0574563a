//! Run configuration, read from TOML. Every key is optional; missing
//! keys take the per-experiment defaults. `--experiment` may supply the name.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use heatpath::{BoundaryCondition, ManifoldSpec64};
use serde::Deserialize;

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ManifoldConfig {
    /// `euclidean`, `torus`, `sphere` or `interval`.
    pub kind: String,
    pub dim: Option<usize>,
    pub sides: Option<Vec<f64>>,
    pub radius: Option<f64>,
    pub length: Option<f64>,
    /// `dirichlet` or `neumann`.
    pub bc: Option<String>,
}

impl ManifoldConfig {
    pub fn to_spec(&self) -> anyhow::Result<ManifoldSpec64> {
        let spec = match self.kind.as_str() {
            "euclidean" => ManifoldSpec64::euclidean(self.dim.unwrap_or(1))?,
            "torus" => ManifoldSpec64::flat_torus(self.sides.clone().unwrap_or_else(|| vec![1.0]))?,
            "sphere" => ManifoldSpec64::sphere(self.radius.unwrap_or(1.0))?,
            "interval" => {
                let bc = match self.bc.as_deref().unwrap_or("dirichlet") {
                    "dirichlet" => BoundaryCondition::Dirichlet,
                    "neumann" => BoundaryCondition::Neumann,
                    other => bail!("manifold.bc: unknown boundary condition `{other}`"),
                };
                ManifoldSpec64::interval(self.length.unwrap_or(std::f64::consts::PI), bc)?
            }
            other => bail!("manifold.kind: unknown manifold `{other}` (expected euclidean, torus, sphere, interval)"),
        };
        Ok(spec)
    }
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: String,
    pub manifold: Option<ManifoldConfig>,
    pub t: Option<f64>,
    pub n_list: Option<Vec<usize>>,
    pub resolution: Option<usize>,
    pub seed: Option<u64>,
    pub n_samples: Option<usize>,
    /// Kernel family for `kernel-converge`.
    pub family: Option<String>,
    /// `none`, `cos`, `magnetic`.
    pub weight: Option<String>,
    /// Overrides the experiment's pass threshold.
    pub tolerance: Option<f64>,
    /// Output directory.
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn named(experiment: &str) -> Self {
        Self {
            experiment: experiment.to_string(),
            ..Self::default()
        }
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).map_err(|e| anyhow::anyhow!("invalid config: {e}"))
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(20240601)
    }

    pub fn manifold_or(&self, default: ManifoldSpec64) -> anyhow::Result<ManifoldSpec64> {
        self.manifold.as_ref().map_or(Ok(default), ManifoldConfig::to_spec)
    }
}
