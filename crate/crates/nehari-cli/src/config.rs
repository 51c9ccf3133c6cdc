//! Flat JSON experiment configuration with dotted command-line overrides.

use anyhow::{anyhow, bail, Context, Result};
use nehari_core::functionals::{PerturbationKind, ProblemSpec};
use nehari_core::grid::{build_radial_grid, RadialGrid};
use nehari_core::nehari::FiberBranch;
use nehari_core::solver::{SeedKind, SolveConfig};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemMode {
    Scalar,
    System,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub mode: ProblemMode,
    pub dim: usize,
    pub p: f64,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(default = "default_perturbation")]
    pub f: PerturbationKind,
    #[serde(default = "default_perturbation")]
    pub g: PerturbationKind,
}

fn default_q() -> f64 {
    2.0
}

fn default_perturbation() -> PerturbationKind {
    PerturbationKind::None
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub radius: f64,
    pub nodes: usize,
    #[serde(default = "default_grading")]
    pub grading: f64,
}

fn default_grading() -> f64 {
    4.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveSection {
    pub max_iterations: usize,
    pub initial_step: f64,
    pub shrink: f64,
    pub slope_fraction: f64,
    pub stationarity_tol: f64,
    pub energy_tol: f64,
    pub seed_kind: SeedKind,
    pub branch: FiberBranch,
    pub energy_floor: f64,
}

impl Default for SolveSection {
    fn default() -> Self {
        let d = SolveConfig::default();
        SolveSection {
            max_iterations: d.max_iterations,
            initial_step: d.initial_step,
            shrink: d.shrink,
            slope_fraction: d.slope_fraction,
            stationarity_tol: d.stationarity_tol,
            energy_tol: d.energy_tol,
            seed_kind: d.seed,
            branch: d.branch,
            energy_floor: d.energy_floor,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BubbleConfig {
    pub epsilon: f64,
    /// Cutoff radius as an absolute length; 0 means half the grid radius.
    pub cutoff_radius: f64,
}

impl Default for BubbleConfig {
    fn default() -> Self {
        BubbleConfig {
            epsilon: 1.0,
            cutoff_radius: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PsConfig {
    pub n_list: Vec<u32>,
    pub concentration_fraction: f64,
    pub level_rel_tol: f64,
    pub ball_fraction: f64,
}

impl Default for PsConfig {
    fn default() -> Self {
        PsConfig {
            n_list: vec![2, 4, 8, 16, 32],
            concentration_fraction: 0.9,
            level_rel_tol: 0.02,
            ball_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub lambdas: Vec<f64>,
    pub mus: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            lambdas: vec![0.0, 0.5, 1.0],
            mus: vec![],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SobolevConfig {
    pub epsilons: Vec<f64>,
}

impl Default for SobolevConfig {
    fn default() -> Self {
        SobolevConfig {
            epsilons: vec![1.0, 0.25, 0.0625],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub solve: SolveSection,
    #[serde(default)]
    pub bubble: BubbleConfig,
    #[serde(default)]
    pub ps: PsConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub sobolev: SobolevConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    42
}

impl ExperimentConfig {
    /// Loads, applies dotted overrides, and deserializes.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut value: serde_json::Value =
            serde_json::from_str(&text).context("config is not valid JSON")?;
        for entry in overrides {
            apply_override(&mut value, entry)?;
        }
        let config: ExperimentConfig =
            serde_json::from_value(value).context("config does not match the expected schema")?;
        Ok(config)
    }

    /// Validates every admissibility condition and builds the problem spec.
    pub fn build_spec(&self) -> Result<ProblemSpec> {
        let p = &self.problem;
        let spec = match p.mode {
            ProblemMode::Scalar => ProblemSpec::scalar(p.dim, p.p, p.lambda, p.f),
            ProblemMode::System => ProblemSpec::system(
                p.dim, p.p, p.q, p.alpha, p.beta, p.lambda, p.mu, p.f, p.g,
            ),
        };
        spec.map_err(|e| anyhow!("invalid problem: {e}"))
    }

    pub fn build_grid(&self) -> Result<Arc<RadialGrid>> {
        build_radial_grid(
            self.problem.dim,
            self.grid.radius,
            self.grid.nodes,
            self.grid.grading,
        )
        .map_err(|e| anyhow!("invalid grid: {e}"))
    }

    pub fn build_solve_config(&self) -> SolveConfig {
        SolveConfig {
            max_iterations: self.solve.max_iterations,
            initial_step: self.solve.initial_step,
            shrink: self.solve.shrink,
            slope_fraction: self.solve.slope_fraction,
            stationarity_tol: self.solve.stationarity_tol,
            energy_tol: self.solve.energy_tol,
            seed: self.solve.seed_kind,
            branch: self.solve.branch,
            energy_floor: self.solve.energy_floor,
        }
    }

    pub fn cutoff_radius(&self) -> f64 {
        if self.bubble.cutoff_radius > 0.0 {
            self.bubble.cutoff_radius
        } else {
            0.5 * self.grid.radius
        }
    }

    /// Output directory resolution: flag beats config beats environment.
    pub fn resolve_output_dir(&self, flag: Option<&Path>) -> PathBuf {
        if let Some(dir) = flag {
            return dir.to_path_buf();
        }
        if let Some(dir) = &self.output_dir {
            return dir.clone();
        }
        if let Ok(dir) = std::env::var("NEHARI_OUTPUT_DIR") {
            if !dir.is_empty() {
                return PathBuf::from(dir);
            }
        }
        PathBuf::from("out")
    }
}

/// Applies `path.to.key=json_value` to the raw config value.
fn apply_override(value: &mut serde_json::Value, entry: &str) -> Result<()> {
    let (path, raw) = entry
        .split_once('=')
        .ok_or_else(|| anyhow!("override `{entry}` is not of the form key.path=value"))?;
    let parsed: serde_json::Value = serde_json::from_str(raw)
        .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    let mut cursor = value;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if i + 1 == parts.len() {
            match cursor {
                serde_json::Value::Object(map) => {
                    map.insert(part.to_string(), parsed);
                    return Ok(());
                }
                _ => bail!("override path `{path}` does not address an object"),
            }
        }
        cursor = match cursor {
            serde_json::Value::Object(map) => map
                .entry(part.to_string())
                .or_insert_with(|| serde_json::Value::Object(Default::default())),
            _ => bail!("override path `{path}` does not address an object"),
        };
    }
    unreachable!("split always yields at least one part")
}
