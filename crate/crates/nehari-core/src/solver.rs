//! Nehari-constrained energy minimization and critical levels.
//!
//! The minimizers run a projected descent: project the current field onto the
//! Nehari set along its fiber, take an Armijo-damped step against the nodal
//! gradient, re-project, and keep the best point seen. The unperturbed
//! infimum entering a critical level is never taken from mesh minimization
//! (it is not attained on bounded domains; discrete minimizers concentrate);
//! it comes from the Sobolev constant via the extremal-profile quadrature,
//! with the mesh value reported alongside as an upper-bound diagnostic.

use crate::bubbles::{sobolev_constant_reference, talenti_value, BubbleSpec};
use crate::error::{Error, Result};
use crate::functionals::{nodal_gradient_i, nodal_gradient_j, ProblemSpec};
use crate::grid::{Field, RadialGrid};
use crate::nehari::{
    project_scalar_branch, project_system, project_system_perturbed, FiberBranch, NehariFields,
    NehariPoint,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Seed field for the descent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SeedKind {
    /// Smooth bump `(1 - (r/R)^2)_+^2`.
    Bump,
    /// Truncated extremal profile with the given concentration parameter.
    Bubble { epsilon: f64 },
    /// Bump modulated by seeded smooth noise.
    Random { seed: u64 },
}

/// Armijo-descent configuration.
#[derive(Debug, Clone, Serialize)]
pub struct SolveConfig {
    pub max_iterations: usize,
    /// Initial trial step of the line search.
    pub initial_step: f64,
    /// Multiplicative step shrink on rejection, in (0,1).
    pub shrink: f64,
    /// Armijo slope fraction.
    pub slope_fraction: f64,
    /// Fiber-stationarity tolerance required of returned points.
    pub stationarity_tol: f64,
    /// Energy-stagnation threshold declaring convergence.
    pub energy_tol: f64,
    pub seed: SeedKind,
    /// Fiber critical point selected when a concave term splits the fiber.
    pub branch: FiberBranch,
    /// Divergence guard: stop when the energy falls below this floor.
    pub energy_floor: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            max_iterations: 400,
            initial_step: 1.0,
            shrink: 0.5,
            slope_fraction: 1e-4,
            stationarity_tol: 1e-8,
            energy_tol: 1e-12,
            seed: SeedKind::Bump,
            branch: FiberBranch::HighestEnergy,
            energy_floor: -1e12,
        }
    }
}

impl SolveConfig {
    fn validate(&self) -> Result<()> {
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::invalid("shrink", "must lie in (0, 1)"));
        }
        if !(self.initial_step > 0.0)
            || !(self.stationarity_tol > 0.0)
            || !(self.energy_tol > 0.0)
            || !(self.slope_fraction > 0.0)
        {
            return Err(Error::invalid(
                "solve config",
                "steps and tolerances must be positive",
            ));
        }
        Ok(())
    }
}

/// Critical-level report: the two summands, their sum, and provenance.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalLevelReport {
    /// Unperturbed Nehari infimum (first summand).
    pub inf_j0: f64,
    /// Perturbed infimum over the Nehari set united with zero (second summand).
    pub inf_j_lambda: f64,
    /// `inf_j0 + inf_j_lambda`, exactly as stored.
    pub c_star: f64,
    /// Best Sobolev constant used by the first summand.
    pub sobolev_constant: f64,
    /// Route that produced the first summand.
    pub provenance: String,
    /// Energy of the best perturbed Nehari point found by the solver.
    pub nehari_min_energy: f64,
    /// Mesh-minimization diagnostic for the unperturbed infimum (upper bound).
    pub mesh_inf_j0_diagnostic: f64,
    /// Solver convergence flag for the perturbed minimization.
    pub converged: bool,
}

impl CriticalLevelReport {
    pub fn to_json(&self) -> String {
        crate::io::to_json_string(self)
    }
}

/// Builds the configured seed field (Dirichlet end pinned to zero).
pub fn seed_field(grid: &Arc<RadialGrid>, spec: &ProblemSpec, seed: SeedKind) -> Result<Field> {
    let radius = grid.radius();
    match seed {
        SeedKind::Bump => Field::from_fn(grid, |r| {
            let x = r / radius;
            let b = (1.0 - x * x).max(0.0);
            b * b
        }),
        SeedKind::Bubble { epsilon } => {
            let rho = 0.5 * radius;
            let (dim, p) = (spec.dim(), spec.p());
            Field::from_fn(grid, |r| {
                crate::bubbles::cutoff_value(rho, r) * talenti_value(dim, p, epsilon, r)
            })
        }
        SeedKind::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let amp: f64 = rng.gen_range(0.5..2.0);
            let phase: f64 = rng.gen_range(0.0..std::f64::consts::PI);
            let wobble: f64 = rng.gen_range(0.0..0.45);
            Field::from_fn(grid, |r| {
                let x = r / radius;
                let b = (1.0 - x * x).max(0.0);
                amp * b * b * (1.0 + wobble * (3.0 * x + phase).sin())
            })
        }
    }
}

fn l2_norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Projected Armijo descent over the scalar Nehari set.
///
/// Returns the best point found; `converged` is false when the iteration cap
/// was reached while the energy was still moving.
pub fn minimize_scalar_nehari(
    spec: &ProblemSpec,
    grid: &Arc<RadialGrid>,
    config: &SolveConfig,
) -> Result<NehariPoint> {
    config.validate()?;
    let seed = seed_field(grid, spec, config.seed)?;
    let mut current = match project_scalar_branch(spec, &seed, config.branch) {
        Ok(pt) => pt,
        Err(e) => return Err(e),
    };
    let mut best = current.clone();
    let mut step = config.initial_step;
    let mut converged = false;
    let mut stagnant = 0usize;

    for _ in 0..config.max_iterations {
        let u = match &current.fields {
            NehariFields::Scalar(u) => u.clone(),
            NehariFields::System(..) => unreachable!("scalar solver"),
        };
        let g = nodal_gradient_j(spec, &u)?;
        let gnorm2 = l2_norm_sq(&g);
        if gnorm2 == 0.0 {
            converged = true;
            break;
        }
        // Scale-free trial step: target a displacement comparable to the field.
        let gmax = g.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let natural = u.max_abs().max(1e-30) / gmax.max(1e-300);
        let mut s = step.min(natural * 4.0).max(natural * 1e-12);
        let mut accepted = false;
        for _ in 0..60 {
            let trial_values: Vec<f64> = u
                .values()
                .iter()
                .zip(&g)
                .map(|(ui, gi)| ui - s * gi)
                .collect();
            let trial = match Field::new(Arc::clone(grid), trial_values) {
                Ok(f) => f,
                Err(_) => {
                    s *= config.shrink;
                    continue;
                }
            };
            if trial.is_zero() {
                s *= config.shrink;
                continue;
            }
            match project_scalar_branch(spec, &trial, config.branch) {
                Ok(pt) => {
                    if pt.energy <= current.energy - config.slope_fraction * s * gnorm2 {
                        current = pt;
                        accepted = true;
                        step = s * 2.0;
                        break;
                    }
                }
                Err(_) => {
                    // The trial ray lost its fiber critical point; shrink.
                }
            }
            s *= config.shrink;
        }
        if current.energy < best.energy {
            best = current.clone();
        }
        if current.energy < config.energy_floor {
            best.converged = false;
            return Ok(best);
        }
        if !accepted {
            stagnant += 1;
            step = config.initial_step;
            if stagnant >= 3 {
                converged = true;
                break;
            }
        } else {
            let decrease = (best.energy - current.energy).abs();
            if decrease <= config.energy_tol * (1.0 + current.energy.abs()) {
                stagnant += 1;
                if stagnant >= 5 {
                    converged = true;
                    break;
                }
            } else {
                stagnant = 0;
            }
        }
    }

    best.converged = converged && best.residuals.iter().all(|r| *r < config.stationarity_tol);
    Ok(best)
}

/// Projected Armijo descent over the system Nehari set. The projection is the
/// closed form at `lambda = mu = 0` and damped Newton otherwise; a coupling
/// degeneration (`R = 0`) along the descent triggers one reseed.
pub fn minimize_system_nehari(
    spec: &ProblemSpec,
    grid: &Arc<RadialGrid>,
    config: &SolveConfig,
) -> Result<NehariPoint> {
    spec.require_system()?;
    config.validate()?;

    let project = |u: &Field, v: &Field| -> Result<NehariPoint> {
        if spec.lambda() == 0.0 && spec.mu() == 0.0 {
            project_system(spec, u, v)
        } else {
            project_system_perturbed(spec, u, v)
        }
    };

    let mut reseeds = 0usize;
    let mut seed_u = seed_field(grid, spec, config.seed)?;
    let mut seed_v = seed_u.clone();
    let mut current = loop {
        match project(&seed_u, &seed_v) {
            Ok(pt) => break pt,
            Err(e) => {
                reseeds += 1;
                if reseeds > 3 {
                    return Err(e);
                }
                seed_u = seed_field(grid, spec, SeedKind::Random { seed: 41 + reseeds as u64 })?;
                seed_v = seed_field(grid, spec, SeedKind::Random { seed: 97 + reseeds as u64 })?;
            }
        }
    };
    let mut best = current.clone();
    let mut step = config.initial_step;
    let mut converged = false;
    let mut stagnant = 0usize;

    for _ in 0..config.max_iterations {
        let (u, v) = match &current.fields {
            NehariFields::System(u, v) => (u.clone(), v.clone()),
            NehariFields::Scalar(_) => unreachable!("system solver"),
        };
        let (gu, gv) = nodal_gradient_i(spec, &u, &v)?;
        let gnorm2 = l2_norm_sq(&gu) + l2_norm_sq(&gv);
        if gnorm2 == 0.0 {
            converged = true;
            break;
        }
        let gmax = gu
            .iter()
            .chain(gv.iter())
            .fold(0.0_f64, |m, x| m.max(x.abs()));
        let scale = u.max_abs().max(v.max_abs()).max(1e-30);
        let natural = scale / gmax.max(1e-300);
        let mut s = step.min(natural * 4.0).max(natural * 1e-12);
        let mut accepted = false;
        for _ in 0..60 {
            let tu: Vec<f64> = u.values().iter().zip(&gu).map(|(x, g)| x - s * g).collect();
            let tv: Vec<f64> = v.values().iter().zip(&gv).map(|(x, g)| x - s * g).collect();
            let (fu, fv) = match (
                Field::new(Arc::clone(grid), tu),
                Field::new(Arc::clone(grid), tv),
            ) {
                (Ok(a), Ok(b)) => (a, b),
                _ => {
                    s *= config.shrink;
                    continue;
                }
            };
            match project(&fu, &fv) {
                Ok(pt) => {
                    if pt.energy <= current.energy - config.slope_fraction * s * gnorm2 {
                        current = pt;
                        accepted = true;
                        step = s * 2.0;
                        break;
                    }
                }
                Err(_) => {}
            }
            s *= config.shrink;
        }
        if current.energy < best.energy {
            best = current.clone();
        }
        if current.energy < config.energy_floor {
            best.converged = false;
            return Ok(best);
        }
        if !accepted {
            stagnant += 1;
            step = config.initial_step;
            if stagnant >= 3 {
                converged = true;
                break;
            }
        } else {
            let decrease = (best.energy - current.energy).abs();
            if decrease <= config.energy_tol * (1.0 + current.energy.abs()) {
                stagnant += 1;
                if stagnant >= 5 {
                    converged = true;
                    break;
                }
            } else {
                stagnant = 0;
            }
        }
    }

    best.converged = converged && best.residuals.iter().all(|r| *r < config.stationarity_tol);
    Ok(best)
}

/// `c*(lambda) = inf_{N_{J_0}} J_0 + inf_{N_{J_lambda} + {0}} J_lambda`.
///
/// The first summand is `(1/N) S_p^{N/p}` through the extremal-profile route;
/// the second is `min(0, solver energy)` since the zero field always competes.
pub fn critical_level_scalar(
    spec: &ProblemSpec,
    grid: &Arc<RadialGrid>,
    config: &SolveConfig,
) -> Result<CriticalLevelReport> {
    let n_over_p = spec.dim() as f64 / spec.p();
    let sobolev = sobolev_constant_reference(spec.dim(), spec.p())?;
    let inf_j0 = sobolev.value.powf(n_over_p) / spec.dim() as f64;

    let perturbed = minimize_scalar_nehari(spec, grid, config)?;
    let inf_j_lambda = perturbed.energy.min(0.0);

    let zero_spec = spec.with_parameters(0.0, 0.0);
    let mesh = minimize_scalar_nehari(&zero_spec, grid, config)?;

    Ok(CriticalLevelReport {
        inf_j0,
        inf_j_lambda,
        c_star: inf_j0 + inf_j_lambda,
        sobolev_constant: sobolev.value,
        provenance: format!(
            "first summand via extremal-profile quadrature (trusted: {}); second summand \
             min(0, projected-descent minimum)",
            sobolev.trusted
        ),
        nehari_min_energy: perturbed.energy,
        mesh_inf_j0_diagnostic: mesh.energy,
        converged: perturbed.converged,
    })
}

/// `c*(lambda, mu)` for the system. For `p = q` the first summand is the
/// closed identity `(p/(N-p)) S_p^{N/p}`; otherwise it is the unperturbed
/// solver minimum, cross-checked against the Holder lower bound.
pub fn critical_level_system(
    spec: &ProblemSpec,
    grid: &Arc<RadialGrid>,
    config: &SolveConfig,
) -> Result<CriticalLevelReport> {
    spec.require_system()?;
    let s_p = sobolev_constant_reference(spec.dim(), spec.p())?;
    let (first, provenance, mesh_diag) = if spec.p() == spec.q() {
        let value = proposition_value(spec, s_p.value)?;
        let zero = spec.with_parameters(0.0, 0.0);
        let mesh = minimize_system_nehari(&zero, grid, config)?;
        (
            value,
            format!(
                "first summand via the p=q closed identity (p/(N-p)) S_p^{{N/p}} \
                 (trusted: {}); mesh minimum reported as diagnostic",
                s_p.trusted
            ),
            mesh.energy,
        )
    } else {
        let s_q = sobolev_constant_reference(spec.dim(), spec.q())?;
        let zero = spec.with_parameters(0.0, 0.0);
        let mesh = minimize_system_nehari(&zero, grid, config)?;
        let bound = holder_lower_bound(spec, s_p.value, s_q.value)?;
        (
            mesh.energy,
            format!(
                "first summand via unperturbed mesh minimization; Holder lower bound {}",
                crate::io::fmt_f64(bound)
            ),
            mesh.energy,
        )
    };

    let (inf_second, nehari_energy, converged) = if spec.lambda() == 0.0 && spec.mu() == 0.0 {
        // Zero attains the second infimum and no separate solve is needed.
        (0.0, 0.0, true)
    } else {
        let perturbed = minimize_system_nehari(spec, grid, config)?;
        (perturbed.energy.min(0.0), perturbed.energy, perturbed.converged)
    };

    Ok(CriticalLevelReport {
        inf_j0: first,
        inf_j_lambda: inf_second,
        c_star: first + inf_second,
        sobolev_constant: s_p.value,
        provenance,
        nehari_min_energy: nehari_energy,
        mesh_inf_j0_diagnostic: mesh_diag,
        converged,
    })
}

/// Holder lower bound on the unperturbed system infimum:
///
/// ```text
/// inf I_{0,0} >= (alpha+1)(1/p - 1/r) [ S_p S_q^{p(beta+1)/(q(alpha+1))} ]^{r/(r-p)}
/// ```
pub fn holder_lower_bound(spec: &ProblemSpec, s_p: f64, s_q: f64) -> Result<f64> {
    spec.require_system()?;
    if !(s_p > 0.0 && s_q > 0.0) {
        return Err(Error::invalid("sobolev constants", "must be positive"));
    }
    let r = crate::nehari::r_exponent(spec)?;
    let (p, q) = (spec.p(), spec.q());
    let (a1, b1) = (spec.alpha() + 1.0, spec.beta() + 1.0);
    let bracket = s_p * s_q.powf(p * b1 / (q * a1));
    Ok(a1 * (1.0 / p - 1.0 / r) * bracket.powf(r / (r - p)))
}

/// The `p = q` closed value `(p/(N-p)) S_p^{N/p}` of the unperturbed system
/// infimum.
pub fn proposition_value(spec: &ProblemSpec, s_p: f64) -> Result<f64> {
    spec.require_system()?;
    if spec.p() != spec.q() {
        return Err(Error::Admissibility(
            "closed identity needs p = q".into(),
        ));
    }
    let n = spec.dim() as f64;
    let p = spec.p();
    Ok(p / (n - p) * s_p.powf(n / p))
}

/// Warm-started refinement ladder for the unperturbed scalar minimization:
/// each level seeds a bubble whose core spans a fixed number of nodes, so
/// finer meshes start deeper and the energies decrease toward the
/// Sobolev-based value from above.
pub fn scalar_ground_state_ladder(
    spec: &ProblemSpec,
    grids: &[Arc<RadialGrid>],
    config: &SolveConfig,
) -> Result<Vec<f64>> {
    let mut energies = Vec::with_capacity(grids.len());
    for grid in grids {
        // Core covering ~192 nodes of this mesh.
        let idx = 192.min(grid.node_count() - 2);
        let width = grid.nodes()[idx];
        let epsilon = width.powf(spec.p() / (spec.p() - 1.0));
        let mut cfg = config.clone();
        cfg.seed = SeedKind::Bubble { epsilon };
        let pt = minimize_scalar_nehari(spec, grid, &cfg)?;
        energies.push(pt.energy);
    }
    Ok(energies)
}

/// Convenience for sweep outputs: one row per parameter pair.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub mu: f64,
    pub inf_j0: f64,
    pub inf_j_lambda: f64,
    pub c_star: f64,
    pub converged: bool,
}

/// Runs the scalar (or system) critical level over a list of parameters.
pub fn sweep(
    spec: &ProblemSpec,
    grid: &Arc<RadialGrid>,
    config: &SolveConfig,
    parameters: &[(f64, f64)],
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(parameters.len());
    for &(lambda, mu) in parameters {
        let local = spec.with_parameters(lambda, mu);
        let report = if spec.is_system() {
            critical_level_system(&local, grid, config)?
        } else {
            critical_level_scalar(&local, grid, config)?
        };
        rows.push(SweepRow {
            lambda,
            mu,
            inf_j0: report.inf_j0,
            inf_j_lambda: report.inf_j_lambda,
            c_star: report.c_star,
            converged: report.converged,
        });
    }
    Ok(rows)
}

/// Re-exported for configs that need to construct bubbles next to solves.
pub fn bubble_for_grid(grid: &Arc<RadialGrid>, epsilon: f64, cutoff: f64) -> Result<BubbleSpec> {
    BubbleSpec::new(Arc::clone(grid), epsilon, cutoff)
}
