//! Talenti extremal profiles, the best Sobolev constant, and the cutoff
//! concentration sequence.
//!
//! The extremal of the critical Sobolev quotient on all of space is
//!
//! ```text
//! Phi_eps(x) = C_N eps^{(N-p)/p^2} ( eps + |x|^{p/(p-1)} )^{(p-N)/p},
//! C_N = ( N ((N-p)/(p-1))^{p-1} )^{(N-p)/p^2},
//! ```
//!
//! normalized so that `-Delta_p Phi = Phi^{p*-1}` on R^N, hence
//! `||grad Phi||_p^p = ||Phi||_{p*}^{p*}` for every `eps`. The concentration
//! sequence `psi_n = phi * Phi_{1/n}` multiplies by a smooth cutoff equal to 1
//! near the origin and supported in `B_rho`.

use crate::error::{Error, Result};
use crate::functionals::ProblemSpec;
use crate::grid::{build_radial_grid, integrate_abs_pow_within, radial_derivative, Field, RadialGrid};
use serde::Serialize;
use std::sync::Arc;

/// Concentration parameter, cutoff radius and target grid of a bubble family.
#[derive(Debug, Clone)]
pub struct BubbleSpec {
    epsilon: f64,
    cutoff_radius: f64,
    grid: Arc<RadialGrid>,
}

impl BubbleSpec {
    pub fn new(grid: Arc<RadialGrid>, epsilon: f64, cutoff_radius: f64) -> Result<Self> {
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(Error::invalid("epsilon", format!("need epsilon > 0, got {epsilon}")));
        }
        if !(cutoff_radius > 0.0 && cutoff_radius < grid.radius()) {
            return Err(Error::invalid(
                "cutoff_radius",
                format!(
                    "need 0 < cutoff_radius < grid radius {}, got {cutoff_radius}",
                    grid.radius()
                ),
            ));
        }
        Ok(BubbleSpec {
            epsilon,
            cutoff_radius,
            grid,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn cutoff_radius(&self) -> f64 {
        self.cutoff_radius
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        BubbleSpec::new(Arc::clone(&self.grid), epsilon, self.cutoff_radius)
    }
}

/// Quotient estimate `S_p ~ ||grad Phi||_p^p / ||Phi||_{p*}^p` together with
/// the raw norms and a truncation indicator.
#[derive(Debug, Clone, Serialize)]
pub struct SobolevEstimate {
    /// Estimated best constant.
    pub value: f64,
    /// `||grad Phi||_p^p` on the truncated domain.
    pub grad_norm_p: f64,
    /// `||Phi||_{p*}^{p*}` on the truncated domain.
    pub crit_norm: f64,
    /// Largest fraction of either integral carried by the outer 10% shell.
    pub truncation_indicator: f64,
    /// True when the indicator is below the trust threshold.
    pub trusted: bool,
}

impl SobolevEstimate {
    pub fn to_json(&self) -> String {
        crate::io::to_json_string(self)
    }
}

/// Trust threshold on the outer-shell fraction.
pub const TRUNCATION_TRUST_THRESHOLD: f64 = 1e-3;

/// The normalization constant `C_N` of the extremal profile.
pub fn c_constant(dim: usize, p: f64) -> f64 {
    let n = dim as f64;
    (n * ((n - p) / (p - 1.0)).powf(p - 1.0)).powf((n - p) / (p * p))
}

/// Pointwise extremal profile value at radius `r`.
pub fn talenti_value(dim: usize, p: f64, epsilon: f64, r: f64) -> f64 {
    let n = dim as f64;
    let k = p / (p - 1.0);
    c_constant(dim, p) * epsilon.powf((n - p) / (p * p)) * (epsilon + r.powf(k)).powf((p - n) / p)
}

/// Closed-form radial derivative of the extremal profile.
pub fn talenti_derivative(dim: usize, p: f64, epsilon: f64, r: f64) -> f64 {
    let n = dim as f64;
    let k = p / (p - 1.0);
    let m = (n - p) / p;
    if r == 0.0 {
        return 0.0;
    }
    -c_constant(dim, p)
        * epsilon.powf((n - p) / (p * p))
        * m
        * k
        * r.powf(k - 1.0)
        * (epsilon + r.powf(k)).powf(-m - 1.0)
}

/// Samples `Phi_eps` on the grid (no cutoff).
pub fn talenti_field(bubble: &BubbleSpec, problem: &ProblemSpec) -> Result<Field> {
    let (dim, p, eps) = (problem.dim(), problem.p(), bubble.epsilon());
    if dim != bubble.grid().dim() {
        return Err(Error::GridMismatch("bubble grid dimension differs from problem"));
    }
    Field::from_fn(bubble.grid(), |r| talenti_value(dim, p, eps, r))
}

/// Smooth cutoff: 1 on `[0, rho/2]`, quintic smoothstep down to 0 at `rho`.
pub fn cutoff_value(rho: f64, r: f64) -> f64 {
    if r <= 0.5 * rho {
        1.0
    } else if r >= rho {
        0.0
    } else {
        let x = (r - 0.5 * rho) / (0.5 * rho);
        1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
    }
}

/// Estimates the best Sobolev constant from the grid quadrature of the
/// extremal profile. The estimate is flagged untrusted when the outer 10%
/// shell carries more than [`TRUNCATION_TRUST_THRESHOLD`] of either integral.
pub fn estimate_sobolev_constant(
    bubble: &BubbleSpec,
    problem: &ProblemSpec,
) -> Result<SobolevEstimate> {
    let grid = bubble.grid();
    let phi = talenti_field(bubble, problem)?;
    let p = problem.p();
    let p_star = problem.p_star();

    let dphi = radial_derivative(grid, &phi)?;
    let grad_field = Field::new(
        Arc::clone(grid),
        dphi.values().iter().map(|d| d.abs()).collect(),
    )?;

    let grad_norm_p = integrate_abs_pow_within(grid, &grad_field, p, grid.radius())?;
    let crit_norm = integrate_abs_pow_within(grid, &phi, p_star, grid.radius())?;

    let shell = 0.9 * grid.radius();
    let grad_inner = integrate_abs_pow_within(grid, &grad_field, p, shell)?;
    let crit_inner = integrate_abs_pow_within(grid, &phi, p_star, shell)?;
    let grad_fraction = 1.0 - grad_inner / grad_norm_p;
    let crit_fraction = 1.0 - crit_inner / crit_norm;
    let truncation_indicator = grad_fraction.max(crit_fraction);

    let value = grad_norm_p / crit_norm.powf(p / p_star);
    Ok(SobolevEstimate {
        value,
        grad_norm_p,
        crit_norm,
        truncation_indicator,
        trusted: truncation_indicator < TRUNCATION_TRUST_THRESHOLD,
    })
}

/// Reference-domain estimate of `S_p`: a large graded ball sized so the
/// truncation indicator is far below threshold.
pub fn sobolev_constant_reference(dim: usize, p: f64) -> Result<SobolevEstimate> {
    let grid = build_radial_grid(dim, 1024.0, 4096, 8.0)?;
    let spec = ProblemSpec::scalar(dim, p, 0.0, crate::functionals::PerturbationKind::None)?;
    let bubble = BubbleSpec::new(grid, 1.0 / 16.0, 512.0)?;
    estimate_sobolev_constant(&bubble, &spec)
}

/// Width of the bubble core: the radius where `|x|^{p/(p-1)} = eps`.
pub fn core_width(p: f64, epsilon: f64) -> f64 {
    epsilon.powf((p - 1.0) / p)
}

/// The cutoff concentration member `psi_n = phi * Phi_{1/n}`.
///
/// Refuses `n` when fewer than 4 grid nodes fall strictly inside the bubble
/// core, naming the node spacing that would be required.
pub fn psi_sequence(bubble: &BubbleSpec, problem: &ProblemSpec, n: u32) -> Result<Field> {
    if n < 1 {
        return Err(Error::invalid("n", "need n >= 1"));
    }
    let eps = 1.0 / n as f64;
    let width = core_width(problem.p(), eps);
    let inside = bubble
        .grid()
        .nodes()
        .iter()
        .filter(|&&r| r > 0.0 && r < width)
        .count();
    if inside < 4 {
        return Err(Error::Resolution {
            core_width: width,
            required_spacing: width / 4.0,
            available_nodes: inside,
        });
    }
    let (dim, p) = (problem.dim(), problem.p());
    let rho = bubble.cutoff_radius();
    Field::from_fn(bubble.grid(), |r| {
        cutoff_value(rho, r) * talenti_value(dim, p, eps, r)
    })
}

/// Mass fractions of `|f|^s` inside the balls `B_{rho_k}`.
pub fn concentration_profile(f: &Field, s: f64, radii: &[f64]) -> Result<Vec<(f64, f64)>> {
    let grid = f.grid();
    if let Some(&bad) = radii.iter().find(|&&r| !(r >= 0.0 && r <= grid.radius())) {
        return Err(Error::invalid(
            "radii",
            format!("radius {bad} outside [0, {}]", grid.radius()),
        ));
    }
    let total = integrate_abs_pow_within(grid, f, s, grid.radius())?;
    if total <= 0.0 {
        return Ok(radii.iter().map(|&r| (r, 0.0)).collect());
    }
    radii
        .iter()
        .map(|&rho| {
            let inner = integrate_abs_pow_within(grid, f, s, rho)?;
            Ok((rho, inner / total))
        })
        .collect()
}

/// Geometric-sequence extrapolation (Aitken) of the common limit of the
/// `psi_n` norms; falls back to the last entry when increments stagnate.
pub fn extrapolate_limit(values: &[f64]) -> f64 {
    if values.len() < 3 {
        return *values.last().unwrap_or(&f64::NAN);
    }
    let k = values.len();
    let d1 = values[k - 1] - values[k - 2];
    let d2 = values[k - 2] - values[k - 3];
    if d2 == 0.0 || (d1 / d2).abs() >= 1.0 {
        return values[k - 1];
    }
    let ratio = d1 / d2;
    values[k - 1] + d1 * ratio / (1.0 - ratio)
}
