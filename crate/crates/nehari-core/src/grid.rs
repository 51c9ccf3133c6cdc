//! Radial discretization of a ball in R^N.
//!
//! A [`RadialGrid`] stores strictly increasing radii `0 = r_0 < ... < r_M = R`
//! together with quadrature weights against the measure
//! `sigma_{N-1} r^{N-1} dr`, so that a weighted sum over nodes approximates the
//! volume integral over the ball `B_R`. Weights come from exact moment
//! integration of the piecewise-linear interpolant (the trapezoidal rule
//! applied against the radial density), which makes constants and linear
//! fields integrate exactly. [`Field`] is a real sample of a radial function
//! on such a grid. Both are immutable after construction.

use crate::error::{Error, Result};
use serde::Serialize;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

/// Gamma(n/2) for positive integer `n`, by the half-integer recursion.
fn gamma_of_half(n: usize) -> f64 {
    assert!(n >= 1);
    if n % 2 == 0 {
        // Gamma(k) = (k-1)!
        let k = n / 2;
        (1..k).map(|j| j as f64).product()
    } else {
        // Gamma(1/2 + k) = (2k)! sqrt(pi) / (4^k k!)
        let k = (n - 1) / 2;
        let mut v = PI.sqrt();
        for j in 0..k {
            v *= 0.5 + j as f64;
        }
        v
    }
}

/// Surface area of the unit (N-1)-sphere: `2 pi^{N/2} / Gamma(N/2)`.
pub fn unit_sphere_area(dim: usize) -> f64 {
    2.0 * PI.powf(dim as f64 / 2.0) / gamma_of_half(dim)
}

/// Volume of the N-ball of radius `r`.
pub fn ball_volume(dim: usize, r: f64) -> f64 {
    unit_sphere_area(dim) * r.powi(dim as i32) / dim as f64
}

/// Nonuniform radial mesh on `B_R` with quadrature weights.
#[derive(Debug)]
pub struct RadialGrid {
    dim: usize,
    radius: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Builds a graded radial grid: `r_i = R (i/M)^grading`.
///
/// `grading = 1` is uniform spacing; `grading > 1` clusters nodes near the
/// origin geometrically. `node_count` is the number of nodes including both
/// endpoints.
pub fn build_radial_grid(
    dim: usize,
    radius: f64,
    node_count: usize,
    grading: f64,
) -> Result<Arc<RadialGrid>> {
    if dim < 3 {
        return Err(Error::invalid("dim", format!("need dim >= 3, got {dim}")));
    }
    if !radius.is_finite() || radius <= 0.0 {
        return Err(Error::invalid("radius", format!("need radius > 0, got {radius}")));
    }
    if node_count < 16 {
        return Err(Error::invalid(
            "node_count",
            format!("need at least 16 nodes, got {node_count}"),
        ));
    }
    if !grading.is_finite() || grading < 1.0 {
        return Err(Error::invalid(
            "grading",
            format!("need grading >= 1, got {grading}"),
        ));
    }

    let intervals = node_count - 1;
    let mut nodes = Vec::with_capacity(node_count);
    for i in 0..=intervals {
        let x = i as f64 / intervals as f64;
        nodes.push(radius * x.powf(grading));
    }
    nodes[0] = 0.0;
    *nodes.last_mut().unwrap() = radius;

    let sigma = unit_sphere_area(dim);
    let n = dim as i32;
    let mut weights = vec![0.0_f64; node_count];
    for i in 0..intervals {
        let a = nodes[i];
        let b = nodes[i + 1];
        let h = b - a;
        // Exact moments of r^{N-1} and r^N over [a, b].
        let m0 = (b.powi(n) - a.powi(n)) / dim as f64;
        let m1 = (b.powi(n + 1) - a.powi(n + 1)) / (dim as f64 + 1.0);
        weights[i] += sigma * (b * m0 - m1) / h;
        weights[i + 1] += sigma * (m1 - a * m0) / h;
    }

    Ok(Arc::new(RadialGrid {
        dim,
        radius,
        nodes,
        weights,
    }))
}

impl RadialGrid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Structural identity check used to detect cross-grid field mixing.
    pub fn same_as(&self, other: &RadialGrid) -> bool {
        std::ptr::eq(self, other)
            || (self.dim == other.dim
                && self.radius == other.radius
                && self.nodes == other.nodes)
    }

    /// JSON view of the mesh: dimension, radius, node radii.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct GridJson<'a> {
            dim: usize,
            radius: f64,
            nodes: &'a [f64],
        }
        crate::io::to_json_string(&GridJson {
            dim: self.dim,
            radius: self.radius,
            nodes: &self.nodes,
        })
    }
}

/// A real radial function sampled at the grid nodes.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::invalid(
                "values",
                format!(
                    "length {} does not match node count {}",
                    values.len(),
                    grid.node_count()
                ),
            ));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid("values", format!("non-finite sample {bad}")));
        }
        Ok(Field { grid, values })
    }

    pub fn from_fn(grid: &Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Field::new(Arc::clone(grid), values)
    }

    pub fn zeros(grid: &Arc<RadialGrid>) -> Self {
        Field {
            grid: Arc::clone(grid),
            values: vec![0.0; grid.node_count()],
        }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// `self + c * other`, on one grid.
    pub fn add_scaled(&self, c: f64, other: &Field) -> Result<Field> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch("field sum across different grids"));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + c * b)
            .collect();
        Ok(Field {
            grid: Arc::clone(&self.grid),
            values,
        })
    }

    /// Linear interpolation onto another grid of the same dimension and radius.
    pub fn interpolate_to(&self, target: &Arc<RadialGrid>) -> Result<Field> {
        if target.dim() != self.grid.dim() || target.radius() != self.grid.radius() {
            return Err(Error::GridMismatch(
                "interpolation target has a different ball",
            ));
        }
        let src = self.grid.nodes();
        let mut j = 0usize;
        let values = target
            .nodes()
            .iter()
            .map(|&r| {
                while j + 2 < src.len() && src[j + 1] < r {
                    j += 1;
                }
                let (a, b) = (src[j], src[j + 1]);
                let t = if b > a { (r - a) / (b - a) } else { 0.0 };
                let t = t.clamp(0.0, 1.0);
                (1.0 - t) * self.values[j] + t * self.values[j + 1]
            })
            .collect();
        Field::new(Arc::clone(target), values)
    }

    /// Two-column CSV `(r, value)`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "r,value")?;
        for (r, v) in self.grid.nodes().iter().zip(&self.values) {
            writeln!(w, "{},{}", crate::io::fmt_f64(*r), crate::io::fmt_f64(*v))?;
        }
        Ok(())
    }
}

fn check_grid(grid: &RadialGrid, f: &Field) -> Result<()> {
    if grid.same_as(f.grid()) {
        Ok(())
    } else {
        Err(Error::GridMismatch("field does not live on the given grid"))
    }
}

/// Quadrature of `f` over the ball: `sum_i w_i f_i ~ int_{B_R} f(|x|) dx`.
pub fn integrate(grid: &RadialGrid, f: &Field) -> Result<f64> {
    check_grid(grid, f)?;
    Ok(grid
        .weights()
        .iter()
        .zip(f.values())
        .map(|(w, v)| w * v)
        .sum())
}

/// Quadrature of the measure `|f|^s dx` restricted to `r <= rho`.
///
/// The interval straddling `rho` is split, with the integrand value at `rho`
/// taken from the linear interpolant, so constants restrict exactly.
pub fn integrate_abs_pow_within(grid: &RadialGrid, f: &Field, s: f64, rho: f64) -> Result<f64> {
    check_grid(grid, f)?;
    if !(rho >= 0.0) {
        return Err(Error::invalid("rho", format!("need rho >= 0, got {rho}")));
    }
    let sigma = unit_sphere_area(grid.dim());
    let n = grid.dim() as i32;
    let nodes = grid.nodes();
    let g = |v: f64| v.abs().powf(s);
    let mut total = 0.0;
    for i in 0..nodes.len() - 1 {
        let (a, b) = (nodes[i], nodes[i + 1]);
        if a >= rho {
            break;
        }
        let (va, vb) = (f.values()[i], f.values()[i + 1]);
        let (hi, vhi) = if b <= rho {
            (b, vb)
        } else {
            let t = (rho - a) / (b - a);
            (rho, (1.0 - t) * va + t * vb)
        };
        let h = hi - a;
        if h <= 0.0 {
            continue;
        }
        let m0 = (hi.powi(n) - a.powi(n)) / grid.dim() as f64;
        let m1 = (hi.powi(n + 1) - a.powi(n + 1)) / (grid.dim() as f64 + 1.0);
        total += sigma * (g(va) * (hi * m0 - m1) + g(vhi) * (m1 - a * m0)) / h;
    }
    Ok(total)
}

/// Staggered-difference radial derivative, mapped back to the nodes.
///
/// Midpoint slopes are linearly interpolated to interior nodes (exact for
/// quadratics); endpoints take the one-sided slope. For radial `u` this is
/// `du/dr`, so `|grad u| = |result|`.
pub fn radial_derivative(grid: &RadialGrid, f: &Field) -> Result<Field> {
    check_grid(grid, f)?;
    let nodes = grid.nodes();
    let m = nodes.len();
    if m < 3 {
        return Err(Error::invalid("grid", "need at least 3 nodes to differentiate"));
    }
    let v = f.values();
    // Midpoint slopes s_k on [r_k, r_{k+1}].
    let slopes: Vec<f64> = (0..m - 1)
        .map(|k| (v[k + 1] - v[k]) / (nodes[k + 1] - nodes[k]))
        .collect();
    let mut out = vec![0.0; m];
    out[0] = slopes[0];
    out[m - 1] = slopes[m - 2];
    for i in 1..m - 1 {
        let hl = nodes[i] - nodes[i - 1];
        let hr = nodes[i + 1] - nodes[i];
        out[i] = (hr * slopes[i - 1] + hl * slopes[i]) / (hl + hr);
    }
    Field::new(Arc::clone(f.grid()), out)
}

/// Adjoint of [`radial_derivative`] as a linear map on nodal vectors.
///
/// Satisfies `sum_i t_i (D d)_i = sum_j (D^T t)_j d_j` for every nodal vector
/// `d`; used to assemble nodal gradients of gradient-dependent energies.
pub fn radial_derivative_transpose(grid: &RadialGrid, t: &[f64]) -> Vec<f64> {
    let nodes = grid.nodes();
    let m = nodes.len();
    assert_eq!(t.len(), m);
    // Step 1: y_k = contribution of each midpoint slope, from C^T.
    let mut y = vec![0.0; m - 1];
    y[0] += t[0];
    y[m - 2] += t[m - 1];
    for i in 1..m - 1 {
        let hl = nodes[i] - nodes[i - 1];
        let hr = nodes[i + 1] - nodes[i];
        let denom = hl + hr;
        y[i - 1] += t[i] * hr / denom;
        y[i] += t[i] * hl / denom;
    }
    // Step 2: B^T on slope coefficients.
    let mut out = vec![0.0; m];
    for k in 0..m - 1 {
        let h = nodes[k + 1] - nodes[k];
        out[k + 1] += y[k] / h;
        out[k] -= y[k] / h;
    }
    out
}

/// `(int |f|^s dx)^{1/s}` for `s > 1`.
pub fn lp_norm(grid: &RadialGrid, f: &Field, s: f64) -> Result<f64> {
    if !(s > 1.0) {
        return Err(Error::invalid("s", format!("need exponent s > 1, got {s}")));
    }
    check_grid(grid, f)?;
    let total: f64 = grid
        .weights()
        .iter()
        .zip(f.values())
        .map(|(w, v)| w * v.abs().powf(s))
        .sum();
    Ok(total.powf(1.0 / s))
}
