//! Energies and Gateaux derivatives for the scalar and coupled problems.
//!
//! Scalar energy on `W^{1,p}_0(B_R)`:
//!
//! ```text
//! J_lambda(u) = (1/p)||grad u||_p^p - (1/p*)||u||_{p*}^{p*} - lambda * int F(u)
//! ```
//!
//! System energy for the (p,q) pair with coupling exponents (alpha, beta):
//!
//! ```text
//! I_{lambda,mu}(u,v) = (alpha+1)(P(u)/p - lambda int F(u))
//!                    + (beta+1)(Q(v)/q - mu int G(v)) - R(u,v)
//! ```
//!
//! with `P(u) = ||grad u||_p^p`, `Q(v) = ||grad v||_q^q` and
//! `R(u,v) = int |u|^{alpha+1} |v|^{beta+1}`.

use crate::error::{Error, Result};
use crate::grid::{
    lp_norm, radial_derivative, radial_derivative_transpose, Field, RadialGrid,
};
use serde::{Deserialize, Serialize};

/// Regularization width for `|u'|^{p-2}` factors when p < 2. Applied only in
/// derivative assembly; energy values stay exact.
pub const GRADIENT_REGULARIZATION: f64 = 1e-10;

/// Subcritical lower-order term `f(u)` and its primitive `F(u)`.
///
/// All kinds are odd in `u` (`f(-u) = -f(u)`) with even primitives, covering
/// `f(u) = u` and `f(u) = |u|^{gamma-2} u` for `1 < gamma < p*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PerturbationKind {
    None,
    Linear,
    Power { exponent: f64 },
}

impl PerturbationKind {
    /// Growth exponent of `f` near infinity (`f(u) ~ u^{gamma-1}`), if any.
    pub fn growth_exponent(&self) -> Option<f64> {
        match self {
            PerturbationKind::None => None,
            PerturbationKind::Linear => Some(2.0),
            PerturbationKind::Power { exponent } => Some(*exponent),
        }
    }

    fn validate(&self, p_star: f64) -> Result<()> {
        if let Some(gamma) = self.growth_exponent() {
            if !gamma.is_finite() || gamma <= 1.0 {
                return Err(Error::invalid(
                    "perturbation",
                    format!("growth exponent must exceed 1, got {gamma}"),
                ));
            }
            if gamma >= p_star {
                return Err(Error::Admissibility(format!(
                    "subcritical growth violated: perturbation exponent {gamma} must stay \
                     strictly below the critical exponent {p_star}"
                )));
            }
        }
        Ok(())
    }

    /// Pointwise `f(u)`.
    pub fn f(&self, u: f64) -> f64 {
        match self {
            PerturbationKind::None => 0.0,
            PerturbationKind::Linear => u,
            PerturbationKind::Power { exponent } => signed_pow(u, exponent - 1.0),
        }
    }

    /// Pointwise primitive `F(u) = int_0^u f(s) ds`, in closed form.
    pub fn primitive(&self, u: f64) -> f64 {
        match self {
            PerturbationKind::None => 0.0,
            PerturbationKind::Linear => 0.5 * u * u,
            PerturbationKind::Power { exponent } => u.abs().powf(*exponent) / exponent,
        }
    }
}

/// Odd power `|u|^{s-1} u` written as `|u|^s sign(u)`, with `0 -> 0`.
pub fn signed_pow(u: f64, s: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u.abs().powf(s) * u.signum()
    }
}

/// Exponents and parameters of the problem, validated at construction.
#[derive(Debug, Clone, Serialize)]
pub struct ProblemSpec {
    dim: usize,
    p: f64,
    q: f64,
    alpha: f64,
    beta: f64,
    lambda: f64,
    mu: f64,
    perturbation_f: PerturbationKind,
    perturbation_g: PerturbationKind,
    system: bool,
}

/// Tolerance on the critical coupling identity `(alpha+1)/p* + (beta+1)/q* = 1`.
pub const COUPLING_TOL: f64 = 1e-12;

impl ProblemSpec {
    /// Scalar problem `-Delta_p u = lambda f(u) + |u|^{p*-2} u` on a ball.
    pub fn scalar(
        dim: usize,
        p: f64,
        lambda: f64,
        perturbation: PerturbationKind,
    ) -> Result<Self> {
        check_exponent_range(dim, p, "p")?;
        if !lambda.is_finite() {
            return Err(Error::invalid("lambda", "must be finite"));
        }
        let spec = ProblemSpec {
            dim,
            p,
            q: p,
            alpha: 0.0,
            beta: 0.0,
            lambda,
            mu: 0.0,
            perturbation_f: perturbation,
            perturbation_g: PerturbationKind::None,
            system: false,
        };
        spec.perturbation_f.validate(spec.p_star())?;
        Ok(spec)
    }

    /// Coupled (p,q) system with critical coupling exponents.
    #[allow(clippy::too_many_arguments)]
    pub fn system(
        dim: usize,
        p: f64,
        q: f64,
        alpha: f64,
        beta: f64,
        lambda: f64,
        mu: f64,
        perturbation_f: PerturbationKind,
        perturbation_g: PerturbationKind,
    ) -> Result<Self> {
        check_exponent_range(dim, p, "p")?;
        check_exponent_range(dim, q, "q")?;
        if !lambda.is_finite() || !mu.is_finite() {
            return Err(Error::invalid("lambda/mu", "must be finite"));
        }
        if !(alpha >= 0.0) || !(beta >= 0.0) {
            return Err(Error::Admissibility(format!(
                "coupling exponents must be nonnegative, got alpha={alpha}, beta={beta}"
            )));
        }
        let spec = ProblemSpec {
            dim,
            p,
            q,
            alpha,
            beta,
            lambda,
            mu,
            perturbation_f,
            perturbation_g,
            system: true,
        };
        let gap = (alpha + 1.0) / spec.p_star() + (beta + 1.0) / spec.q_star() - 1.0;
        if gap.abs() > COUPLING_TOL {
            return Err(Error::Admissibility(format!(
                "critical coupling condition violated: (alpha+1)/p* + (beta+1)/q* = {} != 1",
                1.0 + gap
            )));
        }
        if !(beta + 1.0 < q) {
            return Err(Error::Admissibility(format!(
                "need beta + 1 < q for a positive fiber exponent r, got beta+1={}, q={q}",
                beta + 1.0
            )));
        }
        spec.perturbation_f.validate(spec.p_star())?;
        spec.perturbation_g.validate(spec.q_star())?;
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn perturbation_f(&self) -> PerturbationKind {
        self.perturbation_f
    }
    pub fn perturbation_g(&self) -> PerturbationKind {
        self.perturbation_g
    }
    pub fn is_system(&self) -> bool {
        self.system
    }

    /// Critical exponent `p* = Np/(N-p)`.
    pub fn p_star(&self) -> f64 {
        let n = self.dim as f64;
        n * self.p / (n - self.p)
    }

    /// Critical exponent `q* = Nq/(N-q)`.
    pub fn q_star(&self) -> f64 {
        let n = self.dim as f64;
        n * self.q / (n - self.q)
    }

    /// Copy with different parameters `(lambda, mu)`.
    pub fn with_parameters(&self, lambda: f64, mu: f64) -> Self {
        let mut c = self.clone();
        c.lambda = lambda;
        c.mu = mu;
        c
    }

    pub(crate) fn require_system(&self) -> Result<()> {
        if self.system {
            Ok(())
        } else {
            Err(Error::Admissibility(
                "operation needs a system spec (coupled exponents validated)".into(),
            ))
        }
    }
}

fn check_exponent_range(dim: usize, p: f64, name: &'static str) -> Result<()> {
    if dim < 3 {
        return Err(Error::invalid("dim", format!("need dim >= 3, got {dim}")));
    }
    if !p.is_finite() || p <= 1.0 || p >= dim as f64 {
        return Err(Error::Admissibility(format!(
            "exponent range condition 1 < {name} < N violated: {name}={p}, N={dim}"
        )));
    }
    Ok(())
}

/// `P(u) = int |grad u|^p dx`.
pub fn eval_p(spec: &ProblemSpec, u: &Field) -> Result<f64> {
    grad_energy(u, spec.p())
}

/// `Q(v) = int |grad v|^q dx`.
pub fn eval_q(spec: &ProblemSpec, v: &Field) -> Result<f64> {
    grad_energy(v, spec.q())
}

fn grad_energy(u: &Field, p: f64) -> Result<f64> {
    let grid = u.grid();
    let du = radial_derivative(grid, u)?;
    Ok(grid
        .weights()
        .iter()
        .zip(du.values())
        .map(|(w, d)| w * d.abs().powf(p))
        .sum())
}

/// Coupled critical term `R(u,v) = int |u|^{alpha+1} |v|^{beta+1} dx`.
pub fn eval_r(spec: &ProblemSpec, u: &Field, v: &Field) -> Result<f64> {
    spec.require_system()?;
    let grid = u.grid();
    if !grid.same_as(v.grid()) {
        return Err(Error::GridMismatch("R(u,v) needs one grid"));
    }
    let (a1, b1) = (spec.alpha() + 1.0, spec.beta() + 1.0);
    Ok(grid
        .weights()
        .iter()
        .zip(u.values().iter().zip(v.values()))
        .map(|(w, (x, y))| w * x.abs().powf(a1) * y.abs().powf(b1))
        .sum())
}

fn perturbation_integral(kind: PerturbationKind, u: &Field) -> Result<f64> {
    if kind == PerturbationKind::None {
        return Ok(0.0);
    }
    let grid = u.grid();
    Ok(grid
        .weights()
        .iter()
        .zip(u.values())
        .map(|(w, v)| w * kind.primitive(*v))
        .sum())
}

/// Scalar energy `J_lambda(u)`.
pub fn eval_j(spec: &ProblemSpec, u: &Field) -> Result<f64> {
    let grid = u.grid();
    let p = spec.p();
    let p_star = spec.p_star();
    let crit: f64 = grid
        .weights()
        .iter()
        .zip(u.values())
        .map(|(w, v)| w * v.abs().powf(p_star))
        .sum();
    let pert = perturbation_integral(spec.perturbation_f(), u)?;
    Ok(eval_p(spec, u)? / p - crit / p_star - spec.lambda() * pert)
}

/// System energy `I_{lambda,mu}(u,v)`.
pub fn eval_i(spec: &ProblemSpec, u: &Field, v: &Field) -> Result<f64> {
    spec.require_system()?;
    if !u.grid().same_as(v.grid()) {
        return Err(Error::GridMismatch("I(u,v) needs one grid"));
    }
    let part_u = eval_p(spec, u)? / spec.p()
        - spec.lambda() * perturbation_integral(spec.perturbation_f(), u)?;
    let part_v = eval_q(spec, v)? / spec.q()
        - spec.mu() * perturbation_integral(spec.perturbation_g(), v)?;
    Ok((spec.alpha() + 1.0) * part_u + (spec.beta() + 1.0) * part_v - eval_r(spec, u, v)?)
}

/// Regularized `|d|^{p-2} d` nodal factor for derivative assembly.
fn flux_factor(d: f64, p: f64) -> f64 {
    (d * d + GRADIENT_REGULARIZATION * GRADIENT_REGULARIZATION).powf((p - 2.0) / 2.0) * d
}

fn grad_pairing(u: &Field, dir: &Field, p: f64) -> Result<f64> {
    let grid = u.grid();
    let du = radial_derivative(grid, u)?;
    let dd = radial_derivative(grid, dir)?;
    Ok(grid
        .weights()
        .iter()
        .zip(du.values().iter().zip(dd.values()))
        .map(|(w, (a, b))| w * flux_factor(*a, p) * b)
        .sum())
}

/// Gateaux derivative `J_lambda'(u)(direction)`.
pub fn gateaux_residual(spec: &ProblemSpec, u: &Field, direction: &Field) -> Result<f64> {
    let grid = u.grid();
    if !grid.same_as(direction.grid()) {
        return Err(Error::GridMismatch("direction on a different grid"));
    }
    let p_star = spec.p_star();
    let kind = spec.perturbation_f();
    let local: f64 = grid
        .weights()
        .iter()
        .zip(u.values().iter().zip(direction.values()))
        .map(|(w, (x, d))| w * (signed_pow(*x, p_star - 1.0) + spec.lambda() * kind.f(*x)) * d)
        .sum();
    Ok(grad_pairing(u, direction, spec.p())? - local)
}

/// First partial Gateaux derivative `D_1 I_{lambda,mu}(u,v)(direction)`.
pub fn gateaux_d1(spec: &ProblemSpec, u: &Field, v: &Field, direction: &Field) -> Result<f64> {
    spec.require_system()?;
    let grid = u.grid();
    if !grid.same_as(v.grid()) || !grid.same_as(direction.grid()) {
        return Err(Error::GridMismatch("D1 needs all fields on one grid"));
    }
    let (alpha, beta) = (spec.alpha(), spec.beta());
    let kind = spec.perturbation_f();
    let local: f64 = grid
        .weights()
        .iter()
        .zip(u.values().iter().zip(v.values().iter().zip(direction.values())))
        .map(|(w, (x, (y, d)))| {
            w * (signed_pow(*x, alpha) * y.abs().powf(beta + 1.0) + spec.lambda() * kind.f(*x)) * d
        })
        .sum();
    Ok((alpha + 1.0) * (grad_pairing(u, direction, spec.p())? - local))
}

/// Second partial Gateaux derivative `D_2 I_{lambda,mu}(u,v)(direction)`.
pub fn gateaux_d2(spec: &ProblemSpec, u: &Field, v: &Field, direction: &Field) -> Result<f64> {
    spec.require_system()?;
    let grid = u.grid();
    if !grid.same_as(v.grid()) || !grid.same_as(direction.grid()) {
        return Err(Error::GridMismatch("D2 needs all fields on one grid"));
    }
    let (alpha, beta) = (spec.alpha(), spec.beta());
    let kind = spec.perturbation_g();
    let local: f64 = grid
        .weights()
        .iter()
        .zip(u.values().iter().zip(v.values().iter().zip(direction.values())))
        .map(|(w, (x, (y, d)))| {
            w * (x.abs().powf(alpha + 1.0) * signed_pow(*y, beta) + spec.mu() * kind.f(*y)) * d
        })
        .sum();
    Ok((beta + 1.0) * (grad_pairing(v, direction, spec.q())? - local))
}

/// Nodal gradient of `J_lambda` with respect to the node values of `u`:
/// `g_j = dJ/du_j`. The Dirichlet node at `r = R` is zeroed.
pub fn nodal_gradient_j(spec: &ProblemSpec, u: &Field) -> Result<Vec<f64>> {
    let grid = u.grid();
    let du = radial_derivative(grid, u)?;
    let flux: Vec<f64> = grid
        .weights()
        .iter()
        .zip(du.values())
        .map(|(w, d)| w * flux_factor(*d, spec.p()))
        .collect();
    let mut g = radial_derivative_transpose(grid, &flux);
    let p_star = spec.p_star();
    let kind = spec.perturbation_f();
    for ((gj, w), x) in g.iter_mut().zip(grid.weights()).zip(u.values()) {
        *gj -= w * (signed_pow(*x, p_star - 1.0) + spec.lambda() * kind.f(*x));
    }
    *g.last_mut().unwrap() = 0.0;
    Ok(g)
}

/// Nodal gradients of `I_{lambda,mu}` with respect to `(u, v)` node values.
pub fn nodal_gradient_i(spec: &ProblemSpec, u: &Field, v: &Field) -> Result<(Vec<f64>, Vec<f64>)> {
    spec.require_system()?;
    let grid = u.grid();
    if !grid.same_as(v.grid()) {
        return Err(Error::GridMismatch("gradient needs one grid"));
    }
    let (alpha, beta) = (spec.alpha(), spec.beta());

    let du = radial_derivative(grid, u)?;
    let flux_u: Vec<f64> = grid
        .weights()
        .iter()
        .zip(du.values())
        .map(|(w, d)| w * flux_factor(*d, spec.p()))
        .collect();
    let mut gu = radial_derivative_transpose(grid, &flux_u);
    let kind_f = spec.perturbation_f();
    for (i, gj) in gu.iter_mut().enumerate() {
        let (x, y, w) = (u.values()[i], v.values()[i], grid.weights()[i]);
        *gj -= w * (signed_pow(x, alpha) * y.abs().powf(beta + 1.0) + spec.lambda() * kind_f.f(x));
        *gj *= alpha + 1.0;
    }
    *gu.last_mut().unwrap() = 0.0;

    let dv = radial_derivative(grid, v)?;
    let flux_v: Vec<f64> = grid
        .weights()
        .iter()
        .zip(dv.values())
        .map(|(w, d)| w * flux_factor(*d, spec.q()))
        .collect();
    let mut gv = radial_derivative_transpose(grid, &flux_v);
    let kind_g = spec.perturbation_g();
    for (i, gj) in gv.iter_mut().enumerate() {
        let (x, y, w) = (u.values()[i], v.values()[i], grid.weights()[i]);
        *gj -= w * (x.abs().powf(alpha + 1.0) * signed_pow(y, beta) + spec.mu() * kind_g.f(y));
        *gj *= beta + 1.0;
    }
    *gv.last_mut().unwrap() = 0.0;

    Ok((gu, gv))
}

/// Strong-form Euler-Lagrange residual of `J_lambda` as a field.
///
/// Interior nodes carry `(D^T(w a))_j / w_j - |u_j|^{p*-2}u_j - lambda f(u_j)`;
/// the two boundary nodes are zeroed (symmetry axis and Dirichlet end). Used
/// as the dual-norm surrogate input in the diagnostics module.
pub fn el_residual_field(spec: &ProblemSpec, u: &Field) -> Result<Field> {
    let grid = u.grid();
    let g = nodal_gradient_j(spec, u)?;
    let m = g.len();
    let values: Vec<f64> = g
        .iter()
        .enumerate()
        .map(|(j, gj)| {
            if j == 0 || j == m - 1 {
                0.0
            } else {
                gj / grid.weights()[j]
            }
        })
        .collect();
    Field::new(std::sync::Arc::clone(grid), values)
}

/// Strong-form residual pair for the system, same conventions as
/// [`el_residual_field`].
pub fn el_residual_fields_system(
    spec: &ProblemSpec,
    u: &Field,
    v: &Field,
) -> Result<(Field, Field)> {
    let grid = u.grid();
    let (gu, gv) = nodal_gradient_i(spec, u, v)?;
    let m = gu.len();
    let to_field = |g: Vec<f64>| {
        let values: Vec<f64> = g
            .iter()
            .enumerate()
            .map(|(j, gj)| {
                if j == 0 || j == m - 1 {
                    0.0
                } else {
                    gj / grid.weights()[j]
                }
            })
            .collect();
        Field::new(std::sync::Arc::clone(grid), values)
    };
    Ok((to_field(gu)?, to_field(gv)?))
}

/// Scalar Holder bound check helper: `||u||_{p*}^{alpha+1} ||v||_{q*}^{beta+1}`.
pub fn holder_majorant(spec: &ProblemSpec, u: &Field, v: &Field) -> Result<f64> {
    spec.require_system()?;
    let nu = lp_norm(u.grid(), u, spec.p_star())?;
    let nv = lp_norm(v.grid(), v, spec.q_star())?;
    Ok(nu.powf(spec.alpha() + 1.0) * nv.powf(spec.beta() + 1.0))
}

/// Integral of the configured primitive `F` over the ball.
pub fn perturbation_energy(kind: PerturbationKind, grid: &RadialGrid, u: &Field) -> Result<f64> {
    if !grid.same_as(u.grid()) {
        return Err(Error::GridMismatch("perturbation energy needs one grid"));
    }
    perturbation_integral(kind, u)
}
