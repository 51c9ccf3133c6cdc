//! Fibering maps and Nehari-manifold projections.
//!
//! The scalar projection scales a field onto the set where the fiber
//! derivative `d/dt J(tu)` vanishes; without a lower-order term the scaling is
//! the closed form `t_0(u) = (P(u)/||u||_{p*}^{p*})^{1/(p*-p)}`. The system
//! projection at `lambda = mu = 0` uses the closed pair
//!
//! ```text
//! s_0(u,v) = [ P(u) Q(v)^{r(beta+1)/(q(alpha+1))} / R(u,v)^{r/(alpha+1)} ]^{1/(r-p)}
//! t(s)     = [ R(u,v)/Q(v) ]^{r/(q(alpha+1))} s^{r/q}
//! ```
//!
//! with `r = (alpha+1) q / (q - (beta+1)) > p`. When a lower-order term is
//! present the fiber critical points are located numerically and the one with
//! the largest fiber energy is selected.

use crate::error::{Error, Result};
use crate::functionals::{eval_j, eval_p, eval_q, eval_r, ProblemSpec};
use crate::grid::Field;
use serde::{Deserialize, Serialize};

/// A projected point on a Nehari set: field(s), fiber scalings, energy and
/// fiber-stationarity residuals.
#[derive(Debug, Clone)]
pub struct NehariPoint {
    pub fields: NehariFields,
    /// `[t0]` for scalar points, `[s0, t0]` for system points.
    pub scalings: Vec<f64>,
    pub energy: f64,
    /// Dimensionless fiber-stationarity residuals (one per scaling).
    pub residuals: Vec<f64>,
    /// False when produced by a solver that hit its iteration cap.
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub enum NehariFields {
    Scalar(Field),
    System(Field, Field),
}

impl NehariPoint {
    pub fn scalar_field(&self) -> &Field {
        match &self.fields {
            NehariFields::Scalar(u) => u,
            NehariFields::System(u, _) => u,
        }
    }

    pub fn system_fields(&self) -> Option<(&Field, &Field)> {
        match &self.fields {
            NehariFields::Scalar(_) => None,
            NehariFields::System(u, v) => Some((u, v)),
        }
    }

    /// JSON view: scalings, energy, residuals, convergence flag.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct PointJson<'a> {
            scalings: &'a [f64],
            energy: f64,
            residuals: &'a [f64],
            converged: bool,
        }
        crate::io::to_json_string(&PointJson {
            scalings: &self.scalings,
            energy: self.energy,
            residuals: &self.residuals,
            converged: self.converged,
        })
    }
}

/// Samples the fibering map `t -> J_lambda(t u)`.
pub fn fiber_map(spec: &ProblemSpec, u: &Field, t_values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if t_values.is_empty() {
        return Err(Error::invalid("t_values", "need at least one sample"));
    }
    if u.is_zero() {
        return Err(Error::ProjectionUndefined("fiber of the zero field".into()));
    }
    t_values
        .iter()
        .map(|&t| Ok((t, eval_j(spec, &u.scaled(t))?)))
        .collect()
}

/// Ingredients of the scalar fiber `j(t) = (t^p/p) P - (t^{p*}/p*) A - lambda (t^g/g) B`.
struct ScalarFiber {
    p: f64,
    p_star: f64,
    grad: f64,
    crit: f64,
    /// `Some((gamma, lambda * B_gamma))` when a lower-order term is active.
    pert: Option<(f64, f64)>,
}

impl ScalarFiber {
    fn assemble(spec: &ProblemSpec, u: &Field) -> Result<Self> {
        let grid = u.grid();
        let p_star = spec.p_star();
        let crit: f64 = grid
            .weights()
            .iter()
            .zip(u.values())
            .map(|(w, v)| w * v.abs().powf(p_star))
            .sum();
        let pert = match spec.perturbation_f().growth_exponent() {
            None => None,
            Some(gamma) if spec.lambda() == 0.0 => {
                let _ = gamma;
                None
            }
            Some(gamma) => {
                // For the odd kinds here, int f(tu) u = t^{gamma-1} int |u|^gamma.
                let b: f64 = grid
                    .weights()
                    .iter()
                    .zip(u.values())
                    .map(|(w, v)| w * v.abs().powf(gamma))
                    .sum();
                Some((gamma, spec.lambda() * b))
            }
        };
        Ok(ScalarFiber {
            p: spec.p(),
            p_star,
            grad: eval_p(spec, u)?,
            crit,
            pert,
        })
    }

    fn energy(&self, t: f64) -> f64 {
        let mut j = t.powf(self.p) / self.p * self.grad
            - t.powf(self.p_star) / self.p_star * self.crit;
        if let Some((gamma, lb)) = self.pert {
            j -= t.powf(gamma) / gamma * lb;
        }
        j
    }

    /// `j'(t) = t^{p-1} P - t^{p*-1} A - lambda t^{gamma-1} B`.
    fn derivative(&self, t: f64) -> f64 {
        let mut d = t.powf(self.p - 1.0) * self.grad - t.powf(self.p_star - 1.0) * self.crit;
        if let Some((gamma, lb)) = self.pert {
            d -= t.powf(gamma - 1.0) * lb;
        }
        d
    }

    /// Scale of the fiber terms at `t`, for dimensionless residuals.
    fn term_scale(&self, t: f64) -> f64 {
        let mut s = t.powf(self.p) * self.grad + t.powf(self.p_star) * self.crit;
        if let Some((gamma, lb)) = self.pert {
            s += t.powf(gamma) * lb.abs();
        }
        s.max(f64::MIN_POSITIVE)
    }

    /// Reduced fiber derivative `g(t) = j'(t) / t^{gamma-1}
    /// = t^{p-gamma} P - t^{p*-gamma} A - lambda B`.
    fn reduced(&self, t: f64, gamma: f64, lb: f64) -> f64 {
        t.powf(self.p - gamma) * self.grad - t.powf(self.p_star - gamma) * self.crit - lb
    }

    /// All positive roots of `j'`. The fiber derivative is a three-exponent
    /// power sum, so the sign pattern admits at most two roots; brackets come
    /// from the closed-form peak of the reduced derivative.
    fn critical_points(&self) -> Vec<f64> {
        let (p, p_star) = (self.p, self.p_star);
        let (grad, crit) = (self.grad, self.crit);
        let pivot = (grad / crit).powf(1.0 / (p_star - p));
        let (gamma, lb) = match self.pert {
            None => return vec![pivot],
            Some(pair) => pair,
        };
        if lb == 0.0 {
            return vec![pivot];
        }
        if gamma == p {
            // j'(t) = t^{p-1}(P - lambda B) - t^{p*-1} A.
            let head = grad - lb;
            if head <= 0.0 {
                return Vec::new();
            }
            return vec![(head / crit).powf(1.0 / (p_star - p))];
        }
        let g = |t: f64| self.reduced(t, gamma, lb);
        let bisect = |mut lo: f64, mut hi: f64| -> f64 {
            let side = g(lo).signum();
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if g(mid).signum() == side {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if (hi - lo) < 1e-16 * hi {
                    break;
                }
            }
            0.5 * (lo + hi)
        };
        if gamma < p && lb > 0.0 {
            // Concave regime: g rises from -lambda B to a peak and falls; two
            // roots when the peak is positive, none otherwise.
            let t_peak =
                ((p - gamma) * grad / ((p_star - gamma) * crit)).powf(1.0 / (p_star - p));
            if g(t_peak) <= 0.0 {
                return Vec::new();
            }
            let mut lo = t_peak;
            while g(lo) > 0.0 && lo > t_peak * 1e-300 {
                lo *= 0.5;
            }
            let mut hi = t_peak;
            while g(hi) > 0.0 && hi < t_peak * 1e300 {
                hi *= 2.0;
            }
            return vec![bisect(lo, t_peak), bisect(t_peak, hi)];
        }
        // Remaining sign patterns cross zero exactly once.
        let mut lo = pivot;
        while g(lo) <= 0.0 && lo > pivot * 1e-300 {
            lo *= 0.5;
        }
        if g(lo) <= 0.0 {
            return Vec::new();
        }
        let mut hi = pivot;
        while g(hi) >= 0.0 && hi < pivot * 1e300 {
            hi *= 2.0;
        }
        vec![bisect(lo, hi)]
    }
}

/// Which fiber critical point a projection selects when a concave lower-order
/// term splits the fiber into two branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FiberBranch {
    /// The critical point with the largest fiber energy (the default).
    HighestEnergy,
    /// The critical point with the lowest fiber energy; with a concave
    /// perturbation this is the branch carrying negative levels, which the
    /// manifold infimum in the critical-level formula must see.
    LowestEnergy,
}

/// Closed-form scaling onto the Nehari set of the unperturbed functional:
/// `t_0(u) = (||grad u||_p^p / ||u||_{p*}^{p*})^{1/(p*-p)}`.
pub fn t0_scalar(spec: &ProblemSpec, u: &Field) -> Result<f64> {
    if u.is_zero() {
        return Err(Error::ProjectionUndefined(
            "the zero field has no Nehari scaling".into(),
        ));
    }
    let fiber = ScalarFiber::assemble(&spec.with_parameters(0.0, 0.0), u)?;
    Ok((fiber.grad / fiber.crit).powf(1.0 / (fiber.p_star - fiber.p)))
}

/// Projects `u` onto the scalar Nehari set of `J_lambda`, selecting the
/// fiber critical point with the largest energy when several exist.
pub fn project_scalar(spec: &ProblemSpec, u: &Field) -> Result<NehariPoint> {
    project_scalar_branch(spec, u, FiberBranch::HighestEnergy)
}

/// Projects `u` onto the scalar Nehari set of `J_lambda` with an explicit
/// branch policy.
pub fn project_scalar_branch(
    spec: &ProblemSpec,
    u: &Field,
    branch: FiberBranch,
) -> Result<NehariPoint> {
    if u.is_zero() {
        return Err(Error::ProjectionUndefined(
            "the zero field has no Nehari projection".into(),
        ));
    }
    let fiber = ScalarFiber::assemble(spec, u)?;
    let t0 = {
        let roots = fiber.critical_points();
        let scored = roots.into_iter().map(|t| (t, fiber.energy(t)));
        let best = match branch {
            FiberBranch::HighestEnergy => scored.max_by(|a, b| a.1.total_cmp(&b.1)),
            FiberBranch::LowestEnergy => scored.min_by(|a, b| a.1.total_cmp(&b.1)),
        };
        match best {
            Some((t, _)) => t,
            None => {
                return Err(Error::ProjectionUndefined(format!(
                    "fiber of J_lambda has no positive critical point (lambda = {})",
                    spec.lambda()
                )))
            }
        }
    };
    let projected = u.scaled(t0);
    let energy = eval_j(spec, &projected)?;
    let residual = (fiber.derivative(t0) * t0).abs() / fiber.term_scale(t0);
    Ok(NehariPoint {
        fields: NehariFields::Scalar(projected),
        scalings: vec![t0],
        energy,
        residuals: vec![residual],
        converged: true,
    })
}

/// Fiber exponent `r = (alpha+1) q / (q - (beta+1))`; checked to exceed `p`.
pub fn r_exponent(spec: &ProblemSpec) -> Result<f64> {
    spec.require_system()?;
    let denom = spec.q() - (spec.beta() + 1.0);
    if denom <= 0.0 {
        return Err(Error::Admissibility(format!(
            "need beta + 1 < q, got beta+1={}, q={}",
            spec.beta() + 1.0,
            spec.q()
        )));
    }
    let r = (spec.alpha() + 1.0) * spec.q() / denom;
    debug_assert!(r > spec.p());
    Ok(r)
}

/// Invariants of a pair needed by the closed-form system projection.
struct SystemFiber {
    p: f64,
    q: f64,
    alpha: f64,
    beta: f64,
    r: f64,
    grad_u: f64,
    grad_v: f64,
    coupling: f64,
}

impl SystemFiber {
    fn assemble(spec: &ProblemSpec, u: &Field, v: &Field) -> Result<Self> {
        if u.is_zero() || v.is_zero() {
            return Err(Error::ProjectionUndefined(
                "system projection needs both components nonzero".into(),
            ));
        }
        let coupling = eval_r(spec, u, v)?;
        if coupling <= 0.0 {
            return Err(Error::ProjectionUndefined(
                "coupling term R(u,v) vanishes (disjoint supports)".into(),
            ));
        }
        Ok(SystemFiber {
            p: spec.p(),
            q: spec.q(),
            alpha: spec.alpha(),
            beta: spec.beta(),
            r: r_exponent(spec)?,
            grad_u: eval_p(spec, u)?,
            grad_v: eval_q(spec, v)?,
            coupling,
        })
    }

    fn s0(&self) -> f64 {
        let (p, q, r) = (self.p, self.q, self.r);
        let (a1, b1) = (self.alpha + 1.0, self.beta + 1.0);
        (self.grad_u * self.grad_v.powf(r * b1 / (q * a1)) / self.coupling.powf(r / a1))
            .powf(1.0 / (r - p))
    }

    fn t_of_s(&self, s: f64) -> f64 {
        let (q, r) = (self.q, self.r);
        let a1 = self.alpha + 1.0;
        (self.coupling / self.grad_v).powf(r / (q * a1)) * s.powf(r / q)
    }

    fn partial_s(&self, s: f64, t: f64) -> f64 {
        (self.alpha + 1.0)
            * (s.powf(self.p - 1.0) * self.grad_u
                - s.powf(self.alpha) * t.powf(self.beta + 1.0) * self.coupling)
    }

    fn partial_t(&self, s: f64, t: f64) -> f64 {
        (self.beta + 1.0)
            * (t.powf(self.q - 1.0) * self.grad_v
                - s.powf(self.alpha + 1.0) * t.powf(self.beta) * self.coupling)
    }

    fn term_scale(&self, s: f64, t: f64) -> f64 {
        ((self.alpha + 1.0) * s.powf(self.p) * self.grad_u
            + (self.beta + 1.0) * t.powf(self.q) * self.grad_v
            + s.powf(self.alpha + 1.0) * t.powf(self.beta + 1.0) * self.coupling)
            .max(f64::MIN_POSITIVE)
    }
}

/// Projects a pair onto the Nehari set of the unperturbed system functional
/// `I_{0,0}` via the closed-form scalings.
pub fn project_system(spec: &ProblemSpec, u: &Field, v: &Field) -> Result<NehariPoint> {
    spec.require_system()?;
    if !u.grid().same_as(v.grid()) {
        return Err(Error::GridMismatch("system projection needs one grid"));
    }
    let fiber = SystemFiber::assemble(spec, u, v)?;
    let s0 = fiber.s0();
    let t0 = fiber.t_of_s(s0);
    let pu = u.scaled(s0);
    let pv = v.scaled(t0);
    let zero_spec = spec.with_parameters(0.0, 0.0);
    let energy = crate::functionals::eval_i(&zero_spec, &pu, &pv)?;
    let scale = fiber.term_scale(s0, t0);
    let residuals = vec![
        (fiber.partial_s(s0, t0) * s0).abs() / scale,
        (fiber.partial_t(s0, t0) * t0).abs() / scale,
    ];
    Ok(NehariPoint {
        fields: NehariFields::System(pu, pv),
        scalings: vec![s0, t0],
        energy,
        residuals,
        converged: true,
    })
}

/// Projects a pair onto the Nehari set of `I_{lambda,mu}` with lower-order
/// terms, by damped Newton on the two fiber partials, warm-started from the
/// unperturbed closed form.
pub fn project_system_perturbed(spec: &ProblemSpec, u: &Field, v: &Field) -> Result<NehariPoint> {
    spec.require_system()?;
    if spec.lambda() == 0.0 && spec.mu() == 0.0 {
        return project_system(spec, u, v);
    }
    if !u.grid().same_as(v.grid()) {
        return Err(Error::GridMismatch("system projection needs one grid"));
    }
    let fiber = SystemFiber::assemble(spec, u, v)?;
    let grid = u.grid();

    // Lower-order fiber coefficients: int f(su) u = s^{gf-1} B_f for the odd kinds.
    let pert_coeff = |kind: crate::functionals::PerturbationKind, w: &Field| -> Option<(f64, f64)> {
        kind.growth_exponent().map(|gamma| {
            let b: f64 = grid
                .weights()
                .iter()
                .zip(w.values())
                .map(|(wt, x)| wt * x.abs().powf(gamma))
                .sum();
            (gamma, b)
        })
    };
    let fu = pert_coeff(spec.perturbation_f(), u);
    let gv = pert_coeff(spec.perturbation_g(), v);
    let (a1, b1) = (spec.alpha() + 1.0, spec.beta() + 1.0);

    let g1 = |s: f64, t: f64| -> f64 {
        let mut d = fiber.partial_s(s, t) / a1;
        if let Some((gamma, b)) = fu {
            d -= spec.lambda() * s.powf(gamma - 1.0) * b;
        }
        d
    };
    let g2 = |s: f64, t: f64| -> f64 {
        let mut d = fiber.partial_t(s, t) / b1;
        if let Some((gamma, b)) = gv {
            d -= spec.mu() * t.powf(gamma - 1.0) * b;
        }
        d
    };

    let (mut s, mut t) = (fiber.s0(), fiber.t_of_s(fiber.s0()));
    let mut converged = false;
    for _ in 0..100 {
        let (f1, f2) = (g1(s, t), g2(s, t));
        let scale = fiber.term_scale(s, t);
        if (f1 * s).abs() / scale < 1e-13 && (f2 * t).abs() / scale < 1e-13 {
            converged = true;
            break;
        }
        // Analytic Jacobian of (g1, g2).
        let mut j11 = (spec.p() - 1.0) * s.powf(spec.p() - 2.0) * fiber.grad_u
            - spec.alpha() * s.powf(spec.alpha() - 1.0) * t.powf(b1) * fiber.coupling;
        if let Some((gamma, b)) = fu {
            j11 -= spec.lambda() * (gamma - 1.0) * s.powf(gamma - 2.0) * b;
        }
        let j12 = -b1 * s.powf(spec.alpha()) * t.powf(spec.beta()) * fiber.coupling;
        let j21 = -a1 * s.powf(spec.alpha()) * t.powf(spec.beta()) * fiber.coupling;
        let mut j22 = (spec.q() - 1.0) * t.powf(spec.q() - 2.0) * fiber.grad_v
            - spec.beta() * s.powf(a1) * t.powf(spec.beta() - 1.0) * fiber.coupling;
        if let Some((gamma, b)) = gv {
            j22 -= spec.mu() * (gamma - 1.0) * t.powf(gamma - 2.0) * b;
        }
        let det = j11 * j22 - j12 * j21;
        if det.abs() < 1e-300 {
            break;
        }
        let ds = (f1 * j22 - f2 * j12) / det;
        let dt = (f2 * j11 - f1 * j21) / det;
        // Damp to keep the scalings positive.
        let mut step = 1.0;
        while step > 1e-8 && (s - step * ds <= 0.0 || t - step * dt <= 0.0) {
            step *= 0.5;
        }
        s -= step * ds;
        t -= step * dt;
        if !(s.is_finite() && t.is_finite()) {
            return Err(Error::ProjectionUndefined(
                "perturbed system fiber iteration diverged".into(),
            ));
        }
    }
    if !converged {
        return Err(Error::ProjectionUndefined(
            "perturbed system fiber Newton did not converge".into(),
        ));
    }
    let pu = u.scaled(s);
    let pv = v.scaled(t);
    let energy = crate::functionals::eval_i(spec, &pu, &pv)?;
    let scale = fiber.term_scale(s, t);
    let residuals = vec![
        (g1(s, t) * a1 * s).abs() / scale,
        (g2(s, t) * b1 * t).abs() / scale,
    ];
    Ok(NehariPoint {
        fields: NehariFields::System(pu, pv),
        scalings: vec![s, t],
        energy,
        residuals,
        converged: true,
    })
}

/// The K functional of a pair, from its invariants:
///
/// ```text
/// K(X,Y) = [ P(X)^{alpha+1} Q(Y)^{(beta+1)p/q} / R(X,Y)^p ]^{r/((alpha+1)(r-p))}
/// ```
///
/// It satisfies `I_{0,0}(projected pair) = (alpha+1)(1/p - 1/r) K(X,Y)`.
pub fn k_functional(spec: &ProblemSpec, x: &Field, y: &Field) -> Result<f64> {
    let p_val = eval_p(spec, x)?;
    let q_val = eval_q(spec, y)?;
    let r_val = eval_r(spec, x, y)?;
    k_from_invariants(spec, p_val, q_val, r_val)
}

/// K from already-computed invariants `P`, `Q`, `R`.
pub fn k_from_invariants(spec: &ProblemSpec, p_val: f64, q_val: f64, r_val: f64) -> Result<f64> {
    spec.require_system()?;
    if r_val <= 0.0 {
        return Err(Error::ProjectionUndefined(
            "K undefined when the coupling term vanishes".into(),
        ));
    }
    let (p, q) = (spec.p(), spec.q());
    let (a1, b1) = (spec.alpha() + 1.0, spec.beta() + 1.0);
    let r = r_exponent(spec)?;
    let bracket = p_val.powf(a1) * q_val.powf(b1 * p / q) / r_val.powf(p);
    Ok(bracket.powf(r / (a1 * (r - p))))
}

/// Left side of the exponent identity
/// `(alpha+1)/p + (beta+1)/q - 1 = (alpha+1)(1/p - 1/r)`.
pub fn energy_rate(spec: &ProblemSpec) -> Result<f64> {
    let r = r_exponent(spec)?;
    Ok((spec.alpha() + 1.0) * (1.0 / spec.p() - 1.0 / r))
}

/// Fiber-map diagnostic: `d/dt J_lambda(t u)` at `t`.
pub fn fiber_derivative(spec: &ProblemSpec, u: &Field, t: f64) -> Result<f64> {
    let fiber = ScalarFiber::assemble(spec, u)?;
    Ok(fiber.derivative(t))
}
