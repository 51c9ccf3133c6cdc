//! Empirical Palais-Smale diagnostics.
//!
//! A sequence is profiled by its energy levels against a critical level, by
//! dual-norm surrogates of the Euler-Lagrange residual under two
//! normalizations (neither is canonical, so both are reported), by
//! Brezis-Lieb decomposition defects, and by the mass fraction of the
//! critical density inside a small fixed ball. Non-compactness shows up as
//! levels pinned at the critical level with the mass fraction marching to 1.

use crate::bubbles::{concentration_profile, psi_sequence, BubbleSpec};
use crate::error::{Error, Result};
use crate::functionals::{
    el_residual_field, el_residual_fields_system, eval_i, eval_j, ProblemSpec,
};
use crate::grid::{lp_norm, radial_derivative, Field};
use serde::Serialize;

/// Verdict of a diagnostic run. `Inconclusive` is a legitimate outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ApparentlyCompact,
    Concentrating,
    Inconclusive,
}

/// Thresholds steering the verdict.
#[derive(Debug, Clone, Serialize)]
pub struct PsThresholds {
    /// Mass fraction inside the concentration ball demanded of the last iterate.
    pub concentration_fraction: f64,
    /// Relative distance of the last level from the critical level.
    pub level_rel_tol: f64,
    /// Relative successive-distance decrease demanded for a compact verdict.
    pub cauchy_tol: f64,
    /// Concentration ball radius as a fraction of the domain radius.
    pub ball_fraction: f64,
}

impl Default for PsThresholds {
    fn default() -> Self {
        PsThresholds {
            concentration_fraction: 0.9,
            level_rel_tol: 0.02,
            cauchy_tol: 1e-6,
            ball_fraction: 0.1,
        }
    }
}

/// Sequence under diagnosis: scalar fields or component pairs.
#[derive(Debug, Clone)]
pub enum PsSequence {
    Scalar(Vec<Field>),
    System(Vec<(Field, Field)>),
}

impl PsSequence {
    fn len(&self) -> usize {
        match self {
            PsSequence::Scalar(v) => v.len(),
            PsSequence::System(v) => v.len(),
        }
    }
}

/// Per-iterate diagnostic table plus the verdict.
#[derive(Debug, Clone, Serialize)]
pub struct PsReport {
    pub levels: Vec<f64>,
    /// Residual dual-norm surrogate over `||grad u_n||_p`.
    pub residual_grad_norm: Vec<f64>,
    /// Residual dual-norm surrogate over `||u_n||_{p*}`.
    pub residual_crit_norm: Vec<f64>,
    /// Brezis-Lieb defects against the weak-limit candidate.
    pub bl_defects: Vec<f64>,
    /// Mass fraction of the critical density inside the concentration ball.
    pub concentration: Vec<f64>,
    pub verdict: Verdict,
    pub c_star_used: f64,
    pub concentration_radius: f64,
}

impl PsReport {
    pub fn to_json(&self) -> String {
        crate::io::to_json_string(self)
    }

    /// Per-iterate CSV `(n, level, residual_grad, residual_crit, bl_defect, mass_fraction)`.
    pub fn to_csv(&self, labels: &[i64]) -> String {
        let rows: Vec<Vec<crate::io::CsvCell>> = (0..self.levels.len())
            .map(|k| {
                vec![
                    crate::io::CsvCell::Int(labels.get(k).copied().unwrap_or(k as i64 + 1)),
                    self.levels[k].into(),
                    self.residual_grad_norm[k].into(),
                    self.residual_crit_norm[k].into(),
                    self.bl_defects[k].into(),
                    self.concentration[k].into(),
                ]
            })
            .collect();
        crate::io::csv_table(
            &[
                "n",
                "level",
                "residual_grad",
                "residual_crit",
                "bl_defect",
                "mass_fraction",
            ],
            &rows,
        )
    }
}

/// Brezis-Lieb decomposition remainder
/// `| ||u_n||_s^s - ||u_n - u||_s^s - ||u||_s^s |`.
pub fn brezis_lieb_defect(u_n: &Field, u: &Field, s: f64) -> Result<f64> {
    if !(s > 1.0) {
        return Err(Error::invalid("s", format!("need s > 1, got {s}")));
    }
    if !u_n.grid().same_as(u.grid()) {
        return Err(Error::GridMismatch("Brezis-Lieb defect needs one grid"));
    }
    let grid = u_n.grid();
    let total = lp_norm(grid, u_n, s)?.powf(s);
    let tail = lp_norm(grid, &u_n.add_scaled(-1.0, u)?, s)?.powf(s);
    let head = lp_norm(grid, u, s)?.powf(s);
    Ok((total - tail - head).abs())
}

/// Gradient-level Brezis-Lieb defect
/// `| ||grad u_n||_p^p - ||grad(u_n - u)||_p^p - ||grad u||_p^p |`.
pub fn brezis_lieb_gradient_defect(u_n: &Field, u: &Field, p: f64) -> Result<f64> {
    if !u_n.grid().same_as(u.grid()) {
        return Err(Error::GridMismatch("Brezis-Lieb defect needs one grid"));
    }
    let grid = u_n.grid();
    let energy = |f: &Field| -> Result<f64> {
        let d = radial_derivative(grid, f)?;
        Ok(grid
            .weights()
            .iter()
            .zip(d.values())
            .map(|(w, x)| w * x.abs().powf(p))
            .sum())
    };
    Ok((energy(u_n)? - energy(&u_n.add_scaled(-1.0, u)?)? - energy(u)?).abs())
}

/// The perturbed concentration sequence `base + psi_n` for the listed `n`.
///
/// The base may be the zero field: when the perturbed Nehari infimum is
/// positive, the second summand of the critical level is attained at zero and
/// the sharp sequence rides on nothing.
pub fn build_noncompact_ps(
    spec: &ProblemSpec,
    base: &Field,
    bubble: &BubbleSpec,
    n_list: &[u32],
) -> Result<Vec<Field>> {
    if !base.grid().same_as(bubble.grid()) {
        return Err(Error::GridMismatch("base field must live on the bubble grid"));
    }
    n_list
        .iter()
        .map(|&n| {
            let psi = psi_sequence(bubble, spec, n)?;
            base.add_scaled(1.0, &psi)
        })
        .collect()
}

/// System analogue: the bubble rides on both components.
pub fn build_noncompact_ps_system(
    spec: &ProblemSpec,
    base: (&Field, &Field),
    bubble: &BubbleSpec,
    n_list: &[u32],
) -> Result<Vec<(Field, Field)>> {
    spec.require_system()?;
    n_list
        .iter()
        .map(|&n| {
            let psi = psi_sequence(bubble, spec, n)?;
            Ok((
                base.0.add_scaled(1.0, &psi)?,
                base.1.add_scaled(1.0, &psi)?,
            ))
        })
        .collect()
}

fn dual_norm_surrogate(res: &Field, p: f64) -> Result<f64> {
    // Conjugate-exponent grid norm of the strong-form residual.
    let conj = p / (p - 1.0);
    lp_norm(res.grid(), res, conj)
}

fn safe_ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// Assembles the diagnostic report for a sequence.
///
/// `weak_limit` overrides the weak-limit candidate used by the Brezis-Lieb
/// column; by default the final iterate stands in for it.
pub fn ps_check(
    spec: &ProblemSpec,
    sequence: &PsSequence,
    c_star: f64,
    thresholds: &PsThresholds,
    weak_limit: Option<&Field>,
) -> Result<PsReport> {
    if sequence.len() == 0 {
        return Err(Error::invalid("sequence", "need at least one iterate"));
    }
    let p = spec.p();
    let p_star = spec.p_star();

    let mut levels = Vec::new();
    let mut residual_grad = Vec::new();
    let mut residual_crit = Vec::new();
    let mut bl = Vec::new();
    let mut conc = Vec::new();
    let ball_radius;

    match sequence {
        PsSequence::Scalar(fields) => {
            let grid = fields[0].grid();
            ball_radius = thresholds.ball_fraction * grid.radius();
            let candidate = weak_limit.unwrap_or_else(|| fields.last().unwrap());
            for f in fields {
                levels.push(eval_j(spec, f)?);
                let res = el_residual_field(spec, f)?;
                let dual = dual_norm_surrogate(&res, p)?;
                let grad_norm = {
                    let d = radial_derivative(grid, f)?;
                    grid.weights()
                        .iter()
                        .zip(d.values())
                        .map(|(w, x)| w * x.abs().powf(p))
                        .sum::<f64>()
                        .powf(1.0 / p)
                };
                residual_grad.push(safe_ratio(dual, grad_norm));
                residual_crit.push(safe_ratio(dual, lp_norm(grid, f, p_star)?));
                bl.push(brezis_lieb_defect(f, candidate, p_star)?);
                let profile = concentration_profile(f, p_star, &[ball_radius])?;
                conc.push(profile[0].1);
            }
        }
        PsSequence::System(pairs) => {
            let grid = pairs[0].0.grid();
            ball_radius = thresholds.ball_fraction * grid.radius();
            let q = spec.q();
            let q_star = spec.q_star();
            let default_limit = &pairs.last().unwrap().0;
            let candidate = weak_limit.unwrap_or(default_limit);
            for (u, v) in pairs {
                levels.push(eval_i(spec, u, v)?);
                let (ru, rv) = el_residual_fields_system(spec, u, v)?;
                let dual = dual_norm_surrogate(&ru, p)? + dual_norm_surrogate(&rv, q)?;
                let grad = {
                    let du = radial_derivative(grid, u)?;
                    let dv = radial_derivative(grid, v)?;
                    let pu: f64 = grid
                        .weights()
                        .iter()
                        .zip(du.values())
                        .map(|(w, x)| w * x.abs().powf(p))
                        .sum();
                    let qv: f64 = grid
                        .weights()
                        .iter()
                        .zip(dv.values())
                        .map(|(w, x)| w * x.abs().powf(q))
                        .sum();
                    pu.powf(1.0 / p) + qv.powf(1.0 / q)
                };
                residual_grad.push(safe_ratio(dual, grad));
                residual_crit.push(safe_ratio(
                    dual,
                    lp_norm(grid, u, p_star)? + lp_norm(grid, v, q_star)?,
                ));
                bl.push(brezis_lieb_defect(u, candidate, p_star)?);
                let profile = concentration_profile(u, p_star, &[ball_radius])?;
                conc.push(profile[0].1);
            }
        }
    }

    let verdict = classify(&levels, &conc, sequence, c_star, thresholds)?;
    Ok(PsReport {
        levels,
        residual_grad_norm: residual_grad,
        residual_crit_norm: residual_crit,
        bl_defects: bl,
        concentration: conc,
        verdict,
        c_star_used: c_star,
        concentration_radius: ball_radius,
    })
}

fn classify(
    levels: &[f64],
    conc: &[f64],
    sequence: &PsSequence,
    c_star: f64,
    thresholds: &PsThresholds,
) -> Result<Verdict> {
    let last_level = *levels.last().unwrap();
    let level_close =
        (last_level - c_star).abs() <= thresholds.level_rel_tol * c_star.abs().max(1e-300);
    let fractions_rising = conc.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    let concentrated = *conc.last().unwrap() > thresholds.concentration_fraction;

    if level_close && fractions_rising && concentrated {
        return Ok(Verdict::Concentrating);
    }

    // Cauchy-like decrease of successive distances in the critical norm.
    let distances: Vec<f64> = match sequence {
        PsSequence::Scalar(fields) => fields
            .windows(2)
            .map(|w| {
                let diff = w[1].add_scaled(-1.0, &w[0])?;
                lp_norm(diff.grid(), &diff, 2.0)
            })
            .collect::<Result<_>>()?,
        PsSequence::System(pairs) => pairs
            .windows(2)
            .map(|w| {
                let du = w[1].0.add_scaled(-1.0, &w[0].0)?;
                let dv = w[1].1.add_scaled(-1.0, &w[0].1)?;
                Ok(lp_norm(du.grid(), &du, 2.0)? + lp_norm(dv.grid(), &dv, 2.0)?)
            })
            .collect::<Result<_>>()?,
    };
    let scale: f64 = match sequence {
        PsSequence::Scalar(fields) => fields.last().unwrap().max_abs().max(1.0),
        PsSequence::System(pairs) => pairs.last().unwrap().0.max_abs().max(1.0),
    };
    let cauchy = distances.is_empty()
        || (distances.windows(2).all(|w| w[1] <= w[0] + 1e-12)
            && *distances.last().unwrap() <= thresholds.cauchy_tol * scale);
    if cauchy {
        Ok(Verdict::ApparentlyCompact)
    } else {
        Ok(Verdict::Inconclusive)
    }
}
