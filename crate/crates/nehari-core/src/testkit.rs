//! Test-support oracles, independent of the grid quadrature and the
//! projection formulas they are used to check.
//!
//! Only compiled with the `testkit` feature; nothing here is part of the
//! production surface.

use crate::functionals::{PerturbationKind, ProblemSpec};
use crate::grid::{unit_sphere_area, Field, RadialGrid};
use rand::Rng;
use std::sync::Arc;

/// Adaptive Simpson quadrature with interval-doubling error control.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(f, a, fa, m, fm, flm);
        let right = simpson(f, m, fm, b, fb, frm);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = simpson(&f, a, fa, b, fb, fm);
    recurse(&f, a, fa, b, fb, fm, whole, tol, 48)
}

/// Radial integral oracle: `sigma_{N-1} int_{r0}^{r1} g(r) r^{N-1} dr`.
///
/// Splits the range into geometric panels so that sharply peaked integrands
/// (bubble cores) are resolved before the adaptive rule takes over.
pub fn radial_integral_oracle(
    dim: usize,
    g: &impl Fn(f64) -> f64,
    r0: f64,
    r1: f64,
    tol: f64,
) -> f64 {
    let sigma = unit_sphere_area(dim);
    let density = |r: f64| g(r) * r.powi(dim as i32 - 1);
    let mut total = 0.0;
    // Geometric panel edges spanning twelve decades below r1.
    let mut edges = vec![r0];
    let floor = (r1 * 1e-12).max(r0);
    if floor > r0 {
        edges.push(floor);
    }
    let mut e = floor.max(r1 * 1e-12);
    while e < r1 * 0.999 {
        e *= 4.0;
        edges.push(e.min(r1));
    }
    if *edges.last().unwrap() < r1 {
        edges.push(r1);
    }
    for w in edges.windows(2) {
        if w[1] > w[0] {
            total += adaptive_simpson(&density, w[0], w[1], tol / edges.len() as f64);
        }
    }
    sigma * total
}

/// Golden-section search for the maximizer of a unimodal function on `[a, b]`.
pub fn golden_section_max(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while (hi - lo) > tol * (lo.abs() + hi.abs()).max(1e-12) {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Smooth positive random bump, vanishing at the Dirichlet end.
pub fn random_bump(grid: &Arc<RadialGrid>, rng: &mut impl Rng) -> Field {
    let radius = grid.radius();
    let amp: f64 = rng.gen_range(0.2..3.0);
    let wobble: f64 = rng.gen_range(0.0..0.45);
    let freq: f64 = rng.gen_range(1.0..4.0);
    let phase: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    let sharp: f64 = rng.gen_range(1.0..2.5);
    Field::from_fn(grid, |r| {
        let x = r / radius;
        let b = (1.0 - x * x).max(0.0).powf(sharp);
        amp * b * (1.0 + wobble * (freq * x + phase).sin())
    })
    .expect("bump construction cannot fail")
}

/// Signed random smooth field (for derivative tests).
pub fn random_signed_field(grid: &Arc<RadialGrid>, rng: &mut impl Rng) -> Field {
    let radius = grid.radius();
    let a: f64 = rng.gen_range(-2.0..2.0);
    let b: f64 = rng.gen_range(-1.0..1.0);
    let freq: f64 = rng.gen_range(1.0..5.0);
    Field::from_fn(grid, |r| {
        let x = r / radius;
        let bump = (1.0 - x * x).max(0.0);
        bump * (a + b * (freq * x).cos())
    })
    .expect("field construction cannot fail")
}

/// Random admissible system spec: exponents satisfying the range and critical
/// coupling conditions with `beta + 1 < q`.
pub fn random_admissible_spec(rng: &mut impl Rng) -> ProblemSpec {
    loop {
        let dim = rng.gen_range(3..=8usize);
        let n = dim as f64;
        let p: f64 = rng.gen_range(1.2..(n - 0.2).min(4.0));
        let q: f64 = rng.gen_range(1.2..(n - 0.2).min(4.0));
        let p_star = n * p / (n - p);
        let q_star = n * q / (n - q);
        // beta + 1 below both q and the coupling cap keeping alpha >= 0.
        let cap = (q_star * (1.0 - 1.0 / p_star)).min(q);
        if cap <= 1.0 + 1e-6 {
            continue;
        }
        let b1: f64 = rng.gen_range(1.0001..cap.min(1.0 + (cap - 1.0) * 0.999));
        let beta = b1 - 1.0;
        let alpha = p_star * (1.0 - b1 / q_star) - 1.0;
        if alpha < 0.0 {
            continue;
        }
        if let Ok(spec) = ProblemSpec::system(
            dim,
            p,
            q,
            alpha,
            beta,
            0.0,
            0.0,
            PerturbationKind::None,
            PerturbationKind::None,
        ) {
            return spec;
        }
    }
}

/// Central finite difference of a scalar function of one variable.
pub fn central_difference(f: &impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}
