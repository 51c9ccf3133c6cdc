//! Lower-branch demo calibration (deleted before finalizing).

use nehari_core::bubbles::{sobolev_constant_reference, BubbleSpec};
use nehari_core::functionals::{eval_j, PerturbationKind, ProblemSpec};
use nehari_core::grid::{build_radial_grid, lp_norm, Field};
use nehari_core::nehari::{project_scalar_branch, FiberBranch};
use nehari_core::psdiag::{brezis_lieb_defect, build_noncompact_ps};
use nehari_core::solver::{minimize_scalar_nehari, SeedKind, SolveConfig};
use std::sync::Arc;

#[test]
fn lower_branch_demo() {
    let grid = build_radial_grid(7, 8.0, 2500, 6.0).unwrap();
    let lambda = 0.02;
    let spec =
        ProblemSpec::scalar(7, 2.0, lambda, PerturbationKind::Power { exponent: 1.5 }).unwrap();

    // Direct lower-branch projection of the bump.
    let bump = Field::from_fn(&grid, |r| {
        let x: f64 = r / 8.0;
        (1.0 - x * x).max(0.0).powi(2)
    })
    .unwrap();
    let low = project_scalar_branch(&spec, &bump, FiberBranch::LowestEnergy).unwrap();
    println!(
        "bump lower branch: t1={:.6e} J={:.6e} res={:.2e}",
        low.scalings[0], low.energy, low.residuals[0]
    );

    // Lower-branch minimization.
    let cfg = SolveConfig {
        max_iterations: 800,
        branch: FiberBranch::LowestEnergy,
        ..Default::default()
    };
    let t0 = std::time::Instant::now();
    let pt = minimize_scalar_nehari(&spec, &grid, &cfg).unwrap();
    println!(
        "solver: m={:.8e} converged={} took {:?}",
        pt.energy,
        pt.converged,
        t0.elapsed()
    );

    let s = sobolev_constant_reference(7, 2.0).unwrap().value;
    let c1 = s.powf(3.5) / 7.0;
    let m = pt.energy.min(0.0);
    let c_star = c1 + m;
    println!("c1={c1:.4} m={m:.6} c*={c_star:.4}");

    let base = pt.scalar_field().clone();
    println!(
        "base amplitude={:.4e} crit norm={:.4e}",
        base.max_abs(),
        lp_norm(&grid, &base, spec.p_star()).unwrap()
    );
    let bubble = BubbleSpec::new(Arc::clone(&grid), 1.0, 4.0).unwrap();
    let n_list = [2u32, 4, 8, 16, 32];
    let seq = build_noncompact_ps(&spec, &base, &bubble, &n_list).unwrap();
    let p_star = spec.p_star();
    for (i, f) in seq.iter().enumerate() {
        let j = eval_j(&spec, f).unwrap();
        let bl = brezis_lieb_defect(f, &base, p_star).unwrap();
        let conc =
            nehari_core::bubbles::concentration_profile(f, p_star, &[0.8]).unwrap()[0].1;
        println!(
            "n={}: level={:.6} rel={:+.4e} bl={:.6e} conc={:.4}",
            n_list[i],
            j,
            (j - c_star) / c_star,
            bl,
            conc
        );
    }
}
