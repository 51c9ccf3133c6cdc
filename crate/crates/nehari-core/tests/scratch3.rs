//! Temporary calibration for the non-compact demo config (deleted later).

use nehari_core::bubbles::{sobolev_constant_reference, BubbleSpec};
use nehari_core::functionals::{eval_j, PerturbationKind, ProblemSpec};
use nehari_core::grid::{build_radial_grid, Field};
use nehari_core::psdiag::{brezis_lieb_defect, build_noncompact_ps};
use nehari_core::solver::{minimize_scalar_nehari, SeedKind, SolveConfig};
use std::sync::Arc;

fn bump(grid: &Arc<nehari_core::grid::RadialGrid>) -> Field {
    let radius = grid.radius();
    Field::from_fn(grid, |r| {
        let x = r / radius;
        (1.0 - x * x).max(0.0).powi(2)
    })
    .unwrap()
}

#[test]
fn window_scan_n7() {
    let grid = build_radial_grid(7, 8.0, 2000, 6.0).unwrap();
    let u = bump(&grid);
    for lambda in [0.001, 0.002, 0.004, 0.008, 0.012, 0.016, 0.02, 0.03] {
        let spec =
            ProblemSpec::scalar(7, 2.0, lambda, PerturbationKind::Power { exponent: 1.5 }).unwrap();
        match nehari_core::nehari::project_scalar(&spec, &u) {
            Ok(pt) => println!(
                "lambda={lambda}: t0={:.4} J={:.6}",
                pt.scalings[0], pt.energy
            ),
            Err(e) => println!("lambda={lambda}: FAIL {e}"),
        }
    }
}

#[test]
fn solver_in_window() {
    let grid = build_radial_grid(7, 8.0, 2000, 6.0).unwrap();
    let s = sobolev_constant_reference(7, 2.0).unwrap().value;
    let c1 = s.powf(3.5) / 7.0;
    println!("first summand = {c1:.4}");
    for lambda in [0.008, 0.012, 0.016] {
        let spec =
            ProblemSpec::scalar(7, 2.0, lambda, PerturbationKind::Power { exponent: 1.5 }).unwrap();
        let cfg = SolveConfig {
            max_iterations: 600,
            ..Default::default()
        };
        let t0 = std::time::Instant::now();
        match minimize_scalar_nehari(&spec, &grid, &cfg) {
            Ok(pt) => println!(
                "lambda={lambda}: m={:.6} converged={} t0={:.4} took {:?}",
                pt.energy,
                pt.converged,
                pt.scalings[0],
                t0.elapsed()
            ),
            Err(e) => println!("lambda={lambda}: FAIL {e}"),
        }
    }
}

#[test]
fn demo_levels() {
    // Candidate demo: N=7, p=2, gamma=1.5, lambda picked inside the window.
    let grid = build_radial_grid(7, 8.0, 2500, 6.0).unwrap();
    let lambda = 0.012;
    let spec =
        ProblemSpec::scalar(7, 2.0, lambda, PerturbationKind::Power { exponent: 1.5 }).unwrap();
    let cfg = SolveConfig {
        max_iterations: 600,
        ..Default::default()
    };
    let base_pt = minimize_scalar_nehari(&spec, &grid, &cfg).unwrap();
    let m = base_pt.energy;
    let s = sobolev_constant_reference(7, 2.0).unwrap().value;
    let c1 = s.powf(3.5) / 7.0;
    let c_star = c1 + m.min(0.0);
    println!("m = {m:.6}, c* = {c_star:.6}");
    let base = if m < 0.0 {
        base_pt.scalar_field().clone()
    } else {
        Field::zeros(&grid)
    };
    let bubble = BubbleSpec::new(Arc::clone(&grid), 1.0, 4.0).unwrap();
    let seq = build_noncompact_ps(&spec, &base, &bubble, &[2, 4, 8, 16, 32]).unwrap();
    let p_star = spec.p_star();
    for (i, f) in seq.iter().enumerate() {
        let j = eval_j(&spec, f).unwrap();
        let bl = brezis_lieb_defect(f, &base, p_star).unwrap();
        println!(
            "n={}: level={:.4} rel={:.4e} bl={:.6e}",
            [2, 4, 8, 16, 32][i],
            j,
            (j - c_star) / c_star,
            bl
        );
    }
}
