//! Temporary calibration checks (deleted before finalizing).

use nehari_core::bubbles::{
    estimate_sobolev_constant, extrapolate_limit, psi_sequence, sobolev_constant_reference,
    BubbleSpec,
};
use nehari_core::functionals::{eval_j, eval_p, PerturbationKind, ProblemSpec};
use nehari_core::grid::{build_radial_grid, integrate_abs_pow_within, Field};
use nehari_core::solver::{minimize_system_nehari, SeedKind, SolveConfig};
use std::sync::Arc;

#[test]
fn eps_invariance() {
    let grid = build_radial_grid(3, 1024.0, 4096, 8.0).unwrap();
    let spec = ProblemSpec::scalar(3, 2.0, 0.0, PerturbationKind::None).unwrap();
    let mut vals = Vec::new();
    for eps in [1.0, 0.25, 1.0 / 16.0] {
        let b = BubbleSpec::new(Arc::clone(&grid), eps, 512.0).unwrap();
        let est = estimate_sobolev_constant(&b, &spec).unwrap();
        println!("eps={eps}: S={:.8} trusted={} ind={:.2e}", est.value, est.trusted, est.truncation_indicator);
        vals.push(est.value);
    }
    let spread = (vals.iter().cloned().fold(f64::MIN, f64::max)
        - vals.iter().cloned().fold(f64::MAX, f64::min))
        / vals[2];
    println!("spread = {:.4e}", spread);
}

#[test]
fn psi_limits() {
    // Criterion 8 setup: p=2, N=3 on R=256, rho=128.
    let grid = build_radial_grid(3, 256.0, 4000, 8.0).unwrap();
    let spec = ProblemSpec::scalar(3, 2.0, 0.0, PerturbationKind::None).unwrap();
    let bubble = BubbleSpec::new(Arc::clone(&grid), 1.0, 128.0).unwrap();
    let p_star = spec.p_star();
    let mut crits = Vec::new();
    let mut grads = Vec::new();
    for n in [2u32, 4, 8, 16, 32] {
        let psi = psi_sequence(&bubble, &spec, n).unwrap();
        let crit = integrate_abs_pow_within(&grid, &psi, p_star, grid.radius()).unwrap();
        let gradp = eval_p(&spec, &psi).unwrap();
        println!("n={n}: crit={crit:.6} grad={gradp:.6}");
        crits.push(crit);
        grads.push(gradp);
    }
    let ext_c = extrapolate_limit(&crits);
    let ext_g = extrapolate_limit(&grads);
    let s = sobolev_constant_reference(3, 2.0).unwrap().value;
    println!(
        "extrapolated crit={ext_c:.6} grad={ext_g:.6}; S={s:.6}, S^{{N/p}}={:.6}",
        s.powf(1.5)
    );
    println!(
        "crit vs S^1.5: {:.3e}; grad vs S^1.5: {:.3e}; mutual at n=32: {:.3e}",
        (ext_c - s.powf(1.5)).abs() / s.powf(1.5),
        (ext_g - s.powf(1.5)).abs() / s.powf(1.5),
        (crits[4] - grads[4]).abs() / crits[4]
    );
}

#[test]
fn system_seed_quality() {
    // Criterion 3 triple 1: N=3, p=q=2, alpha=3.5, beta=0.5.
    let spec = ProblemSpec::system(
        3, 2.0, 2.0, 3.5, 0.5, 0.0, 0.0,
        PerturbationKind::None, PerturbationKind::None,
    )
    .unwrap();
    let s_p = sobolev_constant_reference(3, 2.0).unwrap().value;
    let bound = nehari_core::solver::proposition_value(&spec, s_p).unwrap();
    for nodes in [1200usize, 2400] {
        let grid = build_radial_grid(3, 1.0, nodes, 6.0).unwrap();
        let eps = (0.5_f64 / 1000.0).powi(2);
        let cfg = SolveConfig {
            seed: SeedKind::Bubble { epsilon: eps },
            max_iterations: 200,
            ..Default::default()
        };
        let t0 = std::time::Instant::now();
        let pt = minimize_system_nehari(&spec, &grid, &cfg).unwrap();
        println!(
            "nodes={nodes}: E={:.8} bound={:.8} rel={:+.4e} converged={} took {:?}",
            pt.energy,
            bound,
            (pt.energy - bound) / bound,
            pt.converged,
            t0.elapsed()
        );
    }
}

#[test]
fn concave_window() {
    // Criterion 7 exploration: N=5, p=2, power gamma=1.5, find lambda with
    // negative fiber-max energy.
    let grid = build_radial_grid(5, 8.0, 2500, 6.0).unwrap();
    for lambda in [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0] {
        let spec = ProblemSpec::scalar(5, 2.0, lambda, PerturbationKind::Power { exponent: 1.5 })
            .unwrap();
        let u = Field::from_fn(&grid, |r| {
            let x: f64 = r / 8.0;
            (1.0 - x * x).max(0.0).powi(2)
        })
        .unwrap();
        match nehari_core::nehari::project_scalar(&spec, &u) {
            Ok(pt) => {
                let j = eval_j(&spec, pt.scalar_field()).unwrap();
                println!("lambda={lambda}: t0={:.4} J={:.6}", pt.scalings[0], j);
            }
            Err(e) => println!("lambda={lambda}: {e}"),
        }
    }
}
