//! Temporary numerical smoke checks (deleted before finalizing).

use nehari_core::bubbles::{sobolev_constant_reference, talenti_derivative, talenti_value};
use nehari_core::functionals::{PerturbationKind, ProblemSpec};
use nehari_core::grid::{build_radial_grid, integrate, Field};
use nehari_core::testkit::radial_integral_oracle;

#[test]
fn smoke_volume() {
    let grid = build_radial_grid(3, 1.0, 1000, 1.0).unwrap();
    let one = Field::from_fn(&grid, |_| 1.0).unwrap();
    let vol = integrate(&grid, &one).unwrap();
    let exact = 4.0 * std::f64::consts::PI / 3.0;
    println!("vol rel err = {:.3e}", (vol - exact).abs() / exact);

    let grid4 = build_radial_grid(4, 2.0, 1000, 1.0).unwrap();
    let one4 = Field::from_fn(&grid4, |_| 1.0).unwrap();
    let vol4 = integrate(&grid4, &one4).unwrap();
    let exact4 = std::f64::consts::PI.powi(2) / 2.0 * 16.0;
    println!("vol4 rel err = {:.3e}", (vol4 - exact4).abs() / exact4);
}

#[test]
fn smoke_sobolev() {
    let t0 = std::time::Instant::now();
    let est = sobolev_constant_reference(3, 2.0).unwrap();
    let s_exact = 3.0 * (std::f64::consts::PI / 2.0).powf(4.0 / 3.0);
    println!(
        "S est = {:.8}, exact = {:.8}, rel = {:.3e}, trusted = {}, indicator = {:.3e}, took {:?}",
        est.value,
        s_exact,
        (est.value - s_exact).abs() / s_exact,
        est.trusted,
        est.truncation_indicator,
        t0.elapsed()
    );

    // Oracle route over the same truncated domain.
    let tol = 1e-12;
    let grad = radial_integral_oracle(
        3,
        &|r| talenti_derivative(3, 2.0, 1.0 / 16.0, r).abs().powi(2),
        0.0,
        1024.0,
        tol,
    );
    let crit = radial_integral_oracle(
        3,
        &|r| talenti_value(3, 2.0, 1.0 / 16.0, r).powi(6),
        0.0,
        1024.0,
        tol,
    );
    let oracle = grad / crit.powf(2.0 / 6.0);
    println!(
        "oracle S = {:.8}, grid-vs-oracle rel = {:.3e}",
        oracle,
        (est.value - oracle).abs() / oracle
    );
    println!("grad = {:.8} vs est {:.8}", grad, est.grad_norm_p);
    println!("crit = {:.8} vs est {:.8}", crit, est.crit_norm);
}

#[test]
fn smoke_projection() {
    let grid = build_radial_grid(3, 1.0, 800, 4.0).unwrap();
    let spec = ProblemSpec::scalar(3, 2.0, 0.0, PerturbationKind::None).unwrap();
    let u = Field::from_fn(&grid, |r| (1.0 - r * r).max(0.0).powi(2)).unwrap();
    let pt = nehari_core::nehari::project_scalar(&spec, &u).unwrap();
    println!(
        "projected energy = {:.8}, t0 = {:.6}, res = {:.3e}",
        pt.energy, pt.scalings[0], pt.residuals[0]
    );
    let s_exact = 3.0 * (std::f64::consts::PI / 2.0).powf(4.0 / 3.0);
    println!("target (1/3) S^{{3/2}} = {:.8}", s_exact.powf(1.5) / 3.0);
}
