//! Subcommand implementations. Every file they emit is byte-deterministic for
//! a fixed config and seed: floats are printed with 17 significant digits and
//! all iteration orders are fixed.

use crate::config::{ExperimentConfig, ProblemMode};
use anyhow::{bail, Context, Result};
use nehari_core::bubbles::{
    estimate_sobolev_constant, extrapolate_limit, psi_sequence, sobolev_constant_reference,
    BubbleSpec,
};
use nehari_core::functionals::{eval_p, ProblemSpec};
use nehari_core::grid::{integrate_abs_pow_within, Field};
use nehari_core::io::{csv_table, fmt_f64, to_json_string, CsvCell};
use nehari_core::nehari::{energy_rate, k_from_invariants, r_exponent, NehariFields};
use nehari_core::psdiag::{build_noncompact_ps, ps_check, PsSequence, PsThresholds};
use nehari_core::solver::{
    critical_level_scalar, critical_level_system, minimize_scalar_nehari, minimize_system_nehari,
    sweep as solver_sweep,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fs;
use std::path::Path;

/// Exit code conventions shared by every subcommand.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NONCONVERGED: i32 = 2;
pub const EXIT_UNTRUSTED: i32 = 3;

fn write(out_dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output dir {}", out_dir.display()))?;
    let path = out_dir.join(name);
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// `identities`: closed-form exponent identities of the configured spec.
pub fn identities(config: &ExperimentConfig, out_dir: &Path) -> Result<i32> {
    let spec = config.build_spec()?;
    if !spec.is_system() {
        bail!("identities needs problem.mode = \"system\"");
    }
    let r = r_exponent(&spec).map_err(|e| anyhow::anyhow!("{e}"))?;
    let rate = energy_rate(&spec).map_err(|e| anyhow::anyhow!("{e}"))?;
    let direct = (spec.alpha() + 1.0) / spec.p() + (spec.beta() + 1.0) / spec.q() - 1.0;
    let identity_residual = (direct - rate).abs();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let ell: f64 = rng.gen_range(0.1..10.0);
    let k = k_from_invariants(&spec, ell, ell, ell).map_err(|e| anyhow::anyhow!("{e}"))?;
    let collapse_residual = (k - ell).abs() / ell;

    let mut checks: Vec<(String, f64, bool)> = vec![
        (
            "exponent identity (alpha+1)/p + (beta+1)/q - 1 = (alpha+1)(1/p - 1/r)".into(),
            identity_residual,
            identity_residual < 1e-12,
        ),
        ("r > p".into(), r - spec.p(), r > spec.p()),
        (
            format!("K collapse at P=Q=R={}", fmt_f64(ell)),
            collapse_residual,
            collapse_residual < 1e-12,
        ),
    ];
    if spec.p() == spec.q() {
        let target = spec.p() / (spec.dim() as f64 - spec.p());
        checks.push((
            "(alpha+1)(1/p - 1/r) = p/(N-p)".into(),
            (rate - target).abs(),
            (rate - target).abs() < 1e-12,
        ));
    }

    println!("r = {}", fmt_f64(r));
    println!("(alpha+1)(1/p - 1/r) = {}", fmt_f64(rate));
    let mut all_pass = true;
    let rows: Vec<Vec<CsvCell>> = checks
        .iter()
        .map(|(name, residual, pass)| {
            all_pass &= *pass;
            println!("{}: {}", name, if *pass { "PASS" } else { "FAIL" });
            vec![
                CsvCell::Text(name.clone()),
                CsvCell::Float(*residual),
                CsvCell::Text(if *pass { "PASS" } else { "FAIL" }.into()),
            ]
        })
        .collect();
    write(
        out_dir,
        "identities.csv",
        &csv_table(&["check", "residual", "status"], &rows),
    )?;

    #[derive(Serialize)]
    struct IdentitiesJson {
        r: f64,
        energy_rate: f64,
        all_pass: bool,
    }
    write(
        out_dir,
        "identities.json",
        &to_json_string(&IdentitiesJson {
            r,
            energy_rate: rate,
            all_pass,
        }),
    )?;
    Ok(if all_pass { EXIT_OK } else { EXIT_VALIDATION })
}

/// `sobolev`: constant estimates over the configured epsilon ladder.
pub fn sobolev(config: &ExperimentConfig, out_dir: &Path) -> Result<i32> {
    let spec = config.build_spec()?;
    let grid = config.build_grid()?;
    let cutoff = config.cutoff_radius();
    let mut rows = Vec::new();
    let mut any_untrusted = false;
    let mut last = None;
    for &eps in &config.sobolev.epsilons {
        let bubble = BubbleSpec::new(std::sync::Arc::clone(&grid), eps, cutoff)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        let est = estimate_sobolev_constant(&bubble, &spec).map_err(|e| anyhow::anyhow!("{e}"))?;
        println!(
            "epsilon = {}: S = {} (trusted: {})",
            fmt_f64(eps),
            fmt_f64(est.value),
            est.trusted
        );
        any_untrusted |= !est.trusted;
        rows.push(vec![
            CsvCell::Float(eps),
            CsvCell::Float(est.value),
            CsvCell::Float(est.grad_norm_p),
            CsvCell::Float(est.crit_norm),
            CsvCell::Float(est.truncation_indicator),
            CsvCell::Text(est.trusted.to_string()),
        ]);
        last = Some(est);
    }
    write(
        out_dir,
        "sobolev.csv",
        &csv_table(
            &[
                "epsilon",
                "value",
                "grad_norm_p",
                "crit_norm",
                "truncation_indicator",
                "trusted",
            ],
            &rows,
        ),
    )?;
    if let Some(est) = last {
        write(out_dir, "sobolev.json", &est.to_json())?;
    }
    Ok(if any_untrusted { EXIT_UNTRUSTED } else { EXIT_OK })
}

/// `ground-state`: Nehari minimization in the configured mode.
pub fn ground_state(config: &ExperimentConfig, out_dir: &Path) -> Result<i32> {
    let spec = config.build_spec()?;
    let grid = config.build_grid()?;
    let solve = config.build_solve_config();
    let point = match config.problem.mode {
        ProblemMode::Scalar => minimize_scalar_nehari(&spec, &grid, &solve),
        ProblemMode::System => minimize_system_nehari(&spec, &grid, &solve),
    }
    .map_err(|e| anyhow::anyhow!("{e}"))?;

    println!(
        "energy = {} (converged: {})",
        fmt_f64(point.energy),
        point.converged
    );
    write(out_dir, "ground_state.json", &point.to_json())?;
    match &point.fields {
        NehariFields::Scalar(u) => {
            let mut buf = Vec::new();
            u.write_csv(&mut buf)?;
            write(out_dir, "ground_state_field.csv", &String::from_utf8(buf)?)?;
        }
        NehariFields::System(u, v) => {
            let mut buf = Vec::new();
            u.write_csv(&mut buf)?;
            write(out_dir, "ground_state_field_u.csv", &String::from_utf8(buf)?)?;
            let mut buf = Vec::new();
            v.write_csv(&mut buf)?;
            write(out_dir, "ground_state_field_v.csv", &String::from_utf8(buf)?)?;
        }
    }
    Ok(if point.converged {
        EXIT_OK
    } else {
        EXIT_NONCONVERGED
    })
}

/// `critical-level`: the two-summand critical level report.
pub fn critical_level(config: &ExperimentConfig, out_dir: &Path) -> Result<i32> {
    let spec = config.build_spec()?;
    let grid = config.build_grid()?;
    let solve = config.build_solve_config();
    let report = match config.problem.mode {
        ProblemMode::Scalar => critical_level_scalar(&spec, &grid, &solve),
        ProblemMode::System => critical_level_system(&spec, &grid, &solve),
    }
    .map_err(|e| anyhow::anyhow!("{e}"))?;
    println!(
        "c* = {} (inf_j0 = {}, second summand = {})",
        fmt_f64(report.c_star),
        fmt_f64(report.inf_j0),
        fmt_f64(report.inf_j_lambda)
    );
    write(out_dir, "critical_level.json", &report.to_json())?;
    Ok(if report.converged {
        EXIT_OK
    } else {
        EXIT_NONCONVERGED
    })
}

/// `bubble-diag`: cutoff-bubble norm tables, concentration fractions, and the
/// adjudication of their common limit against the two closed-form candidates.
pub fn bubble_diag(config: &ExperimentConfig, out_dir: &Path) -> Result<i32> {
    let spec = config.build_spec()?;
    let grid = config.build_grid()?;
    let cutoff = config.cutoff_radius();
    let bubble = BubbleSpec::new(std::sync::Arc::clone(&grid), 1.0, cutoff)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let p_star = spec.p_star();
    let radii = [
        0.05 * grid.radius(),
        0.1 * grid.radius(),
        0.2 * grid.radius(),
    ];

    let mut crit_norms = Vec::new();
    let mut grad_norms = Vec::new();
    let mut rows = Vec::new();
    for &n in &config.ps.n_list {
        let psi = psi_sequence(&bubble, &spec, n).map_err(|e| anyhow::anyhow!("{e}"))?;
        let crit = integrate_abs_pow_within(&grid, &psi, p_star, grid.radius())
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        let grad = eval_p(&spec, &psi).map_err(|e| anyhow::anyhow!("{e}"))?;
        let fractions = nehari_core::bubbles::concentration_profile(&psi, p_star, &radii)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        crit_norms.push(crit);
        grad_norms.push(grad);
        rows.push(vec![
            CsvCell::Int(n as i64),
            CsvCell::Float(crit),
            CsvCell::Float(grad),
            CsvCell::Float(fractions[0].1),
            CsvCell::Float(fractions[1].1),
            CsvCell::Float(fractions[2].1),
        ]);
    }
    write(
        out_dir,
        "bubble_diag.csv",
        &csv_table(
            &[
                "n",
                "crit_norm",
                "grad_norm",
                "mass_frac_005R",
                "mass_frac_01R",
                "mass_frac_02R",
            ],
            &rows,
        ),
    )?;

    let limit_crit = extrapolate_limit(&crit_norms);
    let limit_grad = extrapolate_limit(&grad_norms);
    let common = 0.5 * (limit_crit + limit_grad);
    let reference =
        sobolev_constant_reference(spec.dim(), spec.p()).map_err(|e| anyhow::anyhow!("{e}"))?;
    let s_p = reference.value;
    let candidate_plain = s_p;
    let candidate_power = s_p.powf(spec.dim() as f64 / spec.p());
    let rel_plain = (common - candidate_plain).abs() / candidate_plain;
    let rel_power = (common - candidate_power).abs() / candidate_power;
    let matched = if rel_power < rel_plain {
        "S_p^(N/p)"
    } else {
        "S_p"
    };
    println!(
        "common limit = {} matches {} (rel {} vs {})",
        fmt_f64(common),
        matched,
        fmt_f64(rel_power.min(rel_plain)),
        fmt_f64(rel_power.max(rel_plain))
    );

    #[derive(Serialize)]
    struct LimitJson<'a> {
        limit_crit_norm: f64,
        limit_grad_norm: f64,
        common_limit: f64,
        sobolev_constant: f64,
        candidate_s_p: f64,
        candidate_s_p_pow_n_over_p: f64,
        rel_to_s_p: f64,
        rel_to_s_p_pow: f64,
        matched: &'a str,
    }
    write(
        out_dir,
        "bubble_diag.json",
        &to_json_string(&LimitJson {
            limit_crit_norm: limit_crit,
            limit_grad_norm: limit_grad,
            common_limit: common,
            sobolev_constant: s_p,
            candidate_s_p: candidate_plain,
            candidate_s_p_pow_n_over_p: candidate_power,
            rel_to_s_p: rel_plain,
            rel_to_s_p_pow: rel_power,
            matched,
        }),
    )?;
    Ok(if reference.trusted {
        EXIT_OK
    } else {
        EXIT_UNTRUSTED
    })
}

/// `ps-demo`: build the non-compact sequence at the critical level and run
/// the diagnostics on it.
pub fn ps_demo(config: &ExperimentConfig, out_dir: &Path) -> Result<i32> {
    let spec = config.build_spec()?;
    if config.problem.mode != ProblemMode::Scalar {
        bail!("ps-demo runs the scalar construction; set problem.mode = \"scalar\"");
    }
    let grid = config.build_grid()?;
    let solve = config.build_solve_config();

    let report = critical_level_scalar(&spec, &grid, &solve).map_err(|e| anyhow::anyhow!("{e}"))?;
    let minimizer = minimize_scalar_nehari(&spec, &grid, &solve).map_err(|e| anyhow::anyhow!("{e}"))?;
    // The base realizes the second summand: the Nehari minimizer when its
    // energy is negative, otherwise the zero field (where J vanishes).
    let base = if minimizer.energy < 0.0 {
        minimizer.scalar_field().clone()
    } else {
        Field::zeros(&grid)
    };

    let bubble = BubbleSpec::new(std::sync::Arc::clone(&grid), 1.0, config.cutoff_radius())
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let sequence = build_noncompact_ps(&spec, &base, &bubble, &config.ps.n_list)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let thresholds = PsThresholds {
        concentration_fraction: config.ps.concentration_fraction,
        level_rel_tol: config.ps.level_rel_tol,
        ball_fraction: config.ps.ball_fraction,
        ..Default::default()
    };
    let ps = ps_check(
        &spec,
        &PsSequence::Scalar(sequence),
        report.c_star,
        &thresholds,
        Some(&base),
    )
    .map_err(|e| anyhow::anyhow!("{e}"))?;

    println!(
        "c* = {}, last level = {}, verdict = {:?}",
        fmt_f64(report.c_star),
        fmt_f64(*ps.levels.last().unwrap()),
        ps.verdict
    );
    let labels: Vec<i64> = config.ps.n_list.iter().map(|&n| n as i64).collect();
    write(out_dir, "ps_table.csv", &ps.to_csv(&labels))?;
    write(out_dir, "ps_report.json", &ps.to_json())?;
    let mut buf = Vec::new();
    base.write_csv(&mut buf)?;
    write(out_dir, "ps_base_field.csv", &String::from_utf8(buf)?)?;
    write(out_dir, "critical_level.json", &report.to_json())?;

    Ok(if minimizer.converged && report.converged {
        EXIT_OK
    } else {
        EXIT_NONCONVERGED
    })
}

/// `sweep`: critical levels over a parameter grid.
pub fn sweep(config: &ExperimentConfig, out_dir: &Path) -> Result<i32> {
    let spec = config.build_spec()?;
    let grid = config.build_grid()?;
    let solve = config.build_solve_config();
    let mut parameters = Vec::new();
    if config.problem.mode == ProblemMode::System && !config.sweep.mus.is_empty() {
        for &l in &config.sweep.lambdas {
            for &m in &config.sweep.mus {
                parameters.push((l, m));
            }
        }
    } else {
        for &l in &config.sweep.lambdas {
            parameters.push((l, 0.0));
        }
    }
    let rows = solver_sweep(&spec, &grid, &solve, &parameters).map_err(|e| anyhow::anyhow!("{e}"))?;
    let mut any_nonconverged = false;
    let table: Vec<Vec<CsvCell>> = rows
        .iter()
        .map(|r| {
            any_nonconverged |= !r.converged;
            vec![
                CsvCell::Float(r.lambda),
                CsvCell::Float(r.mu),
                CsvCell::Float(r.inf_j0),
                CsvCell::Float(r.inf_j_lambda),
                CsvCell::Float(r.c_star),
                CsvCell::Text(r.converged.to_string()),
            ]
        })
        .collect();
    write(
        out_dir,
        "sweep.csv",
        &csv_table(
            &["lambda", "mu", "inf_j0", "inf_j_lambda", "c_star", "converged"],
            &table,
        ),
    )?;
    Ok(if any_nonconverged {
        EXIT_NONCONVERGED
    } else {
        EXIT_OK
    })
}

/// Shared spec accessor for tests.
pub fn spec_of(config: &ExperimentConfig) -> Result<ProblemSpec> {
    config.build_spec()
}
