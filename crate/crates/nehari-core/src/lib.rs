//! Variational objects of critical quasilinear problems on radial domains:
//! graded radial quadrature, p-Laplacian energies and their Gateaux
//! derivatives, Nehari fiber projections for the scalar equation and the
//! coupled (p,q) system, extremal concentration profiles with the best
//! Sobolev constant, critical-level assembly, and empirical Palais-Smale
//! diagnostics.
//!
//! Everything is desk-scale: fields are one-dimensional radial samples, all
//! integrals reduce to weighted sums, and every estimate ships with the
//! cross-checks (truncation indicators, fiber residuals, dual-norm
//! surrogates) needed to audit it.

pub mod bubbles;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod io;
pub mod nehari;
pub mod psdiag;
pub mod solver;

#[cfg(feature = "testkit")]
pub mod testkit;

pub use bubbles::{
    concentration_profile, estimate_sobolev_constant, psi_sequence, talenti_field, BubbleSpec,
    SobolevEstimate,
};
pub use error::{Error, Result};
pub use functionals::{
    eval_i, eval_j, eval_p, eval_q, eval_r, gateaux_d1, gateaux_d2, gateaux_residual,
    PerturbationKind, ProblemSpec,
};
pub use grid::{
    build_radial_grid, integrate, lp_norm, radial_derivative, Field, RadialGrid,
};
pub use nehari::{
    fiber_map, k_functional, project_scalar, project_system, r_exponent, t0_scalar, FiberBranch,
    NehariFields, NehariPoint,
};
pub use psdiag::{
    brezis_lieb_defect, build_noncompact_ps, ps_check, PsReport, PsSequence, PsThresholds, Verdict,
};
pub use solver::{
    critical_level_scalar, critical_level_system, holder_lower_bound, minimize_scalar_nehari,
    minimize_system_nehari, CriticalLevelReport, SeedKind, SolveConfig,
};
