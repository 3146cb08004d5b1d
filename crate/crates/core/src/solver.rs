//! Numerical tolerances shared by the solvers.

use serde::{Deserialize, Serialize};

/// Tolerances for the nested optimizations. Defaults reproduce four-decimal
/// exponents with a 10x margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Golden-section interval width on `ρ ∈ [0, 1]`.
    pub rho_tol: f64,
    /// Coarse grid points seeding the `ρ` search.
    pub rho_grid: usize,
    /// Golden-section interval width on a single multiplier `λ`.
    pub lambda_tol: f64,
    /// Stop coordinate sweeps once a full sweep improves less than this.
    pub coord_tol: f64,
    /// Bisection interval width on each threshold.
    pub gamma_tol: f64,
    /// A threshold difference below this counts as equalized.
    pub residual_tol: f64,
    /// Outer threshold differences within this of zero count as solving
    /// the equalization system (the zero set can be an interval).
    pub plateau_tol: f64,
    /// Allowed violation when checking sampled differences for monotonicity.
    pub monotone_tol: f64,
    /// Dual objectives below this value (nats) are treated as `-inf`.
    pub neg_inf_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rho_tol: 1e-9,
            rho_grid: 33,
            lambda_tol: 1e-10,
            coord_tol: 1e-11,
            gamma_tol: 1e-6,
            residual_tol: 1e-7,
            plateau_tol: 1e-6,
            monotone_tol: 1e-6,
            neg_inf_floor: -1e3,
        }
    }
}
