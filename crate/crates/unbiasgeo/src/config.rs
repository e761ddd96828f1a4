use serde::{Deserialize, Serialize};

/// Shared numeric configuration.
///
/// Finite-difference steps are relative and are multiplied by
/// `max(1, |xi_i|)` per coordinate.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct NumericConfig {
    /// Step for first derivatives of log-densities and scalar fields.
    pub fd_step_grad: f64,
    /// Step for second derivatives.
    pub fd_step_hess: f64,
    /// Step for derivatives of connection coefficients (curvature).
    pub fd_step_gamma: f64,
    /// Monte Carlo sample count for expectations without a quadrature rule.
    pub expectation_samples: usize,
    /// Seed for Monte Carlo expectations.
    pub expectation_seed: u64,
    /// Absolute tolerance for adaptive quadrature.
    pub quad_abs_tol: f64,
    /// Relative tolerance for adaptive quadrature.
    pub quad_rel_tol: f64,
    /// Relative tolerance of the level-set constancy check.
    pub level_tol: f64,
    /// Probe count per level set.
    pub level_probes: usize,
    /// Relative tolerance of the geodesic integrator.
    pub ode_rel_tol: f64,
    /// Absolute tolerance of the geodesic integrator.
    pub ode_abs_tol: f64,
    /// Gradient sup-norm tolerance of the Newton optimizer.
    pub grad_tol: f64,
    /// Iteration cap of the Newton optimizer.
    pub max_iters: usize,
    /// Extra multi-start perturbations around the moment seed.
    pub extra_starts: usize,
    /// Node count of the trapezoid rule for line integrals along geodesics.
    pub line_nodes: usize,
    /// Anchor radius for indefinite radial integrals (estimand construction).
    pub anchor_radius: f64,
    /// Initial directions tried by the boundary-value geodesic solver.
    pub shooting_starts: usize,
}

impl Default for NumericConfig {
    fn default() -> Self {
        NumericConfig {
            fd_step_grad: 1e-5,
            fd_step_hess: 1e-4,
            fd_step_gamma: 1e-3,
            expectation_samples: 200_000,
            expectation_seed: 0x5eed_1234,
            quad_abs_tol: 1e-10,
            quad_rel_tol: 1e-8,
            level_tol: 1e-4,
            level_probes: 8,
            ode_rel_tol: 1e-10,
            ode_abs_tol: 1e-12,
            grad_tol: 1e-10,
            max_iters: 200,
            extra_starts: 4,
            line_nodes: 64,
            anchor_radius: 0.5,
            shooting_starts: 8,
        }
    }
}

impl NumericConfig {
    pub fn scale(x: f64) -> f64 {
        x.abs().max(1.0)
    }
}
