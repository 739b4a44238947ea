//! Centralized numeric tolerances and guard thresholds.

/// The single record holding every tolerance the library relies on.
///
/// Defaults are the values the simulator is specified and tested against;
/// overriding them is possible everywhere a `&Tolerances` is accepted.
#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    /// Largest exponent fed to `exp` before a saturation diagnostic is raised.
    /// `exp(709.78)` is the f64 ceiling; 700 leaves headroom for the factors
    /// multiplied on afterwards.
    pub exp_overflow: f64,
    /// Early-stop threshold on the consensus error ‖L x̃‖.
    pub early_stop_consensus: f64,
    /// Early-stop threshold on the norm of the full vector field.
    pub early_stop_field: f64,
    /// Consecutive steps both early-stop conditions must hold before a run
    /// terminates ahead of the horizon.
    pub early_stop_steps: usize,
    /// Convergence threshold on ‖∇β‖∞ for the centralized reference solver.
    pub ascent_grad_tol: f64,
    /// Iteration cap per restart of the centralized reference solver.
    pub ascent_max_iters: usize,
    /// Distinct local optima are clustered at this ∞-norm resolution.
    pub optima_cluster_tol: f64,
    /// Feasibility margin: verdicts above it are `Feasible`, in (0, margin]
    /// `TightlyFeasible`.
    pub feasibility_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            exp_overflow: 700.0,
            early_stop_consensus: 1e-6,
            early_stop_field: 1e-8,
            early_stop_steps: 100,
            ascent_grad_tol: 1e-9,
            ascent_max_iters: 20_000,
            optima_cluster_tol: 1e-2,
            feasibility_margin: 0.5,
        }
    }
}
