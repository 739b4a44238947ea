//! Continuous-time distributed consensus optimization protocol and its
//! fixed-step RK4 discretization.
//!
//! Every agent integrates an estimate of the whole formation and an integral
//! correction term:
//!
//! ```text
//! d/dt est_i = -k1 ∇f_i(est_i) - k2 Σ_{j∈N_i} (est_i - est_j) - z_i
//! d/dt z_i   =  k1 k2 Σ_{j∈N_i} (est_i - est_j)
//! ```
//!
//! where `f_i` is the agent's private objective from the constraints module
//! and the neighbor sums run over the communication graph. With matched
//! initialization (`est_i`'s own block equals the agent's start position) the
//! single-integrator controller makes each agent's physical position track
//! its own estimate block exactly, so positions are read off the estimates.
//!
//! The outer smoothing parameter ν_β follows a ramp schedule so that deeply
//! violated initial estimates cannot overflow the exponentials at t = 0.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::constraints::{
    system_min_margin, system_smooth_margin, AgentConstraintSet, ConfigError, SmoothingParams,
};
use crate::graphs::CommGraph;
use crate::layout::Layout;
use crate::limits::Tolerances;
use crate::math;
use crate::scenario::{Scenario, ValidationIssue};

/// Time-varying schedule for the outer smoothing parameter:
/// `ν_β(t) = min(initial + slope·t, nominal)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuBetaRamp {
    pub initial: f64,
    pub slope: f64,
    pub nominal: f64,
}

impl NuBetaRamp {
    pub fn new(initial: f64, slope: f64, nominal: f64) -> Self {
        NuBetaRamp { initial, slope, nominal }
    }

    /// Constant schedule (useful for unit tests and the reference solver).
    pub fn constant(value: f64) -> Self {
        NuBetaRamp { initial: value, slope: 0.0, nominal: value }
    }

    /// Continuous, nondecreasing value at time `t ≥ 0`.
    #[inline]
    pub fn value_at(&self, t: f64) -> f64 {
        (self.initial + self.slope * t).min(self.nominal)
    }

    /// First time the nominal value is reached.
    pub fn settling_time(&self) -> f64 {
        if self.slope > 0.0 {
            ((self.nominal - self.initial) / self.slope).max(0.0)
        } else {
            0.0
        }
    }

    pub(crate) fn check(&self) -> Result<(), String> {
        if !(self.initial > 0.0) {
            return Err(String::from("initial value must be positive"));
        }
        if !(self.slope >= 0.0) {
            return Err(String::from("slope must be nonnegative"));
        }
        if self.nominal < self.initial {
            return Err(String::from("nominal value must be at least the initial value"));
        }
        Ok(())
    }
}

/// Joint integration state: per-agent formation estimates and integral terms,
/// plus the simulation clock.
///
/// `estimates` and `z` are `agents` consecutive blocks of `agents × dim`
/// coordinates each. Physical positions are the own blocks of the estimates
/// (`position(i) = estimate(i)` block `i`), exactly — the controller is the
/// own-block component of the estimate derivative and both start matched.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub t: f64,
    estimates: Vec<f64>,
    z: Vec<f64>,
    agents: usize,
    dim: usize,
}

impl SolverState {
    fn stride(&self) -> usize {
        self.agents * self.dim
    }

    /// Agent `i`'s estimate of the whole formation.
    pub fn estimate(&self, i: usize) -> &[f64] {
        &self.estimates[i * self.stride()..(i + 1) * self.stride()]
    }

    /// Agent `i`'s integral state.
    pub fn integral(&self, i: usize) -> &[f64] {
        &self.z[i * self.stride()..(i + 1) * self.stride()]
    }

    /// Agent `i`'s physical position: the own block of its estimate.
    pub fn position(&self, i: usize) -> &[f64] {
        &self.estimate(i)[i * self.dim..(i + 1) * self.dim]
    }

    /// All positions, stacked.
    pub fn positions(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.stride());
        for i in 0..self.agents {
            x.extend_from_slice(self.position(i));
        }
        x
    }

    /// Sum of the integral states over all agents; stays at zero (up to
    /// rounding) for any run started from z = 0.
    pub fn integral_sum(&self) -> Vec<f64> {
        let stride = self.stride();
        let mut s = vec![0.0; stride];
        for i in 0..self.agents {
            for k in 0..stride {
                s[k] += self.z[i * stride + k];
            }
        }
        s
    }
}

/// Derivative of the joint state at one integration stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivative {
    pub estimates: Vec<f64>,
    pub z: Vec<f64>,
}

impl Derivative {
    /// Euclidean norm over the full field.
    pub fn norm(&self) -> f64 {
        let mut s = 0.0;
        for &v in self.estimates.iter().chain(self.z.iter()) {
            s += v * v;
        }
        math::sqrt(s)
    }
}

/// Why a run could not proceed.
#[derive(Debug, Clone, PartialEq)]
pub enum SimulationError {
    /// Scenario failed validation; every collected issue is carried along.
    Invalid(Vec<ValidationIssue>),
    /// A local objective gradient saturated the overflow guard at time `t`.
    Saturation { t: f64, agent: usize, exponent: f64 },
    /// Integration produced a non-finite value.
    NonFinite { t: f64, agent: usize, term: StateTerm },
    /// An evaluation rejected its inputs (indicates an internal bug when the
    /// scenario was validated).
    Config(ConfigError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateTerm {
    Estimate,
    Integral,
}

impl fmt::Display for SimulationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimulationError::Invalid(issues) => {
                write!(f, "scenario validation failed with {} issue(s):", issues.len())?;
                for issue in issues {
                    write!(f, "\n  - {issue}")?;
                }
                Ok(())
            }
            SimulationError::Saturation { t, agent, exponent } => write!(
                f,
                "gradient of agent {agent} saturated at t = {t:.4} (exponent {exponent:.2}); \
                 the nu_beta ramp is required for this initialization"
            ),
            SimulationError::NonFinite { t, agent, term } => {
                let what = match term {
                    StateTerm::Estimate => "estimate",
                    StateTerm::Integral => "integral state",
                };
                write!(f, "non-finite {what} of agent {agent} at t = {t:.4}")
            }
            SimulationError::Config(e) => write!(f, "configuration error: {e}"),
        }
    }
}

impl core::error::Error for SimulationError {}

impl From<ConfigError> for SimulationError {
    fn from(e: ConfigError) -> Self {
        SimulationError::Config(e)
    }
}

/// Run controls beyond what the scenario itself pins down.
#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Stop ahead of the horizon once the consensus error and the field norm
    /// stay below their thresholds for the configured number of steps.
    pub early_stop: bool,
    /// Simulate multi-cluster scenarios as independent sub-simulations
    /// (refused otherwise). Split runs ignore `early_stop` so all clusters
    /// share one sample grid; cross-cluster communication edges are dropped.
    pub allow_cluster_split: bool,
    pub tolerances: Tolerances,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            early_stop: true,
            allow_cluster_split: false,
            tolerances: Tolerances::default(),
        }
    }
}

/// Time series of a run: positions and diagnostics at every sample instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub layout: Layout,
    /// Strictly increasing sample times, starting at 0.
    pub times: Vec<f64>,
    /// Stacked positions per sample.
    pub positions: Vec<Vec<f64>>,
    /// System min margin at the positions (positive iff all constraints hold).
    pub beta_bar: Vec<f64>,
    /// Smooth system margin at the positions, using ν_β(t).
    pub beta: Vec<f64>,
    /// ‖L x̃‖ over the stacked estimates.
    pub consensus_err: Vec<f64>,
    /// ν_β(t) at the sample.
    pub nu_beta: Vec<f64>,
    /// ‖Σ_i z_i‖ at the sample (conservation diagnostic).
    pub z_sum_norm: Vec<f64>,
    /// Time at which the run stopped early, if it did.
    pub stopped_early: Option<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_positions(&self) -> &[f64] {
        self.positions.last().expect("trajectory has at least the initial sample")
    }

    pub fn final_beta_bar(&self) -> f64 {
        *self.beta_bar.last().expect("trajectory has at least the initial sample")
    }

    pub fn final_beta(&self) -> f64 {
        *self.beta.last().expect("trajectory has at least the initial sample")
    }

    pub fn final_consensus_err(&self) -> f64 {
        *self.consensus_err.last().expect("trajectory has at least the initial sample")
    }

    /// First sample time after which the system min margin stays positive
    /// through the end of the record (sample resolution), or `None` if it is
    /// non-positive at the end.
    pub fn satisfaction_time(&self) -> Option<f64> {
        if *self.beta_bar.last()? <= 0.0 {
            return None;
        }
        let mut idx = self.beta_bar.len() - 1;
        while idx > 0 && self.beta_bar[idx - 1] > 0.0 {
            idx -= 1;
        }
        Some(self.times[idx])
    }
}

/// Prepared simulation of one dependency cluster (or a whole single-cluster
/// scenario): validated inputs plus everything derived that the inner loop
/// needs.
pub struct Solver {
    sets: Vec<AgentConstraintSet>,
    comm: CommGraph,
    layout: Layout,
    k1: f64,
    k2: f64,
    nu_alpha: f64,
    ramp: NuBetaRamp,
    initial_positions: Option<Vec<f64>>,
    init_box: (Vec<f64>, Vec<f64>),
    dt: f64,
    horizon: f64,
    sample_every: f64,
    options: RunOptions,
}

impl Solver {
    /// Validates the scenario (single cluster required) and prepares the
    /// derived structures.
    pub fn new(scenario: &Scenario, options: RunOptions) -> Result<Self, SimulationError> {
        scenario.validate(false).map_err(SimulationError::Invalid)?;
        let comm = scenario
            .comm_graph()
            .expect("comm graph construction cannot fail after validation");
        let b = scenario.init_box();
        Ok(Solver {
            sets: scenario.effective_sets(),
            comm,
            layout: scenario.layout(),
            k1: scenario.k1,
            k2: scenario.k2,
            nu_alpha: scenario.nu_alpha,
            ramp: scenario.nu_beta,
            initial_positions: scenario.initial_positions.clone(),
            init_box: (b.lo, b.hi),
            dt: scenario.dt,
            horizon: scenario.horizon,
            sample_every: scenario.sample_every,
            options,
        })
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    fn params_at(&self, t: f64) -> SmoothingParams {
        SmoothingParams::new(self.nu_alpha, self.ramp.value_at(t))
    }

    /// Deterministic initial state: integral terms zero, own estimate blocks
    /// equal to the start positions bit-exactly, all other estimate blocks
    /// uniform from the init box. Identical seeds give identical states.
    pub fn init_state(&self, seed: u64) -> SolverState {
        let n = self.layout.agents;
        let d = self.layout.dim;
        let stride = n * d;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let positions: Vec<f64> = match &self.initial_positions {
            Some(x0) => x0.clone(),
            None => (0..stride)
                .map(|k| rng.random_range(self.init_box.0[k % d]..self.init_box.1[k % d]))
                .collect(),
        };
        let mut estimates = vec![0.0; n * stride];
        for i in 0..n {
            for j in 0..n {
                for k in 0..d {
                    let idx = i * stride + j * d + k;
                    estimates[idx] = if j == i {
                        positions[i * d + k]
                    } else {
                        rng.random_range(self.init_box.0[k]..self.init_box.1[k])
                    };
                }
            }
        }
        SolverState { t: 0.0, estimates, z: vec![0.0; n * stride], agents: n, dim: d }
    }

    /// Protocol vector field at stage time `t` (which fixes ν_β):
    /// the estimate derivative couples the private objective gradient, the
    /// consensus disagreement with communication neighbors, and the integral
    /// term; the integral derivative accumulates the disagreement.
    pub fn derivative(&self, state: &SolverState, t: f64) -> Result<Derivative, SimulationError> {
        let n = self.layout.agents;
        let stride = state.stride();
        let params = self.params_at(t);
        let mut d_est = vec![0.0; n * stride];
        let mut d_z = vec![0.0; n * stride];
        for i in 0..n {
            let est_i = state.estimate(i);
            let grad = self.sets[i]
                .objective_grad(est_i, self.layout, params, &self.options.tolerances)?
                .map_err(|s| SimulationError::Saturation {
                    t,
                    agent: s.owner,
                    exponent: s.exponent,
                })?;
            let zi = state.integral(i);
            let out = &mut d_est[i * stride..(i + 1) * stride];
            for k in 0..stride {
                out[k] = -self.k1 * grad[k] - zi[k];
            }
            for &j in self.comm.neighbors(i) {
                let est_j = state.estimate(j);
                for k in 0..stride {
                    let diff = est_i[k] - est_j[k];
                    out[k] -= self.k2 * diff;
                    d_z[i * stride + k] += self.k1 * self.k2 * diff;
                }
            }
        }
        Ok(Derivative { estimates: d_est, z: d_z })
    }

    /// One classical RK4 step of size `dt`. Each stage evaluates ν_β at its
    /// own start time. The clock advances by `dt`; positions follow the
    /// estimates by construction.
    pub fn step(&self, state: &mut SolverState, dt: f64) -> Result<Derivative, SimulationError> {
        let t0 = state.t;
        let k1 = self.derivative(state, t0)?;
        let s2 = offset_state(state, &k1, 0.5 * dt);
        let k2 = self.derivative(&s2, t0 + 0.5 * dt)?;
        let s3 = offset_state(state, &k2, 0.5 * dt);
        let k3 = self.derivative(&s3, t0 + 0.5 * dt)?;
        let s4 = offset_state(state, &k3, dt);
        let k4 = self.derivative(&s4, t0 + dt)?;
        let w = dt / 6.0;
        for idx in 0..state.estimates.len() {
            state.estimates[idx] +=
                w * (k1.estimates[idx] + 2.0 * k2.estimates[idx] + 2.0 * k3.estimates[idx] + k4.estimates[idx]);
            state.z[idx] += w * (k1.z[idx] + 2.0 * k2.z[idx] + 2.0 * k3.z[idx] + k4.z[idx]);
        }
        state.t = t0 + dt;
        self.check_finite(state)?;
        Ok(k1)
    }

    fn check_finite(&self, state: &SolverState) -> Result<(), SimulationError> {
        let stride = state.stride();
        for i in 0..state.agents {
            if state.estimate(i).iter().any(|v| !v.is_finite()) {
                return Err(SimulationError::NonFinite {
                    t: state.t,
                    agent: i,
                    term: StateTerm::Estimate,
                });
            }
            if state.z[i * stride..(i + 1) * stride].iter().any(|v| !v.is_finite()) {
                return Err(SimulationError::NonFinite {
                    t: state.t,
                    agent: i,
                    term: StateTerm::Integral,
                });
            }
        }
        Ok(())
    }

    /// ‖L x̃‖ with L the communication Laplacian acting blockwise on the
    /// stacked estimates; zero exactly when all estimates agree.
    pub fn consensus_error(&self, state: &SolverState) -> f64 {
        let stride = state.stride();
        let mut total = 0.0;
        for i in 0..self.layout.agents {
            let est_i = state.estimate(i);
            let mut row = vec![0.0; stride];
            for &j in self.comm.neighbors(i) {
                let est_j = state.estimate(j);
                for k in 0..stride {
                    row[k] += est_i[k] - est_j[k];
                }
            }
            for v in row {
                total += v * v;
            }
        }
        math::sqrt(total)
    }

    fn record(&self, traj: &mut Trajectory, state: &SolverState) {
        let x = state.positions();
        let params = self.params_at(state.t);
        let beta_bar = system_min_margin(&self.sets, &x, self.layout)
            .expect("validated scenario evaluates everywhere");
        let beta = system_smooth_margin(&self.sets, &x, self.layout, params)
            .expect("validated scenario evaluates everywhere");
        traj.times.push(state.t);
        traj.positions.push(x);
        traj.beta_bar.push(beta_bar);
        traj.beta.push(beta);
        traj.consensus_err.push(self.consensus_error(state));
        traj.nu_beta.push(params.nu_beta);
        traj.z_sum_norm.push(math::norm(&state.integral_sum()));
    }

    /// Integrates from t = 0 to the horizon, sampling on the configured grid
    /// (the final step is always sampled). Deterministic in (scenario, seed).
    pub fn run(&self, seed: u64) -> Result<Trajectory, SimulationError> {
        let steps = (math::round(self.horizon / self.dt) as usize).max(1);
        let stride = (math::round(self.sample_every / self.dt) as usize).max(1);
        let mut state = self.init_state(seed);
        let mut traj = Trajectory {
            layout: self.layout,
            times: Vec::new(),
            positions: Vec::new(),
            beta_bar: Vec::new(),
            beta: Vec::new(),
            consensus_err: Vec::new(),
            nu_beta: Vec::new(),
            z_sum_norm: Vec::new(),
            stopped_early: None,
        };
        self.record(&mut traj, &state);
        let mut quiet_steps = 0usize;
        for step_idx in 1..=steps {
            let field = self.step(&mut state, self.dt)?;
            let mut sampled = false;
            if step_idx % stride == 0 || step_idx == steps {
                self.record(&mut traj, &state);
                sampled = true;
            }
            if self.options.early_stop {
                let quiet = self.consensus_error(&state) < self.options.tolerances.early_stop_consensus
                    && field.norm() < self.options.tolerances.early_stop_field;
                quiet_steps = if quiet { quiet_steps + 1 } else { 0 };
                if quiet_steps >= self.options.tolerances.early_stop_steps {
                    if !sampled {
                        self.record(&mut traj, &state);
                    }
                    traj.stopped_early = Some(state.t);
                    break;
                }
            }
        }
        Ok(traj)
    }
}

fn offset_state(base: &SolverState, d: &Derivative, h: f64) -> SolverState {
    let mut s = base.clone();
    for idx in 0..s.estimates.len() {
        s.estimates[idx] += h * d.estimates[idx];
        s.z[idx] += h * d.z[idx];
    }
    s
}

/// Runs a scenario with default options (early stop on, single cluster
/// required).
pub fn run(scenario: &Scenario, seed: u64) -> Result<Trajectory, SimulationError> {
    run_with(scenario, seed, &RunOptions::default())
}

/// Runs a scenario. Multi-cluster task graphs are simulated as independent
/// sub-simulations when `options.allow_cluster_split` is set: each cluster
/// integrates its own protocol on the shared time grid (sub-run seeds are
/// derived deterministically from `seed`), and the merged record re-evaluates
/// the global margins at the combined positions.
pub fn run_with(
    scenario: &Scenario,
    seed: u64,
    options: &RunOptions,
) -> Result<Trajectory, SimulationError> {
    scenario
        .validate(options.allow_cluster_split)
        .map_err(SimulationError::Invalid)?;
    let partition = scenario.clusters();
    if partition.len() <= 1 {
        let solver = Solver::new(scenario, options.clone())?;
        return solver.run(seed);
    }

    // Split mode: fix the auxiliary radius from the full scene so every
    // sub-problem sees the same ball, then run each cluster to the horizon.
    let mut template = scenario.clone();
    if template.auxiliary && template.c_aux.is_none() {
        let extent = template.scene_extent();
        template.c_aux = Some((10.0 * extent) * (10.0 * extent));
    }
    let sub_options = RunOptions {
        early_stop: false,
        allow_cluster_split: false,
        tolerances: options.tolerances.clone(),
    };
    let mut sub_runs = Vec::new();
    for (c, cluster) in partition.groups().iter().enumerate() {
        let sub = restrict_to_cluster(&template, cluster);
        let solver = Solver::new(&sub, sub_options.clone())?;
        let sub_seed = seed ^ ((c as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        sub_runs.push((cluster.clone(), solver.run(sub_seed)?));
    }

    merge_cluster_runs(&template, sub_runs)
}

fn restrict_to_cluster(scenario: &Scenario, cluster: &[usize]) -> Scenario {
    let mut map = vec![usize::MAX; scenario.agents];
    for (new, &old) in cluster.iter().enumerate() {
        map[old] = new;
    }
    let constraint_sets = cluster
        .iter()
        .map(|&old| {
            let set = &scenario.constraint_sets[old];
            let atoms = set
                .atoms
                .iter()
                .map(|a| {
                    let mut atom = a.clone();
                    atom.owner = map[a.owner];
                    if let crate::constraints::Anchor::Agent(j) = atom.anchor {
                        atom.anchor = crate::constraints::Anchor::Agent(map[j]);
                    }
                    atom
                })
                .collect();
            AgentConstraintSet::new(map[set.owner], atoms)
        })
        .collect();
    let comm_edges = scenario
        .comm_edges
        .iter()
        .filter(|(a, b)| map[*a] != usize::MAX && map[*b] != usize::MAX)
        .map(|&(a, b)| (map[a], map[b]))
        .collect();
    let initial_positions = scenario.initial_positions.as_ref().map(|x0| {
        let mut out = Vec::with_capacity(cluster.len() * scenario.dim);
        for &old in cluster {
            out.extend_from_slice(&x0[old * scenario.dim..(old + 1) * scenario.dim]);
        }
        out
    });
    Scenario {
        agents: cluster.len(),
        dim: scenario.dim,
        constraint_sets,
        comm_edges,
        initial_positions,
        ..scenario.clone()
    }
}

fn merge_cluster_runs(
    scenario: &Scenario,
    sub_runs: Vec<(Vec<usize>, Trajectory)>,
) -> Result<Trajectory, SimulationError> {
    let layout = scenario.layout();
    let sets = scenario.effective_sets();
    let samples = sub_runs[0].1.len();
    debug_assert!(sub_runs.iter().all(|(_, t)| t.len() == samples));
    let mut merged = Trajectory {
        layout,
        times: sub_runs[0].1.times.clone(),
        positions: Vec::with_capacity(samples),
        beta_bar: Vec::with_capacity(samples),
        beta: Vec::with_capacity(samples),
        consensus_err: Vec::with_capacity(samples),
        nu_beta: sub_runs[0].1.nu_beta.clone(),
        z_sum_norm: Vec::with_capacity(samples),
        stopped_early: None,
    };
    for k in 0..samples {
        let mut x = vec![0.0; layout.len()];
        let mut cons2 = 0.0;
        let mut zsum2 = 0.0;
        for (cluster, traj) in &sub_runs {
            for (new, &old) in cluster.iter().enumerate() {
                let block = &traj.positions[k][new * layout.dim..(new + 1) * layout.dim];
                x[old * layout.dim..(old + 1) * layout.dim].copy_from_slice(block);
            }
            cons2 += traj.consensus_err[k] * traj.consensus_err[k];
            zsum2 += traj.z_sum_norm[k] * traj.z_sum_norm[k];
        }
        let params = SmoothingParams::new(scenario.nu_alpha, merged.nu_beta[k]);
        merged.beta_bar.push(system_min_margin(&sets, &x, layout)?);
        merged.beta.push(system_smooth_margin(&sets, &x, layout, params)?);
        merged.consensus_err.push(math::sqrt(cons2));
        merged.z_sum_norm.push(math::sqrt(zsum2));
        merged.positions.push(x);
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::ConstraintAtom;
    use crate::scenario::BuiltinCase;

    fn case_a() -> Scenario {
        Scenario::builtin(BuiltinCase::A)
    }

    #[test]
    fn ramp_matches_schedule() {
        let ramp = NuBetaRamp::new(0.01, 0.022, 5.0);
        assert_eq!(ramp.value_at(0.0), 0.01);
        let settle = ramp.settling_time();
        assert!((settle - (5.0 - 0.01) / 0.022).abs() < 1e-12);
        assert!((settle - 226.8181818181818).abs() < 1e-10);
        assert_eq!(ramp.value_at(settle + 1.0), 5.0);
        assert_eq!(ramp.value_at(300.0), 5.0);
        // mid-ramp value is linear
        assert!((ramp.value_at(100.0) - 2.21).abs() < 1e-12);
    }

    #[test]
    fn init_state_is_deterministic_and_matched() {
        let solver = Solver::new(&case_a(), RunOptions::default()).unwrap();
        let s1 = solver.init_state(42);
        let s2 = solver.init_state(42);
        assert_eq!(s1, s2);
        let s3 = solver.init_state(43);
        assert_ne!(s1, s3);
        // integral terms all zero, so their sum is too
        assert!(s1.integral_sum().iter().all(|&v| v == 0.0));
        // own estimate block equals the position bit-exactly
        for i in 0..3 {
            assert_eq!(s1.position(i), &s1.estimate(i)[i * 2..(i + 1) * 2]);
        }
        // estimate entries land inside the init box
        let b = case_a().init_box();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..2 {
                    let v = s1.estimate(i)[j * 2 + k];
                    assert!(v >= b.lo[k] && v < b.hi[k]);
                }
            }
        }
    }

    #[test]
    fn pinned_positions_survive_into_the_state() {
        let mut s = case_a();
        s.initial_positions = Some(vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        let solver = Solver::new(&s, RunOptions::default()).unwrap();
        let state = solver.init_state(7);
        assert_eq!(state.positions(), vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
    }

    #[test]
    fn field_vanishes_at_stationary_consensus() {
        // single agent sitting at its ball center: gradient is zero, no
        // neighbors, z = 0 → the field is exactly zero
        let s = Scenario {
            agents: 1,
            dim: 2,
            constraint_sets: vec![AgentConstraintSet::new(
                0,
                vec![ConstraintAtom::inside_point(0, vec![1.0, -2.0], 1.0)],
            )],
            comm_edges: vec![],
            initial_positions: Some(vec![1.0, -2.0]),
            ..case_a()
        };
        let solver = Solver::new(&s, RunOptions::default()).unwrap();
        let state = solver.init_state(0);
        let d = solver.derivative(&state, 0.0).unwrap();
        assert!(d.estimates.iter().all(|&v| v == 0.0));
        assert!(d.z.iter().all(|&v| v == 0.0));

        // and a step only advances the clock
        let mut stepped = state.clone();
        solver.step(&mut stepped, 0.01).unwrap();
        assert_eq!(stepped.estimates, state.estimates);
        assert_eq!(stepped.z, state.z);
        assert!((stepped.t - 0.01).abs() < 1e-15);
    }

    #[test]
    fn identical_estimates_cancel_consensus_terms() {
        let s = case_a();
        let solver = Solver::new(&s, RunOptions::default()).unwrap();
        let mut state = solver.init_state(3);
        // overwrite: everyone shares agent 0's estimate
        let shared = state.estimate(0).to_vec();
        for i in 1..3 {
            let stride = 6;
            state.estimates[i * stride..(i + 1) * stride].copy_from_slice(&shared);
        }
        let d = solver.derivative(&state, 0.0).unwrap();
        // z derivatives vanish entirely
        assert!(d.z.iter().all(|&v| v == 0.0));
        // estimate derivative is the pure gradient term
        let params = SmoothingParams::new(5.0, 0.01);
        for i in 0..3 {
            let g = solver.sets[i]
                .objective_grad(&shared, solver.layout, params, &Tolerances::default())
                .unwrap()
                .unwrap();
            for k in 0..6 {
                assert!((d.estimates[i * 6 + k] + g[k]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn integral_derivatives_sum_to_zero() {
        let solver = Solver::new(&case_a(), RunOptions::default()).unwrap();
        let state = solver.init_state(11);
        let d = solver.derivative(&state, 0.0).unwrap();
        for k in 0..6 {
            let total: f64 = (0..3).map(|i| d.z[i * 6 + k]).sum();
            assert!(total.abs() < 1e-12, "component {k} sums to {total}");
        }
    }

    #[test]
    fn consensus_error_zero_iff_agreement() {
        let solver = Solver::new(&case_a(), RunOptions::default()).unwrap();
        let mut state = solver.init_state(5);
        let shared = state.estimate(0).to_vec();
        for i in 1..3 {
            state.estimates[i * 6..(i + 1) * 6].copy_from_slice(&shared);
        }
        assert_eq!(solver.consensus_error(&state), 0.0);
    }

    #[test]
    fn consensus_error_of_single_edge_pair() {
        let s = Scenario {
            agents: 2,
            dim: 1,
            constraint_sets: vec![
                AgentConstraintSet::new(0, vec![ConstraintAtom::inside_point(0, vec![0.0], 1.0)]),
                AgentConstraintSet::new(1, vec![ConstraintAtom::inside_agent(1, 0, 1.0)]),
            ],
            comm_edges: vec![(0, 1)],
            initial_positions: Some(vec![0.0, 0.0]),
            ..case_a()
        };
        let solver = Solver::new(&s, RunOptions::default()).unwrap();
        let mut state = solver.init_state(0);
        // estimates differ by v = (0.3, -0.4): error must be sqrt(2)·|v|
        state.estimates[0] = 1.0;
        state.estimates[1] = 2.0;
        state.estimates[2] = 1.3;
        state.estimates[3] = 1.6;
        let v = [0.3_f64, 0.4];
        let expected = (2.0_f64).sqrt() * (v[0] * v[0] + v[1] * v[1]).sqrt();
        assert!((solver.consensus_error(&state) - expected).abs() < 1e-12);
    }

    #[test]
    fn run_refuses_multi_cluster_without_the_flag() {
        let s = Scenario::builtin(BuiltinCase::Example1);
        match run(&s, 1) {
            Err(SimulationError::Invalid(issues)) => {
                assert!(issues
                    .iter()
                    .any(|i| matches!(i, ValidationIssue::MultipleClusters { count: 2 })));
            }
            other => panic!("expected validation failure, got {other:?}"),
        }
    }

    #[test]
    fn saturation_is_reported_with_agent_and_time() {
        // constant huge nu_beta with a deeply violated start overflows
        // immediately; the ramp exists to prevent exactly this
        let mut s = case_a();
        s.nu_beta = NuBetaRamp::constant(50.0);
        s.initial_positions = Some(vec![500.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        s.estimate_box = Some(crate::scenario::BoxBounds {
            lo: vec![400.0, -1.0],
            hi: vec![600.0, 1.0],
        });
        match run(&s, 1) {
            Err(SimulationError::Saturation { agent, exponent, .. }) => {
                assert_eq!(agent, 0);
                assert!(exponent > 700.0);
            }
            other => panic!("expected saturation, got {other:?}"),
        }
    }
}
