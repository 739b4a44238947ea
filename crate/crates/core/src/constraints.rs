//! Spatial constraint atoms, their nonsmooth consolidations, the log-sum-exp
//! smoothings, and the per-agent objective functions with stable gradients.
//!
//! Terminology used throughout:
//! - an atom's *margin* is the signed value of its inequality (positive iff
//!   satisfied);
//! - an agent's *min margin* is the smallest margin over its atoms (positive
//!   iff all of that agent's constraints hold);
//! - the *system min margin* is the smallest min margin over all agents;
//! - the *smooth* variants replace each `min` by a log-sum-exp
//!   under-approximation controlled by the smoothing parameters.
//!
//! Every smoothing computation is carried out in the log domain with a
//! max-shift; raw exponentials only appear behind overflow guards.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::layout::Layout;
use crate::limits::Tolerances;
use crate::math;

/// Orientation of a quadratic ball constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    /// Stay inside the ball: margin = r² − ‖x − a‖² (concave).
    Inside,
    /// Stay outside the ball: margin = ‖x − a‖² − r² (convex margin; breaks
    /// objective convexity).
    Outside,
}

/// Center of a ball constraint: a fixed point in space or another agent.
#[derive(Debug, Clone, PartialEq)]
pub enum Anchor {
    Fixed(Vec<f64>),
    Agent(usize),
}

/// One differentiable inequality `margin(x) > 0` owned by a single agent.
///
/// The owner's position always enters first; the anchor supplies the second
/// position (or a constant). Quadratic atoms are continuously differentiable
/// everywhere with closed-form gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintAtom {
    pub owner: usize,
    pub anchor: Anchor,
    pub radius: f64,
    pub sense: Sense,
}

/// Configuration faults surfaced by evaluation entry points.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    AgentIndex { index: usize, agents: usize },
    AnchorDim { expected: usize, got: usize },
    PositionLength { expected: usize, got: usize },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::AgentIndex { index, agents } => {
                write!(f, "agent index {index} out of range (have {agents} agents)")
            }
            ConfigError::AnchorDim { expected, got } => {
                write!(f, "anchor has {got} coordinates, expected {expected}")
            }
            ConfigError::PositionLength { expected, got } => {
                write!(f, "position vector has length {got}, expected {expected}")
            }
        }
    }
}

impl core::error::Error for ConfigError {}

/// Raised when exponentiating a local objective (or its gradient) would
/// overflow; carries the offending owner and the exponent that tripped the
/// guard. Seeing this during a run means the ν_β ramp is still required.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientSaturation {
    pub owner: usize,
    pub exponent: f64,
}

impl fmt::Display for GradientSaturation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "objective gradient of agent {} saturated (exponent {:.3} beyond guard)",
            self.owner, self.exponent
        )
    }
}

impl core::error::Error for GradientSaturation {}

/// Contract for one differentiable inequality `margin(x) > 0`.
///
/// The built-in [`ConstraintAtom`] covers quadratic ball and separation
/// predicates; implement this trait to plug in other margin functions with
/// analytic gradients, including ones coupling more than two agents. All
/// set- and system-level operations, the task graph, and the solver's
/// parts-based constructor are generic over it.
pub trait ConstraintFn {
    /// Signed margin at the stacked positions; positive iff satisfied.
    fn margin(&self, x: &[f64], layout: Layout) -> Result<f64, ConfigError>;

    /// Adds `weight · ∇margin` into `out` (length `layout.len()`).
    fn accumulate_grad(
        &self,
        x: &[f64],
        layout: Layout,
        weight: f64,
        out: &mut [f64],
    ) -> Result<(), ConfigError>;

    /// Agents other than the owner whose positions enter the margin.
    fn referenced_agents(&self) -> Vec<usize>;

    /// Whether the margin is concave in the positions; enables the
    /// log-convexity guarantees. Conservative default: unknown counts as
    /// not concave.
    fn is_concave(&self) -> bool {
        false
    }

    /// Whether the margin is strictly concave in the owner's own block
    /// (what the strict-convexity guarantee needs from at least one atom
    /// per agent).
    fn is_strictly_concave_in_own_block(&self) -> bool {
        false
    }

    /// Dense gradient of the margin.
    fn grad(&self, x: &[f64], layout: Layout) -> Result<Vec<f64>, ConfigError> {
        let mut out = vec![0.0; layout.len()];
        self.accumulate_grad(x, layout, 1.0, &mut out)?;
        Ok(out)
    }
}

impl ConstraintAtom {
    pub fn inside_point(owner: usize, point: Vec<f64>, radius: f64) -> Self {
        ConstraintAtom { owner, anchor: Anchor::Fixed(point), radius, sense: Sense::Inside }
    }

    pub fn outside_point(owner: usize, point: Vec<f64>, radius: f64) -> Self {
        ConstraintAtom { owner, anchor: Anchor::Fixed(point), radius, sense: Sense::Outside }
    }

    pub fn inside_agent(owner: usize, other: usize, radius: f64) -> Self {
        ConstraintAtom { owner, anchor: Anchor::Agent(other), radius, sense: Sense::Inside }
    }

    pub fn outside_agent(owner: usize, other: usize, radius: f64) -> Self {
        ConstraintAtom { owner, anchor: Anchor::Agent(other), radius, sense: Sense::Outside }
    }

    /// The other agent this atom couples to, if any.
    pub fn referenced_agent(&self) -> Option<usize> {
        match self.anchor {
            Anchor::Agent(j) => Some(j),
            Anchor::Fixed(_) => None,
        }
    }

    fn check(&self, layout: Layout, x: &[f64]) -> Result<(), ConfigError> {
        layout.check(x)?;
        layout.check_agent(self.owner)?;
        match &self.anchor {
            Anchor::Fixed(p) => {
                if p.len() != layout.dim {
                    return Err(ConfigError::AnchorDim { expected: layout.dim, got: p.len() });
                }
            }
            Anchor::Agent(j) => layout.check_agent(*j)?,
        }
        Ok(())
    }
}

impl ConstraintFn for ConstraintAtom {
    fn margin(&self, x: &[f64], layout: Layout) -> Result<f64, ConfigError> {
        self.check(layout, x)?;
        let own = layout.block(x, self.owner);
        let d2 = match &self.anchor {
            Anchor::Fixed(p) => math::dist2(own, p),
            Anchor::Agent(j) => math::dist2(own, layout.block(x, *j)),
        };
        let r2 = self.radius * self.radius;
        Ok(match self.sense {
            Sense::Inside => r2 - d2,
            Sense::Outside => d2 - r2,
        })
    }

    /// Only the owner block — and the referenced agent's block for coupled
    /// atoms — is touched; all other blocks stay untouched.
    fn accumulate_grad(
        &self,
        x: &[f64],
        layout: Layout,
        weight: f64,
        out: &mut [f64],
    ) -> Result<(), ConfigError> {
        self.check(layout, x)?;
        layout.check(out)?;
        // Inside: ∂/∂x_own = −2(x_own − a); Outside negates.
        let sign = match self.sense {
            Sense::Inside => -2.0,
            Sense::Outside => 2.0,
        };
        let dim = layout.dim;
        let own_off = self.owner * dim;
        match &self.anchor {
            Anchor::Fixed(p) => {
                for k in 0..dim {
                    out[own_off + k] += weight * sign * (x[own_off + k] - p[k]);
                }
            }
            Anchor::Agent(j) => {
                let other_off = j * dim;
                for k in 0..dim {
                    let diff = x[own_off + k] - x[other_off + k];
                    out[own_off + k] += weight * sign * diff;
                    out[other_off + k] -= weight * sign * diff;
                }
            }
        }
        Ok(())
    }

    fn referenced_agents(&self) -> Vec<usize> {
        match self.anchor {
            Anchor::Agent(j) => vec![j],
            Anchor::Fixed(_) => Vec::new(),
        }
    }

    fn is_concave(&self) -> bool {
        self.sense == Sense::Inside
    }

    fn is_strictly_concave_in_own_block(&self) -> bool {
        self.sense == Sense::Inside && matches!(self.anchor, Anchor::Fixed(_))
    }
}

/// Instantaneous smoothing parameters. The inner `nu_alpha` is constant over
/// a run; `nu_beta` is the current value of the optimizer's ramp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingParams {
    pub nu_alpha: f64,
    pub nu_beta: f64,
}

impl SmoothingParams {
    pub fn new(nu_alpha: f64, nu_beta: f64) -> Self {
        debug_assert!(nu_alpha > 0.0 && nu_beta > 0.0);
        SmoothingParams { nu_alpha, nu_beta }
    }
}

/// One agent's ordered constraint list. Generic over the margin-function
/// type; the default is the built-in quadratic atom.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentConstraintSet<A = ConstraintAtom> {
    pub owner: usize,
    pub atoms: Vec<A>,
}

impl<A: ConstraintFn> AgentConstraintSet<A> {
    pub fn new(owner: usize, atoms: Vec<A>) -> Self {
        AgentConstraintSet { owner, atoms }
    }

    /// Agents whose positions enter this set through its atoms.
    pub fn dependencies(&self) -> BTreeSet<usize> {
        self.atoms.iter().flat_map(|a| a.referenced_agents()).collect()
    }

    fn margins(&self, x: &[f64], layout: Layout) -> Result<Vec<f64>, ConfigError> {
        self.atoms.iter().map(|a| a.margin(x, layout)).collect()
    }

    /// Smallest margin over the set's atoms; positive iff all constraints of
    /// this agent hold at `x`.
    pub fn min_margin(&self, x: &[f64], layout: Layout) -> Result<f64, ConfigError> {
        debug_assert!(!self.atoms.is_empty());
        Ok(self.margins(x, layout)?.into_iter().fold(f64::INFINITY, f64::min))
    }

    /// `ln Σ_k exp(−ν_α · margin_k)`, max-shifted.
    ///
    /// This is the log of the agent's penalty aggregate; the smooth min
    /// margin and the local objective are both scalings of it.
    pub fn log_penalty(&self, x: &[f64], layout: Layout, nu_alpha: f64) -> Result<f64, ConfigError> {
        debug_assert!(!self.atoms.is_empty());
        let exps: Vec<f64> =
            self.margins(x, layout)?.into_iter().map(|m| -nu_alpha * m).collect();
        Ok(math::logsumexp(&exps))
    }

    /// Smooth under-approximation of [`Self::min_margin`]:
    /// `−(1/ν_α) · ln Σ_k exp(−ν_α · margin_k)`.
    ///
    /// Sandwich: `smooth ≤ min ≤ smooth + ln(m)/ν_α` for `m` atoms, and the
    /// approximation tightens monotonically as `ν_α` grows.
    pub fn smooth_margin(&self, x: &[f64], layout: Layout, nu_alpha: f64) -> Result<f64, ConfigError> {
        Ok(-self.log_penalty(x, layout, nu_alpha)? / nu_alpha)
    }

    /// Log of the agent's private objective: `(ν_β/ν_α) · log_penalty`.
    ///
    /// Minimizing the sum of the exponentials of these over all agents is
    /// equivalent to maximizing the smooth system margin.
    pub fn log_objective(
        &self,
        x: &[f64],
        layout: Layout,
        params: SmoothingParams,
    ) -> Result<f64, ConfigError> {
        Ok(params.nu_beta / params.nu_alpha * self.log_penalty(x, layout, params.nu_alpha)?)
    }

    /// Raw objective value through the overflow guard.
    pub fn objective(
        &self,
        x: &[f64],
        layout: Layout,
        params: SmoothingParams,
        tol: &Tolerances,
    ) -> Result<Result<f64, GradientSaturation>, ConfigError> {
        let lf = self.log_objective(x, layout, params)?;
        Ok(math::guarded_exp(lf, tol.exp_overflow)
            .ok_or(GradientSaturation { owner: self.owner, exponent: lf }))
    }

    /// Log-scaled decomposition of the objective gradient:
    /// `∇f = −ν_β · exp(log_scale) · direction`.
    ///
    /// Each atom's weight is `exp((ν_β/ν_α − 1)·log_penalty − ν_α·margin_k)`;
    /// the shared max-shift goes into `log_scale` so `direction` stays finite
    /// for any finite input. The system-level gradient routines compose these
    /// without ever forming the raw per-agent gradient.
    pub fn objective_grad_parts(
        &self,
        x: &[f64],
        layout: Layout,
        params: SmoothingParams,
    ) -> Result<LogScaledGrad, ConfigError> {
        debug_assert!(!self.atoms.is_empty());
        let margins = self.margins(x, layout)?;
        let exps: Vec<f64> = margins.iter().map(|m| -params.nu_alpha * m).collect();
        let log_penalty = math::logsumexp(&exps);
        let power = params.nu_beta / params.nu_alpha - 1.0;
        // exponent for atom k; each is ≤ (ν_β/ν_α)·log_penalty = log f
        let args: Vec<f64> = exps.iter().map(|e| power * log_penalty + e).collect();
        let shift = args.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut direction = vec![0.0; layout.len()];
        for (k, atom) in self.atoms.iter().enumerate() {
            let w = math::exp(args[k] - shift);
            atom.accumulate_grad(x, layout, w, &mut direction)?;
        }
        Ok(LogScaledGrad { log_scale: shift, direction })
    }

    /// Dense objective gradient, or a saturation diagnostic when the scale
    /// cannot be represented in f64.
    pub fn objective_grad(
        &self,
        x: &[f64],
        layout: Layout,
        params: SmoothingParams,
        tol: &Tolerances,
    ) -> Result<Result<Vec<f64>, GradientSaturation>, ConfigError> {
        let parts = self.objective_grad_parts(x, layout, params)?;
        let peak = math::norm_inf(&parts.direction) * params.nu_beta;
        if peak == 0.0 {
            // All constituent gradients vanish; the scale is irrelevant.
            return Ok(Ok(parts.direction));
        }
        let exponent = parts.log_scale + math::ln(peak);
        if exponent > tol.exp_overflow {
            return Ok(Err(GradientSaturation { owner: self.owner, exponent }));
        }
        let scale = -params.nu_beta * math::exp(parts.log_scale);
        let mut g = parts.direction;
        for v in &mut g {
            *v *= scale;
        }
        Ok(Ok(g))
    }
}

/// `∇f = −ν_β · exp(log_scale) · direction`, kept factored so callers can
/// combine gradients across agents under one shared shift.
#[derive(Debug, Clone, PartialEq)]
pub struct LogScaledGrad {
    pub log_scale: f64,
    pub direction: Vec<f64>,
}

/// Smallest min margin over all agents; positive iff every constraint of
/// every agent holds at `x`.
pub fn system_min_margin<A: ConstraintFn>(
    sets: &[AgentConstraintSet<A>],
    x: &[f64],
    layout: Layout,
) -> Result<f64, ConfigError> {
    debug_assert!(!sets.is_empty());
    let mut worst = f64::INFINITY;
    for set in sets {
        worst = worst.min(set.min_margin(x, layout)?);
    }
    Ok(worst)
}

/// Smooth under-approximation of [`system_min_margin`]:
/// `−(1/ν_β) · ln Σ_i exp(−ν_β · smooth_margin_i)`, max-shifted.
pub fn system_smooth_margin(
    sets: &[AgentConstraintSet],
    x: &[f64],
    layout: Layout,
    params: SmoothingParams,
) -> Result<f64, ConfigError> {
    debug_assert!(!sets.is_empty());
    let mut exps = Vec::with_capacity(sets.len());
    for set in sets {
        exps.push(-params.nu_beta * set.smooth_margin(x, layout, params.nu_alpha)?);
    }
    Ok(-math::logsumexp(&exps) / params.nu_beta)
}

/// Gradient of the smooth system margin.
///
/// Algebraically `∇β = −∇f / (ν_β f)` with `f = Σ_i f_i`; expanding and
/// cancelling the sign and `ν_β` gives
/// `∇β = Σ_i exp(M_i) g_i / Σ_i exp(L_i)` with `L_i = log f_i` and
/// `(M_i, g_i)` the factored per-agent gradients. Shifting both sums by
/// `max_i L_i` keeps every exponent ≤ 0 (each `M_i ≤ L_i`), so this is total:
/// it stays finite even where the raw objective overflows.
pub fn system_smooth_margin_grad(
    sets: &[AgentConstraintSet],
    x: &[f64],
    layout: Layout,
    params: SmoothingParams,
) -> Result<Vec<f64>, ConfigError> {
    debug_assert!(!sets.is_empty());
    let mut parts = Vec::with_capacity(sets.len());
    let mut log_objectives = Vec::with_capacity(sets.len());
    for set in sets {
        parts.push(set.objective_grad_parts(x, layout, params)?);
        log_objectives.push(set.log_objective(x, layout, params)?);
    }
    let shift = log_objectives.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut numer = vec![0.0; layout.len()];
    let mut denom = 0.0;
    for (part, lf) in parts.iter().zip(&log_objectives) {
        let w = math::exp(part.log_scale - shift);
        for (n, d) in numer.iter_mut().zip(&part.direction) {
            *n += w * d;
        }
        denom += math::exp(lf - shift);
    }
    for n in &mut numer {
        *n /= denom;
    }
    Ok(numer)
}

/// Syntactic convexity classification of a constraint family.
///
/// `Inside` atoms are concave margins, so all-`Inside` families yield a
/// log-convex global objective; an agent with an `Inside` atom anchored at a
/// fixed point contributes strict convexity in its own block. `Outside`
/// atoms void the guarantee (the library warns but never refuses).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvexityReport {
    /// Every atom is `Inside` (objective guaranteed log-convex).
    pub all_concave: bool,
    /// Per agent: owns at least one `Inside` atom with a fixed-point anchor.
    pub strict_per_agent: Vec<bool>,
}

impl ConvexityReport {
    /// Global objective guaranteed strictly log-convex (unique optimum).
    pub fn strictly_convex(&self) -> bool {
        self.all_concave && self.strict_per_agent.iter().all(|&s| s)
    }
}

pub fn classify_convexity(sets: &[AgentConstraintSet]) -> ConvexityReport {
    let all_concave = sets
        .iter()
        .flat_map(|s| s.atoms.iter())
        .all(|a| a.sense == Sense::Inside);
    let strict_per_agent = sets
        .iter()
        .map(|s| {
            s.atoms
                .iter()
                .any(|a| a.sense == Sense::Inside && matches!(a.anchor, Anchor::Fixed(_)))
        })
        .collect();
    ConvexityReport { all_concave, strict_per_agent }
}
