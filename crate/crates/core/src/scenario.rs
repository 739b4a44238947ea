//! Scenario data model, validation, and built-in presets.
//!
//! A scenario bundles everything a run needs: the agents' constraint sets,
//! the communication topology, gains and smoothing schedule, integration
//! settings, and (optionally) pinned initial positions. File parsing and
//! serialization live in the companion CLI crate; this module owns the
//! semantic rules.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::constraints::{AgentConstraintSet, Anchor, ConstraintAtom};
use crate::graphs::{ClusterPartition, CommGraph, TaskGraph};
use crate::layout::Layout;
use crate::math;
use crate::optimizer::NuBetaRamp;

/// Axis-aligned box used for random initialization, one (lo, hi) per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxBounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub agents: usize,
    pub dim: usize,
    pub constraint_sets: Vec<AgentConstraintSet>,
    /// Undirected communication links (unordered agent pairs).
    pub comm_edges: Vec<(usize, usize)>,
    pub k1: f64,
    pub k2: f64,
    pub nu_alpha: f64,
    pub nu_beta: NuBetaRamp,
    pub dt: f64,
    pub horizon: f64,
    pub sample_every: f64,
    /// Pinned start positions; drawn from the init box when absent.
    pub initial_positions: Option<Vec<f64>>,
    /// Box for random positions and estimate blocks; defaults to the anchor
    /// bounding box inflated 2× (see [`Scenario::init_box`]).
    pub estimate_box: Option<BoxBounds>,
    pub seed: u64,
    /// Installs one extra inside-ball atom per agent, centered at the origin,
    /// making the objective strictly log-convex and its level sets compact.
    pub auxiliary: bool,
    /// Squared radius for the auxiliary balls; when `None` a radius of
    /// 10× the scene extent is used.
    pub c_aux: Option<f64>,
}

/// Semantic problems found while validating a scenario. Validation collects
/// every issue instead of stopping at the first.
#[derive(Debug, Clone, PartialEq)]
pub enum ValidationIssue {
    NoAgents,
    ZeroDimension,
    MissingConstraintSet { agent: usize },
    EmptyConstraintSet { agent: usize },
    WrongOwner { agent: usize, atom: usize, owner: usize },
    NegativeRadius { agent: usize, atom: usize, radius: f64 },
    SelfAnchor { agent: usize, atom: usize },
    AnchorAgentOutOfRange { agent: usize, atom: usize, target: usize },
    AnchorDimMismatch { agent: usize, atom: usize, got: usize },
    CommEdgeInvalid { edge: (usize, usize), reason: String },
    NonPositive { field: &'static str, value: f64 },
    RampInvalid { reason: String },
    InitialPositionsLength { expected: usize, got: usize },
    EstimateBoxInvalid { reason: String },
    ClusterDisconnected { cluster: Vec<usize>, components: Vec<Vec<usize>> },
    MultipleClusters { count: usize },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ValidationIssue::*;
        match self {
            NoAgents => write!(f, "scenario has no agents"),
            ZeroDimension => write!(f, "space dimension must be at least 1"),
            MissingConstraintSet { agent } => {
                write!(f, "agent {agent} has no constraint set")
            }
            EmptyConstraintSet { agent } => {
                write!(f, "agent {agent} has an empty constraint list")
            }
            WrongOwner { agent, atom, owner } => write!(
                f,
                "constraint {atom} in agent {agent}'s set claims owner {owner}"
            ),
            NegativeRadius { agent, atom, radius } => {
                write!(f, "constraint {atom} of agent {agent} has negative radius {radius}")
            }
            SelfAnchor { agent, atom } => {
                write!(f, "constraint {atom} of agent {agent} is anchored at its own agent")
            }
            AnchorAgentOutOfRange { agent, atom, target } => write!(
                f,
                "constraint {atom} of agent {agent} references nonexistent agent {target}"
            ),
            AnchorDimMismatch { agent, atom, got } => write!(
                f,
                "constraint {atom} of agent {agent} has a {got}-dimensional anchor point"
            ),
            CommEdgeInvalid { edge, reason } => {
                write!(f, "communication edge ({}, {}): {reason}", edge.0, edge.1)
            }
            NonPositive { field, value } => {
                write!(f, "{field} must be positive, got {value}")
            }
            RampInvalid { reason } => write!(f, "nu_beta ramp: {reason}"),
            InitialPositionsLength { expected, got } => {
                write!(f, "initial positions have length {got}, expected {expected}")
            }
            EstimateBoxInvalid { reason } => write!(f, "estimate box: {reason}"),
            ClusterDisconnected { cluster, components } => write!(
                f,
                "communication subgraph of cluster {cluster:?} is disconnected into {components:?}"
            ),
            MultipleClusters { count } => write!(
                f,
                "task graph splits into {count} dependency clusters; enable cluster splitting to \
                 run them as independent sub-simulations"
            ),
        }
    }
}

impl Scenario {
    pub fn layout(&self) -> Layout {
        Layout::new(self.agents, self.dim)
    }

    /// Constraint sets with the auxiliary ball atoms appended when enabled.
    /// All evaluation during a run goes through these.
    pub fn effective_sets(&self) -> Vec<AgentConstraintSet> {
        if !self.auxiliary {
            return self.constraint_sets.clone();
        }
        let c_aux = self.c_aux.unwrap_or_else(|| {
            let extent = self.scene_extent();
            (10.0 * extent) * (10.0 * extent)
        });
        let radius = math::sqrt(c_aux);
        self.constraint_sets
            .iter()
            .map(|set| {
                let mut atoms = set.atoms.clone();
                atoms.push(ConstraintAtom::inside_point(set.owner, vec![0.0; self.dim], radius));
                AgentConstraintSet::new(set.owner, atoms)
            })
            .collect()
    }

    /// Largest coordinate magnitude reachable inside any fixed-anchor ball or
    /// pinned start position; floored at 1 so degenerate scenes still get a
    /// usable scale.
    pub fn scene_extent(&self) -> f64 {
        let mut extent: f64 = 1.0;
        for set in &self.constraint_sets {
            for atom in &set.atoms {
                if let Anchor::Fixed(p) = &atom.anchor {
                    let reach = math::norm(p) + atom.radius;
                    extent = extent.max(reach);
                }
            }
        }
        if let Some(x0) = &self.initial_positions {
            extent = extent.max(math::norm_inf(x0));
        }
        extent
    }

    /// Box from which random positions and estimate blocks are drawn: the
    /// axis-aligned bounding box of all fixed anchors, inflated by a factor
    /// of 2 about its center, with half-extents floored at 1. Scenarios
    /// without fixed anchors get the unit box around the origin (inflated the
    /// same way). Overridden by [`Scenario::estimate_box`].
    pub fn init_box(&self) -> BoxBounds {
        if let Some(b) = &self.estimate_box {
            return b.clone();
        }
        let d = self.dim;
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        let mut any = false;
        for set in &self.constraint_sets {
            for atom in &set.atoms {
                if let Anchor::Fixed(p) = &atom.anchor {
                    any = true;
                    for k in 0..d.min(p.len()) {
                        lo[k] = lo[k].min(p[k]);
                        hi[k] = hi[k].max(p[k]);
                    }
                }
            }
        }
        if !any {
            lo = vec![-1.0; d];
            hi = vec![1.0; d];
        }
        let mut out = BoxBounds { lo: vec![0.0; d], hi: vec![0.0; d] };
        for k in 0..d {
            let center = 0.5 * (lo[k] + hi[k]);
            let half = (0.5 * (hi[k] - lo[k])).max(1.0) * 2.0;
            out.lo[k] = center - half;
            out.hi[k] = center + half;
        }
        out
    }

    /// Full semantic + graph validation. Returns every issue found.
    /// `allow_multi_cluster` admits task graphs with several dependency
    /// clusters (the runner then simulates each cluster independently).
    pub fn validate(&self, allow_multi_cluster: bool) -> Result<(), Vec<ValidationIssue>> {
        let mut issues = Vec::new();
        if self.agents == 0 {
            issues.push(ValidationIssue::NoAgents);
        }
        if self.dim == 0 {
            issues.push(ValidationIssue::ZeroDimension);
        }
        for agent in 0..self.agents {
            match self.constraint_sets.get(agent) {
                None => issues.push(ValidationIssue::MissingConstraintSet { agent }),
                Some(set) => {
                    if set.atoms.is_empty() {
                        issues.push(ValidationIssue::EmptyConstraintSet { agent });
                    }
                    if set.owner != agent {
                        issues.push(ValidationIssue::WrongOwner {
                            agent,
                            atom: 0,
                            owner: set.owner,
                        });
                    }
                    for (k, atom) in set.atoms.iter().enumerate() {
                        if atom.owner != agent {
                            issues.push(ValidationIssue::WrongOwner {
                                agent,
                                atom: k,
                                owner: atom.owner,
                            });
                        }
                        if !(atom.radius >= 0.0) {
                            issues.push(ValidationIssue::NegativeRadius {
                                agent,
                                atom: k,
                                radius: atom.radius,
                            });
                        }
                        match &atom.anchor {
                            Anchor::Agent(j) if *j == agent => {
                                issues.push(ValidationIssue::SelfAnchor { agent, atom: k })
                            }
                            Anchor::Agent(j) if *j >= self.agents => {
                                issues.push(ValidationIssue::AnchorAgentOutOfRange {
                                    agent,
                                    atom: k,
                                    target: *j,
                                })
                            }
                            Anchor::Fixed(p) if p.len() != self.dim => {
                                issues.push(ValidationIssue::AnchorDimMismatch {
                                    agent,
                                    atom: k,
                                    got: p.len(),
                                })
                            }
                            _ => {}
                        }
                    }
                }
            }
        }
        for &(a, b) in &self.comm_edges {
            if a == b {
                issues.push(ValidationIssue::CommEdgeInvalid {
                    edge: (a, b),
                    reason: String::from("self-loop"),
                });
            } else if a >= self.agents || b >= self.agents {
                issues.push(ValidationIssue::CommEdgeInvalid {
                    edge: (a, b),
                    reason: String::from("agent index out of range"),
                });
            }
        }
        for (field, value) in [
            ("k1", self.k1),
            ("k2", self.k2),
            ("nu_alpha", self.nu_alpha),
            ("dt", self.dt),
            ("horizon", self.horizon),
            ("sample_every", self.sample_every),
        ] {
            if !(value > 0.0) {
                issues.push(ValidationIssue::NonPositive { field, value });
            }
        }
        if let Err(reason) = self.nu_beta.check() {
            issues.push(ValidationIssue::RampInvalid { reason });
        }
        if let Some(x0) = &self.initial_positions {
            if x0.len() != self.agents * self.dim {
                issues.push(ValidationIssue::InitialPositionsLength {
                    expected: self.agents * self.dim,
                    got: x0.len(),
                });
            }
        }
        if let Some(b) = &self.estimate_box {
            if b.lo.len() != self.dim || b.hi.len() != self.dim {
                issues.push(ValidationIssue::EstimateBoxInvalid {
                    reason: format!(
                        "bounds must have {} coordinates, got {}/{}",
                        self.dim,
                        b.lo.len(),
                        b.hi.len()
                    ),
                });
            } else if b.lo.iter().zip(&b.hi).any(|(l, h)| !(l < h)) {
                issues.push(ValidationIssue::EstimateBoxInvalid {
                    reason: String::from("lower bound must be strictly below upper bound"),
                });
            }
        }
        if let Some(c) = self.c_aux {
            if !(c > 0.0) {
                issues.push(ValidationIssue::NonPositive { field: "c_aux", value: c });
            }
        }

        // Graph validation only makes sense once the structural checks pass.
        if issues.is_empty() {
            let partition = self.clusters();
            if partition.len() > 1 && !allow_multi_cluster {
                issues.push(ValidationIssue::MultipleClusters { count: partition.len() });
            }
            match CommGraph::new(self.agents, &self.comm_edges) {
                Ok(comm) => {
                    if let Err(v) = comm.validate_cover(&partition) {
                        for d in v.disconnected {
                            issues.push(ValidationIssue::ClusterDisconnected {
                                cluster: d.cluster,
                                components: d.components,
                            });
                        }
                    }
                }
                Err(e) => issues.push(ValidationIssue::CommEdgeInvalid {
                    edge: (0, 0),
                    reason: format!("{e}"),
                }),
            }
        }

        if issues.is_empty() {
            Ok(())
        } else {
            Err(issues)
        }
    }

    pub fn task_graph(&self) -> TaskGraph {
        TaskGraph::from_constraint_sets(&self.constraint_sets)
    }

    pub fn clusters(&self) -> ClusterPartition {
        self.task_graph().clusters()
    }

    pub fn comm_graph(&self) -> Result<CommGraph, crate::graphs::GraphError> {
        CommGraph::new(self.agents, &self.comm_edges)
    }
}

/// Built-in presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinCase {
    /// Feasible constraints forcing consensus at a single point.
    A,
    /// Feasible constraints with distinct target positions.
    B,
    /// Tightly feasible constraints.
    C,
    /// Collectively infeasible constraints (least-violation outcome).
    D,
    /// Nonconvex objective: rendezvous with minimum separation distances.
    E,
    /// Seven-agent dependency structure with two clusters. The constraint
    /// bodies are non-normative placeholders for graph testing; only the
    /// dependency pattern is meaningful.
    Example1,
}

impl BuiltinCase {
    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "a" => Some(BuiltinCase::A),
            "b" => Some(BuiltinCase::B),
            "c" => Some(BuiltinCase::C),
            "d" => Some(BuiltinCase::D),
            "e" => Some(BuiltinCase::E),
            "example1" => Some(BuiltinCase::Example1),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BuiltinCase::A => "A",
            BuiltinCase::B => "B",
            BuiltinCase::C => "C",
            BuiltinCase::D => "D",
            BuiltinCase::E => "E",
            BuiltinCase::Example1 => "Example1",
        }
    }
}

/// Default settings shared by the three-agent presets: unit gains, ν_α = 5,
/// the ν_β ramp 0.01 + 0.022·t capped at 5, line communication graph,
/// dt = 0.01 s, horizon 300 s.
fn three_agent_defaults(constraint_sets: Vec<AgentConstraintSet>) -> Scenario {
    Scenario {
        agents: 3,
        dim: 2,
        constraint_sets,
        comm_edges: vec![(0, 1), (1, 2)],
        k1: 1.0,
        k2: 1.0,
        nu_alpha: 5.0,
        nu_beta: NuBetaRamp::new(0.01, 0.022, 5.0),
        dt: 0.01,
        horizon: 300.0,
        sample_every: 0.1,
        initial_positions: None,
        estimate_box: None,
        seed: 0,
        auxiliary: false,
        c_aux: None,
    }
}

impl Scenario {
    pub fn builtin(case: BuiltinCase) -> Scenario {
        match case {
            BuiltinCase::A => three_agent_defaults(vec![
                AgentConstraintSet::new(0, vec![ConstraintAtom::inside_point(0, vec![2.0, 0.0], 1.0)]),
                AgentConstraintSet::new(1, vec![ConstraintAtom::inside_agent(1, 0, 1.0)]),
                AgentConstraintSet::new(2, vec![ConstraintAtom::inside_agent(2, 1, 1.0)]),
            ]),
            BuiltinCase::B => three_agent_defaults(vec![
                AgentConstraintSet::new(0, vec![ConstraintAtom::inside_point(0, vec![2.0, 0.0], 1.0)]),
                AgentConstraintSet::new(
                    1,
                    vec![
                        ConstraintAtom::inside_agent(1, 0, 3.0),
                        ConstraintAtom::inside_agent(1, 2, 2.0),
                    ],
                ),
                AgentConstraintSet::new(2, vec![ConstraintAtom::inside_point(2, vec![-2.0, 0.0], 1.0)]),
            ]),
            BuiltinCase::C => three_agent_defaults(vec![
                AgentConstraintSet::new(0, vec![ConstraintAtom::inside_point(0, vec![2.0, 0.0], 1.0)]),
                AgentConstraintSet::new(
                    1,
                    vec![
                        ConstraintAtom::inside_agent(1, 0, 1.7),
                        ConstraintAtom::inside_agent(1, 2, 0.7),
                    ],
                ),
                AgentConstraintSet::new(2, vec![ConstraintAtom::inside_point(2, vec![-2.0, 0.0], 1.0)]),
            ]),
            // The second constraint of agent 2 reads "distance to agent 3"
            // here, keeping the B/C pattern.
            BuiltinCase::D => {
                let mut s = three_agent_defaults(vec![
                    AgentConstraintSet::new(0, vec![ConstraintAtom::inside_point(0, vec![2.0, 0.0], 1.0)]),
                    AgentConstraintSet::new(
                        1,
                        vec![
                            ConstraintAtom::inside_agent(1, 0, 1.4),
                            ConstraintAtom::inside_agent(1, 2, 0.4),
                        ],
                    ),
                    AgentConstraintSet::new(2, vec![ConstraintAtom::inside_point(2, vec![-2.0, 0.0], 1.0)]),
                ]);
                // The objective curvature at this case's least-violating
                // optimum reaches |λ| ≈ 440, beyond the RK4 stability bound
                // of |λ|·dt < 2.785 at the 0.01 default step; 0.002 keeps
                // λ·dt ≈ 0.9.
                s.dt = 0.002;
                s
            }
            BuiltinCase::E => three_agent_defaults(vec![
                AgentConstraintSet::new(0, vec![ConstraintAtom::inside_point(0, vec![2.0, 0.0], 1.0)]),
                AgentConstraintSet::new(
                    1,
                    vec![
                        ConstraintAtom::inside_agent(1, 0, 1.0),
                        ConstraintAtom::outside_agent(1, 0, 0.2),
                    ],
                ),
                AgentConstraintSet::new(
                    2,
                    vec![
                        ConstraintAtom::inside_agent(2, 1, 1.0),
                        ConstraintAtom::inside_agent(2, 0, 1.0),
                        ConstraintAtom::outside_agent(2, 0, 0.2),
                        ConstraintAtom::outside_agent(2, 1, 0.2),
                    ],
                ),
            ]),
            BuiltinCase::Example1 => {
                // Placeholder bodies: individual atoms are generous balls at
                // the origin, coupled atoms are generous connectivity balls.
                // Only the reference pattern matters.
                let fixed = |i: usize| ConstraintAtom::inside_point(i, vec![0.0, 0.0], 10.0);
                let coupled = |i: usize, j: usize| ConstraintAtom::inside_agent(i, j, 10.0);
                Scenario {
                    agents: 7,
                    dim: 2,
                    constraint_sets: vec![
                        AgentConstraintSet::new(0, vec![fixed(0), coupled(0, 1)]),
                        AgentConstraintSet::new(1, vec![fixed(1), coupled(1, 0)]),
                        AgentConstraintSet::new(2, vec![coupled(2, 0)]),
                        // the three-agent coupling is expressed as two
                        // pairwise atoms
                        AgentConstraintSet::new(
                            3,
                            vec![coupled(3, 0), coupled(3, 1), coupled(3, 2)],
                        ),
                        AgentConstraintSet::new(4, vec![fixed(4), coupled(4, 2), coupled(4, 3)]),
                        AgentConstraintSet::new(5, vec![fixed(5), coupled(5, 6)]),
                        AgentConstraintSet::new(6, vec![fixed(6)]),
                    ],
                    comm_edges: vec![(0, 1), (1, 2), (2, 3), (3, 4), (5, 6)],
                    k1: 1.0,
                    k2: 1.0,
                    nu_alpha: 5.0,
                    nu_beta: NuBetaRamp::new(0.01, 0.022, 5.0),
                    dt: 0.01,
                    horizon: 300.0,
                    sample_every: 0.1,
                    initial_positions: None,
                    estimate_box: None,
                    seed: 0,
                    auxiliary: false,
                    c_aux: None,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::Sense;

    #[test]
    fn case_a_has_the_three_expected_atoms() {
        let s = Scenario::builtin(BuiltinCase::A);
        assert_eq!(s.agents, 3);
        assert_eq!(s.constraint_sets.iter().map(|c| c.atoms.len()).sum::<usize>(), 3);
        assert_eq!(
            s.constraint_sets[0].atoms[0],
            ConstraintAtom::inside_point(0, vec![2.0, 0.0], 1.0)
        );
        assert_eq!(s.constraint_sets[1].atoms[0], ConstraintAtom::inside_agent(1, 0, 1.0));
        assert_eq!(s.constraint_sets[2].atoms[0], ConstraintAtom::inside_agent(2, 1, 1.0));
        assert_eq!(s.comm_edges, vec![(0, 1), (1, 2)]);
        assert_eq!(s.k1, 1.0);
        assert_eq!(s.nu_alpha, 5.0);
        assert_eq!(s.dt, 0.01);
        assert_eq!(s.horizon, 300.0);
    }

    #[test]
    fn case_e_adds_separation_and_connectivity_atoms() {
        let a = Scenario::builtin(BuiltinCase::A);
        let e = Scenario::builtin(BuiltinCase::E);
        let count =
            |s: &Scenario| s.constraint_sets.iter().map(|c| c.atoms.len()).sum::<usize>();
        assert_eq!(count(&e), count(&a) + 4);
        let added = [
            ConstraintAtom::outside_agent(1, 0, 0.2),
            ConstraintAtom::inside_agent(2, 0, 1.0),
            ConstraintAtom::outside_agent(2, 0, 0.2),
            ConstraintAtom::outside_agent(2, 1, 0.2),
        ];
        for atom in &added {
            assert!(
                e.constraint_sets[atom.owner].atoms.contains(atom),
                "missing {atom:?}"
            );
        }
    }

    #[test]
    fn example1_splits_into_two_clusters() {
        let s = Scenario::builtin(BuiltinCase::Example1);
        let p = s.clusters();
        assert_eq!(p.groups(), &[vec![0, 1, 2, 3, 4], vec![5, 6]]);
        // single-cluster enforcement refuses it without the flag
        assert!(s.validate(false).is_err());
        assert!(s.validate(true).is_ok());
    }

    #[test]
    fn builtin_cases_validate_out_of_the_box() {
        for case in [BuiltinCase::A, BuiltinCase::B, BuiltinCase::C, BuiltinCase::D, BuiltinCase::E]
        {
            let s = Scenario::builtin(case);
            assert!(s.validate(false).is_ok(), "case {case:?} failed validation");
        }
    }

    #[test]
    fn validation_collects_all_issues() {
        let mut s = Scenario::builtin(BuiltinCase::A);
        s.constraint_sets[0].atoms[0].radius = -1.0;
        s.constraint_sets[1].atoms[0].anchor = Anchor::Agent(1);
        s.dt = 0.0;
        let issues = s.validate(false).unwrap_err();
        assert!(issues.iter().any(|i| matches!(
            i,
            ValidationIssue::NegativeRadius { agent: 0, atom: 0, .. }
        )));
        assert!(issues
            .iter()
            .any(|i| matches!(i, ValidationIssue::SelfAnchor { agent: 1, atom: 0 })));
        assert!(issues
            .iter()
            .any(|i| matches!(i, ValidationIssue::NonPositive { field: "dt", .. })));
        assert_eq!(issues.len(), 3);
    }

    #[test]
    fn disconnected_cluster_is_reported_with_members() {
        let mut s = Scenario::builtin(BuiltinCase::A);
        s.comm_edges = vec![(0, 1)];
        let issues = s.validate(false).unwrap_err();
        assert!(issues.iter().any(|i| matches!(
            i,
            ValidationIssue::ClusterDisconnected { cluster, .. } if cluster == &vec![0, 1, 2]
        )));
    }

    #[test]
    fn init_box_spans_anchors_inflated() {
        let s = Scenario::builtin(BuiltinCase::B);
        let b = s.init_box();
        // anchors at (±2, 0): center (0,0), half-extents (2, 1 floored) → ×2
        assert_eq!(b.lo, vec![-4.0, -2.0]);
        assert_eq!(b.hi, vec![4.0, 2.0]);
    }

    #[test]
    fn reported_optima_have_reported_margins() {
        use crate::constraints::{system_min_margin, system_smooth_margin, SmoothingParams};
        // case A: consensus at the target gives a min margin of exactly 1
        let a = Scenario::builtin(BuiltinCase::A);
        let x = [2.0, 0.0, 2.0, 0.0, 2.0, 0.0];
        assert_eq!(system_min_margin(&a.constraint_sets, &x, a.layout()).unwrap(), 1.0);

        // case C's optimum is tightly feasible: min margin near 0.1 while the
        // smooth margin sits near -0.1
        let c = Scenario::builtin(BuiltinCase::C);
        let x = [1.10, 0.0, -0.49, 0.0, -1.10, 0.0];
        let params = SmoothingParams::new(5.0, 5.0);
        let bb = system_min_margin(&c.constraint_sets, &x, c.layout()).unwrap();
        let b = system_smooth_margin(&c.constraint_sets, &x, c.layout(), params).unwrap();
        assert!((0.05..=0.15).contains(&bb), "beta_bar {bb}");
        assert!((-0.15..=-0.05).contains(&b), "beta {b}");

        // case D's least-violating formation keeps both margins negative
        let d = Scenario::builtin(BuiltinCase::D);
        let x = [0.98, 0.0, -0.41, 0.0, -0.98, 0.0];
        let bb = system_min_margin(&d.constraint_sets, &x, d.layout()).unwrap();
        let b = system_smooth_margin(&d.constraint_sets, &x, d.layout(), params).unwrap();
        assert!((bb - (-0.18)).abs() <= 0.05, "beta_bar {bb}");
        assert!((b - (-0.35)).abs() <= 0.05, "beta {b}");
    }

    #[test]
    fn non_finite_radius_is_rejected() {
        let mut s = Scenario::builtin(BuiltinCase::A);
        s.constraint_sets[0].atoms[0].radius = f64::NAN;
        let issues = s.validate(false).unwrap_err();
        assert!(issues
            .iter()
            .any(|i| matches!(i, ValidationIssue::NegativeRadius { agent: 0, atom: 0, .. })));
    }

    #[test]
    fn auxiliary_atoms_are_appended_to_every_agent() {
        let mut s = Scenario::builtin(BuiltinCase::A);
        s.auxiliary = true;
        let sets = s.effective_sets();
        for (i, set) in sets.iter().enumerate() {
            let last = set.atoms.last().unwrap();
            assert_eq!(last.sense, Sense::Inside);
            assert_eq!(last.anchor, Anchor::Fixed(vec![0.0, 0.0]));
            assert_eq!(set.atoms.len(), s.constraint_sets[i].atoms.len() + 1);
            // scene extent is 3 (ball of radius 1 at (2,0)) → radius 30
            assert!((last.radius - 30.0).abs() < 1e-12);
        }
        s.c_aux = Some(100.0);
        let sets = s.effective_sets();
        assert!((sets[0].atoms.last().unwrap().radius - 10.0).abs() < 1e-12);
    }
}
