//! Collaborative satisfaction of long-term spatial constraints in
//! multi-agent systems via distributed consensus optimization.
//!
//! Each agent owns a list of differentiable spatial constraints (stay inside
//! a ball, keep within range of another agent, keep a separation distance).
//! The library consolidates those constraints into smooth margin functions
//! using log-sum-exp under-approximations of the pointwise minimum, builds a
//! private local objective per agent, and drives single-integrator agents to
//! the maximizing formation — or the least-violating one when the constraints
//! are collectively infeasible — with a continuous-time consensus protocol
//! integrated by fixed-step RK4.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the default `std`
//! feature only switches the math shims to the platform intrinsics. IO, file
//! formats and the command-line front end live in the companion
//! `swarmform-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod constraints;
pub mod graphs;
pub mod layout;
pub mod limits;
pub mod math;
pub mod optimizer;
pub mod oracle;
pub mod scenario;

pub use constraints::{AgentConstraintSet, Anchor, ConstraintAtom, Sense, SmoothingParams};
pub use graphs::{ClusterPartition, CommGraph, TaskGraph};
pub use layout::Layout;
pub use limits::Tolerances;
pub use optimizer::{NuBetaRamp, SolverState, Trajectory};
pub use oracle::Verdict;
pub use scenario::{BuiltinCase, Scenario};
