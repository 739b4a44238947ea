//! Long-run behavior of the distributed protocol on the built-in cases:
//! conservation, coherence, monotone late-stage margins, consensus, and
//! seed invariance of the limit.

use swarmform::optimizer::{run, run_with, RunOptions, Solver};
use swarmform::scenario::{BuiltinCase, Scenario};

fn full_horizon() -> RunOptions {
    RunOptions { early_stop: false, ..Default::default() }
}

#[test]
fn integral_sum_stays_zero_over_a_full_run() {
    let s = Scenario::builtin(BuiltinCase::A);
    let traj = run_with(&s, 7, &full_horizon()).unwrap();
    let worst = traj.z_sum_norm.iter().cloned().fold(0.0_f64, f64::max);
    assert!(worst <= 1e-9, "worst z-sum norm {worst}");
}

#[test]
fn positions_track_own_estimate_blocks_bit_exactly() {
    let s = Scenario::builtin(BuiltinCase::B);
    let solver = Solver::new(&s, RunOptions::default()).unwrap();
    let mut state = solver.init_state(3);
    for step in 0..2_000 {
        if step % 50 == 0 {
            for i in 0..3 {
                let own = &state.estimate(i)[i * 2..(i + 1) * 2];
                assert_eq!(state.position(i), own, "agent {i} at step {step}");
            }
        }
        solver.step(&mut state, s.dt).unwrap();
    }
}

#[test]
fn late_stage_min_margin_is_monotone_for_convex_cases() {
    for case in [BuiltinCase::A, BuiltinCase::B, BuiltinCase::C, BuiltinCase::D] {
        let s = Scenario::builtin(case);
        let settle = s.nu_beta.settling_time();
        let traj = run_with(&s, 7, &full_horizon()).unwrap();
        for k in 1..traj.len() {
            if traj.times[k - 1] >= settle {
                assert!(
                    traj.beta_bar[k] >= traj.beta_bar[k - 1] - 1e-3,
                    "case {case:?}: min margin dropped at t = {}: {} -> {}",
                    traj.times[k],
                    traj.beta_bar[k - 1],
                    traj.beta_bar[k]
                );
            }
        }
    }
}

#[test]
fn consensus_error_reaches_threshold() {
    for case in [BuiltinCase::A, BuiltinCase::B, BuiltinCase::C, BuiltinCase::E] {
        let s = Scenario::builtin(case);
        let traj = run_with(&s, 7, &full_horizon()).unwrap();
        assert!(
            traj.final_consensus_err() < 1e-3,
            "case {case:?}: consensus error {} at horizon",
            traj.final_consensus_err()
        );
    }
    // The infeasible case approaches consensus at the slow rate set by the
    // objective curvature at its optimum (~λ_L/H with H ≈ 440); the error is
    // ~3e-2 at t = 300 and first crosses 1e-3 near t = 523, so the threshold
    // is asserted on an extended horizon.
    let mut s = Scenario::builtin(BuiltinCase::D);
    s.horizon = 600.0;
    let traj = run_with(&s, 7, &full_horizon()).unwrap();
    assert!(
        traj.final_consensus_err() < 1e-3,
        "case D: consensus error {} at extended horizon",
        traj.final_consensus_err()
    );
}

#[test]
fn early_stop_fires_once_quiet() {
    // start the whole system at the known optimum with estimates already in
    // agreement: the field and consensus error are tiny from step one
    let mut s = Scenario::builtin(BuiltinCase::A);
    s.initial_positions = Some(vec![2.0, 0.0, 2.0, 0.0, 2.0, 0.0]);
    s.estimate_box = Some(swarmform::scenario::BoxBounds {
        lo: vec![2.0 - 1e-12, -1e-12],
        hi: vec![2.0 + 1e-12, 1e-12],
    });
    s.nu_beta = swarmform::optimizer::NuBetaRamp::constant(5.0);
    let traj = run(&s, 1).unwrap();
    assert!(traj.stopped_early.is_some(), "run should have stopped early");
    assert!(traj.stopped_early.unwrap() < 10.0);
    let last = *traj.times.last().unwrap();
    assert!((last - traj.stopped_early.unwrap()).abs() < 1e-12);
}

/// The limit is seed-independent. Agent 2's transverse coordinate sits in a
/// direction with curvature ~4e-4, so the limit is only reached a couple of
/// orders of magnitude past the default horizon; this case's dynamics are
/// non-stiff (|λ| ≈ 4), which admits the larger step for the long tail.
#[test]
fn seed_invariance_of_the_case_b_limit() {
    let mut s = Scenario::builtin(BuiltinCase::B);
    s.horizon = 40_000.0;
    s.dt = 0.05;
    s.sample_every = 40.0;
    let a = run_with(&s, 1, &full_horizon()).unwrap();
    let b = run_with(&s, 2, &full_horizon()).unwrap();
    let diff = a
        .final_positions()
        .iter()
        .zip(b.final_positions())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0_f64, f64::max);
    assert!(diff < 1e-3, "cross-seed final position spread {diff}");
}

#[test]
fn split_run_matches_independent_cluster_runs() {
    // two independent pairs: a two-cluster system whose merged record must
    // reproduce the single-cluster behavior of each half
    let mut s = Scenario::builtin(BuiltinCase::Example1);
    s.horizon = 20.0;
    let opts = RunOptions { allow_cluster_split: true, ..Default::default() };
    let traj = run_with(&s, 5, &opts).unwrap();
    assert_eq!(traj.layout.agents, 7);
    assert_eq!(*traj.times.last().unwrap() as i64, 20);
    // placeholder constraints are generous balls: everything is satisfied at
    // the end and the merged min margin is positive
    assert!(traj.final_beta_bar() > 0.0);
    // merged consensus error combines the per-cluster errors; by t = 20 the
    // generous constraints are settled
    assert!(traj.final_consensus_err() < 1.0);
}

#[test]
fn satisfaction_time_is_the_start_of_the_positive_tail() {
    let s = Scenario::builtin(BuiltinCase::C);
    let traj = run_with(&s, 7, &full_horizon()).unwrap();
    let t = traj.satisfaction_time().expect("case C ends satisfied");
    assert!(t > 0.0 && t < 300.0);
    let idx = traj.times.iter().position(|&x| x == t).unwrap();
    assert!(traj.beta_bar[idx..].iter().all(|&b| b > 0.0));
    assert!(traj.beta_bar[idx - 1] <= 0.0);

    // infeasible case never satisfies
    let d = Scenario::builtin(BuiltinCase::D);
    let traj = run_with(&d, 7, &full_horizon()).unwrap();
    assert_eq!(traj.satisfaction_time(), None);
}
