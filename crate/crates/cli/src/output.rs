//! Trajectory CSV and run summary writers.
//!
//! The CSV schema is pinned: header `t,x1_1..xN_d,beta_bar,beta,
//! consensus_err,nu_beta`, 17 significant digits, `\n` newlines — identical
//! flags and seed produce byte-identical files.

use std::fmt::Write as _;

use swarmform::optimizer::Trajectory;
use swarmform::oracle::Verdict;

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::new();
    out.push('t');
    for agent in 1..=traj.layout.agents {
        for axis in 1..=traj.layout.dim {
            let _ = write!(out, ",x{agent}_{axis}");
        }
    }
    out.push_str(",beta_bar,beta,consensus_err,nu_beta\n");
    for k in 0..traj.len() {
        let _ = write!(out, "{:.16e}", traj.times[k]);
        for v in &traj.positions[k] {
            let _ = write!(out, ",{v:.16e}");
        }
        let _ = writeln!(
            out,
            ",{:.16e},{:.16e},{:.16e},{:.16e}",
            traj.beta_bar[k], traj.beta[k], traj.consensus_err[k], traj.nu_beta[k]
        );
    }
    out
}

pub struct SummaryInputs<'a> {
    pub source: &'a str,
    pub seed: u64,
    pub traj: &'a Trajectory,
    pub verdict: Verdict,
}

pub fn summary_text(inputs: &SummaryInputs) -> String {
    let traj = inputs.traj;
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {}", inputs.source);
    let _ = writeln!(out, "seed: {}", inputs.seed);
    let _ = writeln!(out, "agents: {}, dim: {}", traj.layout.agents, traj.layout.dim);
    let _ = writeln!(out, "samples: {}, end time: {:.3} s", traj.len(), traj.times.last().unwrap());
    match traj.stopped_early {
        Some(t) => {
            let _ = writeln!(out, "early stop: t = {t:.3} s");
        }
        None => {
            let _ = writeln!(out, "early stop: no");
        }
    }
    let _ = writeln!(out, "final positions:");
    let x = traj.final_positions();
    for i in 0..traj.layout.agents {
        let block = &x[i * traj.layout.dim..(i + 1) * traj.layout.dim];
        let coords: Vec<String> = block.iter().map(|v| format!("{v:.6}")).collect();
        let _ = writeln!(out, "  agent {}: [{}]", i + 1, coords.join(", "));
    }
    let _ = writeln!(out, "final beta_bar (min margin): {:.6}", traj.final_beta_bar());
    let _ = writeln!(out, "final beta (smooth margin): {:.6}", traj.final_beta());
    let _ = writeln!(out, "feasibility verdict: {}", inputs.verdict);
    let _ = writeln!(out, "final consensus error: {:.3e}", traj.final_consensus_err());
    match traj.satisfaction_time() {
        Some(t) => {
            let _ = writeln!(out, "constraint satisfaction time: {t:.3} s");
        }
        None => {
            let _ = writeln!(out, "constraint satisfaction time: never");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use swarmform::optimizer::run;
    use swarmform::scenario::{BuiltinCase, Scenario};

    #[test]
    fn csv_has_the_pinned_header_and_row_shape() {
        let mut s = Scenario::builtin(BuiltinCase::A);
        s.horizon = 1.0;
        let traj = run(&s, 1).unwrap();
        let csv = trajectory_csv(&traj);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,x1_1,x1_2,x2_1,x2_2,x3_1,x3_2,beta_bar,beta,consensus_err,nu_beta"
        );
        let first = lines.next().unwrap();
        assert_eq!(first.split(',').count(), 11);
        assert!(first.starts_with("0.0000000000000000e0,"), "{first}");
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn identical_runs_give_byte_identical_csv() {
        let mut s = Scenario::builtin(BuiltinCase::A);
        s.horizon = 2.0;
        let a = trajectory_csv(&run(&s, 9).unwrap());
        let b = trajectory_csv(&run(&s, 9).unwrap());
        assert_eq!(a, b);
        let c = trajectory_csv(&run(&s, 10).unwrap());
        assert_ne!(a, c);
    }
}
