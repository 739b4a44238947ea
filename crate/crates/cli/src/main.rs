//! Command-line front end: run scenarios, reproduce the built-in cases,
//! drive the verification suites, and export fixtures.
//!
//! Exit codes: 0 success; 1 invalid flags or a failed verification property;
//! 2 scenario load/validation failure; 3 integration failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use swarmform::constraints::classify_convexity;
use swarmform::limits::Tolerances;
use swarmform::optimizer::{run_with, RunOptions, SimulationError};
use swarmform::oracle::feasibility_verdict;
use swarmform::scenario::{BuiltinCase, Scenario};

use swarmform_cli::format::{parse_scenario, serialize_scenario};
use swarmform_cli::output::{summary_text, trajectory_csv, SummaryInputs};
use swarmform_cli::verify::{run_suites, Suite, VerifyConfig};

#[derive(Parser)]
#[command(
    name = "swarmform",
    version,
    about = "Multi-agent spatial constraint satisfaction via distributed consensus optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write trajectory.csv + summary.txt
    Run(RunArgs),
    /// Run a verification suite and report pass/fail per property
    Verify(VerifyArgs),
    /// Print a built-in case as a scenario file
    Export(ExportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (JSON)
    #[arg(long, conflicts_with = "case")]
    scenario: Option<PathBuf>,
    /// Built-in case name: A, B, C, D, E or Example1
    #[arg(long)]
    case: Option<String>,
    /// Run seed (defaults to the scenario's own)
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Integration step override [s]
    #[arg(long)]
    dt: Option<f64>,
    /// Horizon override [s]
    #[arg(long)]
    horizon: Option<f64>,
    /// Sampling interval override [s]
    #[arg(long)]
    sample_every: Option<f64>,
    /// Inner smoothing parameter override
    #[arg(long)]
    nu_alpha: Option<f64>,
    /// Nominal (final) outer smoothing parameter override
    #[arg(long)]
    nu_beta_nominal: Option<f64>,
    /// Integrate to the horizon even once converged
    #[arg(long)]
    no_early_stop: bool,
    /// Simulate multi-cluster task graphs as independent sub-simulations
    #[arg(long)]
    allow_multi_cluster: bool,
    /// Also write task_graph.dot and comm_graph.dot
    #[arg(long)]
    export_graphs: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// bounds | gradients | convexity | conservation | oracle | all
    #[arg(long)]
    suite: String,
    /// Restrict to one built-in case
    #[arg(long)]
    case: Option<String>,
    /// Suite seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sample count per property
    #[arg(long, default_value_t = 500)]
    samples: usize,
}

#[derive(Args)]
struct ExportArgs {
    /// Built-in case name: A, B, C, D, E or Example1
    #[arg(long)]
    case: String,
    /// Write to a file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Export(args) => cmd_export(args),
    }
}

fn load_scenario(
    scenario: &Option<PathBuf>,
    case: &Option<String>,
) -> Result<(Scenario, String), String> {
    match (scenario, case) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            let s = parse_scenario(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            Ok((s, path.display().to_string()))
        }
        (None, Some(name)) => {
            let case = BuiltinCase::parse(name)
                .ok_or_else(|| format!("unknown case '{name}' (use A, B, C, D, E or Example1)"))?;
            Ok((Scenario::builtin(case), format!("case {}", case.name())))
        }
        (None, None) => Err("one of --scenario or --case is required".into()),
        (Some(_), Some(_)) => unreachable!("clap rejects conflicting flags"),
    }
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let (mut scenario, source) = match load_scenario(&args.scenario, &args.case) {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    if let Some(dt) = args.dt {
        scenario.dt = dt;
    }
    if let Some(h) = args.horizon {
        scenario.horizon = h;
    }
    if let Some(se) = args.sample_every {
        scenario.sample_every = se;
    }
    if let Some(na) = args.nu_alpha {
        scenario.nu_alpha = na;
    }
    if let Some(nn) = args.nu_beta_nominal {
        scenario.nu_beta.nominal = nn;
    }
    let seed = args.seed.unwrap_or(scenario.seed);

    let report = classify_convexity(&scenario.effective_sets());
    if !report.all_concave {
        eprintln!(
            "warning: outside-ball atoms present; the objective may be nonconvex and the \
             final formation non-unique"
        );
    }

    let options = RunOptions {
        early_stop: !args.no_early_stop,
        allow_cluster_split: args.allow_multi_cluster,
        tolerances: Tolerances::default(),
    };
    eprintln!(
        "running {source} (seed {seed}, dt {} s, horizon {} s)",
        scenario.dt, scenario.horizon
    );
    let traj = match run_with(&scenario, seed, &options) {
        Ok(traj) => traj,
        Err(SimulationError::Invalid(issues)) => {
            eprintln!("error: scenario validation failed:");
            for issue in issues {
                eprintln!("  - {issue}");
            }
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: integration failed: {e}");
            return ExitCode::from(3);
        }
    };

    let verdict = feasibility_verdict(
        &scenario.effective_sets(),
        traj.final_positions(),
        scenario.layout(),
        Tolerances::default().feasibility_margin,
    )
    .expect("validated scenario evaluates everywhere");

    if let Err(e) = fs::create_dir_all(&args.out) {
        eprintln!("error: cannot create {}: {e}", args.out.display());
        return ExitCode::from(2);
    }
    let csv_path = args.out.join("trajectory.csv");
    let summary_path = args.out.join("summary.txt");
    let summary = summary_text(&SummaryInputs { source: &source, seed, traj: &traj, verdict });
    if let Err(e) = fs::write(&csv_path, trajectory_csv(&traj)) {
        eprintln!("error: cannot write {}: {e}", csv_path.display());
        return ExitCode::from(2);
    }
    if let Err(e) = fs::write(&summary_path, &summary) {
        eprintln!("error: cannot write {}: {e}", summary_path.display());
        return ExitCode::from(2);
    }
    if args.export_graphs {
        let task = scenario.task_graph().to_dot();
        let comm = scenario
            .comm_graph()
            .expect("validated scenario has a communication graph")
            .to_dot();
        for (name, text) in [("task_graph.dot", task), ("comm_graph.dot", comm)] {
            let path = args.out.join(name);
            if let Err(e) = fs::write(&path, text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
    }
    eprintln!(
        "done: {} samples, wrote {} and {}",
        traj.len(),
        csv_path.display(),
        summary_path.display()
    );
    print!("{summary}");
    ExitCode::SUCCESS
}

fn cmd_verify(args: VerifyArgs) -> ExitCode {
    let Some(suite) = Suite::parse(&args.suite) else {
        eprintln!(
            "error: unknown suite '{}' (use bounds, gradients, convexity, conservation, \
             oracle or all)",
            args.suite
        );
        return ExitCode::from(1);
    };
    let case = match &args.case {
        None => None,
        Some(name) => match BuiltinCase::parse(name) {
            Some(c) => Some(c),
            None => {
                eprintln!("error: unknown case '{name}' (use A, B, C, D, E or Example1)");
                return ExitCode::from(1);
            }
        },
    };
    let cfg = VerifyConfig { samples: args.samples, seed: args.seed, case };
    let reports = run_suites(suite, &cfg);
    let mut all_passed = true;
    for report in &reports {
        println!(
            "suite {}: {}",
            report.name,
            if report.passed { "pass" } else { "FAIL" }
        );
        for line in &report.lines {
            println!("  {line}");
        }
        all_passed &= report.passed;
    }
    if all_passed {
        ExitCode::SUCCESS
    } else {
        println!("reproduce with: --seed {}", args.seed);
        ExitCode::from(1)
    }
}

fn cmd_export(args: ExportArgs) -> ExitCode {
    let Some(case) = BuiltinCase::parse(&args.case) else {
        eprintln!("error: unknown case '{}' (use A, B, C, D, E or Example1)", args.case);
        return ExitCode::from(1);
    };
    let text = serialize_scenario(&Scenario::builtin(case));
    match &args.out {
        None => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Some(path) => {
            if let Some(parent) = Path::new(path).parent() {
                if !parent.as_os_str().is_empty() {
                    if let Err(e) = fs::create_dir_all(parent) {
                        eprintln!("error: cannot create {}: {e}", parent.display());
                        return ExitCode::from(2);
                    }
                }
            }
            match fs::write(path, text) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    ExitCode::from(2)
                }
            }
        }
    }
}
