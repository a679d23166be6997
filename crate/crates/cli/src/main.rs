use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use inp_core::executor::{metrics, simulate, EventRecord, Metrics, SimConfig, StopReason};
use inp_core::planner::{build_psi, find_initial_assignment, Initialization, PlanError};
use inp_core::schedule::{
    build_sequence, build_team_graph, construct_schedules, verify_schedules, Schedule,
};
use inp_core::ts::{load_scenario, Scenario, ScenarioError};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "inp",
    version,
    about = "Intermittent communication and LTL task planning for robot teams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and print its size.
    Validate { scenario: PathBuf },
    /// Build the team graph and the communication schedules.
    Schedule {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run initialization: schedules, communication points and initial plans.
    Plan {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Execute the plans asynchronously and write the event log.
    Simulate(SimulateArgs),
    /// Summarise the logs in an output directory.
    Report { dir: PathBuf },
}

#[derive(Args)]
struct SimulateArgs {
    scenario: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 10_000.0)]
    horizon: f64,
    #[arg(long, default_value_t = 20)]
    max_iterations: u32,
    /// Number of candidate points evaluated per replanning, incumbent included.
    #[arg(long)]
    max_candidates: Option<u32>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("initialization infeasible: {0}")]
    Plan(#[from] PlanError),
    #[error("{0}")]
    Invariant(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
    #[error("corrupt event log line {line}: {source}")]
    Log {
        line: usize,
        source: serde_json::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Plan(_) => 2,
            CliError::Invariant(_) => 3,
            _ => 1,
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(io_err(format!("cannot write {}", path.display())))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("plain data serializes");
    write_file(dir, name, &(text + "\n"))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(format!("cannot create {}", dir.display())))
}

#[derive(Serialize)]
struct ScheduleDoc {
    sequence: Vec<usize>,
    schedule_len: usize,
    /// Team ids per schedule index, `X` for idle.
    schedules: std::collections::BTreeMap<usize, Vec<String>>,
}

fn entries(s: &Schedule) -> Vec<String> {
    s.sequence
        .iter()
        .map(|e| e.map_or_else(|| "X".to_string(), |m| m.to_string()))
        .collect()
}

fn schedule_doc(init: &Initialization) -> ScheduleDoc {
    ScheduleDoc {
        sequence: init.sequence.0.clone(),
        schedule_len: init.team_graph.schedule_len(),
        schedules: init
            .schedules
            .iter()
            .map(|(&r, s)| (r, entries(s)))
            .collect(),
    }
}

#[derive(Serialize)]
struct AssignmentDoc {
    assignment: std::collections::BTreeMap<usize, String>,
    robots: Vec<RobotPlanDoc>,
}

#[derive(Serialize)]
struct RobotPlanDoc {
    robot: usize,
    psi: String,
    prefix_cost: f64,
    suffix_cost: f64,
    path: Vec<String>,
}

fn assignment_doc(s: &Scenario, init: &Initialization) -> AssignmentDoc {
    let name = |l: usize| s.workspace.name(l).to_string();
    let robots = init
        .planners
        .iter()
        .map(|(&r, p)| {
            let plan = &init.plans[&r];
            let points = s
                .teams
                .teams_of(r)
                .into_iter()
                .map(|m| s.workspace.name(init.assignment[&m]));
            RobotPlanDoc {
                robot: r,
                psi: build_psi(&s.robot(r).task, points).to_string(),
                prefix_cost: plan.prefix_cost(&p.wts),
                suffix_cost: plan.suffix_cost(&p.wts),
                path: init.paths[&r].states.iter().map(|&q| name(q)).collect(),
            }
        })
        .collect();
    AssignmentDoc {
        assignment: init
            .assignment
            .iter()
            .map(|(&m, &l)| (m, name(l)))
            .collect(),
        robots,
    }
}

fn validate(path: &Path) -> Result<(), CliError> {
    let s = load_scenario(path)?;
    let g = build_team_graph(&s.teams)?;
    println!(
        "ok: {} locations, {} edges, {} communication points, {} robots, {} teams, max team degree {}",
        s.workspace.locations.len(),
        s.workspace.edges.len(),
        s.workspace.comm_points.len(),
        s.robots.len(),
        s.teams.teams.len(),
        g.max_degree()
    );
    Ok(())
}

fn schedule(path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let s = load_scenario(path)?;
    let g = build_team_graph(&s.teams)?;
    let seq = build_sequence(&g, s.teams.teams[0].id);
    let schedules = construct_schedules(&s.teams, &g, &seq);
    let violations = verify_schedules(&schedules, &s.teams, &g);
    if let Some(v) = violations.first() {
        return Err(CliError::Invariant(format!("schedule violation: {v}")));
    }
    let doc = ScheduleDoc {
        sequence: seq.0.clone(),
        schedule_len: g.schedule_len(),
        schedules: schedules.iter().map(|(&r, s)| (r, entries(s))).collect(),
    };
    println!("sequence: {:?}", doc.sequence);
    for sched in schedules.values() {
        println!("{sched}");
    }
    if let Some(dir) = out {
        ensure_dir(dir)?;
        write_json(dir, "schedules.json", &doc)?;
    }
    Ok(())
}

fn plan(path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let s = load_scenario(path)?;
    let init = find_initial_assignment(&s)?;
    let doc = assignment_doc(&s, &init);
    for (m, l) in &doc.assignment {
        println!("team {m}: {l}");
    }
    for r in &doc.robots {
        println!(
            "robot {}: J(pre) = {}, J(suf) = {}, psi = {}",
            r.robot, r.prefix_cost, r.suffix_cost, r.psi
        );
    }
    if let Some(dir) = out {
        ensure_dir(dir)?;
        write_json(dir, "schedules.json", &schedule_doc(&init))?;
        write_json(dir, "assignment.json", &doc)?;
    }
    Ok(())
}

fn costs_csv(m: &Metrics) -> String {
    let mut out = String::from("iteration,total_cost\n");
    for (n, c) in &m.cost_series {
        writeln!(out, "{n},{c}").unwrap();
    }
    out
}

fn consensus_csv(m: &Metrics) -> String {
    let mut out = String::from("time,spread\n");
    for (t, e) in &m.consensus {
        writeln!(out, "{t},{e}").unwrap();
    }
    out
}

fn meetings_csv(m: &Metrics) -> String {
    let mut out = String::from("team,time\n");
    for (team, times) in &m.team_events {
        for t in times {
            writeln!(out, "{team},{t}").unwrap();
        }
    }
    out
}

fn summary(m: &Metrics, stop: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(reason) = stop {
        writeln!(out, "stopped by: {reason}").unwrap();
    }
    match m.cycle {
        Some(c) => {
            write!(out, "repeating cycle detected: P={}, C={}", c.p, c.c).unwrap();
            match c.verified {
                Some(true) => out.push_str(" (path^(C+1) equals path^P)\n"),
                Some(false) => out.push_str(" (path^(C+1) differs from path^P)\n"),
                None => out.push_str(" (path^(C+1) not reached)\n"),
            }
        }
        None => out.push_str("no cycle detected within horizon\n"),
    }
    match m.cost_series.last() {
        Some((n, c)) => writeln!(out, "final total cost: {c} (iteration {n})").unwrap(),
        None => out.push_str("final total cost: n/a\n"),
    }
    out.push_str("communication events per team:\n");
    for (team, times) in &m.team_events {
        writeln!(out, "  team {team}: {}", times.len()).unwrap();
    }
    let err = m.consensus.last().map_or(0.0, |c| c.1);
    writeln!(out, "consensus error at end: {err:.3e}").unwrap();
    writeln!(out, "end time: {}", m.end_time).unwrap();
    out
}

fn run_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let mut s = load_scenario(&a.scenario)?;
    if let Some(k) = a.max_candidates {
        s.max_candidates = Some(k as usize);
    }
    let init = find_initial_assignment(&s)?;
    ensure_dir(&a.out)?;
    write_json(&a.out, "schedules.json", &schedule_doc(&init))?;
    write_json(&a.out, "assignment.json", &assignment_doc(&s, &init))?;

    let cfg = SimConfig {
        horizon: a.horizon,
        max_iterations: a.max_iterations as usize,
        seed: a.seed.unwrap_or(s.seed),
        max_candidates: s.max_candidates,
    };
    log::info!(
        "simulating with seed {} up to t = {} or {} iterations",
        cfg.seed,
        cfg.horizon,
        cfg.max_iterations
    );
    let outcome = simulate(&s, init, &cfg);

    let path = a.out.join("events.jsonl");
    let file =
        fs::File::create(&path).map_err(io_err(format!("cannot write {}", path.display())))?;
    let mut w = BufWriter::new(file);
    for rec in &outcome.log {
        serde_json::to_writer(&mut w, rec).expect("plain data serializes");
        w.write_all(b"\n")
            .map_err(io_err("cannot write events.jsonl"))?;
    }
    w.flush().map_err(io_err("cannot write events.jsonl"))?;

    let m = metrics(&outcome.log);
    let stop = match &outcome.stop {
        StopReason::Horizon => "horizon",
        StopReason::Iterations => "iterations",
        StopReason::Deadlock(_) => "deadlock",
    };
    let text = summary(&m, Some(stop));
    write_file(&a.out, "costs.csv", &costs_csv(&m))?;
    write_file(&a.out, "summary.txt", &text)?;
    print!("{text}");

    if let StopReason::Deadlock(report) = &outcome.stop {
        return Err(CliError::Invariant(format!(
            "deadlock watchdog fired: every robot waits and no team is complete {:?}",
            report.waiting
        )));
    }
    check_invariants(&m)
}

fn check_invariants(m: &Metrics) -> Result<(), CliError> {
    if m.inconsistent_assignments {
        return Err(CliError::Invariant(
            "robots disagree on a team's communication point".into(),
        ));
    }
    if let Some(w) = m.cost_series.windows(2).find(|w| w[1].1 > w[0].1 + 1e-9) {
        return Err(CliError::Invariant(format!(
            "total cost increased from {} at iteration {} to {} at iteration {}",
            w[0].1, w[0].0, w[1].1, w[1].0
        )));
    }
    Ok(())
}

fn read_log(dir: &Path) -> Result<Vec<EventRecord>, CliError> {
    let path = dir.join("events.jsonl");
    let file = fs::File::open(&path).map_err(io_err(format!("cannot read {}", path.display())))?;
    let mut log = Vec::new();
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(format!("cannot read {}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        log.push(serde_json::from_str(&line).map_err(|source| CliError::Log {
            line: k + 1,
            source,
        })?);
    }
    Ok(log)
}

fn report(dir: &Path) -> Result<(), CliError> {
    let log = read_log(dir)?;
    let stop = log.iter().rev().find_map(|r| match r {
        EventRecord::Stop { reason, .. } => Some(reason.as_str()),
        _ => None,
    });
    let m = metrics(&log);
    print!("{}", summary(&m, stop));
    write_file(dir, "costs.csv", &costs_csv(&m))?;
    write_file(dir, "consensus.csv", &consensus_csv(&m))?;
    write_file(dir, "meetings.csv", &meetings_csv(&m))?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("INP_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate { scenario } => validate(scenario),
        Command::Schedule { scenario, out } => schedule(scenario, out.as_deref()),
        Command::Plan { scenario, out } => plan(scenario, out.as_deref()),
        Command::Simulate(a) => run_simulate(a),
        Command::Report { dir } => report(dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
