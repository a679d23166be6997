//! Seeded discrete-event execution of the robots' paths under the waiting
//! policy, with consensus, deadlock detection and run metrics.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::planner::{
    candidate_points, replan_on_communication, CommAssignment, Initialization, PathSegment,
};
use crate::ts::{Loc, RobotId, Scenario, TeamId, TeamStructure};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Stop before processing any event later than this time.
    pub horizon: f64,
    /// Stop once every robot has started this iteration.
    pub max_iterations: usize,
    pub seed: u64,
    pub max_candidates: Option<usize>,
}

impl SimConfig {
    pub fn for_scenario(s: &Scenario) -> Self {
        SimConfig {
            horizon: 10_000.0,
            max_iterations: 20,
            seed: s.seed,
            max_candidates: s.max_candidates,
        }
    }
}

// Tagged enums buffer their content, which turns integer map keys into
// strings before the field type sees them.
fn id_keys<'de, D, T>(d: D) -> Result<BTreeMap<usize, T>, D::Error>
where
    D: serde::Deserializer<'de>,
    T: Deserialize<'de>,
{
    BTreeMap::<String, T>::deserialize(d)?
        .into_iter()
        .map(|(k, v)| k.parse().map(|k| (k, v)).map_err(serde::de::Error::custom))
        .collect()
}

/// One line of the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventRecord {
    /// Initial consensus values.
    Start {
        time: f64,
        seed: u64,
        #[serde(deserialize_with = "id_keys")]
        values: BTreeMap<RobotId, f64>,
        spread: f64,
    },
    /// Robot starts executing `path^iteration`.
    Iteration {
        time: f64,
        robot: RobotId,
        iteration: usize,
        cost: f64,
        path: Vec<String>,
        kappa: Vec<(TeamId, usize)>,
        #[serde(deserialize_with = "id_keys")]
        assignment: BTreeMap<TeamId, String>,
    },
    Arrival {
        time: f64,
        robot: RobotId,
        location: String,
    },
    WaitStart {
        time: f64,
        robot: RobotId,
        team: TeamId,
        location: String,
    },
    Communication {
        time: f64,
        team: TeamId,
        location: String,
        participants: Vec<RobotId>,
    },
    Consensus {
        time: f64,
        team: TeamId,
        #[serde(deserialize_with = "id_keys")]
        values: BTreeMap<RobotId, f64>,
        spread: f64,
    },
    Replan {
        time: f64,
        team: TeamId,
        previous: String,
        chosen: String,
        costs: Vec<(String, Option<f64>)>,
    },
    Stop {
        time: f64,
        reason: String,
    },
}

impl EventRecord {
    pub fn time(&self) -> f64 {
        match self {
            EventRecord::Start { time, .. }
            | EventRecord::Iteration { time, .. }
            | EventRecord::Arrival { time, .. }
            | EventRecord::WaitStart { time, .. }
            | EventRecord::Communication { time, .. }
            | EventRecord::Consensus { time, .. }
            | EventRecord::Replan { time, .. }
            | EventRecord::Stop { time, .. } => *time,
        }
    }
}

/// Replaces every member's value by the team average.
pub fn consensus_update(members: &[RobotId], values: &mut BTreeMap<RobotId, f64>) {
    if members.is_empty() {
        return;
    }
    let avg = members.iter().map(|r| values[r]).sum::<f64>() / members.len() as f64;
    for r in members {
        values.insert(*r, avg);
    }
}

/// `max_i v_i − min_i v_i`.
pub fn spread(values: &BTreeMap<RobotId, f64>) -> f64 {
    let max = values.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.values().copied().fold(f64::INFINITY, f64::min);
    if values.is_empty() {
        0.0
    } else {
        max - min
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeadlockReport {
    /// Team each robot is waiting for.
    pub waiting: BTreeMap<RobotId, TeamId>,
}

/// Reports the stationary configuration: every robot waits and no team has
/// all of its members waiting for it.
pub fn deadlock_watchdog(
    ts: &TeamStructure,
    waiting: &BTreeMap<RobotId, Option<TeamId>>,
) -> Option<DeadlockReport> {
    if waiting.is_empty() || waiting.values().any(Option::is_none) {
        return None;
    }
    let complete = ts.teams.iter().any(|t| {
        t.members
            .iter()
            .all(|r| waiting.get(r) == Some(&Some(t.id)))
    });
    if complete {
        return None;
    }
    Some(DeadlockReport {
        waiting: waiting
            .iter()
            .map(|(&r, &m)| (r, m.expect("checked")))
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum StopReason {
    Horizon,
    Iterations,
    Deadlock(DeadlockReport),
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub log: Vec<EventRecord>,
    pub stop: StopReason,
    pub end_time: f64,
    /// `paths[robot][n]` is `path^n` of that robot.
    pub paths: BTreeMap<RobotId, Vec<PathSegment>>,
    pub assignment: CommAssignment,
    pub values: BTreeMap<RobotId, f64>,
}

/// Total order on event times; times are finite by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Time(f64);

impl Eq for Time {}

impl PartialOrd for Time {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Time {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

struct RobotState {
    path: PathSegment,
    pos: usize,
    /// Working path for the next iteration.
    next: Option<PathSegment>,
    /// Events served in the current iteration.
    served: usize,
    waiting: Option<TeamId>,
}

struct Sim<'a> {
    s: &'a Scenario,
    cfg: SimConfig,
    init: Initialization,
    rng: ChaCha8Rng,
    queue: BinaryHeap<Reverse<(Time, RobotId, u64)>>,
    seq: u64,
    robots: BTreeMap<RobotId, RobotState>,
    values: BTreeMap<RobotId, f64>,
    log: Vec<EventRecord>,
    history: BTreeMap<RobotId, Vec<PathSegment>>,
}

impl Sim<'_> {
    fn name(&self, l: Loc) -> String {
        self.s.workspace.name(l).to_string()
    }

    fn schedule_arrival(&mut self, robot: RobotId, at: f64) {
        self.seq += 1;
        self.queue.push(Reverse((Time(at), robot, self.seq)));
    }

    fn travel_time(&mut self) -> f64 {
        let tt = self.s.travel_time;
        self.rng.gen_range(tt.lo..=tt.hi)
    }

    fn record_iteration(&mut self, time: f64, robot: RobotId) {
        let st = &self.robots[&robot];
        let wts = &self.init.planners[&robot].wts;
        let teams = self.s.teams.teams_of(robot);
        let assignment = teams
            .iter()
            .map(|m| (*m, self.name(self.path_assignment(robot, *m))))
            .collect();
        let rec = EventRecord::Iteration {
            time,
            robot,
            iteration: st.path.iteration,
            cost: st.path.cost(wts),
            path: st.path.states.iter().map(|&q| self.name(q)).collect(),
            kappa: st.path.kappa.clone(),
            assignment,
        };
        self.history.entry(robot).or_default().push(st.path.clone());
        self.log.push(rec);
    }

    /// The point the robot's current path uses for team `m`.
    fn path_assignment(&self, robot: RobotId, m: TeamId) -> Loc {
        let p = &self.robots[&robot].path;
        let (_, k) = p
            .kappa
            .iter()
            .find(|(t, _)| *t == m)
            .expect("every team has a designated visit");
        p.states[*k]
    }

    fn arrive(&mut self, robot: RobotId, time: f64) {
        let (loc, team) = {
            let st = &self.robots[&robot];
            (st.path.states[st.pos], st.path.team_at(st.pos))
        };
        self.log.push(EventRecord::Arrival {
            time,
            robot,
            location: self.name(loc),
        });
        let Some(m) = team else {
            self.depart(robot, time);
            return;
        };
        self.robots.get_mut(&robot).expect("robot").waiting = Some(m);
        self.log.push(EventRecord::WaitStart {
            time,
            robot,
            team: m,
            location: self.name(loc),
        });
        let members = self.s.teams.team(m).members.clone();
        if members.iter().all(|r| self.robots[r].waiting == Some(m)) {
            self.communicate(m, loc, &members, time);
        }
    }

    fn communicate(&mut self, m: TeamId, loc: Loc, members: &[RobotId], time: f64) {
        self.log.push(EventRecord::Communication {
            time,
            team: m,
            location: self.name(loc),
            participants: members.to_vec(),
        });
        consensus_update(members, &mut self.values);
        self.log.push(EventRecord::Consensus {
            time,
            team: m,
            values: self.values.clone(),
            spread: spread(&self.values),
        });

        let candidates =
            candidate_points(&self.s.teams.team(m).comm_set, loc, self.cfg.max_candidates);
        let outcome = {
            let init = &mut self.init;
            let mut planners: Vec<_> = init
                .planners
                .iter_mut()
                .filter(|(r, _)| members.contains(r))
                .map(|(_, p)| p)
                .collect();
            replan_on_communication(m, &mut planners, &mut init.assignment, &candidates)
        };
        self.log.push(EventRecord::Replan {
            time,
            team: m,
            previous: self.name(outcome.previous),
            chosen: self.name(outcome.chosen),
            costs: outcome
                .costs
                .iter()
                .map(|&(j, c)| (self.name(j), c))
                .collect(),
        });

        for &r in members {
            let n = self.robots[&r].path.iteration;
            let working = self
                .init
                .planners
                .get_mut(&r)
                .expect("planner")
                .loop_path(&self.init.assignment, n + 1)
                .expect("the chosen point is feasible for every member");
            let st = self.robots.get_mut(&r).expect("robot");
            st.served += 1;
            st.next = Some(working);
            st.waiting = None;
        }
        for &r in members {
            self.depart(r, time);
        }
    }

    fn depart(&mut self, robot: RobotId, time: f64) {
        let st = self.robots.get_mut(&robot).expect("robot");
        if st.pos + 1 < st.path.states.len() {
            st.pos += 1;
        } else {
            let total = st.path.kappa.len();
            assert_eq!(
                st.served, total,
                "robot {robot} finished a path with events pending"
            );
            let next = st
                .next
                .take()
                .expect("working path is final after the last event");
            st.path = next;
            st.pos = 0;
            st.served = 0;
            self.record_iteration(time, robot);
        }
        let dt = self.travel_time();
        self.schedule_arrival(robot, time + dt);
    }

    fn min_iteration(&self) -> usize {
        self.robots
            .values()
            .map(|st| st.path.iteration)
            .min()
            .unwrap_or(0)
    }

    fn run(mut self) -> SimOutcome {
        self.log.push(EventRecord::Start {
            time: 0.0,
            seed: self.cfg.seed,
            values: self.values.clone(),
            spread: spread(&self.values),
        });
        for r in self.s.robot_ids() {
            self.record_iteration(0.0, r);
            self.schedule_arrival(r, 0.0);
        }
        let mut now = 0.0;
        let stop = loop {
            if self.min_iteration() >= self.cfg.max_iterations {
                break StopReason::Iterations;
            }
            let Some(Reverse((Time(t), robot, _))) = self.queue.pop() else {
                let waiting = self.robots.iter().map(|(&r, st)| (r, st.waiting)).collect();
                match deadlock_watchdog(&self.s.teams, &waiting) {
                    Some(report) => break StopReason::Deadlock(report),
                    None => unreachable!("empty queue with a robot in motion"),
                }
            };
            if t > self.cfg.horizon {
                break StopReason::Horizon;
            }
            now = t;
            self.arrive(robot, t);
        };
        let reason = match &stop {
            StopReason::Horizon => "horizon".to_string(),
            StopReason::Iterations => "iterations".to_string(),
            StopReason::Deadlock(_) => "deadlock".to_string(),
        };
        self.log.push(EventRecord::Stop { time: now, reason });
        SimOutcome {
            log: self.log,
            stop,
            end_time: now,
            paths: self.history,
            assignment: self.init.assignment,
            values: self.values,
        }
    }
}

/// Runs the asynchronous execution from an initialization.
///
/// Each robot walks its current path hop by hop; every hop, including
/// staying in place, takes a travel time drawn uniformly from the scenario's
/// range at departure. At a designated communication position the robot
/// waits until its whole team is present; the last arrival triggers the
/// communication, the consensus step and the team's replanning, after which
/// all members leave in id order. Ties between simultaneous arrivals are
/// broken by robot id.
pub fn simulate(s: &Scenario, init: Initialization, cfg: &SimConfig) -> SimOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let values = s
        .robot_ids()
        .into_iter()
        .map(|r| (r, rng.gen_range(0.0..100.0)))
        .collect();
    let robots = init
        .paths
        .iter()
        .map(|(&r, p)| {
            (
                r,
                RobotState {
                    path: p.clone(),
                    pos: 0,
                    next: None,
                    served: 0,
                    waiting: None,
                },
            )
        })
        .collect();
    Sim {
        s,
        cfg: *cfg,
        init,
        rng,
        queue: BinaryHeap::new(),
        seq: 0,
        robots,
        values,
        log: Vec::new(),
        history: BTreeMap::new(),
    }
    .run()
}

/// Global assignment by location id, as recorded in the log.
pub type NamedAssignment = BTreeMap<TeamId, String>;

/// First recurrence in a sequence of global assignments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Cycle {
    /// `path^P … path^C` repeats.
    pub p: usize,
    pub c: usize,
    /// Whether `path^{C+1}` equals `path^P` for every robot; `None` when
    /// `path^{C+1}` was not reached.
    pub verified: Option<bool>,
}

/// Finds the first `C` whose assignment already occurred at some `P − 1 < C`
/// and checks `path^{C+1} = path^P`. `paths[n]` maps robot to the states of
/// `path^n`.
pub fn detect_cycle<A: PartialEq>(
    assignments: &[A],
    paths: &[BTreeMap<RobotId, Vec<String>>],
) -> Option<Cycle> {
    for c in 1..assignments.len() {
        if let Some(prev) = (0..c).find(|&k| assignments[k] == assignments[c]) {
            let p = prev + 1;
            let verified = paths.get(c + 1).map(|later| paths.get(p) == Some(later));
            return Some(Cycle { p, c, verified });
        }
    }
    None
}

/// Data series summarising a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub robots: Vec<RobotId>,
    /// `(n, Σ_i J(path_i^n))` for every iteration started by all robots.
    pub cost_series: Vec<(usize, f64)>,
    /// Global assignment behind `path^n`, for the same iterations.
    pub assignments: Vec<NamedAssignment>,
    /// `paths[n][robot]`, for the same iterations.
    pub paths: Vec<BTreeMap<RobotId, Vec<String>>>,
    pub cycle: Option<Cycle>,
    /// Communication times per team that communicated at least once.
    pub team_events: BTreeMap<TeamId, Vec<f64>>,
    /// Gaps between consecutive communications per team.
    pub team_gaps: BTreeMap<TeamId, Vec<f64>>,
    /// `(n, t)`: earliest instant at which every robot executes iteration
    /// `n`, or `None` if no such instant exists.
    pub sync_witnesses: Vec<(usize, Option<f64>)>,
    /// `(time, spread)` initially and after every consensus step.
    pub consensus: Vec<(f64, f64)>,
    /// Total time each robot spent waiting for its teammates.
    pub waiting_time: BTreeMap<RobotId, f64>,
    /// Assignments recorded by different robots for the same team and
    /// iteration disagreed.
    pub inconsistent_assignments: bool,
    pub end_time: f64,
}

/// Computes run metrics from an event log.
pub fn metrics(log: &[EventRecord]) -> Metrics {
    let mut starts: BTreeMap<RobotId, Vec<f64>> = BTreeMap::new();
    let mut costs: BTreeMap<usize, BTreeMap<RobotId, f64>> = BTreeMap::new();
    let mut assigns: BTreeMap<usize, NamedAssignment> = BTreeMap::new();
    let mut paths: BTreeMap<usize, BTreeMap<RobotId, Vec<String>>> = BTreeMap::new();
    let mut team_events: BTreeMap<TeamId, Vec<f64>> = BTreeMap::new();
    let mut consensus = Vec::new();
    let mut wait_since: BTreeMap<RobotId, f64> = BTreeMap::new();
    let mut waiting_time: BTreeMap<RobotId, f64> = BTreeMap::new();
    let mut inconsistent_assignments = false;
    let mut end_time = 0.0;
    for rec in log {
        end_time = rec.time();
        match rec {
            EventRecord::Iteration {
                time,
                robot,
                iteration,
                cost,
                path,
                assignment,
                ..
            } => {
                starts.entry(*robot).or_default().push(*time);
                waiting_time.entry(*robot).or_insert(0.0);
                costs.entry(*iteration).or_default().insert(*robot, *cost);
                let a = assigns.entry(*iteration).or_default();
                for (m, l) in assignment {
                    if let Some(old) = a.insert(*m, l.clone()) {
                        inconsistent_assignments |= old != *l;
                    }
                }
                paths
                    .entry(*iteration)
                    .or_default()
                    .insert(*robot, path.clone());
            }
            EventRecord::WaitStart { time, robot, .. } => {
                wait_since.insert(*robot, *time);
            }
            EventRecord::Communication {
                time,
                team,
                participants,
                ..
            } => {
                team_events.entry(*team).or_default().push(*time);
                for r in participants {
                    if let Some(t0) = wait_since.remove(r) {
                        *waiting_time.entry(*r).or_default() += time - t0;
                    }
                }
            }
            EventRecord::Start { time, spread, .. }
            | EventRecord::Consensus { time, spread, .. } => consensus.push((*time, *spread)),
            _ => {}
        }
    }
    let robots: Vec<RobotId> = starts.keys().copied().collect();
    let complete: Vec<usize> = (0..)
        .take_while(|n| costs.get(n).is_some_and(|m| m.len() == robots.len()))
        .collect();
    let cost_series = complete
        .iter()
        .map(|&n| (n, costs[&n].values().sum()))
        .collect();
    let assignments: Vec<NamedAssignment> = complete.iter().map(|n| assigns[n].clone()).collect();
    let paths: Vec<BTreeMap<RobotId, Vec<String>>> =
        complete.iter().map(|n| paths[n].clone()).collect();
    let cycle = detect_cycle(&assignments, &paths);
    let team_gaps = team_events
        .iter()
        .map(|(&m, ts)| (m, ts.windows(2).map(|w| w[1] - w[0]).collect()))
        .collect();
    let sync_witnesses = complete
        .iter()
        .map(|&n| {
            let lo = robots
                .iter()
                .map(|r| starts[r][n])
                .fold(f64::NEG_INFINITY, f64::max);
            let hi = robots
                .iter()
                .map(|r| starts[r].get(n + 1).copied().unwrap_or(f64::INFINITY))
                .fold(f64::INFINITY, f64::min);
            (n, (lo < hi).then_some(lo))
        })
        .collect();
    Metrics {
        robots,
        cost_series,
        assignments,
        paths,
        cycle,
        team_events,
        team_gaps,
        sync_witnesses,
        consensus,
        waiting_time,
        inconsistent_assignments,
        end_time,
    }
}
