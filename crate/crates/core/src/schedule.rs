//! Team membership graph and conflict-free communication schedules.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::ts::{RobotId, ScenarioError, TeamId, TeamStructure};

/// Graph over teams with an edge wherever two teams share a robot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TeamGraph {
    adj: BTreeMap<TeamId, BTreeSet<TeamId>>,
}

impl TeamGraph {
    pub fn nodes(&self) -> impl Iterator<Item = TeamId> + '_ {
        self.adj.keys().copied()
    }

    pub fn neighbors(&self, m: TeamId) -> &BTreeSet<TeamId> {
        &self.adj[&m]
    }

    pub fn degree(&self, m: TeamId) -> usize {
        self.adj[&m].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.values().map(BTreeSet::len).max().unwrap_or(0)
    }

    pub fn adjacent(&self, m: TeamId, n: TeamId) -> bool {
        self.adj.get(&m).is_some_and(|s| s.contains(&n))
    }

    /// Schedule length `max degree + 1`.
    pub fn schedule_len(&self) -> usize {
        self.max_degree() + 1
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<TeamId>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for start in self.nodes() {
            if !seen.insert(start) {
                continue;
            }
            let mut comp = vec![start];
            let mut stack = vec![start];
            while let Some(m) = stack.pop() {
                for &n in &self.adj[&m] {
                    if seen.insert(n) {
                        comp.push(n);
                        stack.push(n);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

/// Builds the team membership graph, failing when it is disconnected.
pub fn build_team_graph(ts: &TeamStructure) -> Result<TeamGraph, ScenarioError> {
    let mut adj: BTreeMap<TeamId, BTreeSet<TeamId>> =
        ts.teams.iter().map(|t| (t.id, BTreeSet::new())).collect();
    for (x, a) in ts.teams.iter().enumerate() {
        for b in &ts.teams[x + 1..] {
            if a.members.iter().any(|r| b.members.contains(r)) {
                adj.get_mut(&a.id).expect("team").insert(b.id);
                adj.get_mut(&b.id).expect("team").insert(a.id);
            }
        }
    }
    let g = TeamGraph { adj };
    let comps = g.components();
    if comps.len() > 1 {
        return Err(ScenarioError::Disconnected(comps));
    }
    Ok(g)
}

/// Walk over the team graph in which every team appears and consecutive
/// entries are adjacent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TeamSequence(pub Vec<TeamId>);

impl TeamSequence {
    /// Checks both defining conditions against `g`.
    pub fn is_valid(&self, g: &TeamGraph) -> bool {
        let covered: BTreeSet<TeamId> = self.0.iter().copied().collect();
        g.nodes().all(|m| covered.contains(&m)) && self.0.windows(2).all(|w| g.adjacent(w[0], w[1]))
    }
}

/// Depth-first walk from `start`, visiting neighbours in ascending order and
/// re-entering the parent when backtracking. Stops as soon as every team has
/// been visited.
pub fn build_sequence(g: &TeamGraph, start: TeamId) -> TeamSequence {
    let total = g.adj.len();
    let mut visited = BTreeSet::from([start]);
    let mut seq = vec![start];
    let mut stack = vec![start];
    while visited.len() < total {
        let Some(&top) = stack.last() else { break };
        match g.neighbors(top).iter().find(|n| !visited.contains(n)) {
            Some(&n) => {
                visited.insert(n);
                seq.push(n);
                stack.push(n);
            }
            None => {
                stack.pop();
                if let Some(&parent) = stack.last() {
                    seq.push(parent);
                }
            }
        }
    }
    TeamSequence(seq)
}

/// Finite sequence `s_i`; `None` entries are idle (`X`). The schedule is its
/// infinite repetition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Schedule {
    pub robot: RobotId,
    pub sequence: Vec<Option<TeamId>>,
}

impl Schedule {
    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    /// Zero-based index of the event for team `m`.
    pub fn index_of(&self, m: TeamId) -> Option<usize> {
        self.sequence.iter().position(|&e| e == Some(m))
    }

    /// Teams in the order the robot meets them within one period.
    pub fn events(&self) -> Vec<TeamId> {
        self.sequence.iter().flatten().copied().collect()
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let entries: Vec<String> = self
            .sequence
            .iter()
            .map(|e| e.map_or_else(|| "X".to_string(), |m| m.to_string()))
            .collect();
        write!(f, "robot {}: [{}]^ω", self.robot, entries.join(", "))
    }
}

/// Runs the distributed schedule construction sequentially over `seq`.
///
/// Team members construct their sequences the first time their team comes up,
/// in ascending robot id. A robot first copies the index of every event that
/// a constructed teammate already fixed, then places each remaining event at
/// the lowest index that is free in its own sequence and not used, in any
/// constructed sequence, by a team adjacent to the event's team.
///
/// The adjacency check deliberately looks at every sequence built so far
/// (they are all forwarded along the walk), not only at those of the robot's
/// own neighbours: the narrower check lets two adjacent teams pick the same
/// index through disjoint robots, and a robot in both teams is then
/// double-booked.
///
/// Panics if an event cannot be placed, which the length bound rules out.
pub fn construct_schedules(
    ts: &TeamStructure,
    g: &TeamGraph,
    seq: &TeamSequence,
) -> BTreeMap<RobotId, Schedule> {
    let len = g.schedule_len();
    let mut built: BTreeMap<RobotId, Schedule> = BTreeMap::new();
    for &m in &seq.0 {
        for &i in &ts.team(m).members {
            if built.contains_key(&i) {
                continue;
            }
            let s = construct_one(ts, g, &built, i, len);
            built.insert(i, s);
        }
    }
    built
}

fn construct_one(
    ts: &TeamStructure,
    g: &TeamGraph,
    built: &BTreeMap<RobotId, Schedule>,
    i: RobotId,
    len: usize,
) -> Schedule {
    let mut s = vec![None; len];
    let mut pending = Vec::new();
    for gt in ts.teams_of(i) {
        let fixed = ts
            .team(gt)
            .members
            .iter()
            .find_map(|b| built.get(b)?.index_of(gt));
        match fixed {
            Some(k) => {
                assert!(
                    s[k].is_none(),
                    "robot {i}: first rule puts two events at index {k}"
                );
                s[k] = Some(gt);
            }
            None => pending.push(gt),
        }
    }
    for gt in pending {
        let k = (0..len)
            .find(|&k| {
                s[k].is_none()
                    && built
                        .values()
                        .all(|b| b.sequence[k].map_or(true, |h| !g.adjacent(gt, h)))
            })
            .unwrap_or_else(|| {
                panic!("robot {i}: no admissible index for team {gt} within length {len}")
            });
        s[k] = Some(gt);
    }
    Schedule {
        robot: i,
        sequence: s,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    MissingSchedule {
        robot: RobotId,
    },
    WrongLength {
        robot: RobotId,
        len: usize,
        expected: usize,
    },
    ForeignEvent {
        robot: RobotId,
        team: TeamId,
    },
    MissingEvent {
        robot: RobotId,
        team: TeamId,
    },
    DuplicateEvent {
        robot: RobotId,
        team: TeamId,
    },
    Inconsistent {
        team: TeamId,
        robots: (RobotId, RobotId),
        indices: (usize, usize),
    },
    NeighborClash {
        robots: (RobotId, RobotId),
        teams: (TeamId, TeamId),
        index: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingSchedule { robot } => write!(f, "robot {robot} has no schedule"),
            Violation::WrongLength {
                robot,
                len,
                expected,
            } => {
                write!(f, "robot {robot}: length {len}, expected {expected}")
            }
            Violation::ForeignEvent { robot, team } => {
                write!(f, "robot {robot}: event for team {team} it is not in")
            }
            Violation::MissingEvent { robot, team } => {
                write!(f, "robot {robot}: no event for team {team}")
            }
            Violation::DuplicateEvent { robot, team } => {
                write!(f, "robot {robot}: team {team} appears more than once")
            }
            Violation::Inconsistent {
                team,
                robots,
                indices,
            } => write!(
                f,
                "team {team}: robot {} meets at index {} but robot {} at index {}",
                robots.0, indices.0, robots.1, indices.1
            ),
            Violation::NeighborClash {
                robots,
                teams,
                index,
            } => write!(
                f,
                "robots {} and {}: adjacent teams {} and {} share index {index}",
                robots.0, robots.1, teams.0, teams.1
            ),
        }
    }
}

/// Checks length, exactly-once, team-consistency and neighbour-separation.
pub fn verify_schedules(
    schedules: &BTreeMap<RobotId, Schedule>,
    ts: &TeamStructure,
    g: &TeamGraph,
) -> Vec<Violation> {
    let expected = g.schedule_len();
    let mut out = Vec::new();
    for robot in ts.robots() {
        let Some(s) = schedules.get(&robot) else {
            out.push(Violation::MissingSchedule { robot });
            continue;
        };
        if s.len() != expected {
            out.push(Violation::WrongLength {
                robot,
                len: s.len(),
                expected,
            });
        }
        let mine = ts.teams_of(robot);
        let mut counts: BTreeMap<TeamId, usize> = BTreeMap::new();
        for &team in s.sequence.iter().flatten() {
            *counts.entry(team).or_default() += 1;
        }
        for (&team, &c) in &counts {
            if !mine.contains(&team) {
                out.push(Violation::ForeignEvent { robot, team });
            } else if c > 1 {
                out.push(Violation::DuplicateEvent { robot, team });
            }
        }
        for &team in &mine {
            if !counts.contains_key(&team) {
                out.push(Violation::MissingEvent { robot, team });
            }
        }
    }
    for team in &ts.teams {
        let idx: Vec<(RobotId, usize)> = team
            .members
            .iter()
            .filter_map(|&r| Some((r, schedules.get(&r)?.index_of(team.id)?)))
            .collect();
        for w in idx.windows(2) {
            if w[0].1 != w[1].1 {
                out.push(Violation::Inconsistent {
                    team: team.id,
                    robots: (w[0].0, w[1].0),
                    indices: (w[0].1, w[1].1),
                });
            }
        }
    }
    for i in ts.robots() {
        let Some(si) = schedules.get(&i) else {
            continue;
        };
        for j in ts.neighbors(i) {
            let Some(sj) = schedules.get(&j) else {
                continue;
            };
            if j < i {
                continue;
            }
            for (k, (a, b)) in si.sequence.iter().zip(&sj.sequence).enumerate() {
                if let (Some(a), Some(b)) = (a, b) {
                    if a != b && g.adjacent(*a, *b) {
                        out.push(Violation::NeighborClash {
                            robots: (i, j),
                            teams: (*a, *b),
                            index: k,
                        });
                    }
                }
            }
        }
    }
    out
}
