//! Workspace, weighted transition systems, teams and scenario files.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ltl::{parse_task, Formula, LtlError};
use crate::scalar::Weight;
use crate::schedule::build_team_graph;

pub type RobotId = usize;
pub type TeamId = usize;
/// Index of a location in [`Workspace::locations`].
pub type Loc = usize;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed scenario document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported scenario format {0}, expected 1")]
    Format(u32),
    #[error("scenario has no {0}")]
    Empty(&'static str),
    #[error("location id {0:?} is not a valid proposition name")]
    BadLocationId(String),
    #[error("duplicate {kind} id {id}")]
    Duplicate { kind: &'static str, id: String },
    #[error("unknown location {id:?} in {context}")]
    UnknownLocation { id: String, context: String },
    #[error("unknown robot {robot} in team {team}")]
    UnknownRobot { robot: RobotId, team: TeamId },
    #[error("edge {from} -- {to} has invalid length {length}")]
    BadEdge {
        from: String,
        to: String,
        length: f64,
    },
    #[error("team {0} has no members")]
    EmptyTeam(TeamId),
    #[error("team {0} has an empty communication set")]
    EmptyCommSet(TeamId),
    #[error("location {location:?} in the communication set of team {team} is not a communication point")]
    NotCommPoint { location: String, team: TeamId },
    #[error("robot {0} belongs to no team")]
    Unassigned(RobotId),
    #[error("task of robot {robot}: {source}")]
    Task { robot: RobotId, source: LtlError },
    #[error("task of robot {robot} mentions {prop:?}, which is not a location")]
    UnknownProposition { robot: RobotId, prop: String },
    #[error("alpha must lie in [0, 1], got {0}")]
    Alpha(f64),
    #[error("travel time bounds must satisfy 0 <= lo <= hi and hi > 0, got [{lo}, {hi}]")]
    TravelTime { lo: f64, hi: f64 },
    #[error("team membership graph is disconnected; components: {}", fmt_components(.0))]
    Disconnected(Vec<Vec<TeamId>>),
}

fn fmt_components(cs: &[Vec<TeamId>]) -> String {
    cs.iter()
        .map(|c| {
            format!(
                "{{{}}}",
                c.iter()
                    .map(|t| format!("T{t}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            )
        })
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Location {
    pub id: String,
    pub coords: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub a: Loc,
    pub b: Loc,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Workspace {
    pub locations: Vec<Location>,
    pub edges: Vec<Edge>,
    pub comm_points: Vec<Loc>,
}

impl Workspace {
    pub fn loc(&self, id: &str) -> Option<Loc> {
        self.locations.iter().position(|l| l.id == id)
    }

    pub fn name(&self, loc: Loc) -> &str {
        &self.locations[loc].id
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Robot {
    pub id: RobotId,
    pub initial: Loc,
    pub task: Formula,
    /// The task as written in the scenario file.
    pub task_text: String,
    /// Workspace edges this robot cannot traverse.
    pub blocked_edges: Vec<(Loc, Loc)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Team {
    pub id: TeamId,
    /// Sorted ascending.
    pub members: Vec<RobotId>,
    /// Candidate communication locations, in declaration order.
    pub comm_set: Vec<Loc>,
}

/// Teams `T_m` with their communication sets `C_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct TeamStructure {
    /// Sorted by id.
    pub teams: Vec<Team>,
}

impl TeamStructure {
    pub fn team(&self, id: TeamId) -> &Team {
        self.teams
            .iter()
            .find(|t| t.id == id)
            .unwrap_or_else(|| panic!("unknown team {id}"))
    }

    pub fn team_ids(&self) -> Vec<TeamId> {
        self.teams.iter().map(|t| t.id).collect()
    }

    /// Every robot that appears in some team, ascending.
    pub fn robots(&self) -> Vec<RobotId> {
        let all: BTreeSet<RobotId> = self
            .teams
            .iter()
            .flat_map(|t| t.members.iter().copied())
            .collect();
        all.into_iter().collect()
    }

    /// `M_i`: teams containing robot `i`, ascending.
    pub fn teams_of(&self, robot: RobotId) -> Vec<TeamId> {
        self.teams
            .iter()
            .filter(|t| t.members.contains(&robot))
            .map(|t| t.id)
            .collect()
    }

    /// `N_i`: robots sharing at least one team with `i`, excluding `i`.
    pub fn neighbors(&self, robot: RobotId) -> Vec<RobotId> {
        let set: BTreeSet<RobotId> = self
            .teams
            .iter()
            .filter(|t| t.members.contains(&robot))
            .flat_map(|t| t.members.iter().copied())
            .filter(|&r| r != robot)
            .collect();
        set.into_iter().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TravelTime {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub workspace: Workspace,
    /// Sorted by id.
    pub robots: Vec<Robot>,
    pub teams: TeamStructure,
    pub alpha: f64,
    pub travel_time: TravelTime,
    pub seed: u64,
    /// Proximity threshold; informational only.
    pub epsilon: Option<f64>,
    pub max_candidates: Option<usize>,
}

impl Scenario {
    pub fn robot(&self, id: RobotId) -> &Robot {
        self.robots
            .iter()
            .find(|r| r.id == id)
            .unwrap_or_else(|| panic!("unknown robot {id}"))
    }

    pub fn robot_ids(&self) -> Vec<RobotId> {
        self.robots.iter().map(|r| r.id).collect()
    }

    pub fn from_json(text: &str) -> Result<Scenario, ScenarioError> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        file.validate()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ScenarioFile::from(self)).expect("scenario serializes")
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    Scenario::from_json(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    format: u32,
    locations: Vec<LocationSpec>,
    edges: Vec<EdgeSpec>,
    comm_points: Vec<String>,
    robots: Vec<RobotSpec>,
    teams: Vec<TeamSpec>,
    alpha: f64,
    travel_time: TravelTime,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_candidates: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LocationSpec {
    id: String,
    #[serde(default)]
    coords: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeSpec {
    from: String,
    to: String,
    length: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotSpec {
    id: RobotId,
    initial: String,
    task: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    blocked_edges: Vec<(String, String)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TeamSpec {
    id: TeamId,
    members: Vec<RobotId>,
    comm_set: Vec<String>,
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !matches!(s, "true" | "false" | "U" | "R" | "X" | "F" | "G")
}

impl ScenarioFile {
    fn validate(self) -> Result<Scenario, ScenarioError> {
        if self.format != 1 {
            return Err(ScenarioError::Format(self.format));
        }
        if self.locations.is_empty() {
            return Err(ScenarioError::Empty("locations"));
        }
        if self.robots.is_empty() {
            return Err(ScenarioError::Empty("robots"));
        }
        if self.teams.is_empty() {
            return Err(ScenarioError::Empty("teams"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(ScenarioError::Alpha(self.alpha));
        }
        let TravelTime { lo, hi } = self.travel_time;
        if !(lo >= 0.0 && lo <= hi && hi > 0.0 && hi.is_finite()) {
            return Err(ScenarioError::TravelTime { lo, hi });
        }

        let mut locations = Vec::with_capacity(self.locations.len());
        let mut index = BTreeMap::new();
        for l in self.locations {
            if !is_identifier(&l.id) {
                return Err(ScenarioError::BadLocationId(l.id));
            }
            if index.insert(l.id.clone(), locations.len()).is_some() {
                return Err(ScenarioError::Duplicate {
                    kind: "location",
                    id: l.id,
                });
            }
            locations.push(Location {
                id: l.id,
                coords: l.coords,
            });
        }
        let lookup = |id: &str, context: String| -> Result<Loc, ScenarioError> {
            index
                .get(id)
                .copied()
                .ok_or_else(|| ScenarioError::UnknownLocation {
                    id: id.to_string(),
                    context,
                })
        };

        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            let a = lookup(&e.from, "edges".into())?;
            let b = lookup(&e.to, "edges".into())?;
            if !(e.length > 0.0 && e.length.is_finite()) || a == b {
                return Err(ScenarioError::BadEdge {
                    from: e.from.clone(),
                    to: e.to.clone(),
                    length: e.length,
                });
            }
            edges.push(Edge {
                a,
                b,
                length: e.length,
            });
        }

        let mut comm_points = Vec::new();
        for c in &self.comm_points {
            let loc = lookup(c, "comm_points".into())?;
            if comm_points.contains(&loc) {
                return Err(ScenarioError::Duplicate {
                    kind: "comm point",
                    id: c.clone(),
                });
            }
            comm_points.push(loc);
        }

        let mut robots = Vec::with_capacity(self.robots.len());
        for r in self.robots {
            if robots.iter().any(|x: &Robot| x.id == r.id) {
                return Err(ScenarioError::Duplicate {
                    kind: "robot",
                    id: r.id.to_string(),
                });
            }
            let initial = lookup(&r.initial, format!("initial location of robot {}", r.id))?;
            let task = parse_task(&r.task).map_err(|source| ScenarioError::Task {
                robot: r.id,
                source,
            })?;
            if let Some(prop) = task.props().into_iter().find(|p| !index.contains_key(p)) {
                return Err(ScenarioError::UnknownProposition { robot: r.id, prop });
            }
            let blocked_edges = r
                .blocked_edges
                .iter()
                .map(|(a, b)| {
                    let ctx = || format!("blocked edges of robot {}", r.id);
                    Ok((lookup(a, ctx())?, lookup(b, ctx())?))
                })
                .collect::<Result<Vec<_>, ScenarioError>>()?;
            robots.push(Robot {
                id: r.id,
                initial,
                task,
                task_text: r.task,
                blocked_edges,
            });
        }
        robots.sort_by_key(|r| r.id);

        let mut teams: Vec<Team> = Vec::with_capacity(self.teams.len());
        for t in self.teams {
            if teams.iter().any(|x| x.id == t.id) {
                return Err(ScenarioError::Duplicate {
                    kind: "team",
                    id: t.id.to_string(),
                });
            }
            if t.members.is_empty() {
                return Err(ScenarioError::EmptyTeam(t.id));
            }
            if t.comm_set.is_empty() {
                return Err(ScenarioError::EmptyCommSet(t.id));
            }
            let mut members = t.members.clone();
            members.sort_unstable();
            members.dedup();
            if let Some(&robot) = members.iter().find(|&&m| robots.iter().all(|r| r.id != m)) {
                return Err(ScenarioError::UnknownRobot { robot, team: t.id });
            }
            let mut comm_set = Vec::new();
            for c in &t.comm_set {
                let loc = lookup(c, format!("communication set of team {}", t.id))?;
                if !comm_points.contains(&loc) {
                    return Err(ScenarioError::NotCommPoint {
                        location: c.clone(),
                        team: t.id,
                    });
                }
                if !comm_set.contains(&loc) {
                    comm_set.push(loc);
                }
            }
            teams.push(Team {
                id: t.id,
                members,
                comm_set,
            });
        }
        teams.sort_by_key(|t| t.id);
        let teams = TeamStructure { teams };
        if let Some(r) = robots.iter().find(|r| teams.teams_of(r.id).is_empty()) {
            return Err(ScenarioError::Unassigned(r.id));
        }
        build_team_graph(&teams)?;

        Ok(Scenario {
            workspace: Workspace {
                locations,
                edges,
                comm_points,
            },
            robots,
            teams,
            alpha: self.alpha,
            travel_time: self.travel_time,
            seed: self.seed,
            epsilon: self.epsilon,
            max_candidates: self.max_candidates,
        })
    }
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        let ws = &s.workspace;
        let name = |l: Loc| ws.locations[l].id.clone();
        ScenarioFile {
            format: 1,
            locations: ws
                .locations
                .iter()
                .map(|l| LocationSpec {
                    id: l.id.clone(),
                    coords: l.coords.clone(),
                })
                .collect(),
            edges: ws
                .edges
                .iter()
                .map(|e| EdgeSpec {
                    from: name(e.a),
                    to: name(e.b),
                    length: e.length,
                })
                .collect(),
            comm_points: ws.comm_points.iter().map(|&c| name(c)).collect(),
            robots: s
                .robots
                .iter()
                .map(|r| RobotSpec {
                    id: r.id,
                    initial: name(r.initial),
                    task: r.task_text.clone(),
                    blocked_edges: r
                        .blocked_edges
                        .iter()
                        .map(|&(a, b)| (name(a), name(b)))
                        .collect(),
                })
                .collect(),
            teams: s
                .teams
                .teams
                .iter()
                .map(|t| TeamSpec {
                    id: t.id,
                    members: t.members.clone(),
                    comm_set: t.comm_set.iter().map(|&c| name(c)).collect(),
                })
                .collect(),
            alpha: s.alpha,
            travel_time: s.travel_time,
            seed: s.seed,
            epsilon: s.epsilon,
            max_candidates: s.max_candidates,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no transition {from} -> {to}")]
pub struct InvalidTransition {
    pub from: usize,
    pub to: usize,
}

/// Weighted transition system of one robot.
///
/// States are workspace locations; state `q` is labelled with the single
/// proposition `labels[q]`. Every state carries a zero-weight self-loop so a
/// robot can wait where it is.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTransitionSystem<W> {
    pub robot: RobotId,
    labels: Vec<String>,
    initial: usize,
    /// Outgoing transitions per state, sorted by target.
    adj: Vec<Vec<(usize, W)>>,
}

impl<W: Weight> WeightedTransitionSystem<W> {
    pub fn new(robot: RobotId, labels: Vec<String>, initial: usize) -> Self {
        assert!(initial < labels.len(), "initial state out of range");
        let adj = (0..labels.len()).map(|q| vec![(q, W::zero())]).collect();
        WeightedTransitionSystem {
            robot,
            labels,
            initial,
            adj,
        }
    }

    /// Adds or overwrites the directed transition `from -> to`.
    pub fn add_transition(&mut self, from: usize, to: usize, weight: W) {
        assert!(to < self.labels.len());
        let row = &mut self.adj[from];
        match row.binary_search_by_key(&to, |&(t, _)| t) {
            Ok(k) => row[k].1 = weight,
            Err(k) => row.insert(k, (to, weight)),
        }
    }

    /// Adds both directions of an undirected edge.
    pub fn add_edge(&mut self, a: usize, b: usize, weight: W) {
        self.add_transition(a, b, weight);
        self.add_transition(b, a, weight);
    }

    pub fn num_states(&self) -> usize {
        self.labels.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn label(&self, q: usize) -> &str {
        &self.labels[q]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn state_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn successors(&self, q: usize) -> &[(usize, W)] {
        &self.adj[q]
    }

    pub fn weight(&self, from: usize, to: usize) -> Option<W> {
        let row = &self.adj[from];
        row.binary_search_by_key(&to, |&(t, _)| t)
            .ok()
            .map(|k| row[k].1)
    }

    /// `J(p)`: sum of weights over consecutive pairs of `path`.
    pub fn path_cost(&self, path: &[usize]) -> Result<W, InvalidTransition> {
        path.windows(2).try_fold(W::zero(), |acc, w| {
            self.weight(w[0], w[1])
                .map(|x| acc + x)
                .ok_or(InvalidTransition {
                    from: w[0],
                    to: w[1],
                })
        })
    }
}

/// Builds robot `i`'s transition system from the scenario workspace. State
/// indices coincide with location indices.
pub fn build_wts(s: &Scenario, robot: RobotId) -> WeightedTransitionSystem<f64> {
    let r = s.robot(robot);
    let labels = s.workspace.locations.iter().map(|l| l.id.clone()).collect();
    let mut wts = WeightedTransitionSystem::new(robot, labels, r.initial);
    for e in &s.workspace.edges {
        let blocked = r
            .blocked_edges
            .iter()
            .any(|&(a, b)| (a, b) == (e.a, e.b) || (b, a) == (e.a, e.b));
        if !blocked {
            wts.add_edge(e.a, e.b, e.length);
        }
    }
    wts
}
