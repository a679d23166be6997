//! Initial communication-point assignment, initial paths, and the online
//! per-team replanning step.
//!
//! Every robot plans against `ψ_i = φ_i ∧ ⋀_m □◊ v_{j(m)}`. The automaton for
//! `ψ_i` is not re-translated for every assignment. Instead the automaton for
//! `φ_i` runs in lockstep with a counter `k ∈ 0..=K`, `K = |M_i|`, that waits
//! for the assigned points in the order of the robot's schedule:
//!
//! * at `k < K`, a letter containing the `k`-th point moves to `k + 1`;
//! * at `k = K`, the counter resets to 0 as soon as the task component is
//!   accepting;
//! * accepting states are (task accepting, `k = K`).
//!
//! Visiting every point infinitely often is the same as cycling through them
//! in a fixed order infinitely often, so the language is that of `ψ_i`. The
//! state space does not depend on which points are assigned, so the anchor
//! chosen at initialization keeps its meaning across replans, and every
//! suffix loop around it meets the points in schedule order.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::ltl::{translate_over, Formula, Guard, Literal, Nba};
use crate::product::{
    build_product, find_feasible_plan, optimal_suffix_loop, PrefixSuffixPlan, ProductState,
};
use crate::scalar::Weight;
use crate::schedule::{
    build_sequence, build_team_graph, construct_schedules, Schedule, TeamGraph, TeamSequence,
};
use crate::ts::{build_wts, Loc, RobotId, Scenario, TeamId, WeightedTransitionSystem};

/// Chosen communication location per team.
pub type CommAssignment = BTreeMap<TeamId, Loc>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanError {
    #[error("initialization infeasible: no combination of communication points admits plans for every robot")]
    Infeasible,
    #[error(
        "robot {robot}: initial path needs more than {bound} suffix copies to respect its schedule"
    )]
    CopyBound { robot: RobotId, bound: usize },
}

/// `φ ∧ ⋀ □◊ p` over the given points.
pub fn build_psi<'a>(task: &Formula, points: impl IntoIterator<Item = &'a str>) -> Formula {
    let com = points
        .into_iter()
        .map(|p| Formula::always(Formula::eventually(Formula::atom(p))));
    match task {
        Formula::True => Formula::conjunction(com),
        _ => Formula::conjunction(std::iter::once(task.clone()).chain(com)),
    }
}

/// Composes the task automaton with the ordered visit counter described in
/// the module docs. `targets` are alphabet indices in visiting order; state
/// `(b, k)` is `b * (targets.len() + 1) + k`.
pub fn compose_visits(task: &Nba, targets: &[usize]) -> Nba {
    let k_max = targets.len();
    let width = k_max + 1;
    let mut out = Nba::new(task.props().to_vec(), task.num_states() * width);
    for &b in task.initial() {
        out.set_initial(b * width);
    }
    for b in 0..task.num_states() {
        if task.is_accepting(b) {
            out.set_accepting(b * width + k_max, true);
        }
    }
    for (b, g, b2) in task.transitions() {
        for k in 0..k_max {
            let hit = Literal {
                prop: targets[k],
                positive: true,
            };
            let miss = Literal {
                prop: targets[k],
                positive: false,
            };
            if let Some(gh) = g.and(&Guard::conjunction([hit]).expect("single literal")) {
                out.add_transition(b * width + k, gh, b2 * width + k + 1);
            }
            if let Some(gm) = g.and(&Guard::conjunction([miss]).expect("single literal")) {
                out.add_transition(b * width + k, gm, b2 * width + k);
            }
        }
        let next = if task.is_accepting(b) && k_max > 0 {
            0
        } else {
            k_max
        };
        out.add_transition(b * width + k_max, g.clone(), b2 * width + next);
    }
    out
}

/// One path `path_i^n`: the states to visit and the designated communication
/// positions. After the last state the robot moves to `closing`, the first
/// state of its next path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathSegment {
    pub robot: RobotId,
    pub iteration: usize,
    pub states: Vec<usize>,
    /// `(team, position)` in schedule order; positions strictly increase.
    pub kappa: Vec<(TeamId, usize)>,
    pub closing: usize,
    /// Number of suffix copies used.
    pub copies: usize,
}

impl PathSegment {
    /// `J(path)`: distance along the states plus the closing hop.
    pub fn cost<W: Weight>(&self, wts: &WeightedTransitionSystem<W>) -> W {
        let mut t = self.states.clone();
        t.push(self.closing);
        wts.path_cost(&t)
            .expect("path follows the transition system")
    }

    pub fn team_at(&self, position: usize) -> Option<TeamId> {
        self.kappa
            .iter()
            .find(|&&(_, k)| k == position)
            .map(|&(m, _)| m)
    }
}

/// Earliest strictly increasing positions of `targets` (in order) in `path`.
pub fn greedy_kappa(path: &[usize], targets: &[usize]) -> Option<Vec<usize>> {
    let mut out = Vec::with_capacity(targets.len());
    let mut from = 0;
    for &t in targets {
        let k = from + path[from..].iter().position(|&q| q == t)?;
        out.push(k);
        from = k + 1;
    }
    Some(out)
}

/// `pre | suf | … | suf` with the fewest copies (at most `max_copies`)
/// admitting schedule-respecting positions. Returns the path, the positions
/// and the number of copies.
pub fn respecting_path(
    prefix: &[usize],
    suffix: &[usize],
    targets: &[usize],
    max_copies: usize,
) -> Option<(Vec<usize>, Vec<usize>, usize)> {
    let mut path = prefix.to_vec();
    for copies in 1..=max_copies.max(1) {
        path.extend_from_slice(suffix);
        if let Some(k) = greedy_kappa(&path, targets) {
            return Some((path, k, copies));
        }
    }
    None
}

/// Builds `path_i^0` from a feasible lasso.
pub fn build_initial_path(
    plan: &PrefixSuffixPlan,
    sched: &Schedule,
    assignment: &CommAssignment,
) -> Result<PathSegment, PlanError> {
    let events = sched.events();
    let targets: Vec<usize> = events.iter().map(|m| assignment[m]).collect();
    let bound = events.len().max(1);
    let (states, kappa, copies) =
        respecting_path(&plan.prefix_trace(), &plan.suffix_trace(), &targets, bound).ok_or(
            PlanError::CopyBound {
                robot: sched.robot,
                bound,
            },
        )?;
    Ok(PathSegment {
        robot: sched.robot,
        iteration: 0,
        states,
        kappa: events.into_iter().zip(kappa).collect(),
        closing: plan.anchor().q,
        copies,
    })
}

/// Persistent planning state of one robot.
#[derive(Debug, Clone)]
pub struct RobotPlanner<W> {
    pub robot: RobotId,
    pub wts: WeightedTransitionSystem<W>,
    task: Nba,
    /// Teams in schedule order.
    order: Vec<TeamId>,
    anchor: Option<ProductState>,
    cache: HashMap<Vec<Loc>, Option<(Vec<usize>, W)>>,
}

impl<W: Weight> RobotPlanner<W> {
    /// `alphabet` must contain every task proposition and every location that
    /// may be assigned; the wTS labels must be location names.
    pub fn new(
        wts: WeightedTransitionSystem<W>,
        task: &Formula,
        alphabet: Vec<String>,
        sched: &Schedule,
    ) -> Self {
        RobotPlanner {
            robot: sched.robot,
            task: translate_over(task, alphabet),
            order: sched.events(),
            wts,
            anchor: None,
            cache: HashMap::new(),
        }
    }

    pub fn order(&self) -> &[TeamId] {
        &self.order
    }

    pub fn anchor(&self) -> Option<ProductState> {
        self.anchor
    }

    pub fn task_automaton(&self) -> &Nba {
        &self.task
    }

    fn targets(&self, assignment: &CommAssignment) -> Vec<Loc> {
        self.order.iter().map(|m| assignment[m]).collect()
    }

    /// The composed automaton for the given points, in schedule order.
    pub fn psi_automaton(&self, targets: &[Loc]) -> Nba {
        let props: Vec<usize> = targets
            .iter()
            .map(|&l| {
                self.task.prop_index(self.wts.label(l)).unwrap_or_else(|| {
                    panic!("location {} missing from alphabet", self.wts.label(l))
                })
            })
            .collect();
        compose_visits(&self.task, &props)
    }

    /// Feasible lasso for the assignment restricted to this robot's teams.
    pub fn feasible_plan(&self, assignment: &CommAssignment) -> Option<PrefixSuffixPlan> {
        let nba = self.psi_automaton(&self.targets(assignment));
        find_feasible_plan(&build_product(&self.wts, &nba))
    }

    /// Fixes the anchor used by every later suffix synthesis.
    pub fn set_anchor(&mut self, anchor: ProductState) {
        self.anchor = Some(anchor);
        self.cache.clear();
    }

    /// Optimal suffix loop around the anchor for the assignment, as
    /// transition-system states with its cost (closing hop included).
    pub fn optimal_suffix(&mut self, assignment: &CommAssignment) -> Option<(Vec<usize>, W)> {
        let targets = self.targets(assignment);
        if let Some(hit) = self.cache.get(&targets) {
            return hit.clone();
        }
        let anchor = self.anchor.expect("anchor is set at initialization");
        let nba = self.psi_automaton(&targets);
        let p = build_product(&self.wts, &nba);
        let result = optimal_suffix_loop(&p, anchor)
            .map(|l| (l.states.iter().map(|s| s.q).collect(), l.cost));
        self.cache.insert(targets, result.clone());
        result
    }

    /// `path^{iteration}` built from the optimal suffix for `assignment`.
    pub fn loop_path(
        &mut self,
        assignment: &CommAssignment,
        iteration: usize,
    ) -> Option<PathSegment> {
        let (states, _) = self.optimal_suffix(assignment)?;
        let targets = self.targets(assignment);
        let (states, kappa, copies) = respecting_path(&[], &states, &targets, self.order.len())?;
        Some(PathSegment {
            robot: self.robot,
            iteration,
            states,
            kappa: self.order.iter().copied().zip(kappa).collect(),
            closing: self.anchor.expect("anchor").q,
            copies,
        })
    }
}

/// The candidates examined at a communication event: the incumbent first,
/// then the remaining points of `C_m` in declaration order, `limit` in all.
pub fn candidate_points(comm_set: &[Loc], incumbent: Loc, limit: Option<usize>) -> Vec<Loc> {
    let limit = limit.unwrap_or(usize::MAX).max(1);
    let mut out = vec![incumbent];
    out.extend(
        comm_set
            .iter()
            .copied()
            .filter(|&j| j != incumbent)
            .take(limit - 1),
    );
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplanOutcome<W> {
    pub team: TeamId,
    pub previous: Loc,
    pub chosen: Loc,
    /// `Cost_j` per candidate; `None` when some member has no loop.
    pub costs: Vec<(Loc, Option<W>)>,
}

impl<W: Weight> ReplanOutcome<W> {
    pub fn cost_of(&self, j: Loc) -> Option<W> {
        self.costs.iter().find(|c| c.0 == j).and_then(|c| c.1)
    }
}

/// One team's joint decision at a communication event.
///
/// For every candidate point each member computes its optimal suffix with
/// the team's point replaced; `Cost_j` sums them. The cheapest candidate
/// feasible for all members wins, ties going to the lowest location index.
/// The assignment is updated in place.
pub fn replan_on_communication<W: Weight>(
    team: TeamId,
    members: &mut [&mut RobotPlanner<W>],
    assignment: &mut CommAssignment,
    candidates: &[Loc],
) -> ReplanOutcome<W> {
    let previous = assignment[&team];
    let mut costs = Vec::with_capacity(candidates.len());
    for &j in candidates {
        let mut trial = assignment.clone();
        trial.insert(team, j);
        let total = members.iter_mut().try_fold(W::zero(), |acc, r| {
            r.optimal_suffix(&trial).map(|(_, c)| acc + c)
        });
        costs.push((j, total));
    }
    let chosen = costs
        .iter()
        .filter_map(|&(j, c)| c.map(|c| (j, c)))
        .min_by(|a, b| a.1.cmp_weight(&b.1).then(a.0.cmp(&b.0)))
        .map(|(j, _)| j)
        .expect("the incumbent point is always feasible");
    assignment.insert(team, chosen);
    ReplanOutcome {
        team,
        previous,
        chosen,
        costs,
    }
}

/// Everything produced before execution starts.
#[derive(Debug, Clone)]
pub struct Initialization {
    pub team_graph: TeamGraph,
    pub sequence: TeamSequence,
    pub schedules: BTreeMap<RobotId, Schedule>,
    pub assignment: CommAssignment,
    pub plans: BTreeMap<RobotId, PrefixSuffixPlan>,
    pub paths: BTreeMap<RobotId, PathSegment>,
    pub planners: BTreeMap<RobotId, RobotPlanner<f64>>,
}

/// Alphabet shared by every robot: all location names.
pub fn scenario_alphabet(s: &Scenario) -> Vec<String> {
    s.workspace.locations.iter().map(|l| l.id.clone()).collect()
}

/// Per-robot feasibility of every local combination, keyed by the points of
/// the robot's teams in ascending team id.
pub fn local_feasibility<W: Weight>(
    s: &Scenario,
    planner: &RobotPlanner<W>,
) -> BTreeMap<Vec<Loc>, Option<PrefixSuffixPlan>> {
    let teams = s.teams.teams_of(planner.robot);
    let mut out = BTreeMap::new();
    let sets: Vec<&[Loc]> = teams
        .iter()
        .map(|&m| s.teams.team(m).comm_set.as_slice())
        .collect();
    for combo in cartesian(&sets) {
        let a: CommAssignment = teams.iter().copied().zip(combo.iter().copied()).collect();
        out.insert(combo, planner.feasible_plan(&a));
    }
    out
}

/// Cartesian product in lexicographic order of positions.
pub fn cartesian(sets: &[&[Loc]]) -> Vec<Vec<Loc>> {
    let mut out = vec![vec![]];
    for set in sets {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                set.iter().map(move |&x| {
                    let mut v = prefix.clone();
                    v.push(x);
                    v
                })
            })
            .collect();
    }
    out
}

/// Composes locally feasible combinations into the first consistent global
/// assignment, enumerating teams in ascending id and each `C_m` in
/// declaration order.
pub fn compose_assignment(
    s: &Scenario,
    local: &BTreeMap<RobotId, BTreeMap<Vec<Loc>, bool>>,
) -> Option<CommAssignment> {
    let teams = s.teams.team_ids();
    let robot_teams: BTreeMap<RobotId, Vec<TeamId>> = s
        .robot_ids()
        .into_iter()
        .map(|r| (r, s.teams.teams_of(r)))
        .collect();
    // Robots to check once the team at this depth is assigned: those whose
    // highest team id is that team.
    let due: Vec<Vec<RobotId>> = teams
        .iter()
        .map(|&m| {
            robot_teams
                .iter()
                .filter(|(_, ts)| ts.last() == Some(&m))
                .map(|(&r, _)| r)
                .collect()
        })
        .collect();
    let mut assignment = CommAssignment::new();
    fn go(
        depth: usize,
        s: &Scenario,
        teams: &[TeamId],
        due: &[Vec<RobotId>],
        robot_teams: &BTreeMap<RobotId, Vec<TeamId>>,
        local: &BTreeMap<RobotId, BTreeMap<Vec<Loc>, bool>>,
        assignment: &mut CommAssignment,
    ) -> bool {
        if depth == teams.len() {
            return true;
        }
        let m = teams[depth];
        for &j in &s.teams.team(m).comm_set {
            assignment.insert(m, j);
            let ok = due[depth].iter().all(|r| {
                let key: Vec<Loc> = robot_teams[r].iter().map(|t| assignment[t]).collect();
                local[r].get(&key).copied().unwrap_or(false)
            });
            if ok && go(depth + 1, s, teams, due, robot_teams, local, assignment) {
                return true;
            }
        }
        assignment.remove(&m);
        false
    }
    go(0, s, &teams, &due, &robot_teams, local, &mut assignment).then_some(assignment)
}

/// Full initialization: team graph, sequence, schedules, assignment, anchors
/// and initial paths.
pub fn find_initial_assignment(s: &Scenario) -> Result<Initialization, PlanError> {
    let team_graph = build_team_graph(&s.teams).expect("validated at load");
    let start = s.teams.teams[0].id;
    let sequence = build_sequence(&team_graph, start);
    let schedules = construct_schedules(&s.teams, &team_graph, &sequence);
    let alphabet = scenario_alphabet(s);

    let mut planners = BTreeMap::new();
    let mut local_plans = BTreeMap::new();
    let mut local = BTreeMap::new();
    for r in &s.robots {
        let p = RobotPlanner::new(
            build_wts(s, r.id),
            &r.task,
            alphabet.clone(),
            &schedules[&r.id],
        );
        let feas = local_feasibility(s, &p);
        log::debug!(
            "robot {}: {} of {} local combinations feasible",
            r.id,
            feas.values().filter(|p| p.is_some()).count(),
            feas.len()
        );
        local.insert(
            r.id,
            feas.iter().map(|(k, v)| (k.clone(), v.is_some())).collect(),
        );
        local_plans.insert(r.id, feas);
        planners.insert(r.id, p);
    }
    let assignment = compose_assignment(s, &local).ok_or(PlanError::Infeasible)?;

    let mut plans = BTreeMap::new();
    let mut paths = BTreeMap::new();
    for (&r, p) in planners.iter_mut() {
        let key: Vec<Loc> = s.teams.teams_of(r).iter().map(|m| assignment[m]).collect();
        let plan = local_plans[&r][&key]
            .clone()
            .expect("composed from feasible combinations");
        p.set_anchor(plan.anchor());
        paths.insert(r, build_initial_path(&plan, &schedules[&r], &assignment)?);
        plans.insert(r, plan);
    }
    Ok(Initialization {
        team_graph,
        sequence,
        schedules,
        assignment,
        plans,
        paths,
        planners,
    })
}
