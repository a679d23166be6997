mod common;

use std::collections::BTreeMap;

use common::{random_feasible_scenario, random_scenario_json};
use inp_core::planner::{
    cartesian, compose_assignment, find_initial_assignment, replan_on_communication,
    CommAssignment, RobotPlanner,
};
use inp_core::schedule::{build_sequence, build_team_graph, construct_schedules, verify_schedules};
use inp_core::ts::{Loc, RobotId, Scenario, Team, TeamStructure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// First global assignment, in lexicographic order over teams by id and
/// points by declaration order, that every robot accepts.
fn first_consistent(
    s: &Scenario,
    local: &BTreeMap<RobotId, BTreeMap<Vec<Loc>, bool>>,
) -> Option<CommAssignment> {
    let teams = s.teams.team_ids();
    let sets: Vec<&[Loc]> = teams
        .iter()
        .map(|&m| s.teams.team(m).comm_set.as_slice())
        .collect();
    cartesian(&sets).into_iter().find_map(|combo| {
        let a: CommAssignment = teams.iter().copied().zip(combo).collect();
        let ok = local.iter().all(|(&r, table)| {
            let key: Vec<Loc> = s.teams.teams_of(r).iter().map(|m| a[m]).collect();
            table[&key]
        });
        ok.then_some(a)
    })
}

#[test]
fn composition_finds_the_first_consistent_assignment() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut found = 0;
    for _ in 0..300 {
        let s = Scenario::from_json(&random_scenario_json(&mut rng, 5, 6).to_string()).unwrap();
        let density = rng.gen_range(0.2..0.9);
        let local: BTreeMap<RobotId, BTreeMap<Vec<Loc>, bool>> = s
            .robot_ids()
            .into_iter()
            .map(|r| {
                let teams = s.teams.teams_of(r);
                let sets: Vec<&[Loc]> = teams
                    .iter()
                    .map(|&m| s.teams.team(m).comm_set.as_slice())
                    .collect();
                (
                    r,
                    cartesian(&sets)
                        .into_iter()
                        .map(|k| (k, rng.gen_bool(density)))
                        .collect(),
                )
            })
            .collect();
        let want = first_consistent(&s, &local);
        found += want.is_some() as usize;
        assert_eq!(compose_assignment(&s, &local), want);
    }
    assert!(found > 30 && found < 290, "{found} feasible tables");
}

#[test]
fn twelve_team_structure_gets_length_eight_schedules() {
    let members = [
        vec![1, 2, 9],
        vec![3, 4, 5],
        vec![3, 6],
        vec![1, 3],
        vec![2, 5, 6, 11],
        vec![4, 12],
        vec![5, 9],
        vec![4, 9, 12],
        vec![6, 7, 10],
        vec![7, 8, 11],
        vec![8, 10, 11, 12],
        vec![7, 10],
    ];
    let ts = TeamStructure {
        teams: members
            .iter()
            .enumerate()
            .map(|(k, m)| Team {
                id: k + 1,
                members: m.clone(),
                comm_set: vec![],
            })
            .collect(),
    };
    let g = build_team_graph(&ts).unwrap();
    assert_eq!(g.max_degree(), 7);
    for start in ts.team_ids() {
        let seq = build_sequence(&g, start);
        assert!(seq.is_valid(&g));
        let schedules = construct_schedules(&ts, &g, &seq);
        assert_eq!(schedules.len(), 12);
        assert!(schedules.values().all(|s| s.len() == 8));
        assert_eq!(verify_schedules(&schedules, &ts, &g), vec![]);
        // Trailing slots idle for every robot can be dropped without changing
        // any event; starting from team 1 only four slots carry events.
        let used = schedules
            .values()
            .flat_map(|s| s.sequence.iter().rposition(Option::is_some))
            .max()
            .unwrap()
            + 1;
        if start == 1 {
            assert_eq!(used, 4);
        }
        assert!(used <= 5);
    }
}

/// Cheapest return to the planner's anchor in the product with the composed
/// automaton, by Bellman-Ford over an explicitly built graph.
fn oracle_suffix_cost(p: &RobotPlanner<f64>, assignment: &CommAssignment) -> Option<f64> {
    let targets: Vec<Loc> = p.order().iter().map(|m| assignment[m]).collect();
    let nba = p.psi_automaton(&targets);
    let (nq, nb) = (p.wts.num_states(), nba.num_states());
    let mut edges = vec![];
    for q in 0..nq {
        let prop = nba.prop_index(p.wts.label(q));
        for b in 0..nb {
            for t in nba
                .successors(b)
                .iter()
                .filter(|t| t.guard.eval_single(prop))
            {
                for &(q2, w) in p.wts.successors(q) {
                    edges.push((q * nb + b, q2 * nb + t.to, w));
                }
            }
        }
    }
    let anchor = p.anchor().unwrap();
    let a = anchor.q * nb + anchor.b;
    // dist[x]: cheapest walk of at least one step from the anchor to x.
    let mut dist = vec![f64::INFINITY; nq * nb];
    for &(u, v, w) in &edges {
        if u == a {
            dist[v] = dist[v].min(w);
        }
    }
    loop {
        let mut changed = false;
        for &(u, v, w) in &edges {
            if dist[u] + w < dist[v] {
                dist[v] = dist[u] + w;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    dist[a].is_finite().then_some(dist[a])
}

#[test]
fn replanning_picks_the_cheapest_candidate() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for k in 0..25 {
        let s = random_feasible_scenario(&mut rng, 4, 5);
        let init = find_initial_assignment(&s).unwrap();
        let mut planners = init.planners;
        let mut assignment = init.assignment;
        // A few consecutive events, so later decisions see earlier changes.
        for _ in 0..6 {
            let team = s
                .teams
                .team(s.teams.team_ids()[rng.gen_range(0..s.teams.teams.len())])
                .clone();
            let mut expected = vec![];
            for &j in &team.comm_set {
                let mut trial = assignment.clone();
                trial.insert(team.id, j);
                let total: Option<f64> = team
                    .members
                    .iter()
                    .map(|r| oracle_suffix_cost(&planners[r], &trial))
                    .sum();
                expected.push((j, total));
            }
            let incumbent = assignment[&team.id];
            let mut members: Vec<&mut RobotPlanner<f64>> = planners
                .iter_mut()
                .filter(|(r, _)| team.members.contains(r))
                .map(|(_, p)| p)
                .collect();
            let mut candidates = vec![incumbent];
            candidates.extend(team.comm_set.iter().copied().filter(|&j| j != incumbent));
            let out = replan_on_communication(team.id, &mut members, &mut assignment, &candidates);
            for (j, want) in &expected {
                let got = out.cost_of(*j);
                match (got, want) {
                    (Some(g), Some(w)) => {
                        assert!((g - w).abs() < 1e-9, "scenario {k}: point {j}: {g} vs {w}")
                    }
                    (g, w) => assert_eq!(g.is_some(), w.is_some(), "scenario {k}: point {j}"),
                }
            }
            assert!(expected.iter().any(|&(j, c)| j == incumbent && c.is_some()));
            let best = expected
                .iter()
                .filter_map(|&(j, c)| c.map(|c| (j, c)))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .unwrap();
            assert_eq!(out.chosen, best.0, "scenario {k}");
            assert_eq!(assignment[&team.id], best.0);
        }
    }
}
