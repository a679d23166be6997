//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use inp_core::ltl::Formula;
use inp_core::planner::find_initial_assignment;
use inp_core::ts::{Scenario, Team, TeamStructure};
use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::json;

/// Connected team structure with up to `max_teams` teams over up to
/// `max_robots` robots; every robot belongs to some team.
pub fn random_team_structure(
    rng: &mut impl Rng,
    max_teams: usize,
    max_robots: usize,
) -> TeamStructure {
    let n_teams = rng.gen_range(1..=max_teams);
    let n_robots = rng.gen_range(1..=max_robots);
    let robots: Vec<usize> = (1..=n_robots).collect();
    let mut members: Vec<BTreeSet<usize>> = (0..n_teams)
        .map(|_| {
            let k = rng.gen_range(1..=3.min(n_robots));
            robots.choose_multiple(rng, k).copied().collect()
        })
        .collect();
    // Random spanning tree over teams: team k shares a robot with a parent.
    for k in 1..n_teams {
        let parent = rng.gen_range(0..k);
        let pool: Vec<usize> = members[parent].iter().copied().collect();
        members[k].insert(*pool.choose(rng).unwrap());
    }
    for r in &robots {
        if members.iter().all(|m| !m.contains(r)) {
            let k = rng.gen_range(0..n_teams);
            members[k].insert(*r);
        }
    }
    TeamStructure {
        teams: members
            .into_iter()
            .enumerate()
            .map(|(k, m)| Team {
                id: k + 1,
                members: m.into_iter().collect(),
                comm_set: vec![],
            })
            .collect(),
    }
}

/// Random formula of depth at most `depth` over `props`.
pub fn random_formula(rng: &mut impl Rng, depth: usize, props: &[&str]) -> Formula {
    if depth == 0 || rng.gen_bool(0.2) {
        return match rng.gen_range(0..10) {
            0 => Formula::True,
            1 => Formula::False,
            _ => Formula::atom(*props.choose(rng).unwrap()),
        };
    }
    let sub = |rng: &mut _| random_formula(rng, depth - 1, props);
    match rng.gen_range(0..9) {
        0 => Formula::not(sub(rng)),
        1 => Formula::next(sub(rng)),
        2 => Formula::and(sub(rng), sub(rng)),
        3 => Formula::or(sub(rng), sub(rng)),
        4 | 5 => Formula::until(sub(rng), sub(rng)),
        6 => Formula::release(sub(rng), sub(rng)),
        7 => Formula::always(sub(rng)),
        _ => Formula::eventually(sub(rng)),
    }
}

/// Grid workspace with random integer lengths and a few diagonals.
fn random_workspace(
    rng: &mut impl Rng,
) -> (Vec<String>, Vec<serde_json::Value>, Vec<serde_json::Value>) {
    let (w, h) = (rng.gen_range(3..=6), rng.gen_range(3..=5));
    let id = |x: usize, y: usize| format!("q{}", y * w + x);
    let mut names = vec![];
    let mut locations = vec![];
    let mut edges = vec![];
    for y in 0..h {
        for x in 0..w {
            names.push(id(x, y));
            locations.push(json!({"id": id(x, y), "coords": [x, y]}));
            if x + 1 < w {
                edges.push(
                    json!({"from": id(x, y), "to": id(x + 1, y), "length": rng.gen_range(1..=4)}),
                );
            }
            if y + 1 < h {
                edges.push(
                    json!({"from": id(x, y), "to": id(x, y + 1), "length": rng.gen_range(1..=4)}),
                );
            }
            if x + 1 < w && y + 1 < h && rng.gen_bool(0.15) {
                edges.push(json!({"from": id(x, y), "to": id(x + 1, y + 1), "length": rng.gen_range(2..=5)}));
            }
        }
    }
    (names, locations, edges)
}

fn random_task(rng: &mut impl Rng, free: &[String], initial: &str) -> String {
    let pick = |rng: &mut _| free.choose(rng).unwrap().clone();
    let clauses = rng.gen_range(1..=3);
    let mut out = vec![];
    for _ in 0..clauses {
        let c = match rng.gen_range(0..7) {
            0 | 1 => format!("[]<> {}", pick(rng)),
            2 => format!("[]<> ({} || {})", pick(rng), pick(rng)),
            3 => {
                let c = pick(rng);
                if c == initial {
                    format!("<> {c}")
                } else {
                    format!("[] !{c}")
                }
            }
            4 => format!("<> {}", pick(rng)),
            5 => format!("[] ({} -> <> {})", pick(rng), pick(rng)),
            _ => format!("!{} U {}", pick(rng), pick(rng)),
        };
        out.push(c);
    }
    out.join(" && ")
}

/// Random scenario document; may be infeasible.
pub fn random_scenario_json(
    rng: &mut impl Rng,
    max_teams: usize,
    max_robots: usize,
) -> serde_json::Value {
    let ts = random_team_structure(rng, max_teams, max_robots);
    let (names, locations, edges) = random_workspace(rng);
    let mut pool = names.clone();
    pool.shuffle(rng);
    let mut teams = vec![];
    let mut comm_points = vec![];
    for t in &ts.teams {
        let k = rng.gen_range(1..=3);
        // Keep at least half of the workspace free for task propositions.
        let k = k.min(pool.len().saturating_sub(names.len() / 2)).max(1);
        let set: Vec<String> = (0..k).filter_map(|_| pool.pop()).collect();
        comm_points.extend(set.iter().cloned());
        teams.push(json!({"id": t.id, "members": t.members, "comm_set": set}));
    }
    let free: Vec<String> = names
        .iter()
        .filter(|n| !comm_points.contains(n))
        .cloned()
        .collect();
    let robots: Vec<_> = ts
        .robots()
        .into_iter()
        .map(|r| {
            let initial = names.choose(rng).unwrap().clone();
            let task = random_task(rng, &free, &initial);
            json!({"id": r, "initial": initial, "task": task})
        })
        .collect();
    json!({
        "format": 1,
        "locations": locations,
        "edges": edges,
        "comm_points": comm_points,
        "robots": robots,
        "teams": teams,
        "alpha": 0.5,
        "travel_time": {"lo": 1.0, "hi": 2.0},
        "seed": rng.gen::<u32>(),
    })
}

/// Random scenario for which initialization succeeds.
pub fn random_feasible_scenario(
    rng: &mut impl Rng,
    max_teams: usize,
    max_robots: usize,
) -> Scenario {
    loop {
        let doc = random_scenario_json(rng, max_teams, max_robots);
        let s = Scenario::from_json(&doc.to_string()).expect("generated scenarios are valid");
        if find_initial_assignment(&s).is_ok() {
            return s;
        }
    }
}

pub fn scenario_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}
