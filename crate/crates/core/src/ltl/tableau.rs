//! Tableau translation from LTL to Büchi automata.
//!
//! The expansion follows the classic on-the-fly construction of Gerth,
//! Peled, Vardi and Wolper: each node carries the formulas that must hold now
//! (`old`) and at the next position (`next`). The generalized acceptance
//! condition has one set per Until subformula and is degeneralized with a
//! round-robin counter. States that cannot reach an accepting cycle are
//! dropped at the end, and bisimilar states are merged.

use std::collections::BTreeSet;

use super::{to_nnf, Formula, Guard, Literal, Nba};

#[derive(Debug, Clone)]
struct Node {
    incoming: BTreeSet<usize>,
    new: Vec<Formula>,
    old: BTreeSet<Formula>,
    next: BTreeSet<Formula>,
}

/// Index reserved for the artificial initial node.
const INIT: usize = 0;

#[derive(Debug, Clone)]
struct Closed {
    incoming: BTreeSet<usize>,
    old: BTreeSet<Formula>,
    next: BTreeSet<Formula>,
}

struct Tableau {
    nodes: Vec<Closed>,
}

impl Tableau {
    fn build(f: Formula) -> Self {
        let mut t = Tableau {
            // Slot 0 is the initial pseudo-node; it never gets expanded.
            nodes: vec![Closed {
                incoming: BTreeSet::new(),
                old: BTreeSet::new(),
                next: BTreeSet::new(),
            }],
        };
        let mut work = vec![Node {
            incoming: BTreeSet::from([INIT]),
            new: vec![f],
            old: BTreeSet::new(),
            next: BTreeSet::new(),
        }];
        while let Some(node) = work.pop() {
            t.expand(node, &mut work);
        }
        t
    }

    fn expand(&mut self, mut node: Node, work: &mut Vec<Node>) {
        let Some(eta) = node.new.pop() else {
            let existing = self.nodes[1..]
                .iter()
                .position(|n| n.old == node.old && n.next == node.next);
            match existing {
                Some(k) => self.nodes[k + 1].incoming.extend(node.incoming),
                None => {
                    let id = self.nodes.len();
                    let next = node.next.clone();
                    self.nodes.push(Closed {
                        incoming: node.incoming,
                        old: node.old,
                        next: node.next,
                    });
                    work.push(Node {
                        incoming: BTreeSet::from([id]),
                        new: next.into_iter().collect(),
                        old: BTreeSet::new(),
                        next: BTreeSet::new(),
                    });
                }
            }
            return;
        };
        if node.old.contains(&eta) {
            work.push(node);
            return;
        }
        match &eta {
            Formula::False => {}
            Formula::True | Formula::Atom(_) | Formula::Not(_) => {
                if !node.old.contains(&negate_literal(&eta)) {
                    node.old.insert(eta);
                    work.push(node);
                }
            }
            Formula::And(a, b) => {
                let (a, b) = ((**a).clone(), (**b).clone());
                node.old.insert(eta);
                push_new(&mut node, a);
                push_new(&mut node, b);
                work.push(node);
            }
            Formula::Or(a, b) => {
                let (a, b) = ((**a).clone(), (**b).clone());
                node.old.insert(eta);
                let mut other = node.clone();
                push_new(&mut node, a);
                push_new(&mut other, b);
                work.push(other);
                work.push(node);
            }
            Formula::Next(a) => {
                node.next.insert((**a).clone());
                node.old.insert(eta);
                work.push(node);
            }
            Formula::Until(a, b) => {
                let (a, b) = ((**a).clone(), (**b).clone());
                node.old.insert(eta.clone());
                let mut other = node.clone();
                push_new(&mut node, a);
                node.next.insert(eta);
                push_new(&mut other, b);
                work.push(other);
                work.push(node);
            }
            Formula::Release(a, b) => {
                let (a, b) = ((**a).clone(), (**b).clone());
                node.old.insert(eta.clone());
                let mut other = node.clone();
                push_new(&mut node, b.clone());
                node.next.insert(eta);
                push_new(&mut other, a);
                push_new(&mut other, b);
                work.push(other);
                work.push(node);
            }
        }
    }
}

fn push_new(node: &mut Node, f: Formula) {
    if !node.old.contains(&f) && !node.new.contains(&f) {
        node.new.push(f);
    }
}

fn negate_literal(f: &Formula) -> Formula {
    match f {
        Formula::True => Formula::False,
        Formula::Not(g) => (**g).clone(),
        other => Formula::not(other.clone()),
    }
}

fn untils(f: &Formula, out: &mut BTreeSet<(Formula, Formula)>) {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => {}
        Formula::Not(g) | Formula::Next(g) => untils(g, out),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Release(a, b) => {
            untils(a, out);
            untils(b, out);
        }
        Formula::Until(a, b) => {
            out.insert((f.clone(), (**b).clone()));
            untils(a, out);
            untils(b, out);
        }
    }
}

/// Translates a formula into an equivalent Büchi automaton over the
/// propositions occurring in it.
pub fn translate(f: &Formula) -> Nba {
    translate_over(f, f.props().into_iter().collect())
}

/// Like [`translate`] but over a caller-chosen alphabet, which must contain
/// every proposition of `f`.
pub fn translate_over(f: &Formula, props: Vec<String>) -> Nba {
    let g = to_nnf(f);
    match g {
        Formula::True => return Nba::universal(props),
        Formula::False => return Nba::empty(props),
        _ => {}
    }
    let tableau = Tableau::build(g.clone());
    let nodes = &tableau.nodes;

    let mut conditions = BTreeSet::new();
    untils(&g, &mut conditions);
    let acc_sets: Vec<Vec<bool>> = conditions
        .iter()
        .map(|(u, b)| {
            nodes
                .iter()
                .map(|n| !n.old.contains(u) || n.old.contains(b))
                .collect()
        })
        .collect();

    let guards: Vec<Guard> = nodes
        .iter()
        .map(|n| {
            let lits = n.old.iter().filter_map(|h| match h {
                Formula::Atom(p) => Some(literal(&props, p, true)),
                Formula::Not(a) => match &**a {
                    Formula::Atom(p) => Some(literal(&props, p, false)),
                    _ => None,
                },
                _ => None,
            });
            Guard::conjunction(lits).expect("tableau nodes are consistent")
        })
        .collect();

    // Degeneralized state (node, copy) lives at node * k + copy.
    let k = acc_sets.len().max(1);
    let mut nba = Nba::new(props, nodes.len() * k);
    nba.set_initial(INIT * k);
    for (q, _) in nodes.iter().enumerate() {
        let in_set = |copy: usize| acc_sets.get(copy).map_or(true, |s| s[q]);
        if q != INIT && in_set(0) {
            nba.set_accepting(q * k, true);
        }
    }
    for (target, n) in nodes.iter().enumerate().skip(1) {
        for &source in &n.incoming {
            for copy in 0..k {
                let in_set = acc_sets.get(copy).map_or(true, |s| s[source]);
                let next_copy = if in_set { (copy + 1) % k } else { copy };
                nba.add_transition(
                    source * k + copy,
                    guards[target].clone(),
                    target * k + next_copy,
                );
            }
        }
    }
    nba.prune_unreachable().trim().quotient()
}

fn literal(props: &[String], p: &str, positive: bool) -> Literal {
    let prop = props
        .iter()
        .position(|q| q == p)
        .unwrap_or_else(|| panic!("proposition {p} missing from alphabet"));
    Literal { prop, positive }
}

#[cfg(test)]
mod tests {
    use super::super::{all_lassos as lassos, evaluate_lasso, nba_accepts_lasso, parse};
    use super::*;

    fn check(text: &str, props: &[&str]) {
        let f = parse(text).unwrap();
        let a = translate_over(&f, props.iter().map(|s| s.to_string()).collect());
        for w in lassos(props, 2, 3) {
            assert_eq!(
                nba_accepts_lasso(&a, &w),
                evaluate_lasso(&f, &w),
                "{text} on {w:?}"
            );
        }
    }

    #[test]
    fn true_is_universal() {
        let a = translate(&Formula::True);
        assert_eq!(a.num_states(), 1);
        assert!(a.is_accepting(0));
    }

    #[test]
    fn always_eventually_matches_oracle() {
        check("[]<> p", &["p"]);
    }

    #[test]
    fn contradiction_has_empty_language() {
        let f = parse("<> p && [] !p").unwrap();
        let a = translate(&f);
        for w in lassos(&["p"], 2, 3) {
            assert!(!nba_accepts_lasso(&a, &w));
        }
    }

    #[test]
    fn assorted_formulas_match_oracle() {
        for text in [
            "p U q",
            "!(p U q)",
            "[] (p -> <> q)",
            "<>[] p",
            "[]<> p && []<> q",
            "X p",
            "X (p U X q)",
            "(p U q) U p",
            "false",
            "p || !p",
        ] {
            check(text, &["p", "q"]);
        }
    }
}
