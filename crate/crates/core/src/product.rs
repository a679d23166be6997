//! Product of a transition system with a Büchi automaton, and the lasso
//! searches run on it.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use serde::Serialize;

use crate::ltl::Nba;
use crate::scalar::Weight;
use crate::ts::WeightedTransitionSystem;

/// A product state `(wts state, automaton state)`. Ordering is
/// lexicographic, matching the dense index `q * |Q_B| + b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ProductState {
    pub q: usize,
    pub b: usize,
}

/// Lazily explored product `wTS ⊗ B`.
///
/// `(q, b) -> (q', b')` exists iff `q -> q'` in the transition system and
/// some automaton transition `b -> b'` has a guard satisfied by the label of
/// the source location `q`. Its weight is the weight of `q -> q'`.
#[derive(Debug, Clone)]
pub struct ProductAutomaton<'a, W> {
    wts: &'a WeightedTransitionSystem<W>,
    nba: &'a Nba,
    /// Alphabet index of each location's proposition, if the automaton
    /// mentions it at all.
    label_prop: Vec<Option<usize>>,
}

pub fn build_product<'a, W: Weight>(
    wts: &'a WeightedTransitionSystem<W>,
    nba: &'a Nba,
) -> ProductAutomaton<'a, W> {
    let label_prop = wts.labels().iter().map(|l| nba.prop_index(l)).collect();
    ProductAutomaton {
        wts,
        nba,
        label_prop,
    }
}

impl<'a, W: Weight> ProductAutomaton<'a, W> {
    pub fn wts(&self) -> &'a WeightedTransitionSystem<W> {
        self.wts
    }

    pub fn nba(&self) -> &'a Nba {
        self.nba
    }

    /// Upper bound on the number of states, `|Q_i| * |Q_B|`.
    pub fn num_states(&self) -> usize {
        self.wts.num_states() * self.nba.num_states()
    }

    pub fn index(&self, s: ProductState) -> usize {
        s.q * self.nba.num_states() + s.b
    }

    pub fn state(&self, index: usize) -> ProductState {
        let nb = self.nba.num_states();
        ProductState {
            q: index / nb,
            b: index % nb,
        }
    }

    pub fn initial_states(&self) -> Vec<ProductState> {
        let q = self.wts.initial();
        self.nba
            .initial()
            .iter()
            .map(|&b| ProductState { q, b })
            .collect()
    }

    pub fn is_accepting(&self, s: ProductState) -> bool {
        self.nba.is_accepting(s.b)
    }

    /// Outgoing transitions sorted by target state.
    pub fn successors(&self, s: ProductState) -> Vec<(ProductState, W)> {
        let prop = self.label_prop[s.q];
        let enabled: Vec<usize> = {
            let mut v: Vec<usize> = self
                .nba
                .successors(s.b)
                .iter()
                .filter(|t| t.guard.eval_single(prop))
                .map(|t| t.to)
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let mut out = Vec::new();
        if enabled.is_empty() {
            return out;
        }
        for &(q, w) in self.wts.successors(s.q) {
            out.extend(enabled.iter().map(|&b| (ProductState { q, b }, w)));
        }
        out
    }

    pub fn has_transition(&self, from: ProductState, to: ProductState) -> bool {
        self.wts.weight(from.q, to.q).is_some()
            && self
                .nba
                .successors(from.b)
                .iter()
                .any(|t| t.to == to.b && t.guard.eval_single(self.label_prop[from.q]))
    }
}

/// A lasso in the product: `prefix` runs from an initial state to the
/// accepting anchor (inclusive); `suffix` starts at the anchor and its last
/// state transitions back to the anchor. The anchor appears once in the
/// suffix; the closing hop is implicit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrefixSuffixPlan {
    pub prefix: Vec<ProductState>,
    pub suffix: Vec<ProductState>,
}

impl PrefixSuffixPlan {
    pub fn anchor(&self) -> ProductState {
        self.suffix[0]
    }

    /// Transition-system projection of the prefix.
    pub fn prefix_trace(&self) -> Vec<usize> {
        self.prefix.iter().map(|s| s.q).collect()
    }

    /// Transition-system projection of the suffix loop, without the closing
    /// return to the anchor.
    pub fn suffix_trace(&self) -> Vec<usize> {
        self.suffix.iter().map(|s| s.q).collect()
    }

    /// `J(τ^pre)`.
    pub fn prefix_cost<W: Weight>(&self, wts: &WeightedTransitionSystem<W>) -> W {
        wts.path_cost(&self.prefix_trace())
            .expect("plan follows the transition system")
    }

    /// `J(τ^suf)`, including the hop that closes the loop.
    pub fn suffix_cost<W: Weight>(&self, wts: &WeightedTransitionSystem<W>) -> W {
        let mut t = self.suffix_trace();
        t.push(self.anchor().q);
        wts.path_cost(&t)
            .expect("plan follows the transition system")
    }

    /// Checks that consecutive states, including the loop closure, are
    /// product transitions, the prefix starts initial, and the anchor is
    /// accepting.
    pub fn is_valid_in<W: Weight>(&self, p: &ProductAutomaton<'_, W>) -> bool {
        let (Some(first), Some(last)) = (self.prefix.first(), self.prefix.last()) else {
            return false;
        };
        if self.suffix.is_empty() || *last != self.anchor() || !p.is_accepting(self.anchor()) {
            return false;
        }
        let closed: Vec<ProductState> =
            self.suffix.iter().copied().chain([self.anchor()]).collect();
        p.initial_states().contains(first)
            && self.prefix.windows(2).all(|w| p.has_transition(w[0], w[1]))
            && closed.windows(2).all(|w| p.has_transition(w[0], w[1]))
    }
}

/// `J_p = α·J(pre) + (1−α)·J(suf)`.
pub fn plan_cost<W: Weight>(
    wts: &WeightedTransitionSystem<W>,
    plan: &PrefixSuffixPlan,
    alpha: f64,
) -> f64 {
    alpha * plan.prefix_cost(wts).as_f64() + (1.0 - alpha) * plan.suffix_cost(wts).as_f64()
}

/// Breadth-first search for any accepting lasso.
///
/// Accepting states are tried in the order the search from the initial
/// states discovers them; the first one that lies on a cycle becomes the
/// anchor. Returns `None` when the product accepts nothing.
pub fn find_feasible_plan<W: Weight>(p: &ProductAutomaton<'_, W>) -> Option<PrefixSuffixPlan> {
    let n = p.num_states();
    let mut parent = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    let mut order = Vec::new();
    let mut queue = VecDeque::new();
    for s in p.initial_states() {
        let i = p.index(s);
        if !seen[i] {
            seen[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        order.push(i);
        for (t, _) in p.successors(p.state(i)) {
            let j = p.index(t);
            if !seen[j] {
                seen[j] = true;
                parent[j] = i;
                queue.push_back(j);
            }
        }
    }
    for &a in &order {
        let anchor = p.state(a);
        if !p.is_accepting(anchor) {
            continue;
        }
        if let Some(suffix) = bfs_cycle(p, anchor) {
            let mut prefix = vec![a];
            while parent[*prefix.last().expect("nonempty")] != usize::MAX {
                prefix.push(parent[*prefix.last().expect("nonempty")]);
            }
            prefix.reverse();
            return Some(PrefixSuffixPlan {
                prefix: prefix.into_iter().map(|i| p.state(i)).collect(),
                suffix,
            });
        }
    }
    None
}

/// Fewest-hops cycle through `anchor`, as the loop body starting at it.
fn bfs_cycle<W: Weight>(
    p: &ProductAutomaton<'_, W>,
    anchor: ProductState,
) -> Option<Vec<ProductState>> {
    let a = p.index(anchor);
    let mut parent = vec![usize::MAX; p.num_states()];
    let mut seen = vec![false; p.num_states()];
    let mut queue = VecDeque::from([a]);
    seen[a] = true;
    while let Some(i) = queue.pop_front() {
        for (t, _) in p.successors(p.state(i)) {
            let j = p.index(t);
            if j == a {
                let mut body = vec![i];
                while *body.last().expect("nonempty") != a {
                    body.push(parent[*body.last().expect("nonempty")]);
                }
                body.reverse();
                return Some(body.into_iter().map(|i| p.state(i)).collect());
            }
            if !seen[j] {
                seen[j] = true;
                parent[j] = i;
                queue.push_back(j);
            }
        }
    }
    None
}

/// Heap key: weight first, then state index, smallest on top.
#[derive(Debug, Clone, Copy)]
struct Key<W>(W, usize);

impl<W: Weight> PartialEq for Key<W> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<W: Weight> Eq for Key<W> {}

impl<W: Weight> PartialOrd for Key<W> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<W: Weight> Ord for Key<W> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp_weight(&other.0).then(self.1.cmp(&other.1))
    }
}

/// A suffix loop around an anchor together with its cost `J(τ^suf)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuffixLoop<W> {
    /// Starts at the anchor; the hop back to the anchor is implicit.
    pub states: Vec<ProductState>,
    pub cost: W,
}

/// Minimum-weight cycle through `anchor`.
///
/// Dijkstra from the anchor, treating a return to the anchor as the target.
/// Ties are broken towards smaller state indices, so the result is
/// deterministic.
pub fn optimal_suffix_loop<W: Weight>(
    p: &ProductAutomaton<'_, W>,
    anchor: ProductState,
) -> Option<SuffixLoop<W>> {
    let n = p.num_states();
    let a = p.index(anchor);
    let mut dist: Vec<Option<W>> = vec![None; n];
    let mut parent = vec![usize::MAX; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    // The anchor is expanded once as the source; afterwards `dist[a]` tracks
    // the best way back to it.
    let relax = |from: usize,
                 base: W,
                 dist: &mut Vec<Option<W>>,
                 parent: &mut Vec<usize>,
                 heap: &mut BinaryHeap<Reverse<Key<W>>>| {
        for (t, w) in p.successors(p.state(from)) {
            let j = p.index(t);
            let d = base + w;
            if dist[j].map_or(true, |old| d.cmp_weight(&old) == Ordering::Less) {
                dist[j] = Some(d);
                parent[j] = from;
                heap.push(Reverse(Key(d, j)));
            }
        }
    };
    relax(a, W::zero(), &mut dist, &mut parent, &mut heap);
    while let Some(Reverse(Key(d, i))) = heap.pop() {
        if done[i] || dist[i].map_or(true, |best| best.cmp_weight(&d) == Ordering::Less) {
            continue;
        }
        if i == a {
            let mut body = vec![parent[a]];
            while *body.last().expect("nonempty") != a {
                body.push(parent[*body.last().expect("nonempty")]);
            }
            body.reverse();
            return Some(SuffixLoop {
                states: body.into_iter().map(|i| p.state(i)).collect(),
                cost: d,
            });
        }
        done[i] = true;
        relax(i, d, &mut dist, &mut parent, &mut heap);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::{parse, translate, translate_over};

    fn line(n: usize, w: u64) -> WeightedTransitionSystem<u64> {
        let mut t = WeightedTransitionSystem::new(0, (0..n).map(|k| format!("v{k}")).collect(), 0);
        for k in 1..n {
            t.add_edge(k - 1, k, w);
        }
        t
    }

    #[test]
    fn universal_product_mirrors_wts() {
        let t = line(2, 5);
        let b = Nba::universal(vec![]);
        let p = build_product(&t, &b);
        assert_eq!(p.num_states(), 2);
        assert_eq!(p.successors(ProductState { q: 0, b: 0 }).len(), 2);
        let plan = find_feasible_plan(&p).unwrap();
        assert_eq!(plan.prefix, vec![ProductState { q: 0, b: 0 }]);
        assert_eq!(plan.suffix, vec![ProductState { q: 0, b: 0 }]);
        let l = optimal_suffix_loop(&p, plan.anchor()).unwrap();
        assert_eq!(l.cost, 0);
        assert_eq!(l.states, vec![ProductState { q: 0, b: 0 }]);
    }

    #[test]
    fn unreachable_label_is_infeasible() {
        let t = line(2, 1);
        let f = parse("<> v9").unwrap();
        let b = translate(&f);
        let p = build_product(&t, &b);
        assert!(find_feasible_plan(&p).is_none());
    }

    #[test]
    fn triangle_prefers_the_short_tour() {
        let mut t = WeightedTransitionSystem::new(0, vec!["a".into(), "b".into(), "c".into()], 0);
        t.add_edge(0, 1, 1u64);
        t.add_edge(1, 2, 1);
        t.add_edge(0, 2, 10);
        let f = parse("[]<> a && []<> b").unwrap();
        let b = translate_over(&f, vec!["a".into(), "b".into(), "c".into()]);
        let p = build_product(&t, &b);
        let plan = find_feasible_plan(&p).unwrap();
        assert!(plan.is_valid_in(&p));
        let l = optimal_suffix_loop(&p, plan.anchor()).unwrap();
        assert_eq!(l.cost, 2);
    }

    #[test]
    fn dead_end_anchor_has_no_loop() {
        // a -> b only; automaton for "a && X [] false" style dead end
        let mut t = WeightedTransitionSystem::new(0, vec!["a".into(), "b".into()], 0);
        t.add_transition(0, 1, 1u64);
        let mut b = Nba::new(vec!["a".into()], 2);
        b.set_initial(0);
        b.set_accepting(1, true);
        b.add_transition(0, crate::ltl::Guard::top(), 1);
        let p = build_product(&t, &b);
        assert!(optimal_suffix_loop(&p, ProductState { q: 1, b: 1 }).is_none());
        assert!(find_feasible_plan(&p).is_none());
    }
}
