use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use super::LassoWord;

/// A possibly negated proposition, referenced by its index in the
/// automaton's alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub prop: usize,
    pub positive: bool,
}

/// Conjunction of literals. The empty conjunction is `true`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Guard {
    lits: Vec<Literal>,
}

impl Guard {
    pub fn top() -> Self {
        Guard::default()
    }

    /// Builds a conjunction, or `None` if it contains `p` and `!p`.
    pub fn conjunction(lits: impl IntoIterator<Item = Literal>) -> Option<Self> {
        let mut lits: Vec<Literal> = lits.into_iter().collect();
        lits.sort();
        lits.dedup();
        if lits.windows(2).any(|w| w[0].prop == w[1].prop) {
            return None;
        }
        Some(Guard { lits })
    }

    /// Conjunction of two guards, `None` if contradictory.
    pub fn and(&self, other: &Guard) -> Option<Guard> {
        Guard::conjunction(self.lits.iter().chain(&other.lits).copied())
    }

    pub fn literals(&self) -> &[Literal] {
        &self.lits
    }

    pub fn is_top(&self) -> bool {
        self.lits.is_empty()
    }

    /// Evaluates the guard against a letter given as a membership test.
    pub fn eval(&self, holds: impl Fn(usize) -> bool) -> bool {
        self.lits.iter().all(|l| holds(l.prop) == l.positive)
    }

    /// Evaluates the guard against a letter containing at most one
    /// proposition of the alphabet.
    pub fn eval_single(&self, prop: Option<usize>) -> bool {
        self.eval(|p| Some(p) == prop)
    }

    fn fmt_with(&self, props: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lits.is_empty() {
            return write!(f, "true");
        }
        for (k, l) in self.lits.iter().enumerate() {
            if k > 0 {
                write!(f, " && ")?;
            }
            let name = props.get(l.prop).map_or("?", String::as_str);
            if l.positive {
                write!(f, "{name}")?;
            } else {
                write!(f, "!{name}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub guard: Guard,
    pub to: usize,
}

/// Nondeterministic Büchi automaton with guard-labelled transitions.
///
/// States are `0..num_states()`. A transition `q --g--> q'` may be taken
/// while reading letter σ iff σ satisfies `g`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nba {
    props: Vec<String>,
    initial: Vec<usize>,
    accepting: Vec<bool>,
    transitions: Vec<Vec<Transition>>,
}

impl Nba {
    pub fn new(props: Vec<String>, num_states: usize) -> Self {
        Nba {
            props,
            initial: Vec::new(),
            accepting: vec![false; num_states],
            transitions: vec![Vec::new(); num_states],
        }
    }

    /// Single accepting state with a `true` self-loop.
    pub fn universal(props: Vec<String>) -> Self {
        let mut a = Nba::new(props, 1);
        a.set_initial(0);
        a.set_accepting(0, true);
        a.add_transition(0, Guard::top(), 0);
        a
    }

    /// Single non-accepting state without transitions.
    pub fn empty(props: Vec<String>) -> Self {
        let mut a = Nba::new(props, 1);
        a.set_initial(0);
        a
    }

    pub fn set_initial(&mut self, q: usize) {
        assert!(q < self.num_states());
        if !self.initial.contains(&q) {
            self.initial.push(q);
            self.initial.sort_unstable();
        }
    }

    pub fn set_accepting(&mut self, q: usize, accepting: bool) {
        self.accepting[q] = accepting;
    }

    /// Adds a transition; duplicate transitions are ignored.
    pub fn add_transition(&mut self, from: usize, guard: Guard, to: usize) {
        assert!(to < self.num_states());
        debug_assert!(guard.lits.iter().all(|l| l.prop < self.props.len()));
        let t = Transition { guard, to };
        if !self.transitions[from].contains(&t) {
            self.transitions[from].push(t);
        }
    }

    pub fn num_states(&self) -> usize {
        self.accepting.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions.iter().map(Vec::len).sum()
    }

    pub fn props(&self) -> &[String] {
        &self.props
    }

    pub fn prop_index(&self, name: &str) -> Option<usize> {
        self.props.iter().position(|p| p == name)
    }

    pub fn initial(&self) -> &[usize] {
        &self.initial
    }

    pub fn is_accepting(&self, q: usize) -> bool {
        self.accepting[q]
    }

    pub fn accepting_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_states()).filter(|&q| self.accepting[q])
    }

    pub fn successors(&self, q: usize) -> &[Transition] {
        &self.transitions[q]
    }

    /// All transitions as `(from, guard, to)`.
    pub fn transitions(&self) -> impl Iterator<Item = (usize, &Guard, usize)> + '_ {
        self.transitions
            .iter()
            .enumerate()
            .flat_map(|(q, ts)| ts.iter().map(move |t| (q, &t.guard, t.to)))
    }

    /// Drops states unreachable from the initial set, renumbering the rest
    /// in breadth-first order.
    pub fn prune_unreachable(&self) -> Nba {
        let mut index = vec![usize::MAX; self.num_states()];
        let mut order = Vec::new();
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &q in &self.initial {
            if index[q] == usize::MAX {
                index[q] = order.len();
                order.push(q);
                queue.push_back(q);
            }
        }
        while let Some(q) = queue.pop_front() {
            for t in &self.transitions[q] {
                if index[t.to] == usize::MAX {
                    index[t.to] = order.len();
                    order.push(t.to);
                    queue.push_back(t.to);
                }
            }
        }
        let mut out = Nba::new(self.props.clone(), order.len().max(1));
        if order.is_empty() {
            out.set_initial(0);
            return out;
        }
        for &q in &self.initial {
            out.set_initial(index[q]);
        }
        for (new, &old) in order.iter().enumerate() {
            out.set_accepting(new, self.accepting[old]);
            for t in &self.transitions[old] {
                out.add_transition(new, t.guard.clone(), index[t.to]);
            }
        }
        out
    }

    /// Keeps only states from which an accepting cycle is reachable; the
    /// language is unchanged. Returns the empty automaton when none remain.
    pub fn trim(&self) -> Nba {
        let n = self.num_states();
        let succ: Vec<Vec<usize>> = self
            .transitions
            .iter()
            .map(|ts| ts.iter().map(|t| t.to).collect())
            .collect();
        let comp = scc(&succ);
        let mut good = vec![false; n];
        for c in &comp {
            let cyclic = c.len() > 1 || succ[c[0]].contains(&c[0]);
            if cyclic && c.iter().any(|&q| self.accepting[q]) {
                for &q in c {
                    good[q] = true;
                }
            }
        }
        // Backward closure.
        let mut pred = vec![Vec::new(); n];
        for (q, ts) in succ.iter().enumerate() {
            for &t in ts {
                pred[t].push(q);
            }
        }
        let mut work: Vec<usize> = (0..n).filter(|&q| good[q]).collect();
        while let Some(q) = work.pop() {
            for &p in &pred[q] {
                if !good[p] {
                    good[p] = true;
                    work.push(p);
                }
            }
        }
        if !self.initial.iter().any(|&q| good[q]) {
            return Nba::empty(self.props.clone());
        }
        let mut index = vec![usize::MAX; n];
        let kept: Vec<usize> = (0..n).filter(|&q| good[q]).collect();
        for (k, &q) in kept.iter().enumerate() {
            index[q] = k;
        }
        let mut out = Nba::new(self.props.clone(), kept.len());
        for &q in self.initial.iter().filter(|&&q| good[q]) {
            out.set_initial(index[q]);
        }
        for (k, &q) in kept.iter().enumerate() {
            out.set_accepting(k, self.accepting[q]);
            for t in self.transitions[q].iter().filter(|t| good[t.to]) {
                out.add_transition(k, t.guard.clone(), index[t.to]);
            }
        }
        out
    }

    /// Quotient by the coarsest bisimulation that respects acceptance.
    ///
    /// Two states end up in one class when they agree on acceptance and have
    /// the same set of `(guard, successor class)` pairs, so the quotient
    /// accepts the same language. Classes are numbered by their first state.
    pub fn quotient(&self) -> Nba {
        let n = self.num_states();
        let mut class: Vec<usize> = self.accepting.iter().map(|&a| usize::from(a)).collect();
        let mut count = class.iter().collect::<BTreeSet<_>>().len();
        loop {
            let mut ids: BTreeMap<(usize, BTreeSet<(&Guard, usize)>), usize> = BTreeMap::new();
            let mut next = vec![0; n];
            for q in 0..n {
                let sig = self.transitions[q]
                    .iter()
                    .map(|t| (&t.guard, class[t.to]))
                    .collect();
                let fresh = ids.len();
                next[q] = *ids.entry((class[q], sig)).or_insert(fresh);
            }
            let refined = ids.len();
            class = next;
            if refined == count {
                break;
            }
            count = refined;
        }
        // Renumber classes in order of their first member.
        let mut renumber = vec![usize::MAX; count];
        let mut k = 0;
        for q in 0..n {
            if renumber[class[q]] == usize::MAX {
                renumber[class[q]] = k;
                k += 1;
            }
        }
        let mut out = Nba::new(self.props.clone(), k);
        for &q in &self.initial {
            out.set_initial(renumber[class[q]]);
        }
        let mut done = vec![false; k];
        for q in 0..n {
            let c = renumber[class[q]];
            if std::mem::replace(&mut done[c], true) {
                continue;
            }
            out.set_accepting(c, self.accepting[q]);
            for t in &self.transitions[q] {
                out.add_transition(c, t.guard.clone(), renumber[class[t.to]]);
            }
        }
        out
    }

    pub fn display_guard<'a>(&'a self, g: &'a Guard) -> impl fmt::Display + 'a {
        GuardDisplay {
            guard: g,
            props: &self.props,
        }
    }
}

struct GuardDisplay<'a> {
    guard: &'a Guard,
    props: &'a [String],
}

impl fmt::Display for GuardDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.guard.fmt_with(self.props, f)
    }
}

/// Decides whether the automaton accepts `prefix · suffix^ω`.
///
/// Works on the product of the automaton with the lasso's position graph: a
/// node `(q, k)` steps to `(q', succ(k))` when the letter at `k` satisfies a
/// guard `q → q'`. The word is accepted iff a reachable nontrivial strongly
/// connected component contains an accepting automaton state.
pub fn nba_accepts_lasso(a: &Nba, w: &LassoWord) -> bool {
    let n = w.len();
    let letters: Vec<Vec<bool>> = (0..n)
        .map(|k| {
            let l = w.letter(k);
            a.props.iter().map(|p| l.contains(p)).collect()
        })
        .collect();
    let node = |q: usize, k: usize| q * n + k;
    // Successor lists for the reachable part only.
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); a.num_states() * n];
    let mut seen = vec![false; succ.len()];
    let roots: Vec<usize> = a.initial.iter().map(|&q| node(q, 0)).collect();
    let mut work = roots.clone();
    for &r in &roots {
        seen[r] = true;
    }
    while let Some(v) = work.pop() {
        let (q, k) = (v / n, v % n);
        let letter = &letters[k];
        let next = w.succ(k);
        let mut out: Vec<usize> = a.transitions[q]
            .iter()
            .filter(|t| t.guard.eval(|p| letter[p]))
            .map(|t| node(t.to, next))
            .collect();
        out.sort_unstable();
        out.dedup();
        for &u in &out {
            if !seen[u] {
                seen[u] = true;
                work.push(u);
            }
        }
        succ[v] = out;
    }
    accepting_cycle_reachable(&succ, &roots, |v| a.accepting[v / n])
}

/// Strongly connected components, each as a list of states.
fn scc(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    const UNSEEN: usize = usize::MAX;
    let total = succ.len();
    let mut index = vec![UNSEEN; total];
    let mut low = vec![0; total];
    let mut on_stack = vec![false; total];
    let mut stack = Vec::new();
    let mut counter = 0;
    let mut out = Vec::new();
    for root in 0..total {
        if index[root] != UNSEEN {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut i)) = call.last_mut() {
            if *i < succ[v].len() {
                let u = succ[v][*i];
                *i += 1;
                if index[u] == UNSEEN {
                    index[u] = counter;
                    low[u] = counter;
                    counter += 1;
                    stack.push(u);
                    on_stack[u] = true;
                    call.push((u, 0));
                } else if on_stack[u] {
                    low[v] = low[v].min(index[u]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut component = Vec::new();
                    loop {
                        let u = stack.pop().expect("tarjan stack");
                        on_stack[u] = false;
                        component.push(u);
                        if u == v {
                            break;
                        }
                    }
                    out.push(component);
                }
            }
        }
    }
    out
}

/// Iterative Tarjan restricted to nodes reachable from `roots`.
fn accepting_cycle_reachable(
    succ: &[Vec<usize>],
    roots: &[usize],
    accepting: impl Fn(usize) -> bool,
) -> bool {
    const UNSEEN: usize = usize::MAX;
    let total = succ.len();
    let mut index = vec![UNSEEN; total];
    let mut low = vec![0; total];
    let mut on_stack = vec![false; total];
    let mut stack = Vec::new();
    let mut counter = 0;
    for &root in roots {
        if index[root] != UNSEEN {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut i)) = call.last_mut() {
            if *i < succ[v].len() {
                let u = succ[v][*i];
                *i += 1;
                if index[u] == UNSEEN {
                    index[u] = counter;
                    low[u] = counter;
                    counter += 1;
                    stack.push(u);
                    on_stack[u] = true;
                    call.push((u, 0));
                } else if on_stack[u] {
                    low[v] = low[v].min(index[u]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut component = Vec::new();
                    loop {
                        let u = stack.pop().expect("tarjan stack");
                        on_stack[u] = false;
                        component.push(u);
                        if u == v {
                            break;
                        }
                    }
                    let cyclic = component.len() > 1 || succ[v].contains(&v);
                    if cyclic && component.iter().any(|&u| accepting(u)) {
                        return true;
                    }
                }
            }
        }
    }
    false
}
