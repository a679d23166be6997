use std::collections::BTreeSet;
use std::fmt;

/// LTL abstract syntax tree.
///
/// `Eventually`, `Always` and `Implies` are not separate nodes; the
/// constructors of the same name expand them. `Release` only appears after
/// [`to_nnf`] or when built directly.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Release(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn next(f: Formula) -> Self {
        Formula::Next(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Self {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn release(a: Formula, b: Formula) -> Self {
        Formula::Release(Box::new(a), Box::new(b))
    }

    /// `<> f`, i.e. `true U f`.
    pub fn eventually(f: Formula) -> Self {
        Formula::until(Formula::True, f)
    }

    /// `[] f`, i.e. `!(true U !f)`.
    pub fn always(f: Formula) -> Self {
        Formula::not(Formula::eventually(Formula::not(f)))
    }

    /// `a -> b`, i.e. `!a || b`.
    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::or(Formula::not(a), b)
    }

    /// Conjunction of all items; `true` when empty.
    pub fn conjunction(items: impl IntoIterator<Item = Formula>) -> Self {
        let mut iter = items.into_iter();
        match iter.next() {
            None => Formula::True,
            Some(first) => iter.fold(first, Formula::and),
        }
    }

    /// Proposition names occurring in the formula.
    pub fn props(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_props(&mut out);
        out
    }

    fn collect_props(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(p) => {
                out.insert(p.clone());
            }
            Formula::Not(f) | Formula::Next(f) => f.collect_props(out),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Until(a, b)
            | Formula::Release(a, b) => {
                a.collect_props(out);
                b.collect_props(out);
            }
        }
    }

    pub fn contains_next(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => false,
            Formula::Next(_) => true,
            Formula::Not(f) => f.contains_next(),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Until(a, b)
            | Formula::Release(a, b) => a.contains_next() || b.contains_next(),
        }
    }

    /// True when negation only occurs directly above atoms.
    pub fn is_nnf(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => true,
            Formula::Not(f) => matches!(**f, Formula::Atom(_)),
            Formula::Next(f) => f.is_nnf(),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Until(a, b)
            | Formula::Release(a, b) => a.is_nnf() && b.is_nnf(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => 0,
            Formula::Not(f) | Formula::Next(f) => 1 + f.depth(),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Until(a, b)
            | Formula::Release(a, b) => 1 + a.depth().max(b.depth()),
        }
    }
}

/// Negation normal form: pushes every negation down to the atoms, using
/// Release as the dual of Until.
pub fn to_nnf(f: &Formula) -> Formula {
    nnf(f, false)
}

fn nnf(f: &Formula, negated: bool) -> Formula {
    use Formula::*;
    match (f, negated) {
        (True, false) | (False, true) => True,
        (True, true) | (False, false) => False,
        (Atom(p), false) => Atom(p.clone()),
        (Atom(p), true) => Formula::not(Atom(p.clone())),
        (Not(g), neg) => nnf(g, !neg),
        (And(a, b), false) => Formula::and(nnf(a, false), nnf(b, false)),
        (And(a, b), true) => Formula::or(nnf(a, true), nnf(b, true)),
        (Or(a, b), false) => Formula::or(nnf(a, false), nnf(b, false)),
        (Or(a, b), true) => Formula::and(nnf(a, true), nnf(b, true)),
        (Next(g), neg) => Formula::next(nnf(g, neg)),
        (Until(a, b), false) => Formula::until(nnf(a, false), nnf(b, false)),
        (Until(a, b), true) => Formula::release(nnf(a, true), nnf(b, true)),
        (Release(a, b), false) => Formula::release(nnf(a, false), nnf(b, false)),
        (Release(a, b), true) => Formula::until(nnf(a, true), nnf(b, true)),
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(p) => write!(f, "{p}"),
            Formula::Not(g) => match always_body(g) {
                Some(h) => write!(f, "[] {}", Paren(h)),
                None => write!(f, "!{}", Paren(g)),
            },
            Formula::Next(g) => write!(f, "X {}", Paren(g)),
            // Both operators associate to the left, so a left operand of the
            // same kind needs no parentheses.
            Formula::And(a, b) if matches!(**a, Formula::And(..)) => {
                write!(f, "{a} && {}", Paren(b))
            }
            Formula::And(a, b) => write!(f, "{} && {}", Paren(a), Paren(b)),
            Formula::Or(a, b) if matches!(**a, Formula::Or(..)) => write!(f, "{a} || {}", Paren(b)),
            Formula::Or(a, b) => write!(f, "{} || {}", Paren(a), Paren(b)),
            Formula::Until(a, b) => match **a {
                Formula::True => write!(f, "<> {}", Paren(b)),
                _ => write!(f, "{} U {}", Paren(a), Paren(b)),
            },
            Formula::Release(a, b) => write!(f, "{} R {}", Paren(a), Paren(b)),
        }
    }
}

/// `g` for the argument `true U !g` of a negation, which reads as `[] g`.
fn always_body(f: &Formula) -> Option<&Formula> {
    match f {
        Formula::Until(a, b) if **a == Formula::True => match &**b {
            Formula::Not(g) => Some(g),
            _ => None,
        },
        _ => None,
    }
}

/// Wraps non-atomic subformulas in parentheses when printing.
struct Paren<'a>(&'a Formula);

impl fmt::Display for Paren<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Formula::True | Formula::False | Formula::Atom(_) => write!(f, "{}", self.0),
            Formula::Not(g) if matches!(**g, Formula::Atom(_)) => write!(f, "{}", self.0),
            other => write!(f, "({other})"),
        }
    }
}
