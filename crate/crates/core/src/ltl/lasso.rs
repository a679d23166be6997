use std::collections::BTreeSet;

use super::Formula;

/// A set of propositions that hold at one position.
pub type Letter = BTreeSet<String>;

/// Ultimately periodic word `prefix · suffix^ω`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LassoWord {
    pub prefix: Vec<Letter>,
    pub suffix: Vec<Letter>,
}

impl LassoWord {
    /// Panics when `suffix` is empty.
    pub fn new(prefix: Vec<Letter>, suffix: Vec<Letter>) -> Self {
        assert!(!suffix.is_empty(), "lasso suffix must be nonempty");
        LassoWord { prefix, suffix }
    }

    /// Builds a lasso from letters given as proposition-name slices.
    pub fn from_names(prefix: &[&[&str]], suffix: &[&[&str]]) -> Self {
        let conv = |ls: &[&[&str]]| -> Vec<Letter> {
            ls.iter()
                .map(|l| l.iter().map(|s| s.to_string()).collect())
                .collect()
        };
        LassoWord::new(conv(prefix), conv(suffix))
    }

    /// Number of distinct positions (prefix plus one period).
    pub fn len(&self) -> usize {
        self.prefix.len() + self.suffix.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn letter(&self, pos: usize) -> &Letter {
        if pos < self.prefix.len() {
            &self.prefix[pos]
        } else {
            &self.suffix[pos - self.prefix.len()]
        }
    }

    /// Successor position, folding back into the period after the last one.
    pub fn succ(&self, pos: usize) -> usize {
        if pos + 1 < self.len() {
            pos + 1
        } else {
            self.prefix.len()
        }
    }
}

/// Every lasso over `props` with prefix length `0..=max_prefix` and suffix
/// length `1..=max_suffix`, shortest first.
pub fn all_lassos(props: &[&str], max_prefix: usize, max_suffix: usize) -> Vec<LassoWord> {
    let alphabet: Vec<Letter> = (0..1usize << props.len())
        .map(|mask| {
            props
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, p)| p.to_string())
                .collect()
        })
        .collect();
    let words = |len: usize| -> Vec<Vec<Letter>> {
        (0..len).fold(vec![vec![]], |acc, _| {
            acc.into_iter()
                .flat_map(|w| {
                    alphabet.iter().map(move |l| {
                        let mut w = w.clone();
                        w.push(l.clone());
                        w
                    })
                })
                .collect()
        })
    };
    let mut all = Vec::new();
    for p in 0..=max_prefix {
        for s in 1..=max_suffix {
            for pre in words(p) {
                for suf in words(s) {
                    all.push(LassoWord::new(pre.clone(), suf));
                }
            }
        }
    }
    all
}

/// Decides `w ⊨ f` by computing, bottom-up, the truth value of every
/// subformula at every distinct position of the lasso. Until and Release are
/// solved as least and greatest fixpoints around the period.
pub fn evaluate_lasso(f: &Formula, w: &LassoWord) -> bool {
    truth_table(f, w)[0]
}

fn truth_table(f: &Formula, w: &LassoWord) -> Vec<bool> {
    let n = w.len();
    match f {
        Formula::True => vec![true; n],
        Formula::False => vec![false; n],
        Formula::Atom(p) => (0..n).map(|k| w.letter(k).contains(p)).collect(),
        Formula::Not(g) => truth_table(g, w).into_iter().map(|b| !b).collect(),
        Formula::And(a, b) => {
            let (a, b) = (truth_table(a, w), truth_table(b, w));
            a.iter().zip(&b).map(|(x, y)| *x && *y).collect()
        }
        Formula::Or(a, b) => {
            let (a, b) = (truth_table(a, w), truth_table(b, w));
            a.iter().zip(&b).map(|(x, y)| *x || *y).collect()
        }
        Formula::Next(g) => {
            let g = truth_table(g, w);
            (0..n).map(|k| g[w.succ(k)]).collect()
        }
        Formula::Until(a, b) => {
            let (a, b) = (truth_table(a, w), truth_table(b, w));
            fixpoint(w, vec![false; n], |k, val| b[k] || (a[k] && val[w.succ(k)]))
        }
        Formula::Release(a, b) => {
            let (a, b) = (truth_table(a, w), truth_table(b, w));
            fixpoint(w, vec![true; n], |k, val| b[k] && (a[k] || val[w.succ(k)]))
        }
    }
}

fn fixpoint(w: &LassoWord, mut val: Vec<bool>, step: impl Fn(usize, &[bool]) -> bool) -> Vec<bool> {
    loop {
        let mut changed = false;
        for k in (0..w.len()).rev() {
            let v = step(k, &val);
            if v != val[k] {
                val[k] = v;
                changed = true;
            }
        }
        if !changed {
            return val;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> Formula {
        Formula::atom("p")
    }

    #[test]
    fn eventually_p_at_position_zero() {
        let w = LassoWord::from_names(&[&["p"]], &[&[]]);
        assert!(evaluate_lasso(&Formula::eventually(p()), &w));
    }

    #[test]
    fn always_eventually_needs_p_in_the_period() {
        let gf = Formula::always(Formula::eventually(p()));
        assert!(!evaluate_lasso(
            &gf,
            &LassoWord::from_names(&[&["p"]], &[&[]])
        ));
        assert!(evaluate_lasso(
            &gf,
            &LassoWord::from_names(&[], &[&[], &["p"]])
        ));
    }

    #[test]
    fn until_and_release() {
        let q = Formula::atom("q");
        let w = LassoWord::from_names(&[&["p"], &["p"]], &[&["q"]]);
        assert!(evaluate_lasso(&Formula::until(p(), q.clone()), &w));
        let w = LassoWord::from_names(&[&["p"], &[]], &[&["q"]]);
        assert!(!evaluate_lasso(&Formula::until(p(), q.clone()), &w));
        // p forever releases nothing: (false R p) == [] p
        let w = LassoWord::from_names(&[], &[&["p"]]);
        assert!(evaluate_lasso(&Formula::release(Formula::False, p()), &w));
        let w = LassoWord::from_names(&[&["p"]], &[&["p"], &[]]);
        assert!(!evaluate_lasso(&Formula::release(Formula::False, p()), &w));
    }

    #[test]
    fn next_wraps_into_the_period() {
        let w = LassoWord::from_names(&[&[]], &[&["p"], &[]]);
        let xp = Formula::next(p());
        assert!(evaluate_lasso(&xp, &w));
        // position 2 (second suffix letter) wraps back to position 1
        let xxxp = Formula::next(Formula::next(Formula::next(p())));
        assert!(evaluate_lasso(&xxxp, &w));
    }

    #[test]
    #[should_panic]
    fn empty_suffix_rejected() {
        LassoWord::new(vec![], vec![]);
    }
}
