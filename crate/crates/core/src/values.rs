//! Pools of closed values used to close open terms during sampling.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::term::{parse_term, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValuePool {
    values: Vec<Term>,
}

impl ValuePool {
    /// Panics if `values` is empty or contains a non-value or open term.
    pub fn new(values: Vec<Term>) -> Self {
        assert!(!values.is_empty(), "empty value pool");
        for v in &values {
            assert!(
                v.is_value() && crate::term::is_closed(v),
                "pool entry {v} is not a closed value"
            );
        }
        ValuePool { values }
    }

    /// Booleans, small integers, and a handful of λs.
    pub fn mixed() -> Self {
        let srcs = [
            "true",
            "false",
            "0",
            "1",
            "-1",
            "2",
            "7",
            "(lambda (y) y)",
            "(lambda (y) 0)",
            "(lambda (y) false)",
            "(lambda (y) true)",
            "(lambda (y) (+ y 1))",
            "(lambda (y) (unreachable))",
            "(lambda (y) (err k))",
        ];
        ValuePool::new(srcs.iter().map(|s| parse_term(s).expect("pool")).collect())
    }

    /// Integers only, including the boundary-ish values used by the
    /// guarded-arithmetic examples.
    pub fn integers() -> Self {
        let ints = [0i64, 1, -1, 2, -2, 3, 5, 7, 10, -10, 100];
        ValuePool::new(ints.into_iter().map(Term::int).collect())
    }

    pub fn values(&self) -> &[Term] {
        &self.values
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Term {
        self.values.choose(rng).expect("non-empty").clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pools_hold_closed_values() {
        assert!(ValuePool::mixed().values().iter().any(|v| v == &Term::bool(true)));
        assert!(ValuePool::integers()
            .values()
            .iter()
            .all(|v| matches!(v, Term::Const(crate::term::Const::Int(_)))));
    }

    #[test]
    #[should_panic]
    fn rejects_open_entries() {
        ValuePool::new(vec![Term::var("x")]);
    }
}
