//! Safety: does a term reach a value under every closing substitution?
//!
//! Two static providers decide it conservatively. `Syntactic` makes no
//! assumption about free variables; `Integer` assumes every free variable
//! stands for an integer and checks operator domains by sort inference.
//! A sampling oracle can refute safety but never confirm it.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eval::{delta_terms, eval, Observation};
use crate::term::{substitute, BinOp, Const, Name, Term, VarSet};
use crate::values::ValuePool;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SafetyMode {
    Syntactic,
    Integer,
}

impl SafetyMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SafetyMode::Syntactic => "syntactic",
            SafetyMode::Integer => "integer",
        }
    }
}

impl fmt::Display for SafetyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown safety mode `{0}` (expected syntactic or integer)")]
pub struct UnknownSafetyMode(pub String);

impl FromStr for SafetyMode {
    type Err = UnknownSafetyMode;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "syntactic" => Ok(SafetyMode::Syntactic),
            "integer" => Ok(SafetyMode::Integer),
            other => Err(UnknownSafetyMode(other.to_string())),
        }
    }
}

/// A closing substitution, one value per free variable.
pub type Substitution = Vec<(Name, Term)>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SafetyVerdict {
    Safe,
    /// The oracle attaches the substitution that produced a non-value.
    Unsafe(Option<Substitution>),
    Unknown,
}

impl SafetyVerdict {
    pub fn is_safe(&self) -> bool {
        matches!(self, SafetyVerdict::Safe)
    }
}

pub fn is_safe(mode: SafetyMode, e: &Term) -> bool {
    match mode {
        SafetyMode::Syntactic => syntactic(e),
        SafetyMode::Integer => int_sort(e).is_some(),
    }
}

pub fn safe_syntactic(e: &Term) -> SafetyVerdict {
    verdict(syntactic(e))
}

pub fn safe_integer(e: &Term) -> SafetyVerdict {
    verdict(int_sort(e).is_some())
}

fn verdict(safe: bool) -> SafetyVerdict {
    if safe {
        SafetyVerdict::Safe
    } else {
        SafetyVerdict::Unsafe(None)
    }
}

fn syntactic(e: &Term) -> bool {
    match e {
        Term::Const(_) | Term::Lam(..) | Term::Var(_) => true,
        Term::If(a, b, c) => syntactic(a) && syntactic(b) && syntactic(c),
        Term::Seq(a, b) => syntactic(a) && syntactic(b),
        Term::BinOp(op, a, b) => delta_terms(*op, a, b).is_some(),
        Term::App(..) | Term::Err(_) | Term::Unreachable => false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Sort {
    Int,
    Bool,
    Fun,
    /// Some value of undetermined sort.
    Any,
}

/// The sort of the value `e` is guaranteed to produce when free variables
/// are integers, or `None` if it may fail to produce one.
fn int_sort(e: &Term) -> Option<Sort> {
    match e {
        Term::Const(Const::Int(_)) | Term::Var(_) => Some(Sort::Int),
        Term::Const(Const::Bool(_)) => Some(Sort::Bool),
        Term::Lam(..) => Some(Sort::Fun),
        Term::If(a, b, c) => {
            int_sort(a)?;
            let (sb, sc) = (int_sort(b)?, int_sort(c)?);
            Some(if sb == sc { sb } else { Sort::Any })
        }
        Term::Seq(a, b) => {
            int_sort(a)?;
            int_sort(b)
        }
        Term::BinOp(op, a, b) => {
            let (sa, sb) = (int_sort(a)?, int_sort(b)?);
            match op {
                BinOp::Add | BinOp::Sub | BinOp::Mul => (sa == Sort::Int && sb == Sort::Int).then_some(Sort::Int),
                BinOp::Lt | BinOp::Le => (sa == Sort::Int && sb == Sort::Int).then_some(Sort::Bool),
                BinOp::Eq | BinOp::Ne => {
                    let ok = matches!((sa, sb), (Sort::Int, Sort::Int) | (Sort::Bool, Sort::Bool));
                    ok.then_some(Sort::Bool)
                }
            }
        }
        Term::App(..) | Term::Err(_) | Term::Unreachable => None,
    }
}

/// Refute safety by sampling closing substitutions over `delta`.
pub fn safe_oracle(e: &Term, delta: &VarSet, samples: usize, fuel: u64, seed: u64, pool: &ValuePool) -> SafetyVerdict {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let subst: Substitution = delta.iter().map(|x| (x.clone(), pool.sample(&mut rng))).collect();
        let closed = apply_substitution(e, &subst);
        match eval(&closed, fuel) {
            Ok(Observation::Value(_)) | Ok(Observation::Function) => {}
            Ok(Observation::Timeout(_)) => {}
            Ok(_) => return SafetyVerdict::Unsafe(Some(subst)),
            // Free variables outside `delta`: no substitution closes the term.
            Err(_) => return SafetyVerdict::Unsafe(None),
        }
    }
    SafetyVerdict::Unknown
}

/// Apply a closing substitution. Values are closed, so sequential
/// substitution is simultaneous.
pub fn apply_substitution(e: &Term, subst: &Substitution) -> Term {
    subst.iter().fold(e.clone(), |acc, (x, v)| substitute(&acc, x, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::parse_term;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn vars(names: &[&str]) -> VarSet {
        names.iter().map(|n| Name::new(n)).collect()
    }

    #[test]
    fn syntactic_examples() {
        assert!(safe_syntactic(&t("(lambda (x) (unreachable))")).is_safe());
        assert!(safe_syntactic(&t("(+ 1 2)")).is_safe());
        assert!(!safe_syntactic(&t("(+ x 1)")).is_safe());
        assert!(!safe_syntactic(&t("(+ true 1)")).is_safe());
        assert!(safe_syntactic(&t("(if x 1 (seq y 2))")).is_safe());
        assert!(!safe_syntactic(&t("(f 1)")).is_safe());
        assert!(!safe_syntactic(&t("(err k)")).is_safe());
        assert!(!safe_syntactic(&t("(seq 1 (unreachable))")).is_safe());
    }

    #[test]
    fn syntactic_agrees_with_evaluation_on_constant_binops() {
        // Oracle: a closed binop is safe iff it evaluates to a value.
        for src in ["(+ 1 2)", "(< 1 2)", "(= true false)", "(+ true 1)", "(< true false)"] {
            let e = t(src);
            let evaluates = matches!(eval(&e, 10).unwrap(), Observation::Value(_));
            assert_eq!(safe_syntactic(&e).is_safe(), evaluates, "{src}");
        }
    }

    #[test]
    fn integer_mode() {
        assert!(safe_integer(&t("(+ x 1)")).is_safe());
        assert!(safe_integer(&t("(< x (+ x 1))")).is_safe());
        assert!(safe_integer(&t("(= (< x 1) (< 2 y))")).is_safe());
        assert!(!safe_integer(&t("(= (< x 1) 2)")).is_safe());
        assert!(!safe_integer(&t("(+ (< x 1) 2)")).is_safe());
        assert!(!safe_integer(&t("(+ (lambda (y) y) 2)")).is_safe());
        assert!(!safe_integer(&t("(+ (if x 1 true) 2)")).is_safe());
        assert!(!safe_integer(&t("(f x)")).is_safe());
        assert!(safe_integer(&t("(if (< x 0) 1 2)")).is_safe());
    }

    #[test]
    fn oracle_examples() {
        let pool = ValuePool::mixed();
        assert_eq!(
            safe_oracle(&Term::Unreachable, &vars(&[]), 1, 10, 0, &pool),
            SafetyVerdict::Unsafe(Some(vec![]))
        );
        assert_eq!(
            safe_oracle(&t("x"), &vars(&["x"]), 10, 10, 0, &pool),
            SafetyVerdict::Unknown
        );
        let e = t("(+ x 1)");
        match safe_oracle(&e, &vars(&["x"]), 40, 100, 3, &pool) {
            SafetyVerdict::Unsafe(Some(w)) => {
                // The witness replays to a non-value.
                let obs = eval(&apply_substitution(&e, &w), 100).unwrap();
                assert!(!matches!(obs, Observation::Value(_) | Observation::Function));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn oracle_finds_bool_witness() {
        let pool = ValuePool::new(vec![Term::bool(true), Term::int(1)]);
        match safe_oracle(&t("(+ x 1)"), &vars(&["x"]), 20, 100, 0, &pool) {
            SafetyVerdict::Unsafe(Some(w)) => assert_eq!(w[0].1, Term::bool(true)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mode_round_trips_through_text() {
        for m in [SafetyMode::Syntactic, SafetyMode::Integer] {
            assert_eq!(m.to_string().parse::<SafetyMode>().unwrap(), m);
        }
        assert!("bogus".parse::<SafetyMode>().is_err());
    }
}
