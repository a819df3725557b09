//! Derived forms built from the core syntax.

use num_bigint::BigInt;

use super::{BinOp, Name, Term};

/// Guarded machine addition: `unreachable` when `x + y` leaves `[min, max]`,
/// otherwise the mathematical sum. The upper guard is tested first.
pub fn desugar_plus_int(x: Term, y: Term, max: BigInt, min: BigInt) -> Term {
    let sum = || Term::binop(BinOp::Add, x.clone(), y.clone());
    Term::if_(
        Term::binop(BinOp::Lt, Term::bigint(max), sum()),
        Term::Unreachable,
        Term::if_(
            Term::binop(BinOp::Lt, sum(), Term::bigint(min)),
            Term::Unreachable,
            sum(),
        ),
    )
}

/// `λp1. ... λpn. body`.
pub fn lam_curried(params: &[Name], body: Term) -> Term {
    params.iter().rev().fold(body, |acc, p| Term::lam(p.clone(), acc))
}

/// `(f a1 ... an)` as left-nested applications.
pub fn apply_all(f: Term, args: impl IntoIterator<Item = Term>) -> Term {
    args.into_iter().fold(f, Term::app)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::parse_term;

    #[test]
    fn plus_int_shape() {
        let t = desugar_plus_int(Term::var("x"), Term::int(1), 7.into(), (-8).into());
        let expected =
            parse_term("(if (< 7 (+ x 1)) (unreachable) (if (< (+ x 1) -8) (unreachable) (+ x 1)))").unwrap();
        assert_eq!(t, expected);
    }
}
