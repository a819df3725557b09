//! Term parser over the s-expression reader.

use num_bigint::BigInt;

use super::sexp::{read_sexps, Sexp, SexpError};
use super::{BinOp, ErrLabel, Name, Term};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {0}")]
    Sexp(#[from] SexpError),
    #[error("{line}:{col}: {msg}")]
    At { line: usize, col: usize, msg: String },
    #[error("expected exactly one term, found {0}")]
    Count(usize),
}

const RESERVED: &[&str] = &["lambda", "if", "seq", "begin", "err", "unreachable", "true", "false"];

pub(crate) fn is_reserved(s: &str) -> bool {
    RESERVED.contains(&s) || BinOp::from_symbol(s).is_some()
}

pub(crate) fn is_int_literal(s: &str) -> bool {
    let digits = s.strip_prefix('-').unwrap_or(s);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

/// Parse exactly one term from `src`.
pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let sexps = read_sexps(src)?;
    if sexps.len() != 1 {
        return Err(ParseError::Count(sexps.len()));
    }
    term_from_sexp(&sexps[0])
}

fn err_at(s: &Sexp, msg: impl Into<String>) -> ParseError {
    let (line, col) = s.pos();
    ParseError::At {
        line,
        col,
        msg: msg.into(),
    }
}

fn symbol(s: &Sexp, what: &str) -> Result<Name, ParseError> {
    match s.as_atom() {
        Some(a) if !is_reserved(a) && !is_int_literal(a) => Ok(Name::new(a)),
        _ => Err(err_at(s, format!("expected {what}, found `{s}`"))),
    }
}

pub fn term_from_sexp(s: &Sexp) -> Result<Term, ParseError> {
    match s {
        Sexp::Atom { text, .. } => {
            if is_int_literal(text) {
                let n: BigInt = text.parse().map_err(|_| err_at(s, "bad integer"))?;
                Ok(Term::bigint(n))
            } else if text == "true" {
                Ok(Term::bool(true))
            } else if text == "false" {
                Ok(Term::bool(false))
            } else {
                Ok(Term::Var(symbol(s, "a term")?))
            }
        }
        Sexp::List { items, .. } => {
            let Some(head) = items.first() else {
                return Err(err_at(s, "empty application"));
            };
            let args = &items[1..];
            match head.as_atom() {
                Some("lambda") => {
                    let [params, body] = args else {
                        return Err(err_at(s, "lambda takes a parameter list and a body"));
                    };
                    let names = params
                        .as_list()
                        .filter(|l| !l.is_empty())
                        .ok_or_else(|| err_at(params, "expected non-empty parameter list"))?;
                    let names = names
                        .iter()
                        .map(|n| symbol(n, "parameter name"))
                        .collect::<Result<Vec<_>, _>>()?;
                    let mut t = term_from_sexp(body)?;
                    for n in names.into_iter().rev() {
                        t = Term::lam(n, t);
                    }
                    Ok(t)
                }
                Some("if") => {
                    let [a, b, c] = args else {
                        return Err(err_at(s, "if takes three operands"));
                    };
                    Ok(Term::if_(term_from_sexp(a)?, term_from_sexp(b)?, term_from_sexp(c)?))
                }
                Some("seq") | Some("begin") => {
                    if args.len() < 2 {
                        return Err(err_at(s, "seq takes at least two operands"));
                    }
                    let mut terms = args.iter().map(term_from_sexp).collect::<Result<Vec<_>, _>>()?;
                    let mut t = terms.pop().expect("non-empty");
                    while let Some(prev) = terms.pop() {
                        t = Term::seq(prev, t);
                    }
                    Ok(t)
                }
                Some("err") => {
                    let [label] = args else {
                        return Err(err_at(s, "err takes one label"));
                    };
                    let name = symbol(label, "error label")?;
                    Ok(Term::Err(ErrLabel(name)))
                }
                Some("unreachable") => {
                    if !args.is_empty() {
                        return Err(err_at(s, "unreachable takes no operands"));
                    }
                    Ok(Term::Unreachable)
                }
                Some(op) if BinOp::from_symbol(op).is_some() => {
                    let [a, b] = args else {
                        return Err(err_at(s, format!("operator {op} takes two operands")));
                    };
                    let op = BinOp::from_symbol(op).expect("checked");
                    Ok(Term::binop(op, term_from_sexp(a)?, term_from_sexp(b)?))
                }
                Some(kw) if RESERVED.contains(&kw) && kw != "true" && kw != "false" => {
                    Err(err_at(head, format!("misplaced keyword `{kw}`")))
                }
                _ => {
                    if args.is_empty() {
                        return Err(err_at(s, "application needs at least one argument"));
                    }
                    let mut t = term_from_sexp(head)?;
                    for a in args {
                        t = Term::app(t, term_from_sexp(a)?);
                    }
                    Ok(t)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Const;

    #[test]
    fn examples() {
        assert_eq!(
            parse_term("(if false 1 2)").unwrap(),
            Term::if_(Term::bool(false), Term::int(1), Term::int(2))
        );
        assert_eq!(parse_term("(lambda (x) x)").unwrap(), Term::lam("x", Term::var("x")));
        assert_eq!(
            parse_term("(seq (err beta) 3)").unwrap(),
            Term::seq(Term::err("beta"), Term::int(3))
        );
    }

    #[test]
    fn sugar() {
        assert_eq!(
            parse_term("(lambda (p x) (p x))").unwrap(),
            Term::lam("p", Term::lam("x", Term::app(Term::var("p"), Term::var("x"))))
        );
        assert_eq!(
            parse_term("(begin 1 2 3)").unwrap(),
            Term::seq(Term::int(1), Term::seq(Term::int(2), Term::int(3)))
        );
        assert_eq!(
            parse_term("(f 1 2)").unwrap(),
            Term::app(Term::app(Term::var("f"), Term::int(1)), Term::int(2))
        );
        assert_eq!(parse_term("-12 ; comment").unwrap(), Term::Const(Const::int(-12)));
    }

    #[test]
    fn errors_carry_positions() {
        match parse_term("(if 1\n  2)") {
            Err(ParseError::At { line: 1, col: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_term("(lambda (x if) x)") {
            Err(ParseError::At { line: 1, col: 12, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_term("(+ 1"), Err(ParseError::Sexp(_))));
        assert!(matches!(parse_term("1 2"), Err(ParseError::Count(2))));
        assert!(parse_term("()").is_err());
        assert!(parse_term("(x)").is_err());
    }
}
