//! Canonical printer. Curried λs print as one multi-parameter `lambda`,
//! right-nested `seq`s as one n-ary `seq`, and left-nested applications as
//! one flat application.

use super::{Const, Term};

pub fn print_term(e: &Term) -> String {
    let mut out = String::new();
    write_term(e, &mut out);
    out
}

fn write_term(e: &Term, out: &mut String) {
    match e {
        Term::Var(x) => out.push_str(x.as_str()),
        Term::Const(Const::Int(i)) => out.push_str(&i.to_string()),
        Term::Const(Const::Bool(b)) => out.push_str(if *b { "true" } else { "false" }),
        Term::Err(k) => {
            out.push_str("(err ");
            out.push_str(k.as_str());
            out.push(')');
        }
        Term::Unreachable => out.push_str("(unreachable)"),
        Term::Lam(..) => {
            let mut params = Vec::new();
            let mut cur = e;
            while let Term::Lam(x, b) = cur {
                params.push(x.as_str());
                cur = b;
            }
            out.push_str("(lambda (");
            out.push_str(&params.join(" "));
            out.push_str(") ");
            write_term(cur, out);
            out.push(')');
        }
        Term::App(..) => {
            let mut args = Vec::new();
            let mut cur = e;
            while let Term::App(f, a) = cur {
                args.push(&**a);
                cur = f;
            }
            out.push('(');
            write_term(cur, out);
            for a in args.into_iter().rev() {
                out.push(' ');
                write_term(a, out);
            }
            out.push(')');
        }
        Term::BinOp(op, a, b) => {
            out.push('(');
            out.push_str(op.symbol());
            out.push(' ');
            write_term(a, out);
            out.push(' ');
            write_term(b, out);
            out.push(')');
        }
        Term::If(a, b, c) => {
            out.push_str("(if ");
            write_term(a, out);
            out.push(' ');
            write_term(b, out);
            out.push(' ');
            write_term(c, out);
            out.push(')');
        }
        Term::Seq(..) => {
            out.push_str("(seq");
            let mut cur = e;
            while let Term::Seq(a, b) = cur {
                out.push(' ');
                write_term(a, out);
                cur = b;
            }
            out.push(' ');
            write_term(cur, out);
            out.push(')');
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::term::parse_term;

    #[test]
    fn prints_canonical_forms() {
        for src in [
            "(if false 1 2)",
            "(lambda (p x) (+ 994 (if (p x) (unreachable) x)))",
            "(seq 1 2 (err beta))",
            "(f (g 1) 2 3)",
            "((lambda (x) x) 4)",
            "(seq (seq 1 2) 3)",
            "-5",
        ] {
            let t = parse_term(src).unwrap();
            assert_eq!(super::print_term(&t), src);
        }
    }
}
