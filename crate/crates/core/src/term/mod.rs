//! Syntax of the calculus: terms, constants, operators, and the basic
//! operations every other module is built on (free variables, capture-avoiding
//! substitution, α-equivalence, paths into terms).

mod parse;
mod print;
mod sexp;
mod sugar;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;

pub use parse::{parse_term, term_from_sexp, ParseError};
pub use print::print_term;
pub use sexp::{read_sexps, Sexp, SexpError};
pub use sugar::{apply_all, desugar_plus_int, lam_curried};

/// A variable, binder, or label name. Cheap to clone.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(s: &str) -> Self {
        Name(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Self {
        Name::new(s)
    }
}

impl From<String> for Name {
    fn from(s: String) -> Self {
        Name(Arc::from(s))
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

/// The Δ of well-formedness judgments.
pub type VarSet = BTreeSet<Name>;

/// Base constants. Integers are mathematical (unbounded).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Const {
    Int(BigInt),
    Bool(bool),
}

impl Const {
    pub fn int(i: i64) -> Self {
        Const::Int(BigInt::from(i))
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Const::Bool(false))
    }

    pub fn same_sort(&self, other: &Const) -> bool {
        matches!(
            (self, other),
            (Const::Int(_), Const::Int(_)) | (Const::Bool(_), Const::Bool(_))
        )
    }
}

impl fmt::Display for Const {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Const::Int(i) => write!(f, "{i}"),
            Const::Bool(b) => write!(f, "{b}"),
        }
    }
}

/// The fixed binary operator set.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Lt,
    Le,
    Eq,
    Ne,
}

impl BinOp {
    pub const ALL: [BinOp; 7] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Eq,
        BinOp::Ne,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<BinOp> {
        BinOp::ALL.into_iter().find(|op| op.symbol() == s)
    }

    /// Instruction name used by the SSA text format.
    pub fn mnemonic(self) -> &'static str {
        match self {
            BinOp::Add => "add",
            BinOp::Sub => "sub",
            BinOp::Mul => "mul",
            BinOp::Lt => "lt",
            BinOp::Le => "le",
            BinOp::Eq => "eq",
            BinOp::Ne => "ne",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<BinOp> {
        BinOp::ALL.into_iter().find(|op| op.mnemonic() == s)
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul)
    }
}

impl fmt::Display for BinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Label of an error answer. `beta` and `delta` are produced by the
/// standard reduction itself; any other identifier is user-defined.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ErrLabel(pub Name);

impl ErrLabel {
    pub fn new(s: &str) -> Self {
        ErrLabel(Name::new(s))
    }
    pub fn beta() -> Self {
        ErrLabel::new("beta")
    }
    pub fn delta() -> Self {
        ErrLabel::new("delta")
    }
    pub fn user() -> Self {
        ErrLabel::new("user")
    }
    pub fn match_failure() -> Self {
        ErrLabel::new("match-failure")
    }
    pub fn as_str(&self) -> &str {
        self.0.as_str()
    }
}

impl fmt::Display for ErrLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0.as_str())
    }
}

impl fmt::Debug for ErrLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ErrLabel({})", self.0)
    }
}

/// An expression of the calculus. Derived equality is syntactic identity;
/// use [`alpha_eq`] to compare up to bound-variable renaming.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(Name),
    Const(Const),
    Lam(Name, Arc<Term>),
    App(Arc<Term>, Arc<Term>),
    BinOp(BinOp, Arc<Term>, Arc<Term>),
    If(Arc<Term>, Arc<Term>, Arc<Term>),
    Seq(Arc<Term>, Arc<Term>),
    Err(ErrLabel),
    Unreachable,
}

impl Term {
    pub fn var(name: impl Into<Name>) -> Term {
        Term::Var(name.into())
    }
    pub fn int(i: i64) -> Term {
        Term::Const(Const::int(i))
    }
    pub fn bigint(i: BigInt) -> Term {
        Term::Const(Const::Int(i))
    }
    pub fn bool(b: bool) -> Term {
        Term::Const(Const::Bool(b))
    }
    pub fn lam(param: impl Into<Name>, body: Term) -> Term {
        Term::Lam(param.into(), Arc::new(body))
    }
    pub fn app(fun: Term, arg: Term) -> Term {
        Term::App(Arc::new(fun), Arc::new(arg))
    }
    pub fn binop(op: BinOp, left: Term, right: Term) -> Term {
        Term::BinOp(op, Arc::new(left), Arc::new(right))
    }
    pub fn if_(test: Term, then: Term, els: Term) -> Term {
        Term::If(Arc::new(test), Arc::new(then), Arc::new(els))
    }
    pub fn seq(first: Term, second: Term) -> Term {
        Term::Seq(Arc::new(first), Arc::new(second))
    }
    pub fn err(label: &str) -> Term {
        Term::Err(ErrLabel::new(label))
    }

    /// Values: constants and λ abstractions.
    pub fn is_value(&self) -> bool {
        matches!(self, Term::Const(_) | Term::Lam(..))
    }

    /// Answers: values, errors, and `unreachable`.
    pub fn is_answer(&self) -> bool {
        self.is_value() || matches!(self, Term::Err(_) | Term::Unreachable)
    }

    pub fn as_const(&self) -> Option<&Const> {
        match self {
            Term::Const(c) => Some(c),
            _ => None,
        }
    }

    /// Immediate subterms, in path-index order.
    pub fn children(&self) -> Vec<&Arc<Term>> {
        match self {
            Term::Var(_) | Term::Const(_) | Term::Err(_) | Term::Unreachable => vec![],
            Term::Lam(_, b) => vec![b],
            Term::App(a, b) | Term::BinOp(_, a, b) | Term::Seq(a, b) => vec![a, b],
            Term::If(a, b, c) => vec![a, b, c],
        }
    }

    pub fn child(&self, i: usize) -> Option<&Arc<Term>> {
        self.children().get(i).copied()
    }

    /// Rebuild this node with child `i` replaced.
    pub fn with_child(&self, i: usize, new: Arc<Term>) -> Option<Term> {
        let t = match (self, i) {
            (Term::Lam(x, _), 0) => Term::Lam(x.clone(), new),
            (Term::App(_, b), 0) => Term::App(new, b.clone()),
            (Term::App(a, _), 1) => Term::App(a.clone(), new),
            (Term::BinOp(op, _, b), 0) => Term::BinOp(*op, new, b.clone()),
            (Term::BinOp(op, a, _), 1) => Term::BinOp(*op, a.clone(), new),
            (Term::If(_, b, c), 0) => Term::If(new, b.clone(), c.clone()),
            (Term::If(a, _, c), 1) => Term::If(a.clone(), new, c.clone()),
            (Term::If(a, b, _), 2) => Term::If(a.clone(), b.clone(), new),
            (Term::Seq(_, b), 0) => Term::Seq(new, b.clone()),
            (Term::Seq(a, _), 1) => Term::Seq(a.clone(), new),
            _ => return None,
        };
        Some(t)
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn subterm(&self, path: &[usize]) -> Option<&Term> {
        let mut cur = self;
        for &i in path {
            cur = cur.child(i)?;
        }
        Some(cur)
    }

    /// Replace the subterm at `path`, sharing everything off the path.
    pub fn replace_at(&self, path: &[usize], new: Term) -> Option<Term> {
        match path.split_first() {
            None => Some(new),
            Some((&i, rest)) => {
                let child = self.child(i)?;
                let replaced = child.replace_at(rest, new)?;
                self.with_child(i, Arc::new(replaced))
            }
        }
    }

    /// Names bound by λs strictly above `path`.
    pub fn binders_on_path(&self, path: &[usize]) -> Option<VarSet> {
        let mut out = VarSet::new();
        let mut cur = self;
        for &i in path {
            if let Term::Lam(x, _) = cur {
                out.insert(x.clone());
            }
            cur = cur.child(i)?;
        }
        Some(out)
    }

    /// Every path in the term, pre-order (parents before children).
    pub fn paths(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut stack = vec![(self, Vec::new())];
        while let Some((t, p)) = stack.pop() {
            let kids = t.children();
            for i in (0..kids.len()).rev() {
                let mut q = p.clone();
                q.push(i);
                stack.push((kids[i], q));
            }
            out.push(p);
        }
        out
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_term(self))
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_term(self))
    }
}

pub fn free_vars(e: &Term) -> VarSet {
    let mut out = VarSet::new();
    collect_free(e, &mut Vec::new(), &mut out);
    out
}

fn collect_free<'a>(e: &'a Term, bound: &mut Vec<&'a Name>, out: &mut VarSet) {
    match e {
        Term::Var(x) => {
            if !bound.contains(&x) {
                out.insert(x.clone());
            }
        }
        Term::Lam(x, b) => {
            bound.push(x);
            collect_free(b, bound, out);
            bound.pop();
        }
        _ => {
            for c in e.children() {
                collect_free(c, bound, out);
            }
        }
    }
}

/// Every name occurring in `e`, bound or free.
pub fn all_names(e: &Term) -> VarSet {
    let mut out = VarSet::new();
    let mut stack = vec![e];
    while let Some(t) = stack.pop() {
        match t {
            Term::Var(x) | Term::Lam(x, _) => {
                out.insert(x.clone());
            }
            _ => {}
        }
        stack.extend(t.children().into_iter().map(|c| &**c));
    }
    out
}

pub fn is_closed(e: &Term) -> bool {
    free_vars(e).is_empty()
}

pub fn is_well_formed(delta: &VarSet, e: &Term) -> bool {
    free_vars(e).is_subset(delta)
}

/// A name derived from `base` that is not in `avoid`.
pub fn fresh_name(base: &Name, avoid: &VarSet) -> Name {
    if !avoid.contains(base) {
        return base.clone();
    }
    let stem = base.as_str();
    (1..)
        .map(|n| Name::from(format!("{stem}_{n}")))
        .find(|cand| !avoid.contains(cand))
        .expect("unbounded search")
}

/// Capture-avoiding substitution `e[x := v]`.
pub fn substitute(e: &Term, x: &Name, v: &Term) -> Term {
    let fv = free_vars(v);
    let v = Arc::new(v.clone());
    match subst_node(e, x, &v, &fv) {
        Some(t) => t,
        None => e.clone(),
    }
}

/// `None` means the node is unchanged, which lets callers reuse the
/// original `Arc` and keep substitution allocation proportional to the
/// number of occurrences.
fn subst_node(e: &Term, x: &Name, v: &Arc<Term>, fv_v: &VarSet) -> Option<Term> {
    match e {
        Term::Var(y) if y == x => Some((**v).clone()),
        Term::Var(_) | Term::Const(_) | Term::Err(_) | Term::Unreachable => None,
        Term::Lam(y, _) if y == x => None,
        Term::Lam(y, b) => {
            if fv_v.contains(y) && free_vars(b).contains(x) {
                let mut avoid = fv_v.clone();
                avoid.extend(all_names(b));
                avoid.insert(x.clone());
                let y2 = fresh_name(y, &avoid);
                let renamed = substitute(b, y, &Term::Var(y2.clone()));
                let body = subst_arc(&Arc::new(renamed), x, v, fv_v);
                Some(Term::Lam(y2, body))
            } else {
                subst_node(b, x, v, fv_v).map(|nb| Term::Lam(y.clone(), Arc::new(nb)))
            }
        }
        _ => {
            let kids = e.children();
            let new: Vec<Arc<Term>> = kids.iter().map(|c| subst_arc(c, x, v, fv_v)).collect();
            if kids.iter().zip(&new).all(|(a, b)| Arc::ptr_eq(a, b)) {
                return None;
            }
            let mut out = e.clone();
            for (i, c) in new.into_iter().enumerate() {
                out = out.with_child(i, c).expect("same arity");
            }
            Some(out)
        }
    }
}

fn subst_arc(e: &Arc<Term>, x: &Name, v: &Arc<Term>, fv_v: &VarSet) -> Arc<Term> {
    if let Term::Var(y) = &**e {
        if y == x {
            return v.clone();
        }
    }
    match subst_node(e, x, v, fv_v) {
        Some(t) => Arc::new(t),
        None => e.clone(),
    }
}

/// α-equivalence: identical up to consistent renaming of bound variables.
pub fn alpha_eq(a: &Term, b: &Term) -> bool {
    aeq(a, b, &mut Vec::new(), &mut Vec::new())
}

fn aeq<'a>(a: &'a Term, b: &'a Term, ea: &mut Vec<&'a Name>, eb: &mut Vec<&'a Name>) -> bool {
    match (a, b) {
        (Term::Var(x), Term::Var(y)) => {
            let ix = ea.iter().rposition(|n| *n == x);
            let iy = eb.iter().rposition(|n| *n == y);
            match (ix, iy) {
                (Some(i), Some(j)) => i == j,
                (None, None) => x == y,
                _ => false,
            }
        }
        (Term::Lam(x, ba), Term::Lam(y, bb)) => {
            ea.push(x);
            eb.push(y);
            let r = aeq(ba, bb, ea, eb);
            ea.pop();
            eb.pop();
            r
        }
        (Term::Const(c), Term::Const(d)) => c == d,
        (Term::Err(k), Term::Err(l)) => k == l,
        (Term::Unreachable, Term::Unreachable) => true,
        (Term::App(a1, a2), Term::App(b1, b2)) | (Term::Seq(a1, a2), Term::Seq(b1, b2)) => {
            aeq(a1, b1, ea, eb) && aeq(a2, b2, ea, eb)
        }
        (Term::BinOp(o1, a1, a2), Term::BinOp(o2, b1, b2)) => o1 == o2 && aeq(a1, b1, ea, eb) && aeq(a2, b2, ea, eb),
        (Term::If(a1, a2, a3), Term::If(b1, b2, b3)) => {
            aeq(a1, b1, ea, eb) && aeq(a2, b2, ea, eb) && aeq(a3, b3, ea, eb)
        }
        _ => false,
    }
}

/// Rename every bound variable to a positional name (`_0`, `_1`, ...
/// by binding depth), skipping names that occur free. α-equivalent terms
/// canonicalize to syntactically identical terms.
pub fn canonicalize(e: &Term) -> Term {
    let free = free_vars(e);
    canon(e, &free, &mut Vec::new())
}

fn canon(e: &Term, free: &VarSet, env: &mut Vec<(Name, Name)>) -> Term {
    match e {
        Term::Var(x) => match env.iter().rev().find(|(old, _)| old == x) {
            Some((_, new)) => Term::Var(new.clone()),
            None => e.clone(),
        },
        Term::Lam(x, b) => {
            let mut depth = env.len();
            let new = loop {
                let cand = Name::from(format!("_{depth}"));
                if !free.contains(&cand) {
                    break cand;
                }
                depth += 1;
            };
            env.push((x.clone(), new.clone()));
            let body = canon(b, free, env);
            env.pop();
            Term::Lam(new, Arc::new(body))
        }
        _ => {
            let mut out = e.clone();
            for (i, c) in e.children().into_iter().enumerate() {
                let nc = canon(c, free, env);
                out = out.with_child(i, Arc::new(nc)).expect("same arity");
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vs(names: &[&str]) -> VarSet {
        names.iter().map(|n| Name::new(n)).collect()
    }

    #[test]
    fn free_vars_examples() {
        assert!(free_vars(&Term::lam("x", Term::var("x"))).is_empty());
        assert_eq!(
            free_vars(&Term::binop(BinOp::Add, Term::var("x"), Term::int(1))),
            vs(&["x"])
        );
        assert_eq!(
            free_vars(&Term::if_(Term::var("p"), Term::var("p"), Term::Unreachable)),
            vs(&["p"])
        );
    }

    #[test]
    fn well_formed_examples() {
        assert!(is_well_formed(&vs(&["x"]), &Term::var("x")));
        assert!(is_well_formed(&vs(&[]), &Term::lam("x", Term::var("x"))));
        assert!(!is_well_formed(
            &vs(&[]),
            &Term::binop(BinOp::Add, Term::var("x"), Term::int(1))
        ));
    }

    #[test]
    fn substitution_examples() {
        let x = Name::new("x");
        assert_eq!(substitute(&Term::var("x"), &x, &Term::int(5)), Term::int(5));
        let id = Term::lam("x", Term::var("x"));
        assert_eq!(substitute(&id, &x, &Term::int(5)), id);

        // (λy. x)[x := y] must rename the binder.
        let t = substitute(&Term::lam("y", Term::var("x")), &x, &Term::var("y"));
        match &t {
            Term::Lam(y2, body) => {
                assert_ne!(y2.as_str(), "y");
                assert_eq!(**body, Term::var("y"));
            }
            other => panic!("expected lambda, got {other}"),
        }
    }

    #[test]
    fn substitution_renames_nested_capture() {
        // (λy. λy_1. x y y_1)[x := y]
        let body = Term::app(Term::app(Term::var("x"), Term::var("y")), Term::var("y_1"));
        let t = Term::lam("y", Term::lam("y_1", body));
        let out = substitute(&t, &Name::new("x"), &Term::var("y"));
        assert_eq!(free_vars(&out), vs(&["y"]));
        let expected = parse_term("(lambda (a b) (y a b))").unwrap();
        assert!(alpha_eq(&out, &expected), "{out}");
    }

    #[test]
    fn alpha_eq_examples() {
        assert!(alpha_eq(
            &Term::lam("x", Term::var("x")),
            &Term::lam("y", Term::var("y"))
        ));
        assert!(!alpha_eq(
            &Term::lam("x", Term::var("x")),
            &Term::lam("x", Term::int(1))
        ));
        assert!(alpha_eq(&Term::Unreachable, &Term::Unreachable));
        // free vs bound occurrence
        assert!(!alpha_eq(
            &Term::lam("x", Term::var("y")),
            &Term::lam("y", Term::var("y"))
        ));
    }

    #[test]
    fn canonical_forms_agree_on_alpha_equivalent_terms() {
        let a = parse_term("(lambda (x y) (x y z))").unwrap();
        let b = parse_term("(lambda (p q) (p q z))").unwrap();
        assert_eq!(canonicalize(&a), canonicalize(&b));
        assert_eq!(print_term(&canonicalize(&a)), print_term(&canonicalize(&b)));
    }

    #[test]
    fn paths_and_replacement() {
        let t = parse_term("(if x (+ 1 2) (unreachable))").unwrap();
        assert_eq!(t.paths().len(), t.size());
        assert_eq!(t.subterm(&[1, 0]), Some(&Term::int(1)));
        let r = t.replace_at(&[2], Term::int(9)).unwrap();
        assert_eq!(r, parse_term("(if x (+ 1 2) 9)").unwrap());
        assert!(t.subterm(&[3]).is_none());
        assert!(t.replace_at(&[0, 0], Term::int(1)).is_none());
    }
}
