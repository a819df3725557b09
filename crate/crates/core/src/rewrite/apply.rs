//! Applying a single rewrite step at a path, and replaying traces.

use std::sync::Arc;

use crate::eval::delta_terms;
use crate::safety::{is_safe, SafetyMode};
use crate::term::{alpha_eq, free_vars, print_term, substitute, BinOp, Const, Term, VarSet};

use super::{format_path, Direction, RewriteStep, RuleId, RuleParams};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RewriteError {
    #[error("path {0} does not resolve to a subterm")]
    PathInvalid(String),
    #[error("{0} is forward-only and cannot be applied bwd")]
    IllegalDirection(RuleId),
    #[error("{rule} {dir} does not match: {reason}")]
    NonMatching {
        rule: RuleId,
        dir: Direction,
        reason: String,
    },
    #[error("{rule} {dir} side condition failed: {condition}")]
    SideConditionFailed {
        rule: RuleId,
        dir: Direction,
        condition: String,
    },
    #[error("{rule} {dir} needs parameter `{param}`")]
    MissingParam {
        rule: RuleId,
        dir: Direction,
        param: &'static str,
    },
    #[error("{rule} {dir} parameter `{param}` is not well-formed here: {reason}")]
    IllFormedParam {
        rule: RuleId,
        dir: Direction,
        param: &'static str,
        reason: String,
    },
}

impl RewriteError {
    /// The variant name, for reports.
    pub fn kind(&self) -> &'static str {
        match self {
            RewriteError::PathInvalid(_) => "PathInvalid",
            RewriteError::IllegalDirection(_) => "IllegalDirection",
            RewriteError::NonMatching { .. } => "NonMatching",
            RewriteError::SideConditionFailed { .. } => "SideConditionFailed",
            RewriteError::MissingParam { .. } => "MissingParam",
            RewriteError::IllFormedParam { .. } => "IllFormedParam",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("step {index} ({step}): {source}")]
pub struct TraceError {
    pub index: usize,
    pub step: String,
    #[source]
    pub source: RewriteError,
}

/// Apply `step` to `e`. The step's recorded safety provider, if any, takes
/// precedence over `safety`.
///
/// Parameters read per rule (forward / backward):
/// P1 bwd `term`; P2, P4 bwd `term`; P3 bwd optional `op`; P5 bwd `op` +
/// `term`, or `term` + `term2`; M1 bwd `value` + `term`; M2 bwd `term`;
/// M3 bwd `var` + `body` + `arg`; M4 bwd `term`; M5 bwd `op` + `term` +
/// `term2`; M6, M7 both directions `hole`; M8 bwd `term`; M9 bwd `value`.
pub fn apply_rule(e: &Term, step: &RewriteStep, safety: SafetyMode) -> Result<Term, RewriteError> {
    let site = e
        .subterm(&step.path)
        .ok_or_else(|| RewriteError::PathInvalid(format_path(&step.path)))?;
    let mut ambient = free_vars(e);
    ambient.extend(e.binders_on_path(&step.path).expect("path resolved"));
    let new = rewrite_site(site, step, &ambient, safety)?;
    Ok(e.replace_at(&step.path, new).expect("path resolved"))
}

/// The rewritten site alone, given the variables in scope there.
pub(crate) fn rewrite_site(
    site: &Term,
    step: &RewriteStep,
    ambient: &VarSet,
    safety: SafetyMode,
) -> Result<Term, RewriteError> {
    if !step.rule.allows(step.dir) {
        return Err(RewriteError::IllegalDirection(step.rule));
    }
    let cx = Site {
        rule: step.rule,
        dir: step.dir,
        params: &step.params,
        ambient,
        safety: step.params.safety.unwrap_or(safety),
    };
    cx.rewrite(site)
}

/// Fold [`apply_rule`] over a trace, reporting the first failing step.
pub fn apply_trace(e: &Term, trace: &[RewriteStep], safety: SafetyMode) -> Result<Term, TraceError> {
    let mut cur = e.clone();
    for (index, step) in trace.iter().enumerate() {
        cur = apply_rule(&cur, step, safety).map_err(|source| TraceError {
            index,
            step: step.to_string(),
            source,
        })?;
    }
    Ok(cur)
}

/// Whether `hole` is a non-empty path through a generalized evaluation
/// context: the evaluation-context grammar with variables also allowed
/// where values are. It never descends under a λ.
pub fn is_eplus_path(t: &Term, hole: &[usize]) -> bool {
    if hole.is_empty() {
        return false;
    }
    let mut cur = t;
    for &i in hole {
        let ok = match cur {
            Term::App(f, _) | Term::BinOp(_, f, _) => i == 0 || (i == 1 && value_or_var(f)),
            Term::If(..) | Term::Seq(..) => i == 0,
            _ => false,
        };
        if !ok {
            return false;
        }
        cur = cur.child(i).expect("index checked");
    }
    true
}

fn value_or_var(t: &Term) -> bool {
    t.is_value() || matches!(t, Term::Var(_))
}

/// All non-empty generalized-evaluation-context hole paths in `t`, pre-order.
pub fn eplus_holes(t: &Term) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    collect_holes(t, &mut Vec::new(), &mut out);
    out
}

fn collect_holes(t: &Term, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    let allowed: &[usize] = match t {
        Term::App(f, _) | Term::BinOp(_, f, _) if value_or_var(f) => &[0, 1],
        Term::App(..) | Term::BinOp(..) | Term::If(..) | Term::Seq(..) => &[0],
        _ => &[],
    };
    for &i in allowed {
        path.push(i);
        out.push(path.clone());
        collect_holes(t.child(i).expect("index in range"), path, out);
        path.pop();
    }
}

struct Site<'a> {
    rule: RuleId,
    dir: Direction,
    params: &'a RuleParams,
    ambient: &'a VarSet,
    safety: SafetyMode,
}

impl Site<'_> {
    fn no_match(&self, reason: impl Into<String>) -> RewriteError {
        RewriteError::NonMatching {
            rule: self.rule,
            dir: self.dir,
            reason: reason.into(),
        }
    }

    fn side(&self, condition: impl Into<String>) -> RewriteError {
        RewriteError::SideConditionFailed {
            rule: self.rule,
            dir: self.dir,
            condition: condition.into(),
        }
    }

    fn missing(&self, param: &'static str) -> RewriteError {
        RewriteError::MissingParam {
            rule: self.rule,
            dir: self.dir,
            param,
        }
    }

    fn require_safe(&self, t: &Term) -> Result<(), RewriteError> {
        if is_safe(self.safety, t) {
            Ok(())
        } else {
            Err(self.side(format!("{} is not safe ({})", print_term(t), self.safety)))
        }
    }

    /// A parameter term, checked to be well-formed under the ambient
    /// variables of the site (plus `extra`).
    fn param(
        &self,
        name: &'static str,
        t: &Option<Term>,
        extra: Option<&crate::term::Name>,
    ) -> Result<Term, RewriteError> {
        let t = t.clone().ok_or_else(|| self.missing(name))?;
        let mut fv = free_vars(&t);
        if let Some(x) = extra {
            fv.remove(x);
        }
        let stray: Vec<String> = fv.difference(self.ambient).map(|v| v.to_string()).collect();
        if !stray.is_empty() {
            return Err(RewriteError::IllFormedParam {
                rule: self.rule,
                dir: self.dir,
                param: name,
                reason: format!("unbound {}", stray.join(", ")),
            });
        }
        Ok(t)
    }

    fn hole(&self, t: &Term) -> Result<Vec<usize>, RewriteError> {
        let hole = self.params.hole.clone().ok_or_else(|| self.missing("hole"))?;
        if !is_eplus_path(t, &hole) {
            return Err(self.no_match(format!("{} is not an evaluation-context hole", format_path(&hole))));
        }
        Ok(hole)
    }

    fn rewrite(&self, t: &Term) -> Result<Term, RewriteError> {
        use Direction::*;
        use RuleId::*;
        match (self.rule, self.dir) {
            (P1, Fwd) => match t {
                Term::Seq(a, b) if **b == Term::Unreachable => {
                    self.require_safe(a)?;
                    Ok(Term::Unreachable)
                }
                _ => Err(self.no_match("expected (seq e (unreachable))")),
            },
            (P1, Bwd) => {
                self.expect_unreachable(t)?;
                let e = self.param("term", &self.params.term, None)?;
                self.require_safe(&e)?;
                Ok(Term::seq(e, Term::Unreachable))
            }
            (P2, Fwd) => match t {
                Term::Seq(a, _) if **a == Term::Unreachable => Ok(Term::Unreachable),
                _ => Err(self.no_match("expected (seq (unreachable) e)")),
            },
            (P2, Bwd) => {
                self.expect_unreachable(t)?;
                let e = self.param("term", &self.params.term, None)?;
                Ok(Term::seq(Term::Unreachable, e))
            }
            (P3, Fwd) => match t {
                Term::App(a, b) | Term::BinOp(_, a, b) if **b == Term::Unreachable => {
                    Ok(Term::Seq(a.clone(), b.clone()))
                }
                _ => Err(self.no_match("expected an application or operator with (unreachable) second")),
            },
            (P3, Bwd) => match t {
                Term::Seq(a, b) if **b == Term::Unreachable => Ok(match self.params.op {
                    Some(op) => Term::BinOp(op, a.clone(), b.clone()),
                    None => Term::App(a.clone(), b.clone()),
                }),
                _ => Err(self.no_match("expected (seq e (unreachable))")),
            },
            (P4, Fwd) => match t {
                Term::App(a, _) if **a == Term::Unreachable => Ok(Term::Unreachable),
                _ => Err(self.no_match("expected ((unreachable) e)")),
            },
            (P4, Bwd) => {
                self.expect_unreachable(t)?;
                let e = self.param("term", &self.params.term, None)?;
                Ok(Term::app(Term::Unreachable, e))
            }
            (P5, Fwd) => match t {
                Term::BinOp(_, a, _) | Term::If(a, _, _) if **a == Term::Unreachable => Ok(Term::Unreachable),
                _ => Err(self.no_match("expected an operator or if with (unreachable) first")),
            },
            (P5, Bwd) => {
                self.expect_unreachable(t)?;
                let e = self.param("term", &self.params.term, None)?;
                match self.params.op {
                    Some(op) => Ok(Term::binop(op, Term::Unreachable, e)),
                    None => {
                        let e2 = self.param("term2", &self.params.term2, None)?;
                        Ok(Term::if_(Term::Unreachable, e, e2))
                    }
                }
            }
            (U1, Fwd) => match t {
                Term::If(a, b, c) if **c == Term::Unreachable => Ok(Term::Seq(a.clone(), b.clone())),
                _ => Err(self.no_match("expected (if e1 e2 (unreachable))")),
            },
            (U2, Fwd) => match t {
                Term::If(a, b, c) if **b == Term::Unreachable => Ok(Term::Seq(a.clone(), c.clone())),
                _ => Err(self.no_match("expected (if e1 (unreachable) e3)")),
            },
            (U1, Bwd) | (U2, Bwd) => Err(RewriteError::IllegalDirection(self.rule)),
            (M1, Fwd) => match t {
                Term::If(v, a, _) if v.is_value() => {
                    if is_false(v) {
                        Err(self.side("test is false"))
                    } else {
                        Ok((**a).clone())
                    }
                }
                _ => Err(self.no_match("expected (if v e1 e2) with v a value")),
            },
            (M1, Bwd) => {
                let v = self.param("value", &self.params.value, None)?;
                if !v.is_value() {
                    return Err(self.side(format!("{} is not a value", print_term(&v))));
                }
                if is_false(&v) {
                    return Err(self.side("value is false"));
                }
                let other = self.param("term", &self.params.term, None)?;
                Ok(Term::if_(v, t.clone(), other))
            }
            (M2, Fwd) => match t {
                Term::If(v, _, b) if is_false(v) => Ok((**b).clone()),
                _ => Err(self.no_match("expected (if false e1 e2)")),
            },
            (M2, Bwd) => {
                let other = self.param("term", &self.params.term, None)?;
                Ok(Term::if_(Term::bool(false), other, t.clone()))
            }
            (M3, Fwd) => match t {
                Term::App(f, s) => match &**f {
                    Term::Lam(x, body) => {
                        self.require_safe(s)?;
                        Ok(substitute(body, x, s))
                    }
                    _ => Err(self.no_match("expected ((lambda (x) e) e')")),
                },
                _ => Err(self.no_match("expected ((lambda (x) e) e')")),
            },
            (M3, Bwd) => {
                let x = self.params.var.clone().ok_or_else(|| self.missing("var"))?;
                let body = self.param("body", &self.params.body, Some(&x))?;
                let arg = self.param("arg", &self.params.arg, None)?;
                self.require_safe(&arg)?;
                if !alpha_eq(&substitute(&body, &x, &arg), t) {
                    return Err(self.side("body[var := arg] differs from the site"));
                }
                Ok(Term::app(Term::lam(x, body), arg))
            }
            (M4, Fwd) => match t {
                Term::Seq(a, b) => {
                    self.require_safe(a)?;
                    Ok((**b).clone())
                }
                _ => Err(self.no_match("expected (seq e1 e2)")),
            },
            (M4, Bwd) => {
                let e = self.param("term", &self.params.term, None)?;
                self.require_safe(&e)?;
                Ok(Term::seq(e, t.clone()))
            }
            (M5, Fwd) => match t {
                Term::BinOp(op, a, b) => match delta_terms(*op, a, b) {
                    Some(c) => Ok(Term::Const(c)),
                    None => Err(self.no_match("operands are not constants in the operator's domain")),
                },
                _ => Err(self.no_match("expected (op c1 c2)")),
            },
            (M5, Bwd) => {
                let Term::Const(c) = t else {
                    return Err(self.no_match("expected a constant"));
                };
                let op = self.params.op.ok_or_else(|| self.missing("op"))?;
                let a = self.param("term", &self.params.term, None)?;
                let b = self.param("term2", &self.params.term2, None)?;
                match delta_terms(op, &a, &b) {
                    Some(r) if &r == c => Ok(Term::binop(op, a, b)),
                    _ => Err(self.side(format!(
                        "({op} {} {}) does not compute {c}",
                        print_term(&a),
                        print_term(&b)
                    ))),
                }
            }
            (M6, Fwd) => {
                let hole = self.hole(t)?;
                match t.subterm(&hole) {
                    Some(Term::Seq(a, b)) => {
                        let inner = t.replace_at(&hole, (**b).clone()).expect("hole resolves");
                        Ok(Term::Seq(a.clone(), Arc::new(inner)))
                    }
                    _ => Err(self.no_match("hole does not hold a seq")),
                }
            }
            (M6, Bwd) => match t {
                Term::Seq(a, rest) => {
                    let hole = self.hole(rest)?;
                    let filled = rest.subterm(&hole).expect("hole resolves").clone();
                    let plugged = Term::Seq(a.clone(), Arc::new(filled));
                    Ok(rest.replace_at(&hole, plugged).expect("hole resolves"))
                }
                _ => Err(self.no_match("expected (seq e1 e2)")),
            },
            (M7, Fwd) => {
                let hole = self.hole(t)?;
                match t.subterm(&hole) {
                    Some(Term::If(c, a, b)) => {
                        let ta = t.replace_at(&hole, (**a).clone()).expect("hole resolves");
                        let tb = t.replace_at(&hole, (**b).clone()).expect("hole resolves");
                        Ok(Term::If(c.clone(), Arc::new(ta), Arc::new(tb)))
                    }
                    _ => Err(self.no_match("hole does not hold an if")),
                }
            }
            (M7, Bwd) => match t {
                Term::If(c, ta, tb) => {
                    let hole = self.hole(ta)?;
                    if !is_eplus_path(tb, &hole) || !same_context(ta, tb, &hole) {
                        return Err(self.side("branches do not share the context"));
                    }
                    let a = ta.subterm(&hole).expect("hole resolves").clone();
                    let b = tb.subterm(&hole).expect("hole resolves").clone();
                    let plugged = Term::if_((**c).clone(), a, b);
                    Ok(ta.replace_at(&hole, plugged).expect("hole resolves"))
                }
                _ => Err(self.no_match("expected (if e1 e2 e3)")),
            },
            (M8, Fwd) => match t {
                Term::If(c, a, b) => match &**c {
                    Term::Var(x) => {
                        let b2 = substitute(b, x, &Term::bool(false));
                        Ok(Term::If(c.clone(), a.clone(), Arc::new(b2)))
                    }
                    _ => Err(self.no_match("test is not a variable")),
                },
                _ => Err(self.no_match("expected (if x e1 e2)")),
            },
            (M8, Bwd) => match t {
                Term::If(c, a, b) => match &**c {
                    Term::Var(x) => {
                        let orig = self.param("term", &self.params.term, None)?;
                        if !alpha_eq(&substitute(&orig, x, &Term::bool(false)), b) {
                            return Err(self.side("term[x := false] differs from the else branch"));
                        }
                        Ok(Term::If(c.clone(), a.clone(), Arc::new(orig)))
                    }
                    _ => Err(self.no_match("test is not a variable")),
                },
                _ => Err(self.no_match("expected (if x e1 e2)")),
            },
            (M9, Fwd) => match t {
                Term::If(c, a, b) => match &**c {
                    Term::If(e, v1, f) if v1.is_value() && is_false(f) => {
                        if is_false(v1) {
                            return Err(self.side("inner then-value is false"));
                        }
                        Ok(Term::If(e.clone(), a.clone(), b.clone()))
                    }
                    _ => Err(self.no_match("test is not (if e v false)")),
                },
                _ => Err(self.no_match("expected (if (if e v false) e1 e2)")),
            },
            (M9, Bwd) => match t {
                Term::If(e, a, b) => {
                    let v = self.param("value", &self.params.value, None)?;
                    if !v.is_value() || is_false(&v) {
                        return Err(self.side(format!("{} is not a non-false value", print_term(&v))));
                    }
                    let test = Term::if_((**e).clone(), v, Term::bool(false));
                    Ok(Term::If(Arc::new(test), a.clone(), b.clone()))
                }
                _ => Err(self.no_match("expected (if e e1 e2)")),
            },
            (M10, _) => {
                let Some((x, c1, e1, c2, e2, e3)) = eq_chain(t) else {
                    return Err(self.no_match("expected (if (= x c1) e1 (if (= x c2) e2 e3))"));
                };
                if c1 == c2 {
                    return Err(self.side("constants are identical"));
                }
                if !c1.same_sort(c2) {
                    return Err(self.side("constants have different sorts"));
                }
                let test = |c: &Const| Term::binop(BinOp::Eq, Term::Var(x.clone()), Term::Const(c.clone()));
                Ok(Term::if_(
                    test(c2),
                    (**e2).clone(),
                    Term::if_(test(c1), (**e1).clone(), (**e3).clone()),
                ))
            }
        }
    }

    fn expect_unreachable(&self, t: &Term) -> Result<(), RewriteError> {
        if *t == Term::Unreachable {
            Ok(())
        } else {
            Err(self.no_match("expected (unreachable)"))
        }
    }
}

fn is_false(t: &Term) -> bool {
    matches!(t, Term::Const(c) if c.is_false())
}

type EqChain<'a> = (
    &'a crate::term::Name,
    &'a Const,
    &'a Arc<Term>,
    &'a Const,
    &'a Arc<Term>,
    &'a Arc<Term>,
);

fn eq_test(t: &Term) -> Option<(&crate::term::Name, &Const)> {
    match t {
        Term::BinOp(BinOp::Eq, a, b) => match (&**a, &**b) {
            (Term::Var(x), Term::Const(c)) => Some((x, c)),
            _ => None,
        },
        _ => None,
    }
}

fn eq_chain(t: &Term) -> Option<EqChain<'_>> {
    let Term::If(t1, e1, rest) = t else { return None };
    let Term::If(t2, e2, e3) = &**rest else { return None };
    let (x, c1) = eq_test(t1)?;
    let (y, c2) = eq_test(t2)?;
    (x == y).then_some((x, c1, e1, c2, e2, e3))
}

/// Whether `a` and `b` agree everywhere except at `hole` (which must be
/// an evaluation-context path in both, so no binders intervene).
fn same_context(a: &Term, b: &Term, hole: &[usize]) -> bool {
    let (mut x, mut y) = (a, b);
    for &i in hole {
        let (kx, ky) = (x.children(), y.children());
        let same_head = match (x, y) {
            (Term::App(..), Term::App(..)) | (Term::If(..), Term::If(..)) | (Term::Seq(..), Term::Seq(..)) => true,
            (Term::BinOp(o1, ..), Term::BinOp(o2, ..)) => o1 == o2,
            _ => false,
        };
        if !same_head || kx.len() != ky.len() {
            return false;
        }
        for j in 0..kx.len() {
            if j != i && !alpha_eq(kx[j], ky[j]) {
                return false;
            }
        }
        x = kx[i];
        y = ky[i];
    }
    true
}
