//! Standard reduction: the run-time semantics. Left-to-right call-by-value
//! evaluation by substitution, with `unreachable` and errors discarding their
//! evaluation context in a single step.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;

use crate::term::{free_vars, substitute, BinOp, Const, ErrLabel, Term, VarSet};

/// Default step budget for command-line use.
pub const DEFAULT_FUEL: u64 = 100_000;

/// The primitive operator table. `None` means the arguments are outside
/// the operator's domain.
pub fn delta(op: BinOp, a: &Const, b: &Const) -> Option<Const> {
    use BinOp::*;
    match (a, b) {
        (Const::Int(x), Const::Int(y)) => Some(match op {
            Add => Const::Int(x + y),
            Sub => Const::Int(x - y),
            Mul => Const::Int(x * y),
            Lt => Const::Bool(x < y),
            Le => Const::Bool(x <= y),
            Eq => Const::Bool(x == y),
            Ne => Const::Bool(x != y),
        }),
        (Const::Bool(x), Const::Bool(y)) => match op {
            Eq => Some(Const::Bool(x == y)),
            Ne => Some(Const::Bool(x != y)),
            _ => None,
        },
        _ => None,
    }
}

/// `delta` lifted to terms: both operands must be constants.
pub fn delta_terms(op: BinOp, a: &Term, b: &Term) -> Option<Const> {
    delta(op, a.as_const()?, b.as_const()?)
}

/// What a closed program can be seen to do.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Observation {
    Value(Const),
    /// Evaluation produced some λ; its body is not observed.
    Function,
    ErrK(ErrLabel),
    UndefHit,
    /// Fuel ran out after this many steps.
    Timeout(u64),
}

impl Observation {
    pub fn is_timeout(&self) -> bool {
        matches!(self, Observation::Timeout(_))
    }

    /// Observation of an answer term.
    pub fn of_answer(a: &Term) -> Option<Observation> {
        match a {
            Term::Const(c) => Some(Observation::Value(c.clone())),
            Term::Lam(..) => Some(Observation::Function),
            Term::Err(k) => Some(Observation::ErrK(k.clone())),
            Term::Unreachable => Some(Observation::UndefHit),
            _ => None,
        }
    }

    /// Equality on the observable alphabet, treating two timeouts as equal.
    pub fn same_answer(&self, other: &Observation) -> bool {
        match (self, other) {
            (Observation::Timeout(_), Observation::Timeout(_)) => true,
            _ => self == other,
        }
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observation::Value(c) => write!(f, "value {c}"),
            Observation::Function => f.write_str("function"),
            Observation::ErrK(k) => write!(f, "error {k}"),
            Observation::UndefHit => f.write_str("undef"),
            Observation::Timeout(_) => f.write_str("timeout"),
        }
    }
}

/// Bounded answer to "does this program reach `unreachable`?".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UndefVerdict {
    Yes,
    No,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("term has free variables: {}", fmt_vars(.0))]
    OpenTerm(VarSet),
}

fn fmt_vars(vs: &VarSet) -> String {
    vs.iter().map(|v| v.as_str()).collect::<Vec<_>>().join(", ")
}

fn ensure_closed(e: &Term) -> Result<(), EvalError> {
    let fv = free_vars(e);
    if fv.is_empty() {
        Ok(())
    } else {
        Err(EvalError::OpenTerm(fv))
    }
}

/// One frame of an evaluation context.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalFrame {
    /// `□ e`
    AppFun(Arc<Term>),
    /// `v □`
    AppArg(Arc<Term>),
    /// `op □ e`
    BinLeft(BinOp, Arc<Term>),
    /// `op v □`
    BinRight(BinOp, Arc<Term>),
    /// `if □ e e`
    IfTest(Arc<Term>, Arc<Term>),
    /// `seq □ e`
    SeqFirst(Arc<Term>),
}

/// A term with one hole, outermost frame first.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EvalContext {
    pub frames: Vec<EvalFrame>,
}

impl EvalContext {
    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn plug(&self, e: Term) -> Term {
        self.frames.iter().rev().fold(e, |acc, fr| {
            let acc = Arc::new(acc);
            match fr {
                EvalFrame::AppFun(a) => Term::App(acc, a.clone()),
                EvalFrame::AppArg(f) => Term::App(f.clone(), acc),
                EvalFrame::BinLeft(op, b) => Term::BinOp(*op, acc, b.clone()),
                EvalFrame::BinRight(op, a) => Term::BinOp(*op, a.clone(), acc),
                EvalFrame::IfTest(t, e) => Term::If(acc, t.clone(), e.clone()),
                EvalFrame::SeqFirst(b) => Term::Seq(acc, b.clone()),
            }
        })
    }

    /// Child-index path from the root to the hole.
    pub fn path(&self) -> Vec<usize> {
        self.frames
            .iter()
            .map(|fr| match fr {
                EvalFrame::AppArg(_) | EvalFrame::BinRight(..) => 1,
                _ => 0,
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decomposition {
    AlreadyAnswer,
    /// `e = ctx[redex]`; the redex is a notion-of-reduction redex, or an
    /// error or `unreachable` under a non-empty context.
    Redex {
        ctx: EvalContext,
        redex: Term,
    },
}

/// Split a closed term into evaluation context and redex.
pub fn decompose(e: &Term) -> Result<Decomposition, EvalError> {
    ensure_closed(e)?;
    if e.is_answer() {
        return Ok(Decomposition::AlreadyAnswer);
    }
    let mut frames = Vec::new();
    let mut cur = e;
    loop {
        let next: Option<(&Term, EvalFrame)> = match cur {
            Term::App(f, a) if !f.is_value() => Some((f, EvalFrame::AppFun(a.clone()))),
            Term::App(f, a) if !a.is_value() => Some((a, EvalFrame::AppArg(f.clone()))),
            Term::BinOp(op, a, b) if !a.is_value() => Some((a, EvalFrame::BinLeft(*op, b.clone()))),
            Term::BinOp(op, a, b) if !b.is_value() => Some((b, EvalFrame::BinRight(*op, a.clone()))),
            Term::If(c, t, f) if !c.is_value() => Some((c, EvalFrame::IfTest(t.clone(), f.clone()))),
            Term::Seq(a, b) if !a.is_value() => Some((a, EvalFrame::SeqFirst(b.clone()))),
            _ => None,
        };
        match next {
            Some((child, frame)) => {
                frames.push(frame);
                cur = child;
            }
            None => {
                return Ok(Decomposition::Redex {
                    ctx: EvalContext { frames },
                    redex: cur.clone(),
                })
            }
        }
    }
}

/// Contract a redex whose subterms are all values (the notions of
/// reduction). Errors and `unreachable` are handled by the caller.
pub fn contract(redex: &Term) -> Option<Term> {
    match redex {
        Term::If(c, t, f) if c.is_value() => Some(if matches!(&**c, Term::Const(k) if k.is_false()) {
            (**f).clone()
        } else {
            (**t).clone()
        }),
        Term::App(f, a) if f.is_value() && a.is_value() => Some(match &**f {
            Term::Lam(x, body) => substitute(body, x, a),
            _ => Term::Err(ErrLabel::beta()),
        }),
        Term::Seq(a, b) if a.is_value() => Some((**b).clone()),
        Term::BinOp(op, a, b) if a.is_value() && b.is_value() => Some(match delta_terms(*op, a, b) {
            Some(c) => Term::Const(c),
            None => Term::Err(ErrLabel::delta()),
        }),
        _ => None,
    }
}

/// Result of one standard-reduction step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    AlreadyAnswer,
    Next(Term),
}

/// Perform exactly one step on a closed term.
pub fn step(e: &Term) -> Result<Step, EvalError> {
    ensure_closed(e)?;
    Ok(step_closed(e))
}

fn step_closed(e: &Term) -> Step {
    if e.is_answer() {
        return Step::AlreadyAnswer;
    }
    match step_rec(e) {
        Inner::Reduced(t) | Inner::Abort(t) => Step::Next(t),
    }
}

enum Inner {
    Reduced(Term),
    /// An error or `unreachable` found in evaluation position; it replaces
    /// the whole program.
    Abort(Term),
}

/// Recursive step on a non-answer term. Mirrors `decompose` + `contract`
/// without materialising the context.
fn step_rec(e: &Term) -> Inner {
    fn down(child: &Arc<Term>, rebuild: impl FnOnce(Arc<Term>) -> Term) -> Inner {
        match &**child {
            Term::Err(_) | Term::Unreachable => Inner::Abort((**child).clone()),
            _ => match step_rec(child) {
                Inner::Reduced(t) => Inner::Reduced(rebuild(Arc::new(t))),
                abort => abort,
            },
        }
    }
    match e {
        Term::App(f, a) if !f.is_value() => down(f, |n| Term::App(n, a.clone())),
        Term::App(f, a) if !a.is_value() => down(a, |n| Term::App(f.clone(), n)),
        Term::BinOp(op, a, b) if !a.is_value() => down(a, |n| Term::BinOp(*op, n, b.clone())),
        Term::BinOp(op, a, b) if !b.is_value() => down(b, |n| Term::BinOp(*op, a.clone(), n)),
        Term::If(c, t, f) if !c.is_value() => down(c, |n| Term::If(n, t.clone(), f.clone())),
        Term::Seq(a, b) if !a.is_value() => down(a, |n| Term::Seq(n, b.clone())),
        _ => match contract(e) {
            Some(t) => Inner::Reduced(t),
            None => unreachable!("closed non-answer term without redex: {e}"),
        },
    }
}

/// Evaluate for at most `fuel` steps.
pub fn eval(e: &Term, fuel: u64) -> Result<Observation, EvalError> {
    eval_counting(e, fuel).map(|(o, _)| o)
}

/// Like [`eval`], also returning the number of steps taken.
pub fn eval_counting(e: &Term, fuel: u64) -> Result<(Observation, u64), EvalError> {
    ensure_closed(e)?;
    let mut cur = e.clone();
    let mut steps = 0;
    loop {
        if let Some(obs) = Observation::of_answer(&cur) {
            return Ok((obs, steps));
        }
        if steps >= fuel {
            return Ok((Observation::Timeout(steps), steps));
        }
        match step_closed(&cur) {
            Step::Next(t) => cur = t,
            Step::AlreadyAnswer => unreachable!("answers are observed above"),
        }
        steps += 1;
    }
}

/// Evaluate and return the final term (answer or the term at fuel exhaustion).
pub fn run(e: &Term, fuel: u64) -> Result<(Term, u64), EvalError> {
    ensure_closed(e)?;
    let mut cur = e.clone();
    let mut steps = 0;
    while steps < fuel {
        match step_closed(&cur) {
            Step::Next(t) => cur = t,
            Step::AlreadyAnswer => break,
        }
        steps += 1;
    }
    Ok((cur, steps))
}

pub fn is_undef(e: &Term, fuel: u64) -> Result<UndefVerdict, EvalError> {
    Ok(match eval(e, fuel)? {
        Observation::UndefHit => UndefVerdict::Yes,
        Observation::Timeout(_) => UndefVerdict::Unknown,
        _ => UndefVerdict::No,
    })
}

/// Convenience for integer results.
pub fn int_value(o: &Observation) -> Option<&BigInt> {
    match o {
        Observation::Value(Const::Int(i)) => Some(i),
        _ => None,
    }
}
