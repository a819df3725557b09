//! Program contexts: terms with one hole, possibly under binders.

use std::sync::Arc;

use rand::Rng;

use crate::term::{print_term, BinOp, Name, Term, VarSet};
use crate::values::ValuePool;

/// Name used for the hole when a context is printed.
pub const HOLE: &str = "[]";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Frame {
    /// `(□ e)`
    AppFun(Term),
    /// `(e □)`
    AppArg(Term),
    /// `(lambda (x) □)`
    LamBody(Name),
    /// `(op □ e)`
    BinLeft(BinOp, Term),
    /// `(op e □)`
    BinRight(BinOp, Term),
    /// `(if □ a b)`
    IfTest(Term, Term),
    /// `(if c □ b)`
    IfThen(Term, Term),
    /// `(if c a □)`
    IfElse(Term, Term),
    /// `(seq □ e)`
    SeqFirst(Term),
    /// `(seq e □)`
    SeqSecond(Term),
}

/// A context as a list of frames, outermost first.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Context {
    pub frames: Vec<Frame>,
}

impl Context {
    pub fn empty() -> Self {
        Context::default()
    }

    /// Fill the hole. Binders in the context capture free variables of `e`.
    pub fn plug(&self, e: &Term) -> Term {
        self.frames.iter().rev().fold(e.clone(), |acc, fr| {
            let h = Arc::new(acc);
            let a = |t: &Term| Arc::new(t.clone());
            match fr {
                Frame::AppFun(x) => Term::App(h, a(x)),
                Frame::AppArg(f) => Term::App(a(f), h),
                Frame::LamBody(x) => Term::Lam(x.clone(), h),
                Frame::BinLeft(op, x) => Term::BinOp(*op, h, a(x)),
                Frame::BinRight(op, x) => Term::BinOp(*op, a(x), h),
                Frame::IfTest(t, f) => Term::If(h, a(t), a(f)),
                Frame::IfThen(c, f) => Term::If(a(c), h, a(f)),
                Frame::IfElse(c, t) => Term::If(a(c), a(t), h),
                Frame::SeqFirst(x) => Term::Seq(h, a(x)),
                Frame::SeqSecond(x) => Term::Seq(a(x), h),
            }
        })
    }

    /// Variables bound at the hole.
    pub fn binds(&self) -> VarSet {
        self.frames
            .iter()
            .filter_map(|f| match f {
                Frame::LamBody(x) => Some(x.clone()),
                _ => None,
            })
            .collect()
    }

    /// Compose: `self[inner[□]]`.
    pub fn compose(&self, inner: &Context) -> Context {
        let mut frames = self.frames.clone();
        frames.extend(inner.frames.iter().cloned());
        Context { frames }
    }

    pub fn to_text(&self) -> String {
        print_term(&self.plug(&Term::var(HOLE)))
    }
}

/// Shape parameters for random contexts.
#[derive(Clone, Debug)]
pub struct ContextSpec {
    /// Maximum number of surrounding frames outside the closing binders.
    pub max_frames: usize,
    pub pool: ValuePool,
    /// Probability that the surrounding frames consume the hole's value.
    pub use_bias: f64,
}

impl ContextSpec {
    pub fn new(pool: ValuePool) -> Self {
        ContextSpec {
            max_frames: 3,
            pool,
            use_bias: 0.5,
        }
    }
}

/// A closing context for terms over `delta`: each variable is bound by an
/// applied λ to a sampled value, and the result sits in a random closed
/// surrounding context.
pub fn sample_context<R: Rng + ?Sized>(delta: &VarSet, spec: &ContextSpec, rng: &mut R) -> Context {
    let mut frames = Vec::new();
    let n = rng.gen_range(0..=spec.max_frames);
    let using = rng.gen_bool(spec.use_bias);
    for _ in 0..n {
        frames.extend(if using {
            using_frame(spec, rng)
        } else {
            any_frame(spec, rng)
        });
    }
    // Closing binders innermost: ((lambda (x) □) v) for every x.
    for x in delta {
        frames.push(Frame::AppFun(spec.pool.sample(rng)));
        frames.push(Frame::LamBody(x.clone()));
    }
    Context { frames }
}

/// Frames whose result depends on the hole's value.
fn using_frame<R: Rng + ?Sized>(spec: &ContextSpec, rng: &mut R) -> Vec<Frame> {
    match rng.gen_range(0..6) {
        0 => vec![Frame::AppFun(spec.pool.sample(rng))],
        1 => {
            let consumers = [
                "(lambda (y) y)",
                "(lambda (y) (+ y 1))",
                "(lambda (y) (if y 1 2))",
                "(lambda (y) (y 1))",
                "(lambda (y) (= y true))",
            ];
            let f = consumers[rng.gen_range(0..consumers.len())];
            vec![Frame::AppArg(crate::term::parse_term(f).expect("fixed"))]
        }
        2 => vec![Frame::BinLeft(random_op(rng), spec.pool.sample(rng))],
        3 => vec![Frame::BinRight(random_op(rng), spec.pool.sample(rng))],
        4 => vec![Frame::IfTest(Term::int(1), Term::int(2))],
        _ => {
            // Bind the value and return it after a second use.
            let y = Name::new("#y");
            vec![Frame::AppArg(Term::lam(
                y.clone(),
                Term::seq(Term::Var(y.clone()), Term::Var(y)),
            ))]
        }
    }
}

fn any_frame<R: Rng + ?Sized>(spec: &ContextSpec, rng: &mut R) -> Vec<Frame> {
    let v = |rng: &mut R| spec.pool.sample(rng);
    match rng.gen_range(0..8) {
        0 => vec![Frame::SeqFirst(v(rng))],
        1 => vec![Frame::SeqSecond(v(rng))],
        2 => vec![Frame::IfThen(v(rng), v(rng))],
        3 => vec![Frame::IfElse(v(rng), v(rng))],
        4 => {
            // A binder that is immediately applied, so the body still runs.
            let y = Name::new("#z");
            vec![Frame::AppFun(v(rng)), Frame::LamBody(y)]
        }
        5 => vec![Frame::LamBody(Name::new("#w"))],
        _ => using_frame(spec, rng),
    }
}

fn random_op<R: Rng + ?Sized>(rng: &mut R) -> BinOp {
    BinOp::ALL[rng.gen_range(0..BinOp::ALL.len())]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{free_vars, parse_term};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn plug_captures() {
        let c = Context {
            frames: vec![Frame::AppFun(Term::int(3)), Frame::LamBody("x".into())],
        };
        assert_eq!(c.plug(&Term::var("x")), parse_term("((lambda (x) x) 3)").unwrap());
        assert_eq!(c.to_text(), "((lambda (x) []) 3)");
    }

    #[test]
    fn sampled_contexts_close_their_delta() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let delta: VarSet = ["x", "y"].into_iter().map(Name::new).collect();
        let spec = ContextSpec::new(ValuePool::mixed());
        let e = parse_term("(+ x (y 1))").unwrap();
        for _ in 0..200 {
            let c = sample_context(&delta, &spec, &mut rng);
            assert!(free_vars(&c.plug(&e)).is_empty(), "{}", c.to_text());
        }
    }

    #[test]
    fn empty_delta_can_give_empty_context() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = ContextSpec::new(ValuePool::integers());
        let any_empty = (0..100).any(|_| sample_context(&VarSet::new(), &spec, &mut rng).frames.is_empty());
        assert!(any_empty);
    }

    #[test]
    fn integer_pool_binds_integers() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = ContextSpec {
            max_frames: 0,
            ..ContextSpec::new(ValuePool::integers())
        };
        let delta: VarSet = [Name::new("p")].into_iter().collect();
        let c = sample_context(&delta, &spec, &mut rng);
        assert_eq!(c.frames.len(), 2);
        assert!(matches!(&c.frames[0], Frame::AppFun(Term::Const(_))));
        assert_eq!(c.frames[1], Frame::LamBody("p".into()));
    }
}
