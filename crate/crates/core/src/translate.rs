//! Translating SSA functions into closed calculus terms: every block becomes
//! a λ over its φ targets, every branch an application, and block functions
//! are bound by nested `let`/`letrec` following the dominator tree.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::graph::DiGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eval::{eval, EvalError, Observation};
use crate::harness::{judge, Counts, Verdict};
use crate::rewrite::{search_equiv, RewriteTrace, SearchConfig};
use crate::safety::SafetyMode;
use crate::term::{apply_all, free_vars, lam_curried, BinOp, Const, Name, Term};
use crate::values::ValuePool;
use crate::vminus::{
    compute_dominators, infer_sorts, reachable_blocks, simplify_unreachable, validate, Command, DomTree, SimplifyError,
    Sort, Terminator, VFunction, ValidationError, Value,
};

/// Parameter of blocks and functions that take no arguments.
pub const DUMMY_PARAM: &str = "#_";

/// Name of the function bound for a block.
pub fn block_fn(label: &Name) -> Name {
    Name::new(&format!("@{label}"))
}

/// `(let ([x e1]) e2)`.
pub fn make_let(x: impl Into<Name>, e1: Term, e2: Term) -> Term {
    Term::app(Term::lam(x, e2), e1)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LetrecBinding {
    pub name: Name,
    pub params: Vec<Name>,
    pub body: Term,
}

/// Mutually recursive bindings scoped over `body`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LetrecSpec {
    pub bindings: Vec<LetrecBinding>,
    pub body: Term,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LetrecError {
    #[error("`{0}` is bound twice")]
    DuplicateName(Name),
    #[error("`{0}` has no parameters")]
    NoParams(Name),
}

/// Call-by-value letrec by self-application. With bindings `f_1..f_k`:
///
/// ```text
/// let g_i = λs_1..s_k. let f_j = λz.((s_j s_1..s_k) z) ... in λparams_i. body_i
/// let f_i = λz.((g_i g_1..g_k) z)
/// in body
/// ```
///
/// Recursive references are η-expanded, so building the knot terminates.
pub fn make_letrec(spec: &LetrecSpec) -> Result<Term, LetrecError> {
    let mut names = BTreeSet::new();
    for b in &spec.bindings {
        if !names.insert(b.name.clone()) {
            return Err(LetrecError::DuplicateName(b.name.clone()));
        }
        if b.params.is_empty() {
            return Err(LetrecError::NoParams(b.name.clone()));
        }
    }
    let k = spec.bindings.len();
    let g = |i: usize| Name::new(&format!("#g{i}"));
    let s = |i: usize| Name::new(&format!("#s{i}"));
    let z = Name::new("#z");
    let knot = |head: Term, vars: &dyn Fn(usize) -> Name| {
        let applied = apply_all(head, (0..k).map(|j| Term::Var(vars(j))));
        Term::lam(z.clone(), Term::app(applied, Term::Var(z.clone())))
    };
    let mut out = spec.body.clone();
    for (i, b) in spec.bindings.iter().enumerate().rev() {
        out = make_let(b.name.clone(), knot(Term::Var(g(i)), &g), out);
    }
    for (i, b) in spec.bindings.iter().enumerate().rev() {
        let mut inner = lam_curried(&b.params, b.body.clone());
        for (j, other) in spec.bindings.iter().enumerate().rev() {
            inner = make_let(other.name.clone(), knot(Term::Var(s(j)), &s), inner);
        }
        let params: Vec<Name> = (0..k).map(s).collect();
        out = make_let(g(i), lam_curried(&params, inner), out);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KhError {
    #[error("invalid function: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<ValidationError>),
    #[error("no block labeled `{0}`")]
    UnknownBlock(Name),
    #[error("block `{block}` has no phi value for predecessor `{pred}`")]
    MissingPhi { block: Name, pred: Name },
}

/// Translation state for one validated function.
struct Kh<'a> {
    f: &'a VFunction,
    dom: DomTree,
    sorts: BTreeMap<Name, Sort>,
}

impl<'a> Kh<'a> {
    fn new(f: &'a VFunction) -> Result<Self, KhError> {
        validate(f).map_err(KhError::Invalid)?;
        let sorts = infer_sorts(f).map_err(KhError::Invalid)?;
        Ok(Kh {
            f,
            dom: compute_dominators(f),
            sorts,
        })
    }

    fn block(&self, l: &Name) -> Result<&'a crate::vminus::Block, KhError> {
        self.f.block(l).ok_or_else(|| KhError::UnknownBlock(l.clone()))
    }

    fn value(v: &Value) -> Term {
        match v {
            Value::Var(x) => Term::Var(x.clone()),
            Value::Int(i) => Term::bigint(i.clone()),
        }
    }

    /// The jump from `from` into `to`, passing the values `to`'s φs select.
    fn jump(&self, from: &Name, to: &Name) -> Result<Term, KhError> {
        let target = self.block(to)?;
        if target.phis.is_empty() {
            return Ok(Term::app(Term::Var(block_fn(to)), Term::int(0)));
        }
        let mut args = Vec::new();
        for phi in &target.phis {
            let v = phi.value_from(from).ok_or_else(|| KhError::MissingPhi {
                block: to.clone(),
                pred: from.clone(),
            })?;
            args.push(Self::value(v));
        }
        Ok(apply_all(Term::Var(block_fn(to)), args))
    }

    fn term(&self, l: &Name) -> Result<Term, KhError> {
        Ok(match &self.block(l)?.terminator {
            Terminator::Ret(v) => Self::value(v),
            Terminator::Br(t) => self.jump(l, t)?,
            Terminator::BrCond(v, a, b) => {
                let test = match v {
                    Value::Var(x) if self.sorts.get(x) == Some(&Sort::Bool) => Term::Var(x.clone()),
                    _ => Term::binop(BinOp::Ne, Self::value(v), Term::int(0)),
                };
                Term::if_(test, self.jump(l, a)?, self.jump(l, b)?)
            }
            Terminator::Unreachable => Term::Unreachable,
        })
    }

    /// Commands as nested lets, then the dominator-tree children of `l`,
    /// then the terminator.
    fn cs(&self, l: &Name, commands: &[Command]) -> Result<Term, KhError> {
        match commands.split_first() {
            Some((Command::CallError, _)) => Ok(Term::err("user")),
            Some((
                Command::Assign {
                    target,
                    op,
                    left,
                    right,
                },
                rest,
            )) => Ok(make_let(
                target.clone(),
                Term::binop(*op, Self::value(left), Self::value(right)),
                self.cs(l, rest)?,
            )),
            None => {
                let body = self.term(l)?;
                self.children(l, body)
            }
        }
    }

    /// Bind the block functions of `l`'s dominator-tree children around
    /// `body`, one strongly connected group at a time, dependencies first.
    fn children(&self, l: &Name, body: Term) -> Result<Term, KhError> {
        let kids = self.dom.children(l);
        if kids.is_empty() {
            return Ok(body);
        }
        let mut jumps = Vec::new();
        for k in &kids {
            jumps.push(self.jump_fn(k)?);
        }
        let mut graph = DiGraph::<usize, ()>::new();
        let nodes: Vec<_> = (0..kids.len()).map(|i| graph.add_node(i)).collect();
        for (i, (_, j)) in jumps.iter().enumerate() {
            let fv = free_vars(j);
            for (t, k) in kids.iter().enumerate() {
                if fv.contains(&block_fn(k)) {
                    graph.add_edge(nodes[i], nodes[t], ());
                }
            }
        }
        // Postorder: a group comes after every group it refers to.
        let groups = petgraph::algo::tarjan_scc(&graph);
        let mut out = body;
        for group in groups.iter().rev() {
            let mut members: Vec<usize> = group.iter().map(|n| graph[*n]).collect();
            members.sort_unstable();
            let recursive = members.len() > 1 || graph.contains_edge(nodes[members[0]], nodes[members[0]]);
            if recursive {
                let bindings = members
                    .iter()
                    .map(|&i| LetrecBinding {
                        name: block_fn(&kids[i]),
                        params: jumps[i].0.clone(),
                        body: jumps[i].1.clone(),
                    })
                    .collect();
                out = make_letrec(&LetrecSpec { bindings, body: out }).expect("distinct labels, nonempty params");
            } else {
                let i = members[0];
                out = make_let(block_fn(&kids[i]), lam_curried(&jumps[i].0, jumps[i].1.clone()), out);
            }
        }
        Ok(out)
    }

    /// Parameters and body of a block's function.
    fn jump_fn(&self, l: &Name) -> Result<(Vec<Name>, Term), KhError> {
        let b = self.block(l)?;
        let mut params: Vec<Name> = b.phis.iter().map(|p| p.target.clone()).collect();
        if params.is_empty() {
            params.push(Name::new(DUMMY_PARAM));
        }
        Ok((params, self.cs(l, &b.commands)?))
    }

    fn proc(&self) -> Result<Term, KhError> {
        let entry = self.f.entry();
        let body = self.cs(&entry.label, &entry.commands)?;
        let mut params = self.f.params.clone();
        if params.is_empty() {
            params.push(Name::new(DUMMY_PARAM));
        }
        Ok(lam_curried(&params, body))
    }
}

/// The terminator of `l` as a term.
pub fn kh_term(f: &VFunction, l: &Name) -> Result<Term, KhError> {
    Kh::new(f)?.term(l)
}

/// `commands` (a suffix of `l`'s commands) followed by `l`'s terminator.
pub fn kh_cs(f: &VFunction, l: &Name, commands: &[Command]) -> Result<Term, KhError> {
    Kh::new(f)?.cs(l, commands)
}

/// The λ for block `l`.
pub fn kh_jump(f: &VFunction, l: &Name) -> Result<Term, KhError> {
    let (params, body) = Kh::new(f)?.jump_fn(l)?;
    Ok(lam_curried(&params, body))
}

/// The whole function as a closed curried λ over its parameters. A
/// function without parameters takes one ignored argument. Blocks not
/// reachable from the entry are left out.
pub fn kh_proc(f: &VFunction) -> Result<Term, KhError> {
    Kh::new(f)?.proc()
}

/// Apply a translated function to integer arguments.
pub fn apply_translation(t: &Term, args: &[Const]) -> Term {
    if args.is_empty() {
        return Term::app(t.clone(), Term::int(0));
    }
    apply_all(t.clone(), args.iter().cloned().map(Term::Const))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PruningConfig {
    /// Input tuples to run.
    pub samples: usize,
    pub fuel: u64,
    pub seed: u64,
    /// Search for a rewrite witness when the function has at most
    /// `witness_max_blocks` blocks.
    pub search: Option<SearchConfig>,
    pub witness_max_blocks: usize,
}

impl Default for PruningConfig {
    fn default() -> Self {
        PruningConfig {
            samples: 20,
            fuel: 200_000,
            seed: 0,
            search: None,
            witness_max_blocks: 4,
        }
    }
}

/// Search settings suited to translated terms.
pub fn witness_search_config() -> SearchConfig {
    SearchConfig {
        depth: 12,
        width: 8,
        safety: SafetyMode::Integer,
        template_limit: 0,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PruningCase {
    pub args: Vec<Const>,
    pub before: Observation,
    /// Not run when the original reaches `unreachable`.
    pub after: Option<Observation>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PruningReport {
    pub block: Name,
    pub simplified: VFunction,
    pub before: Term,
    pub after: Term,
    pub cases: Vec<PruningCase>,
    pub counts: Counts,
    /// `None` when no search ran; otherwise the search result.
    pub witness: Option<Option<RewriteTrace>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PruningError {
    #[error(transparent)]
    Simplify(#[from] SimplifyError),
    #[error("block `{0}` is not reachable from the entry")]
    NotReachable(Name),
    #[error(transparent)]
    Translate(#[from] KhError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Input tuples: all zeros first, then draws from the integer pool.
pub fn sample_inputs(arity: usize, samples: usize, seed: u64) -> Vec<Vec<Const>> {
    let pool = ValuePool::integers();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![vec![Const::int(0); arity]];
    while out.len() < samples.max(1) {
        let args: Vec<Const> = (0..arity)
            .map(|_| {
                let v = pool.values()[rng.gen_range(0..pool.values().len())].clone();
                v.as_const().expect("integer pool").clone()
            })
            .collect();
        out.push(args);
    }
    out.truncate(samples.max(1));
    out
}

/// Simplify `l` once and compare the translations of the function before
/// and after on sampled inputs; optionally search for a rewrite witness.
pub fn check_pruning(f: &VFunction, l: &Name, cfg: &PruningConfig) -> Result<PruningReport, PruningError> {
    if !reachable_blocks(f).contains(l) {
        if f.block(l).is_none() {
            return Err(SimplifyError::UnknownBlock(l.clone()).into());
        }
        return Err(PruningError::NotReachable(l.clone()));
    }
    let (simplified, _) = simplify_unreachable(f, l)?;
    let before = kh_proc(f)?;
    let after = kh_proc(&simplified)?;
    let mut cases = Vec::new();
    let mut counts = Counts::default();
    for args in sample_inputs(f.params.len(), cfg.samples, cfg.seed) {
        let b = eval(&apply_translation(&before, &args), cfg.fuel)?;
        let (a, verdict) = if b == Observation::UndefHit {
            (None, Verdict::VacuousUndef)
        } else {
            let a = eval(&apply_translation(&after, &args), cfg.fuel)?;
            let v = judge(&b, &a, false);
            (Some(a), v)
        };
        counts.add(verdict);
        cases.push(PruningCase {
            args,
            before: b,
            after: a,
            verdict,
        });
    }
    let witness = match &cfg.search {
        Some(sc) if f.blocks.len() <= cfg.witness_max_blocks => Some(search_equiv(&before, &after, sc)),
        _ => None,
    };
    Ok(PruningReport {
        block: l.clone(),
        simplified,
        before,
        after,
        cases,
        counts,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::DEFAULT_FUEL;
    use crate::rewrite::apply_trace;
    use crate::term::{alpha_eq, is_closed, parse_term};
    use crate::vminus::{eval_vminus, parse_vminus, VOutcome, INTSQRT};

    fn n(s: &str) -> Name {
        Name::new(s)
    }

    fn ev(t: &Term) -> Observation {
        eval(t, DEFAULT_FUEL).unwrap()
    }

    #[test]
    fn let_examples() {
        assert_eq!(
            make_let("x", Term::int(1), Term::var("x")),
            parse_term("((lambda (x) x) 1)").unwrap()
        );
        assert_eq!(
            ev(&make_let("x", Term::int(1), Term::var("x"))),
            Observation::Value(Const::int(1))
        );
        assert_eq!(
            ev(&make_let("x", Term::err("k"), Term::int(2))),
            Observation::ErrK(crate::term::ErrLabel::new("k"))
        );
        assert_eq!(
            ev(&make_let("x", Term::Unreachable, Term::int(2))),
            Observation::UndefHit
        );
    }

    fn binding(name: &str, param: &str, body: &str) -> LetrecBinding {
        LetrecBinding {
            name: n(name),
            params: vec![n(param)],
            body: parse_term(body).unwrap(),
        }
    }

    #[test]
    fn letrec_examples() {
        let spec = LetrecSpec {
            bindings: vec![binding("f", "x", "(if x (f false) 0)")],
            body: parse_term("(f true)").unwrap(),
        };
        assert_eq!(ev(&make_letrec(&spec).unwrap()), Observation::Value(Const::int(0)));

        let spec = LetrecSpec {
            bindings: vec![binding("f", "x", "x")],
            body: parse_term("(f 42)").unwrap(),
        };
        assert_eq!(ev(&make_letrec(&spec).unwrap()), Observation::Value(Const::int(42)));

        let parity = |k: i64| LetrecSpec {
            bindings: vec![
                binding("even", "n", "(if (= n 0) true (odd (- n 1)))"),
                binding("odd", "n", "(if (= n 0) false (even (- n 1)))"),
            ],
            body: Term::app(Term::var("even"), Term::int(k)),
        };
        // Oracle: direct parity.
        for k in 0..7 {
            let got = ev(&make_letrec(&parity(k)).unwrap());
            assert_eq!(got, Observation::Value(Const::Bool(k % 2 == 0)), "k = {k}");
        }
    }

    #[test]
    fn letrec_unrolling_law() {
        // f = λx. body with f free; unrolling once substitutes the letrec-bound
        // f into the body.
        let b = binding("f", "x", "(if (< x 1) 0 (+ 2 (f (- x 1))))");
        let spec = LetrecSpec {
            bindings: vec![b.clone()],
            body: parse_term("(f 3)").unwrap(),
        };
        let rolled = ev(&make_letrec(&spec).unwrap());
        let unrolled_body = crate::term::substitute(&b.body, &n("x"), &Term::int(3));
        let once = make_letrec(&LetrecSpec {
            bindings: vec![b],
            body: unrolled_body,
        })
        .unwrap();
        assert_eq!(rolled, ev(&once));
        assert_eq!(rolled, Observation::Value(Const::int(6)));
    }

    #[test]
    fn letrec_rejects_duplicates() {
        let spec = LetrecSpec {
            bindings: vec![binding("f", "x", "x"), binding("f", "y", "y")],
            body: Term::int(0),
        };
        assert_eq!(make_letrec(&spec), Err(LetrecError::DuplicateName(n("f"))));
    }

    #[test]
    fn term_shapes() {
        let f = parse_vminus(INTSQRT).unwrap();
        let t = kh_term(&f, &n("loop")).unwrap();
        assert_eq!(
            t,
            Term::if_(
                Term::var("%isin"),
                Term::app(Term::var("@body"), Term::int(0)),
                Term::app(Term::var("@fail"), Term::int(0)),
            )
        );
        assert_eq!(kh_term(&f, &n("fail")).unwrap(), Term::Unreachable);
        assert_eq!(kh_term(&f, &n("exit")).unwrap(), Term::var("%x"));
        let g = parse_vminus("fun k() { a: ret 0 }").unwrap();
        assert_eq!(kh_term(&g, &n("a")).unwrap(), Term::int(0));
    }

    #[test]
    fn command_shapes() {
        let f = parse_vminus("fun f(%a, %b) { e: %x = add %a %b ret %x }").unwrap();
        let t = kh_cs(&f, &n("e"), &f.entry().commands).unwrap();
        assert_eq!(t, parse_term("((lambda (%x) %x) (+ %a %b))").unwrap());
        let closed = make_let("%a", Term::int(2), make_let("%b", Term::int(3), t));
        assert_eq!(ev(&closed), Observation::Value(Const::int(5)));

        let f = parse_vminus("fun f() { e: br u u: call error() unreachable }").unwrap();
        let u = f.block(&n("u")).unwrap();
        assert_eq!(kh_cs(&f, &n("u"), &u.commands).unwrap(), Term::err("user"));
        assert_eq!(kh_cs(&f, &n("u"), &[]).unwrap(), Term::Unreachable);
    }

    #[test]
    fn jump_shapes() {
        let f = parse_vminus(INTSQRT).unwrap();
        let Term::Lam(x, _) = kh_jump(&f, &n("loop")).unwrap() else {
            panic!("not a λ")
        };
        assert_eq!(x, n("%x"));
        let Term::Lam(x, _) = kh_jump(&f, &n("exit")).unwrap() else {
            panic!("not a λ")
        };
        assert_eq!(x, n(DUMMY_PARAM));
        let g = parse_vminus("fun f() { a: br b b: %p = phi [1, a] %q = phi [2, a] ret %q }").unwrap();
        let Term::Lam(p, inner) = kh_jump(&g, &n("b")).unwrap() else {
            panic!("not a λ")
        };
        assert_eq!(p, n("%p"));
        assert!(matches!(&*inner, Term::Lam(q, _) if *q == n("%q")));
    }

    #[test]
    fn intsqrt_translation_commutes() {
        let f = parse_vminus(INTSQRT).unwrap();
        let t = kh_proc(&f).unwrap();
        assert!(is_closed(&t));
        for k in [-5, -1, 0, 1, 2, 4, 9, 10] {
            let vm = eval_vminus(&f, &[Const::int(k)], 100_000).unwrap();
            let lam = eval(&apply_translation(&t, &[Const::int(k)]), 1_000_000).unwrap();
            match vm {
                VOutcome::Returned(c) => assert_eq!(lam, Observation::Value(c)),
                VOutcome::HitUnreachable => assert_eq!(lam, Observation::UndefHit),
                other => panic!("{other}"),
            }
        }
        assert_eq!(
            eval(&apply_translation(&t, &[Const::int(9)]), 1_000_000).unwrap(),
            Observation::Value(Const::int(3))
        );
    }

    #[test]
    fn trivial_translations() {
        let f = parse_vminus("fun k() { a: ret 0 }").unwrap();
        let t = kh_proc(&f).unwrap();
        assert_eq!(
            ev(&Term::app(t.clone(), Term::int(5))),
            Observation::Value(Const::int(0))
        );
        assert_eq!(ev(&Term::app(t, Term::bool(true))), Observation::Value(Const::int(0)));
        let f = parse_vminus("fun k() { a: unreachable }").unwrap();
        assert_eq!(
            ev(&apply_translation(&kh_proc(&f).unwrap(), &[])),
            Observation::UndefHit
        );
    }

    #[test]
    fn intsqrt_pruning_check() {
        let f = parse_vminus(INTSQRT).unwrap();
        let cfg = PruningConfig {
            samples: 12,
            ..PruningConfig::default()
        };
        let r = check_pruning(&f, &n("fail"), &cfg).unwrap();
        assert_eq!(r.counts.disagree, 0);
        assert_eq!(r.counts.unknown, 0);
        for c in &r.cases {
            let Const::Int(i) = &c.args[0] else { panic!() };
            let expected = if *i < 0.into() {
                Verdict::VacuousUndef
            } else {
                Verdict::Agree
            };
            assert_eq!(c.verdict, expected, "{:?}", c.args);
        }
    }

    #[test]
    fn simplified_function_is_identity() {
        let f = parse_vminus("fun f() { a: unreachable }").unwrap();
        let r = check_pruning(&f, &n("a"), &PruningConfig::default()).unwrap();
        assert_eq!(r.simplified, f);
        assert_eq!(r.before, r.after);
    }

    #[test]
    fn two_block_witness() {
        let f = parse_vminus("fun f() { a: br u u: unreachable }").unwrap();
        let cfg = PruningConfig {
            search: Some(witness_search_config()),
            ..PruningConfig::default()
        };
        let r = check_pruning(&f, &n("u"), &cfg).unwrap();
        let trace = r.witness.clone().flatten().expect("witness");
        let replayed = apply_trace(&r.before, &trace, SafetyMode::Integer).unwrap();
        assert!(alpha_eq(&replayed, &r.after));
        assert!(!trace.is_empty());
    }

    #[test]
    fn unreachable_block_is_rejected() {
        let f = parse_vminus(INTSQRT).unwrap();
        assert!(matches!(
            check_pruning(&f, &n("loop"), &PruningConfig::default()),
            Err(PruningError::Simplify(SimplifyError::NotUnreachable(_)))
        ));
    }
}
