//! Random generators for terms, rewrite steps, SSA functions, and control
//! flow graphs. Deterministic given the RNG.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::rewrite::{
    applicable_rules, apply_rule, Budget, Direction, Instance, ParamNeed, RewriteStep, RuleFamily, RuleParams,
};
use crate::safety::{is_safe, SafetyMode};
use crate::term::{all_names, free_vars, fresh_name, BinOp, Name, Term};
use crate::vminus::{compute_dominators, predecessors, validate, Block, Command, Phi, Terminator, VFunction, Value};

/// Shape of random terms.
#[derive(Clone, Debug)]
pub struct TermGen {
    pub depth: u32,
    /// Variables that may occur free.
    pub free: Vec<Name>,
    /// Relative weight of `unreachable` leaves.
    pub unreachable_weight: u32,
    /// Relative weight of `err` leaves.
    pub err_weight: u32,
}

impl TermGen {
    pub fn closed(depth: u32) -> Self {
        TermGen {
            depth,
            free: Vec::new(),
            unreachable_weight: 1,
            err_weight: 1,
        }
    }

    pub fn open(depth: u32, free: &[&str]) -> Self {
        TermGen {
            free: free.iter().map(|s| Name::new(s)).collect(),
            ..TermGen::closed(depth)
        }
    }
}

const BINDERS: [&str; 3] = ["x", "y", "z"];

pub fn random_term<R: Rng + ?Sized>(rng: &mut R, g: &TermGen) -> Term {
    let mut scope = g.free.clone();
    term_rec(rng, g, g.depth, &mut scope)
}

fn random_leaf<R: Rng + ?Sized>(rng: &mut R, g: &TermGen, scope: &[Name]) -> Term {
    let var_w = if scope.is_empty() { 0 } else { 4 };
    let weights = [4, 1, var_w, g.unreachable_weight, g.err_weight];
    match pick_weighted(rng, &weights) {
        0 => Term::int(rng.gen_range(-2..=3)),
        1 => Term::bool(rng.gen()),
        2 => Term::Var(scope.choose(rng).expect("nonempty").clone()),
        3 => Term::Unreachable,
        _ => Term::err(["k", "user"].choose(rng).expect("nonempty")),
    }
}

fn pick_weighted<R: Rng + ?Sized>(rng: &mut R, weights: &[u32]) -> usize {
    let total: u32 = weights.iter().sum();
    let mut x = rng.gen_range(0..total);
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    weights.len() - 1
}

fn term_rec<R: Rng + ?Sized>(rng: &mut R, g: &TermGen, depth: u32, scope: &mut Vec<Name>) -> Term {
    if depth == 0 || rng.gen_ratio(1, 4) {
        return random_leaf(rng, g, scope);
    }
    let d = depth - 1;
    match rng.gen_range(0..6) {
        0 => {
            let x = Name::new(BINDERS.choose(rng).expect("nonempty"));
            scope.push(x.clone());
            let body = term_rec(rng, g, d, scope);
            scope.pop();
            Term::lam(x, body)
        }
        1 => Term::app(term_rec(rng, g, d, scope), term_rec(rng, g, d, scope)),
        2 => Term::binop(
            *BinOp::ALL.choose(rng).expect("nonempty"),
            term_rec(rng, g, d, scope),
            term_rec(rng, g, d, scope),
        ),
        3 => Term::if_(
            term_rec(rng, g, d, scope),
            term_rec(rng, g, d, scope),
            term_rec(rng, g, d, scope),
        ),
        4 => Term::seq(term_rec(rng, g, d, scope), term_rec(rng, g, d, scope)),
        _ => random_leaf(rng, g, scope),
    }
}

/// A random closed value: integer, boolean, or small λ.
pub fn random_closed_value<R: Rng + ?Sized>(rng: &mut R) -> Term {
    match rng.gen_range(0..4) {
        0 | 1 => Term::int(rng.gen_range(-2..=3)),
        2 => Term::bool(rng.gen()),
        _ => {
            let body = term_rec(rng, &TermGen::closed(2), 2, &mut vec![Name::new("w")]);
            Term::lam("w", body)
        }
    }
}

/// Pick a random rule instance of one of `families` applicable to `e`,
/// filling backward templates with random terms well-formed at the site.
pub fn random_step<R: Rng + ?Sized>(
    rng: &mut R,
    e: &Term,
    families: &[RuleFamily],
    safety: SafetyMode,
) -> Option<RewriteStep> {
    random_step_in(rng, e, families, &[Direction::Fwd, Direction::Bwd], safety)
}

/// Like [`random_step`], restricted to the given directions.
pub fn random_step_in<R: Rng + ?Sized>(
    rng: &mut R,
    e: &Term,
    families: &[RuleFamily],
    dirs: &[Direction],
    safety: SafetyMode,
) -> Option<RewriteStep> {
    let budget = Budget {
        max_instances: 5_000,
        const_range: 2,
    };
    let mut instances: Vec<Instance> = applicable_rules(e, safety, budget)
        .into_iter()
        .filter(|i| families.contains(&i.rule().family()) && dirs.contains(&i.dir()))
        .collect();
    instances.shuffle(rng);
    let ambient = free_vars(e);
    for inst in instances {
        let step = match inst {
            Instance::Ready(s) => s,
            Instance::Template { rule, dir, path, needs } => {
                let mut scope: Vec<Name> = ambient.iter().cloned().collect();
                scope.extend(e.binders_on_path(&path).expect("own path"));
                let site = e.subterm(&path).expect("own path");
                let Some(params) = fill_template(rng, site, &needs, &scope, safety) else {
                    continue;
                };
                RewriteStep::new(rule, dir, path).with_params(params)
            }
        };
        if apply_rule(e, &step, safety).is_ok() {
            return Some(step);
        }
    }
    None
}

fn fill_template<R: Rng + ?Sized>(
    rng: &mut R,
    site: &Term,
    needs: &[ParamNeed],
    scope: &[Name],
    safety: SafetyMode,
) -> Option<RuleParams> {
    let small = |rng: &mut R| {
        let g = TermGen {
            free: scope.to_vec(),
            ..TermGen::closed(2)
        };
        random_term(rng, &g)
    };
    let truthy = |rng: &mut R| loop {
        let v = random_closed_value(rng);
        if !matches!(v, Term::Const(ref c) if c.is_false()) {
            return v;
        }
    };
    let p = RuleParams::default();
    Some(match needs {
        [ParamNeed::SafeTerm] => {
            let t = (0..20)
                .map(|_| small(rng))
                .find(|t| is_safe(safety, t))
                .unwrap_or_else(|| random_closed_value(rng));
            p.with_term(t).with_safety(safety)
        }
        [ParamNeed::Term] => p.with_term(small(rng)),
        [ParamNeed::TruthyValue] => p.with_value(truthy(rng)),
        [ParamNeed::TruthyValue, ParamNeed::Term] => p.with_value(truthy(rng)).with_term(small(rng)),
        [ParamNeed::OperatorOrBranches] => {
            if rng.gen() {
                p.with_op(*BinOp::ALL.choose(rng).expect("nonempty"))
                    .with_term(small(rng))
            } else {
                p.with_term(small(rng)).with_term2(small(rng))
            }
        }
        [ParamNeed::Abstraction] => {
            let x = fresh_name(&Name::new("v"), &all_names(site));
            let arg = random_closed_value(rng);
            // Either a vacuous abstraction or one over existing copies of `arg`.
            let body = replace_closed(site, &arg, &Term::Var(x.clone()));
            p.with_abstraction(x, body, arg).with_safety(safety)
        }
        [ParamNeed::PreSubstitution] => {
            let Term::If(test, _, els) = site else { return None };
            let body = if rng.gen() {
                replace_closed(els, &Term::bool(false), test)
            } else {
                (**els).clone()
            };
            p.with_term(body)
        }
        _ => return None,
    })
}

fn replace_closed(t: &Term, from: &Term, to: &Term) -> Term {
    if t == from {
        return to.clone();
    }
    let mut out = t.clone();
    for (i, c) in t.children().into_iter().enumerate() {
        let nc = replace_closed(c, from, to);
        if nc != **c {
            out = out.with_child(i, std::sync::Arc::new(nc)).expect("same arity");
        }
    }
    out
}

/// Shape of random SSA functions.
#[derive(Clone, Debug)]
pub struct VGen {
    pub max_blocks: usize,
    pub max_params: usize,
    /// Probability that a non-entry block is a counted self-loop.
    pub loop_prob: f64,
    pub call_error_prob: f64,
}

impl Default for VGen {
    fn default() -> Self {
        VGen {
            max_blocks: 6,
            max_params: 2,
            loop_prob: 0.2,
            call_error_prob: 0.08,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Shape {
    Ret,
    Unreachable,
    Br(usize),
    BrCond(usize, usize),
    /// Counted self-loop that exits to the given block.
    Loop(usize),
}

/// A valid, terminating function in which every block is reachable and at
/// least one block ends in `unreachable`. Edges go forward in block order
/// except for counted self-loops that run at most three times.
pub fn random_vfunction<R: Rng + ?Sized>(rng: &mut R, g: &VGen) -> VFunction {
    loop {
        if let Some(f) = try_vfunction(rng, g) {
            return f;
        }
    }
}

fn try_vfunction<R: Rng + ?Sized>(rng: &mut R, g: &VGen) -> Option<VFunction> {
    let n = rng.gen_range(2..=g.max_blocks.max(2));
    let label = |i: usize| Name::new(&format!("b{i}"));
    let mut shapes = Vec::with_capacity(n);
    for i in 0..n {
        let later = |rng: &mut R| rng.gen_range(i + 1..n);
        let s = if i == n - 1 {
            if rng.gen() {
                Shape::Ret
            } else {
                Shape::Unreachable
            }
        } else if i > 0 && rng.gen_bool(g.loop_prob.clamp(0.0, 1.0)) {
            Shape::Loop(later(rng))
        } else {
            match rng.gen_range(0..10) {
                0..=2 => Shape::Br(later(rng)),
                7 => Shape::Ret,
                8 => Shape::Unreachable,
                _ => Shape::BrCond(later(rng), later(rng)),
            }
        };
        shapes.push(s);
    }

    // Skeleton for reachability and dominators.
    let skeleton_term = |s: &Shape, i: usize| match *s {
        Shape::Ret => Terminator::Ret(Value::int(0)),
        Shape::Unreachable => Terminator::Unreachable,
        Shape::Br(j) => Terminator::Br(label(j)),
        Shape::BrCond(a, b) => Terminator::BrCond(Value::int(1), label(a), label(b)),
        Shape::Loop(j) => Terminator::BrCond(Value::int(1), label(i), label(j)),
    };
    let params: Vec<Name> = (0..rng.gen_range(1..=g.max_params.max(1)))
        .map(|i| Name::new(&format!("%p{i}")))
        .collect();
    let skeleton = VFunction {
        name: Name::new("gen"),
        params: params.clone(),
        blocks: shapes
            .iter()
            .enumerate()
            .map(|(i, s)| Block {
                label: label(i),
                phis: Vec::new(),
                commands: Vec::new(),
                terminator: skeleton_term(s, i),
            })
            .collect(),
    };
    let dom = compute_dominators(&skeleton);
    if dom.reachable.len() != n || !shapes.contains(&Shape::Unreachable) {
        return None;
    }
    let preds: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            predecessors(&skeleton, &label(i))
                .expect("known")
                .iter()
                .map(|l| skeleton.block_index(l).expect("known"))
                .collect()
        })
        .collect();

    // Fill blocks in order; idom(i) < i, so dominators come first.
    let mut counter = 0usize;
    let mut fresh = |base: &str| {
        counter += 1;
        Name::new(&format!("%{base}{counter}"))
    };
    let mut defined: Vec<Vec<Name>> = vec![Vec::new(); n];
    let mut at_end: Vec<Vec<Name>> = vec![Vec::new(); n];
    let mut blocks: Vec<Block> = Vec::with_capacity(n);
    // φ targets and how to pick their incoming values, filled afterwards.
    let mut pending: Vec<(usize, usize, Option<Name>)> = Vec::new();
    for i in 0..n {
        let mut avail: Vec<Name> = params.clone();
        for d in dom.dominators_of(&label(i)) {
            let di = skeleton.block_index(&d).expect("known");
            if di != i {
                avail.extend(defined[di].iter().cloned());
            }
        }
        let mut phis = Vec::new();
        let mut commands = Vec::new();
        let is_loop = matches!(shapes[i], Shape::Loop(_));
        let join = preds[i].len() >= 2;
        let mut loop_vars = None;
        if is_loop {
            let k = fresh("k");
            let k1 = fresh("k");
            phis.push(Phi {
                target: k.clone(),
                incoming: Vec::new(),
            });
            pending.push((i, 0, Some(k1.clone())));
            loop_vars = Some((k, k1));
        }
        let extra = if join || is_loop {
            rng.gen_range(0..=2)
        } else if i > 0 && rng.gen_ratio(1, 5) {
            1
        } else {
            0
        };
        for _ in 0..extra {
            let x = fresh("m");
            pending.push((i, phis.len(), None));
            phis.push(Phi {
                target: x.clone(),
                incoming: Vec::new(),
            });
        }
        let mut local: Vec<Name> = phis.iter().map(|p| p.target.clone()).collect();
        let operand = |rng: &mut R, local: &[Name], avail: &[Name]| {
            let pool: Vec<&Name> = avail.iter().chain(local.iter()).collect();
            if pool.is_empty() || rng.gen_ratio(1, 3) {
                Value::int(rng.gen_range(-2..=3))
            } else {
                Value::Var((*pool.choose(rng).expect("nonempty")).clone())
            }
        };
        for _ in 0..rng.gen_range(0..=2) {
            if rng.gen_bool(g.call_error_prob.clamp(0.0, 1.0)) {
                commands.push(Command::CallError);
            }
            let x = fresh("v");
            let op = *[BinOp::Add, BinOp::Sub, BinOp::Mul].choose(rng).expect("nonempty");
            let left = operand(rng, &local, &avail);
            let right = operand(rng, &local, &avail);
            commands.push(Command::Assign {
                target: x.clone(),
                op,
                left,
                right,
            });
            local.push(x);
        }
        let cmp = |rng: &mut R| {
            *[BinOp::Lt, BinOp::Le, BinOp::Eq, BinOp::Ne]
                .choose(rng)
                .expect("nonempty")
        };
        let terminator = match shapes[i] {
            Shape::Ret => Terminator::Ret(operand(rng, &local, &avail)),
            Shape::Unreachable => Terminator::Unreachable,
            Shape::Br(j) => Terminator::Br(label(j)),
            Shape::BrCond(a, b) => {
                if rng.gen_ratio(1, 5) {
                    Terminator::BrCond(operand(rng, &local, &avail), label(a), label(b))
                } else {
                    let c = fresh("c");
                    let left = operand(rng, &local, &avail);
                    let right = operand(rng, &local, &avail);
                    commands.push(Command::Assign {
                        target: c.clone(),
                        op: cmp(rng),
                        left,
                        right,
                    });
                    Terminator::BrCond(Value::Var(c), label(a), label(b))
                }
            }
            Shape::Loop(j) => {
                let (k, k1) = loop_vars.clone().expect("loop block");
                let go = fresh("go");
                commands.push(Command::Assign {
                    target: k1.clone(),
                    op: BinOp::Add,
                    left: Value::Var(k),
                    right: Value::int(1),
                });
                commands.push(Command::Assign {
                    target: go.clone(),
                    op: BinOp::Lt,
                    left: Value::Var(k1.clone()),
                    right: Value::int(rng.gen_range(1..=3)),
                });
                local.push(k1);
                Terminator::BrCond(Value::Var(go), label(i), label(j))
            }
        };
        for c in &commands {
            if let Command::Assign { target, .. } = c {
                if !local.contains(target) {
                    local.push(target.clone());
                }
            }
        }
        defined[i] = local.clone();
        let mut end = avail.clone();
        end.extend(local.iter().cloned());
        at_end[i] = end;
        blocks.push(Block {
            label: label(i),
            phis,
            commands,
            terminator,
        });
    }

    // Integer-valued variables only feed φs, so φ sorts stay uniform.
    let bools: Vec<Name> = blocks
        .iter()
        .flat_map(|b| b.commands.iter())
        .filter_map(|c| match c {
            Command::Assign { target, op, .. } if !op.is_arithmetic() => Some(target.clone()),
            _ => None,
        })
        .collect();
    for (bi, pi, back) in pending {
        let mut incoming = Vec::new();
        let mut ps = preds[bi].clone();
        ps.sort_unstable();
        for p in ps {
            let v = match &back {
                Some(k1) if p == bi => Value::Var(k1.clone()),
                Some(_) => Value::int(0),
                None => {
                    let pool: Vec<&Name> = at_end[p].iter().filter(|x| !bools.contains(x)).collect();
                    if pool.is_empty() || rng.gen_ratio(1, 3) {
                        Value::int(rng.gen_range(-2..=3))
                    } else {
                        Value::Var((*pool.choose(rng).expect("nonempty")).clone())
                    }
                }
            };
            incoming.push((v, label(p)));
        }
        blocks[bi].phis[pi].incoming = incoming;
    }
    // Arithmetic on comparison results would only ever error; keep commands
    // on integers by replacing boolean operands.
    for b in &mut blocks {
        for c in &mut b.commands {
            if let Command::Assign { op, left, right, .. } = c {
                if op.is_arithmetic() {
                    for v in [left, right] {
                        if matches!(v, Value::Var(x) if bools.contains(x)) {
                            *v = Value::int(1);
                        }
                    }
                }
            }
        }
    }
    let f = VFunction {
        name: Name::new("gen"),
        params,
        blocks,
    };
    validate(&f).ok()?;
    Some(f)
}

/// A random control-flow graph over at most `max_blocks` blocks: every
/// block has zero, one, or two successors anywhere, entry included.
/// Not necessarily valid; meant for dominator checks.
pub fn random_cfg<R: Rng + ?Sized>(rng: &mut R, max_blocks: usize) -> VFunction {
    let n = rng.gen_range(1..=max_blocks.max(1));
    let label = |i: usize| Name::new(&format!("n{i}"));
    let blocks = (0..n)
        .map(|i| Block {
            label: label(i),
            phis: Vec::new(),
            commands: Vec::new(),
            terminator: match rng.gen_range(0..5) {
                0 => Terminator::Ret(Value::int(0)),
                1 | 2 => Terminator::Br(label(rng.gen_range(0..n))),
                _ => Terminator::BrCond(Value::var("%p"), label(rng.gen_range(0..n)), label(rng.gen_range(0..n))),
            },
        })
        .collect();
    VFunction {
        name: Name::new("cfg"),
        params: vec![Name::new("%p")],
        blocks,
    }
}

/// Labels of reachable blocks ending in `unreachable`.
pub fn unreachable_sites(f: &VFunction) -> Vec<Name> {
    let reach = crate::vminus::reachable_blocks(f);
    f.blocks
        .iter()
        .filter(|b| b.terminator == Terminator::Unreachable && reach.contains(&b.label))
        .map(|b| b.label.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{is_closed, VarSet};
    use crate::vminus::{eval_vminus, VOutcome};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn closed_terms_are_closed() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            assert!(is_closed(&random_term(&mut rng, &TermGen::closed(5))));
        }
    }

    #[test]
    fn open_terms_stay_in_scope() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = TermGen::open(4, &["a", "b"]);
        let allowed: VarSet = ["a", "b"].into_iter().map(Name::new).collect();
        for _ in 0..500 {
            assert!(free_vars(&random_term(&mut rng, &g)).is_subset(&allowed));
        }
    }

    #[test]
    fn random_steps_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let families = [RuleFamily::Propagation, RuleFamily::Meaning, RuleFamily::Undefined];
        let mut found = 0;
        for _ in 0..200 {
            let e = random_term(&mut rng, &TermGen::open(4, &["a"]));
            if let Some(step) = random_step(&mut rng, &e, &families, SafetyMode::Syntactic) {
                apply_rule(&e, &step, SafetyMode::Syntactic).unwrap();
                found += 1;
            }
        }
        assert!(found > 150, "{found}");
    }

    #[test]
    fn generated_functions_are_valid_and_terminate() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let f = random_vfunction(&mut rng, &VGen::default());
            assert!(validate(&f).is_ok());
            assert!(f.blocks.len() <= 6);
            assert!(!unreachable_sites(&f).is_empty());
            for a in -2..3 {
                let args = vec![crate::term::Const::int(a); f.params.len()];
                assert_ne!(eval_vminus(&f, &args, 10_000).unwrap(), VOutcome::OutOfFuel);
            }
        }
    }
}
