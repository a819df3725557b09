//! Enumerating the rule instances applicable to a term.

use crate::eval::delta;
use crate::safety::SafetyMode;
use crate::term::{free_vars, BinOp, Const, Term, VarSet};

use super::apply::{eplus_holes, rewrite_site};
use super::{Direction, RewriteStep, RuleId, RuleParams};

/// Bounds on enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Stop after this many instances.
    pub max_instances: usize,
    /// Integer operands considered for backward arithmetic, `-r..=r`.
    pub const_range: i64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_instances: 100_000,
            const_range: 3,
        }
    }
}

/// What a backward template still needs before it can be applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamNeed {
    /// Any term well-formed at the site.
    Term,
    /// A term the safety provider accepts.
    SafeTerm,
    /// A value other than `false`.
    TruthyValue,
    /// A variable, a body, and a safe argument whose substitution is the site.
    Abstraction,
    /// A term that becomes the else branch once the test variable is
    /// replaced by `false`.
    PreSubstitution,
    /// Either an operator and a term, or two terms.
    OperatorOrBranches,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instance {
    /// Fully parameterised; applies as-is.
    Ready(RewriteStep),
    /// A backward rule that needs injected terms.
    Template {
        rule: RuleId,
        dir: Direction,
        path: Vec<usize>,
        needs: Vec<ParamNeed>,
    },
}

impl Instance {
    pub fn rule(&self) -> RuleId {
        match self {
            Instance::Ready(s) => s.rule,
            Instance::Template { rule, .. } => *rule,
        }
    }

    pub fn dir(&self) -> Direction {
        match self {
            Instance::Ready(s) => s.dir,
            Instance::Template { dir, .. } => *dir,
        }
    }

    pub fn path(&self) -> &[usize] {
        match self {
            Instance::Ready(s) => &s.path,
            Instance::Template { path, .. } => path,
        }
    }
}

fn uses_safety(rule: RuleId) -> bool {
    matches!(rule, RuleId::P1 | RuleId::M3 | RuleId::M4)
}

/// Every forward instance, every backward instance that needs no injected
/// term, and a template for each backward instance that does.
pub fn applicable_rules(e: &Term, safety: SafetyMode, budget: Budget) -> Vec<Instance> {
    let mut out = Vec::new();
    let root_fv = free_vars(e);
    for path in e.paths() {
        if out.len() >= budget.max_instances {
            break;
        }
        let site = e.subterm(&path).expect("own path");
        let mut ambient = root_fv.clone();
        ambient.extend(e.binders_on_path(&path).expect("own path"));
        site_instances(site, &path, &ambient, safety, budget, &mut out);
    }
    out.truncate(budget.max_instances);
    out
}

fn site_instances(
    site: &Term,
    path: &[usize],
    ambient: &VarSet,
    safety: SafetyMode,
    budget: Budget,
    out: &mut Vec<Instance>,
) {
    use Direction::*;
    use RuleId::*;
    let try_step = |step: RewriteStep, out: &mut Vec<Instance>| {
        if let Ok(new) = rewrite_site(site, &step, ambient, safety) {
            if &new != site {
                out.push(Instance::Ready(step));
            }
        }
    };
    let at = || path.to_vec();

    // Forward, parameter-free.
    for rule in [U1, U2, P1, P2, P3, P4, P5, M1, M2, M3, M4, M5, M8, M9, M10] {
        let mut step = RewriteStep::fwd(rule, at());
        if uses_safety(rule) {
            step.params.safety = Some(safety);
        }
        try_step(step, out);
    }
    // Forward context rules, one instance per hole.
    for hole in eplus_holes(site) {
        let rule = match site.subterm(&hole) {
            Some(Term::Seq(..)) => M6,
            Some(Term::If(..)) => M7,
            _ => continue,
        };
        out.push(Instance::Ready(
            RewriteStep::fwd(rule, at()).with_params(RuleParams::default().with_hole(hole)),
        ));
    }

    // Backward, parameter-free or finitely parameterised.
    if let Term::Seq(_, rest) = site {
        if **rest == Term::Unreachable {
            out.push(Instance::Ready(RewriteStep::bwd(P3, at())));
            for op in BinOp::ALL {
                out.push(Instance::Ready(
                    RewriteStep::bwd(P3, at()).with_params(RuleParams::default().with_op(op)),
                ));
            }
        }
        for hole in eplus_holes(rest) {
            out.push(Instance::Ready(
                RewriteStep::bwd(M6, at()).with_params(RuleParams::default().with_hole(hole)),
            ));
        }
    }
    if let Term::If(_, a, _) = site {
        for hole in eplus_holes(a) {
            try_step(
                RewriteStep::bwd(M7, at()).with_params(RuleParams::default().with_hole(hole)),
                out,
            );
        }
        try_step(RewriteStep::bwd(M10, at()), out);
    }
    if let Term::Const(c) = site {
        for (op, a, b) in preimages(c, budget.const_range) {
            out.push(Instance::Ready(
                RewriteStep::bwd(M5, at()).with_params(
                    RuleParams::default()
                        .with_op(op)
                        .with_term(Term::Const(a))
                        .with_term2(Term::Const(b)),
                ),
            ));
        }
    }

    // Templates.
    let template = |rule, needs: Vec<ParamNeed>| Instance::Template {
        rule,
        dir: Bwd,
        path: path.to_vec(),
        needs,
    };
    if *site == Term::Unreachable {
        out.push(template(P1, vec![ParamNeed::SafeTerm]));
        out.push(template(P2, vec![ParamNeed::Term]));
        out.push(template(P4, vec![ParamNeed::Term]));
        out.push(template(P5, vec![ParamNeed::OperatorOrBranches]));
    }
    out.push(template(M1, vec![ParamNeed::TruthyValue, ParamNeed::Term]));
    out.push(template(M2, vec![ParamNeed::Term]));
    out.push(template(M3, vec![ParamNeed::Abstraction]));
    out.push(template(M4, vec![ParamNeed::SafeTerm]));
    if let Term::If(test, ..) = site {
        if matches!(&**test, Term::Var(_)) {
            out.push(template(M8, vec![ParamNeed::PreSubstitution]));
        }
        out.push(template(M9, vec![ParamNeed::TruthyValue]));
    }
}

/// Constant pairs within range that an operator maps to `c`.
pub(crate) fn preimages(c: &Const, range: i64) -> Vec<(BinOp, Const, Const)> {
    let mut consts: Vec<Const> = (-range..=range).map(Const::int).collect();
    consts.push(Const::Bool(false));
    consts.push(Const::Bool(true));
    let mut out = Vec::new();
    for op in BinOp::ALL {
        for a in &consts {
            for b in &consts {
                if delta(op, a, b).as_ref() == Some(c) {
                    out.push((op, a.clone(), b.clone()));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewrite::apply_rule;
    use crate::term::parse_term;

    fn has_ready(list: &[Instance], rule: RuleId, dir: Direction, path: &[usize]) -> bool {
        list.iter()
            .any(|i| matches!(i, Instance::Ready(s) if s.rule == rule && s.dir == dir && s.path == path))
    }

    fn has_template(list: &[Instance], rule: RuleId, path: &[usize]) -> bool {
        list.iter()
            .any(|i| matches!(i, Instance::Template { rule: r, path: p, .. } if *r == rule && p == path))
    }

    #[test]
    fn documented_examples() {
        let e = parse_term("(if a b (unreachable))").unwrap();
        let list = applicable_rules(&e, SafetyMode::Syntactic, Budget::default());
        assert!(has_ready(&list, RuleId::U1, Direction::Fwd, &[]));

        let five = Term::int(5);
        let list = applicable_rules(&five, SafetyMode::Syntactic, Budget::default());
        // Oracle: brute-force δ over the same constant range.
        let expected = preimages(&Const::int(5), 3);
        assert!(expected.contains(&(BinOp::Add, Const::int(2), Const::int(3))));
        let m5: Vec<_> = list
            .iter()
            .filter(|i| i.rule() == RuleId::M5 && i.dir() == Direction::Bwd)
            .collect();
        assert_eq!(m5.len(), expected.len());

        let list = applicable_rules(&Term::Unreachable, SafetyMode::Syntactic, Budget::default());
        assert!(has_template(&list, RuleId::P1, &[]));
    }

    #[test]
    fn every_ready_instance_applies() {
        let e =
            parse_term("(seq (if x (+ 1 2) (unreachable)) ((lambda (y) (if (= y 1) y (if (= y 2) 0 y))) (seq 3 x)))")
                .unwrap();
        let list = applicable_rules(&e, SafetyMode::Syntactic, Budget::default());
        assert!(list.len() > 10);
        for inst in &list {
            if let Instance::Ready(step) = inst {
                apply_rule(&e, step, SafetyMode::Syntactic).unwrap_or_else(|err| panic!("{step}: {err}"));
            }
        }
        assert!(has_ready(&list, RuleId::M10, Direction::Fwd, &[1, 0, 0]));
        assert!(has_ready(&list, RuleId::M5, Direction::Fwd, &[0, 1]));
    }

    #[test]
    fn budget_caps_output() {
        let e = parse_term("(+ (+ 1 2) (+ 3 4))").unwrap();
        let b = Budget {
            max_instances: 4,
            const_range: 2,
        };
        assert_eq!(applicable_rules(&e, SafetyMode::Syntactic, b).len(), 4);
    }
}
