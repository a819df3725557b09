//! Well-formedness: labels, single assignment, φ/predecessor agreement,
//! dominance scoping, and sort consistency of φs and operands.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::term::{BinOp, Name};

use super::cfg::{compute_dominators, predecessors};
use super::{Command, Terminator, VFunction, Value};

/// The rule a validation error violates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SsaRule {
    DuplicateLabel,
    UnknownLabel,
    /// The entry block may not be a branch target.
    EntryHasPredecessors,
    MultipleDefinition,
    UndefinedVariable,
    PhiPredecessorMismatch,
    /// A use not dominated by its definition.
    DominanceScoping,
    /// A φ merging integers and booleans.
    MixedSortPhi,
    /// An operand of the wrong sort for its operator. Rejecting these keeps
    /// every command total, so erasing one never hides an error.
    IllSortedOperand,
}

impl fmt::Display for SsaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SsaRule::DuplicateLabel => "duplicate label",
            SsaRule::UnknownLabel => "unknown label",
            SsaRule::EntryHasPredecessors => "entry has predecessors",
            SsaRule::MultipleDefinition => "multiple definition",
            SsaRule::UndefinedVariable => "undefined variable",
            SsaRule::PhiPredecessorMismatch => "phi/predecessor mismatch",
            SsaRule::DominanceScoping => "definition does not dominate use",
            SsaRule::MixedSortPhi => "phi mixes integer and boolean values",
            SsaRule::IllSortedOperand => "operand sorts do not fit the operator",
        })
    }
}

/// Where in a block an instruction sits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Position {
    Block,
    Param,
    Phi(usize),
    Command(usize),
    Terminator,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Position::Block => f.write_str("label"),
            Position::Param => f.write_str("params"),
            Position::Phi(i) => write!(f, "phi {i}"),
            Position::Command(i) => write!(f, "command {i}"),
            Position::Terminator => f.write_str("terminator"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, thiserror::Error)]
#[error("{block} {position}: {rule}: {detail}")]
pub struct ValidationError {
    pub rule: SsaRule,
    pub block: Name,
    pub position: Position,
    pub detail: String,
}

/// Static sort of a variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Int,
    Bool,
}

/// Where a variable is defined.
#[derive(Clone, Debug)]
enum Def {
    Param,
    At(usize, Position),
}

/// Every check; errors come in block order.
pub fn validate(f: &VFunction) -> Result<(), Vec<ValidationError>> {
    let mut errs = Vec::new();
    let err = |rule, block: &Name, position, detail: String| ValidationError {
        rule,
        block: block.clone(),
        position,
        detail,
    };

    let mut labels = BTreeSet::new();
    for b in &f.blocks {
        if !labels.insert(b.label.clone()) {
            errs.push(err(
                SsaRule::DuplicateLabel,
                &b.label,
                Position::Block,
                format!("`{}`", b.label),
            ));
        }
    }
    for b in &f.blocks {
        for t in b.terminator.targets() {
            if !labels.contains(t) {
                errs.push(err(
                    SsaRule::UnknownLabel,
                    &b.label,
                    Position::Terminator,
                    format!("`{t}`"),
                ));
            } else if t == &f.entry().label {
                errs.push(err(
                    SsaRule::EntryHasPredecessors,
                    &b.label,
                    Position::Terminator,
                    format!("`{t}`"),
                ));
            }
        }
        for (i, phi) in b.phis.iter().enumerate() {
            for (_, l) in &phi.incoming {
                if !labels.contains(l) {
                    errs.push(err(SsaRule::UnknownLabel, &b.label, Position::Phi(i), format!("`{l}`")));
                }
            }
        }
    }
    // Later checks index blocks by label.
    if !errs.is_empty() {
        return Err(errs);
    }

    let mut defs: BTreeMap<Name, Def> = BTreeMap::new();
    let mut define = |x: &Name, d: Def, errs: &mut Vec<ValidationError>, block: &Name, pos: Position| {
        if defs.contains_key(x) {
            errs.push(err(SsaRule::MultipleDefinition, block, pos, format!("`{x}`")));
        } else {
            defs.insert(x.clone(), d);
        }
    };
    for p in &f.params {
        define(p, Def::Param, &mut errs, &f.entry().label, Position::Param);
    }
    for (bi, b) in f.blocks.iter().enumerate() {
        for (i, phi) in b.phis.iter().enumerate() {
            define(
                &phi.target,
                Def::At(bi, Position::Phi(i)),
                &mut errs,
                &b.label,
                Position::Phi(i),
            );
        }
        for (i, c) in b.commands.iter().enumerate() {
            if let Command::Assign { target, .. } = c {
                define(
                    target,
                    Def::At(bi, Position::Command(i)),
                    &mut errs,
                    &b.label,
                    Position::Command(i),
                );
            }
        }
    }

    for b in &f.blocks {
        let preds: BTreeSet<Name> = predecessors(f, &b.label).expect("known label").into_iter().collect();
        for (i, phi) in b.phis.iter().enumerate() {
            let mut seen: BTreeMap<&Name, &Value> = BTreeMap::new();
            for (v, l) in &phi.incoming {
                if !preds.contains(l) {
                    errs.push(err(
                        SsaRule::PhiPredecessorMismatch,
                        &b.label,
                        Position::Phi(i),
                        format!("`{l}` is not a predecessor"),
                    ));
                }
                match seen.insert(l, v) {
                    Some(prev) if prev != v => errs.push(err(
                        SsaRule::PhiPredecessorMismatch,
                        &b.label,
                        Position::Phi(i),
                        format!("conflicting values for `{l}`"),
                    )),
                    _ => {}
                }
            }
            for p in &preds {
                if !seen.contains_key(p) {
                    errs.push(err(
                        SsaRule::PhiPredecessorMismatch,
                        &b.label,
                        Position::Phi(i),
                        format!("no value for predecessor `{p}`"),
                    ));
                }
            }
        }
    }

    // Scoping. Dominance is only defined for blocks reachable from the
    // entry; elsewhere a use only needs some definition.
    let dom = compute_dominators(f);
    let index: BTreeMap<&Name, usize> = f.blocks.iter().enumerate().map(|(i, b)| (&b.label, i)).collect();
    let order = |p: Position| match p {
        Position::Block | Position::Param => 0,
        Position::Phi(_) => 1,
        Position::Command(i) => 2 + i,
        Position::Terminator => usize::MAX,
    };
    // Is the value available at (block, pos)? For φ operands, pos is the
    // end of the predecessor block.
    let check_use = |v: &Value, bi: usize, at: Position, reported: Position, errs: &mut Vec<ValidationError>| {
        let Value::Var(x) = v else { return };
        let b = &f.blocks[bi];
        match defs.get(x) {
            None => errs.push(err(SsaRule::UndefinedVariable, &b.label, reported, format!("`{x}`"))),
            Some(Def::Param) => {}
            Some(Def::At(di, dpos)) => {
                if !dom.is_reachable(&b.label) {
                    return;
                }
                let ok = if *di == bi {
                    order(*dpos) < order(at)
                } else {
                    dom.dominates(&f.blocks[*di].label, &b.label)
                };
                if !ok {
                    errs.push(err(SsaRule::DominanceScoping, &b.label, reported, format!("`{x}`")));
                }
            }
        }
    };
    for (bi, b) in f.blocks.iter().enumerate() {
        for (i, phi) in b.phis.iter().enumerate() {
            for (v, l) in &phi.incoming {
                check_use(v, index[l], Position::Terminator, Position::Phi(i), &mut errs);
            }
        }
        for (i, c) in b.commands.iter().enumerate() {
            if let Command::Assign { left, right, .. } = c {
                check_use(left, bi, Position::Command(i), Position::Command(i), &mut errs);
                check_use(right, bi, Position::Command(i), Position::Command(i), &mut errs);
            }
        }
        match &b.terminator {
            Terminator::Ret(v) | Terminator::BrCond(v, ..) => {
                check_use(v, bi, Position::Terminator, Position::Terminator, &mut errs)
            }
            Terminator::Br(_) | Terminator::Unreachable => {}
        }
    }

    match infer_sorts(f) {
        Err(mixed) => errs.extend(mixed),
        Ok(sorts) => check_operand_sorts(f, &sorts, &mut errs),
    }

    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

fn check_operand_sorts(f: &VFunction, sorts: &BTreeMap<Name, Sort>, errs: &mut Vec<ValidationError>) {
    let sort_of = |v: &Value| match v {
        Value::Int(_) => Some(Sort::Int),
        Value::Var(x) => sorts.get(x).copied(),
    };
    for b in &f.blocks {
        for (i, c) in b.commands.iter().enumerate() {
            let Command::Assign {
                target,
                op,
                left,
                right,
            } = c
            else {
                continue;
            };
            let (Some(l), Some(r)) = (sort_of(left), sort_of(right)) else {
                // Undefined operands are reported elsewhere.
                continue;
            };
            let ok = match op {
                BinOp::Eq | BinOp::Ne => l == r,
                _ => l == Sort::Int && r == Sort::Int,
            };
            if !ok {
                errs.push(ValidationError {
                    rule: SsaRule::IllSortedOperand,
                    block: b.label.clone(),
                    position: Position::Command(i),
                    detail: format!("`{target}`"),
                });
            }
        }
    }
}

/// Sort of every variable: parameters and literals are integers, commands
/// take the sort of their operator's result, and a φ takes the sort of its
/// incoming values, which must agree. φs fed only by other φs default to
/// integers.
pub fn infer_sorts(f: &VFunction) -> Result<BTreeMap<Name, Sort>, Vec<ValidationError>> {
    let mut sorts: BTreeMap<Name, Sort> = BTreeMap::new();
    for p in &f.params {
        sorts.insert(p.clone(), Sort::Int);
    }
    for b in &f.blocks {
        for c in &b.commands {
            if let Command::Assign { target, op, .. } = c {
                let s = if op.is_arithmetic() { Sort::Int } else { Sort::Bool };
                sorts.insert(target.clone(), s);
            }
        }
    }
    let sort_of = |v: &Value, sorts: &BTreeMap<Name, Sort>| match v {
        Value::Int(_) => Some(Sort::Int),
        Value::Var(x) => sorts.get(x).copied(),
    };
    let mut errs = Vec::new();
    loop {
        let mut progress = false;
        for b in &f.blocks {
            for (i, phi) in b.phis.iter().enumerate() {
                if sorts.contains_key(&phi.target) {
                    continue;
                }
                let known: BTreeSet<Sort> = phi.incoming.iter().filter_map(|(v, _)| sort_of(v, &sorts)).collect();
                if known.len() > 1 {
                    errs.push(ValidationError {
                        rule: SsaRule::MixedSortPhi,
                        block: b.label.clone(),
                        position: Position::Phi(i),
                        detail: format!("`{}`", phi.target),
                    });
                }
                if let Some(s) = known.into_iter().next() {
                    sorts.insert(phi.target.clone(), s);
                    progress = true;
                }
            }
        }
        if !progress {
            break;
        }
    }
    // A φ whose sort was fixed early may still receive a conflicting value.
    for b in &f.blocks {
        for (i, phi) in b.phis.iter().enumerate() {
            let known: BTreeSet<Sort> = phi.incoming.iter().filter_map(|(v, _)| sort_of(v, &sorts)).collect();
            let already = errs
                .iter()
                .any(|e| e.block == b.label && e.position == Position::Phi(i));
            if known.len() > 1 && !already {
                errs.push(ValidationError {
                    rule: SsaRule::MixedSortPhi,
                    block: b.label.clone(),
                    position: Position::Phi(i),
                    detail: format!("`{}`", phi.target),
                });
            }
            sorts.entry(phi.target.clone()).or_insert(Sort::Int);
        }
    }
    if errs.is_empty() {
        Ok(sorts)
    } else {
        Err(errs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vminus::{parse_vminus_unchecked, INTSQRT};

    fn rules(src: &str) -> Vec<SsaRule> {
        match validate(&parse_vminus_unchecked(src).unwrap()) {
            Ok(()) => Vec::new(),
            Err(es) => es.into_iter().map(|e| e.rule).collect(),
        }
    }

    #[test]
    fn intsqrt_is_valid() {
        assert!(rules(INTSQRT).is_empty());
        let sorts = infer_sorts(&parse_vminus_unchecked(INTSQRT).unwrap()).unwrap();
        assert_eq!(sorts[&Name::new("%isin")], Sort::Bool);
        assert_eq!(sorts[&Name::new("%x")], Sort::Int);
    }

    #[test]
    fn each_rule_fires() {
        assert_eq!(rules("fun f() { a: ret %z }"), vec![SsaRule::UndefinedVariable]);
        assert_eq!(
            rules("fun f() { a: br b b: ret 0 b: ret 1 }"),
            vec![SsaRule::DuplicateLabel]
        );
        assert_eq!(rules("fun f() { a: br q }"), vec![SsaRule::UnknownLabel]);
        assert_eq!(
            rules("fun f() { a: br b b: br a }"),
            vec![SsaRule::EntryHasPredecessors]
        );
        assert_eq!(
            rules("fun f(%p) { a: %p = add 1 1 ret %p }"),
            vec![SsaRule::MultipleDefinition]
        );
        assert_eq!(
            rules("fun f() { a: br b c: br b b: %x = phi [1, a] [2, c] ret %x }"),
            vec![]
        );
        assert_eq!(
            rules("fun f() { a: br b b: %x = phi [1, a] [2, b] ret %x }"),
            vec![SsaRule::PhiPredecessorMismatch]
        );
        assert_eq!(
            rules("fun f() { a: br b c: br b b: %x = phi [1, a] ret %x }"),
            vec![SsaRule::PhiPredecessorMismatch]
        );
        assert_eq!(
            rules("fun f(%p) { a: br %p b c b: %y = add 1 2 br d c: br d d: ret %y }"),
            vec![SsaRule::DominanceScoping]
        );
        assert_eq!(
            rules("fun f(%p) { a: %y = add %z 1 %z = add 1 1 ret %y }"),
            vec![SsaRule::DominanceScoping]
        );
        assert_eq!(
            rules("fun f(%p) { a: %b = lt %p 1 br %p c d c: br d d: %m = phi [%b, a] [3, c] ret %m }"),
            vec![SsaRule::MixedSortPhi]
        );
        assert_eq!(
            rules("fun f(%p) { a: %b = lt %p 1 %c = ne %b 1 ret %c }"),
            vec![SsaRule::IllSortedOperand]
        );
        assert_eq!(
            rules("fun f(%p) { a: %b = lt %p 1 %c = add %b %p ret %c }"),
            vec![SsaRule::IllSortedOperand]
        );
        assert!(rules("fun f(%p) { a: %b = lt %p 1 %c = eq %b %b ret %c }").is_empty());
    }

    #[test]
    fn phi_operands_are_scoped_at_the_predecessor() {
        // %x1 is defined in `body` and flows back along the back edge.
        assert!(rules(INTSQRT).is_empty());
        // A value defined in a sibling branch is not available.
        assert_eq!(
            rules("fun f(%p) { a: br %p b c b: %y = add 1 2 br d c: br d d: %m = phi [%y, b] [%y, c] ret %m }"),
            vec![SsaRule::DominanceScoping]
        );
    }

    #[test]
    fn unreachable_blocks_skip_dominance() {
        assert!(rules("fun f() { a: %y = add 1 2 ret %y b: %w = add %v 1 br c c: %v = add 1 1 ret %w }").is_empty());
    }
}
