//! A greedy normalizer: propagate `unreachable`, eliminate branches that
//! lead to it, and drop safe sequence heads, innermost first.

use std::sync::Arc;

use crate::safety::SafetyMode;
use crate::term::{Term, VarSet};

use super::apply::rewrite_site;
use super::{RewriteStep, RewriteTrace, RuleId};

/// Forward rules tried at each node, in priority order.
const PRIORITY: [RuleId; 8] = [
    RuleId::U1,
    RuleId::U2,
    RuleId::P1,
    RuleId::P2,
    RuleId::P3,
    RuleId::P4,
    RuleId::P5,
    RuleId::M4,
];

/// Rewrite children before parents, left to right, retrying each node until
/// no rule fires. Rewrites at a node only reuse already-normal subterms, so
/// one bottom-up pass reaches the fixpoint.
pub fn normalize_unreachable(e: &Term, safety: SafetyMode) -> (Term, RewriteTrace) {
    let mut trace = Vec::new();
    let out = go(e, &mut Vec::new(), safety, &mut trace);
    (out, trace)
}

fn go(e: &Term, path: &mut Vec<usize>, safety: SafetyMode, trace: &mut RewriteTrace) -> Term {
    let mut cur = e.clone();
    for i in 0..e.children().len() {
        path.push(i);
        let child = cur.child(i).expect("same arity").clone();
        let new = go(&child, path, safety, trace);
        path.pop();
        if new != *child {
            cur = cur.with_child(i, Arc::new(new)).expect("same arity");
        }
    }
    // None of the priority rules reads the ambient scope.
    let ambient = VarSet::new();
    'retry: loop {
        for rule in PRIORITY {
            let mut step = RewriteStep::fwd(rule, path.clone());
            if matches!(rule, RuleId::P1 | RuleId::M4) {
                step.params.safety = Some(safety);
            }
            if let Ok(new) = rewrite_site(&cur, &step, &ambient, safety) {
                trace.push(step);
                cur = new;
                continue 'retry;
            }
        }
        return cur;
    }
}
