//! The unreachable-driven CFG simplification: erase commands that precede
//! an `unreachable` terminator, then prune the edges into the block.

use crate::term::Name;

use super::validate::{validate, ValidationError};
use super::{Block, Command, Terminator, VFunction};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimplifyError {
    #[error("no block labeled `{0}`")]
    UnknownBlock(Name),
    #[error("block `{0}` does not end in unreachable")]
    NotUnreachable(Name),
    #[error("simplification produced an invalid function: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<ValidationError>),
}

/// One application of the block-level step. Returns whether `f` changed.
pub fn simplify_unreachable(f: &VFunction, l: &Name) -> Result<(VFunction, bool), SimplifyError> {
    let block = f.block(l).ok_or_else(|| SimplifyError::UnknownBlock(l.clone()))?;
    if block.terminator != Terminator::Unreachable {
        return Err(SimplifyError::NotUnreachable(l.clone()));
    }
    let mut out = f.clone();
    let mut changed = false;
    let mut commands = block.commands.clone();
    while matches!(commands.last(), Some(c) if *c != Command::CallError) {
        commands.pop();
        changed = true;
    }
    if !commands.is_empty() {
        out.block_mut(l).expect("present").commands = commands;
        return Ok((out, changed));
    }

    for b in &mut out.blocks {
        b.terminator = match &b.terminator {
            // Both targets are `l`: no edge is left to keep.
            Terminator::BrCond(_, a, c) if a == l && c == l => Terminator::Unreachable,
            Terminator::BrCond(_, a, other) | Terminator::BrCond(_, other, a) if a == l => {
                Terminator::Br(other.clone())
            }
            Terminator::Br(a) if a == l => Terminator::Unreachable,
            t => t.clone(),
        };
    }
    dedupe_phis(&mut out);
    if out.entry().label == *l {
        let entry = out.block_mut(l).expect("present");
        *entry = Block {
            label: l.clone(),
            phis: Vec::new(),
            commands: Vec::new(),
            terminator: Terminator::Unreachable,
        };
    } else {
        delete_dead_block(&mut out, l);
    }
    // An entry that is already `l: unreachable` would otherwise report a
    // change on every call and the fixpoint would never end.
    let changed = out != *f;
    Ok((out, changed))
}

/// Remove `l` and every φ entry naming it.
fn delete_dead_block(f: &mut VFunction, l: &Name) {
    f.blocks.retain(|b| &b.label != l);
    for b in &mut f.blocks {
        for phi in &mut b.phis {
            phi.incoming.retain(|(_, p)| p != l);
        }
    }
}

/// Drop repeated identical `(value, label)` φ entries.
fn dedupe_phis(f: &mut VFunction) {
    for b in &mut f.blocks {
        for phi in &mut b.phis {
            let mut seen = Vec::new();
            phi.incoming.retain(|e| {
                if seen.contains(e) {
                    false
                } else {
                    seen.push(e.clone());
                    true
                }
            });
        }
    }
}

/// Apply the block-level step to every `unreachable`-terminated block until
/// nothing changes. Returns the labels of the steps that changed something,
/// in order. The result is validated.
pub fn simplify_function_cfg(f: &VFunction) -> Result<(VFunction, Vec<Name>), SimplifyError> {
    let mut cur = f.clone();
    let mut trace = Vec::new();
    loop {
        let mut changed = false;
        let labels: Vec<Name> = cur.blocks.iter().map(|b| b.label.clone()).collect();
        for l in labels {
            match cur.block(&l) {
                Some(b) if b.terminator == Terminator::Unreachable => {}
                _ => continue,
            }
            let (next, c) = simplify_unreachable(&cur, &l)?;
            if c {
                trace.push(l);
                changed = true;
            }
            cur = next;
        }
        if !changed {
            break;
        }
    }
    validate(&cur).map_err(SimplifyError::Invalid)?;
    Ok((cur, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vminus::{parse_vminus, print_vminus, INTSQRT};

    fn n(s: &str) -> Name {
        Name::new(s)
    }

    const INTSQRT_PRUNED: &str = "\
fun intsqrt(%in) {
start:
  br loop
loop:
  %x = phi [0, start] [%x1, body]
  %isin = le %x %in
  br body
body:
  %sq = mul %x %x
  %done = le %in %sq
  %x1 = add %x 1
  br %done exit loop
exit:
  ret %x
}
";

    #[test]
    fn intsqrt_golden() {
        let f = parse_vminus(INTSQRT).unwrap();
        let (g, changed) = simplify_unreachable(&f, &n("fail")).unwrap();
        assert!(changed);
        assert_eq!(print_vminus(&g), INTSQRT_PRUNED);
        let (h, trace) = simplify_function_cfg(&f).unwrap();
        assert_eq!(h, g);
        assert_eq!(trace, vec![n("fail")]);
    }

    #[test]
    fn commands_before_unreachable_are_erased_then_edges_pruned() {
        let f = parse_vminus("fun f(%a, %b) { e: br %a k u k: ret 1 u: %x = add %a %b unreachable }").unwrap();
        let (g, changed) = simplify_unreachable(&f, &n("u")).unwrap();
        assert!(changed);
        assert_eq!(print_vminus(&g), "fun f(%a, %b) {\ne:\n  br k\nk:\n  ret 1\n}\n");
    }

    #[test]
    fn call_error_stops_the_scan() {
        let f = parse_vminus("fun f() { e: br u u: call error() unreachable }").unwrap();
        let (g, changed) = simplify_unreachable(&f, &n("u")).unwrap();
        assert!(!changed);
        assert_eq!(g, f);

        let f = parse_vminus("fun f() { e: br u u: call error() %x = add 1 1 unreachable }").unwrap();
        let (g, changed) = simplify_unreachable(&f, &n("u")).unwrap();
        assert!(changed);
        assert_eq!(g.block(&n("u")).unwrap().commands, vec![Command::CallError]);
    }

    #[test]
    fn chain_takes_two_iterations() {
        let f = parse_vminus("fun f() { a: br b b: br c c: unreachable }").unwrap();
        let (g, trace) = simplify_function_cfg(&f).unwrap();
        assert_eq!(trace, vec![n("c"), n("b")]);
        assert_eq!(print_vminus(&g), "fun f() {\na:\n  unreachable\n}\n");
        // Already a fixpoint.
        let (h, trace) = simplify_function_cfg(&g).unwrap();
        assert_eq!(h, g);
        assert!(trace.is_empty());
    }

    #[test]
    fn no_unreachable_means_no_change() {
        let f = parse_vminus("fun f(%p) { a: br %p b c b: ret 1 c: ret 2 }").unwrap();
        let (g, trace) = simplify_function_cfg(&f).unwrap();
        assert_eq!(g, f);
        assert!(trace.is_empty());
    }

    #[test]
    fn both_targets_unreachable() {
        let f = parse_vminus("fun f(%p) { a: br %p u u u: unreachable }").unwrap();
        let (g, _) = simplify_unreachable(&f, &n("u")).unwrap();
        assert_eq!(print_vminus(&g), "fun f(%p) {\na:\n  unreachable\n}\n");
    }

    #[test]
    fn preconditions() {
        let f = parse_vminus(INTSQRT).unwrap();
        assert_eq!(
            simplify_unreachable(&f, &n("loop")),
            Err(SimplifyError::NotUnreachable(n("loop")))
        );
        assert_eq!(
            simplify_unreachable(&f, &n("zzz")),
            Err(SimplifyError::UnknownBlock(n("zzz")))
        );
    }
}
