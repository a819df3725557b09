//! Fuel-bounded execution.

use std::collections::HashMap;
use std::fmt;

use crate::eval::delta;
use crate::term::{Const, Name};

use super::{Command, Terminator, VFunction, Value};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum VOutcome {
    Returned(Const),
    /// `call error()` ran, or an operator was applied outside its domain.
    Errored,
    HitUnreachable,
    OutOfFuel,
}

impl fmt::Display for VOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VOutcome::Returned(c) => write!(f, "ret {c}"),
            VOutcome::Errored => f.write_str("error"),
            VOutcome::HitUnreachable => f.write_str("unreachable"),
            VOutcome::OutOfFuel => f.write_str("out of fuel"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VRunError {
    #[error("expected {expected} arguments, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("variable `{0}` read before assignment")]
    Unbound(Name),
    #[error("branch to unknown block `{0}`")]
    UnknownBlock(Name),
    #[error("block `{block}` has no phi value for predecessor `{pred}`")]
    MissingPhi { block: Name, pred: Name },
}

/// Run `f`. Each command and terminator costs one unit of fuel.
pub fn eval_vminus(f: &VFunction, args: &[Const], fuel: u64) -> Result<VOutcome, VRunError> {
    if args.len() != f.params.len() {
        return Err(VRunError::Arity {
            expected: f.params.len(),
            got: args.len(),
        });
    }
    let mut env: HashMap<Name, Const> = f.params.iter().cloned().zip(args.iter().cloned()).collect();
    let read = |env: &HashMap<Name, Const>, v: &Value| -> Result<Const, VRunError> {
        match v {
            Value::Int(i) => Ok(Const::Int(i.clone())),
            Value::Var(x) => env.get(x).cloned().ok_or_else(|| VRunError::Unbound(x.clone())),
        }
    };
    let mut used = 0u64;
    let mut block = f.entry();
    loop {
        for c in &block.commands {
            if used == fuel {
                return Ok(VOutcome::OutOfFuel);
            }
            used += 1;
            match c {
                Command::CallError => return Ok(VOutcome::Errored),
                Command::Assign {
                    target,
                    op,
                    left,
                    right,
                } => {
                    let (a, b) = (read(&env, left)?, read(&env, right)?);
                    match delta(*op, &a, &b) {
                        Some(r) => {
                            env.insert(target.clone(), r);
                        }
                        None => return Ok(VOutcome::Errored),
                    }
                }
            }
        }
        if used == fuel {
            return Ok(VOutcome::OutOfFuel);
        }
        used += 1;
        let next = match &block.terminator {
            Terminator::Ret(v) => return Ok(VOutcome::Returned(read(&env, v)?)),
            Terminator::Unreachable => return Ok(VOutcome::HitUnreachable),
            Terminator::Br(l) => l,
            Terminator::BrCond(v, a, b) => {
                let c = read(&env, v)?;
                if c.is_false() || c == Const::int(0) {
                    b
                } else {
                    a
                }
            }
        };
        let target = f.block(next).ok_or_else(|| VRunError::UnknownBlock(next.clone()))?;
        // φs read the incoming values simultaneously.
        let mut assigned = Vec::with_capacity(target.phis.len());
        for phi in &target.phis {
            let v = phi.value_from(&block.label).ok_or_else(|| VRunError::MissingPhi {
                block: target.label.clone(),
                pred: block.label.clone(),
            })?;
            assigned.push((phi.target.clone(), read(&env, v)?));
        }
        env.extend(assigned);
        block = target;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vminus::{parse_vminus, parse_vminus_unchecked, INTSQRT};

    fn run(src: &str, args: &[i64]) -> VOutcome {
        let f = parse_vminus(src).unwrap();
        let args: Vec<Const> = args.iter().map(|&i| Const::int(i)).collect();
        eval_vminus(&f, &args, 10_000).unwrap()
    }

    /// Least x >= 0 with x * x >= n.
    fn ceil_sqrt(n: i64) -> i64 {
        (0..).find(|x| x * x >= n).unwrap()
    }

    #[test]
    fn intsqrt_values() {
        for n in [0, 1, 2, 4, 8, 9, 10, 15, 16, 17] {
            assert_eq!(
                run(INTSQRT, &[n]),
                VOutcome::Returned(Const::int(ceil_sqrt(n))),
                "n = {n}"
            );
        }
        assert_eq!(run(INTSQRT, &[-1]), VOutcome::HitUnreachable);
        assert_eq!(run(INTSQRT, &[-5]), VOutcome::HitUnreachable);
    }

    #[test]
    fn trivial_and_errors() {
        assert_eq!(run("fun f() { a: ret 0 }", &[]), VOutcome::Returned(Const::int(0)));
        assert_eq!(run("fun f() { a: call error() ret 1 }", &[]), VOutcome::Errored);
        // Ill-sorted operands fail validation but still run to an error.
        let f = parse_vminus_unchecked("fun f() { a: %b = lt 1 2 %c = add %b 1 ret %c }").unwrap();
        assert_eq!(eval_vminus(&f, &[], 10).unwrap(), VOutcome::Errored);
        let f = parse_vminus("fun f(%a) { a: ret %a }").unwrap();
        assert_eq!(eval_vminus(&f, &[], 10), Err(VRunError::Arity { expected: 1, got: 0 }));
    }

    #[test]
    fn integer_conditions_branch_on_zero() {
        let src = "fun f(%p) { a: br %p t e t: ret 1 e: ret 2 }";
        assert_eq!(run(src, &[0]), VOutcome::Returned(Const::int(2)));
        assert_eq!(run(src, &[-3]), VOutcome::Returned(Const::int(1)));
    }

    #[test]
    fn phis_read_simultaneously() {
        // Swap through a loop: (a, b) <- (b, a) twice returns the original a.
        let src = "fun f(%p, %q) {
          e: br l
          l: %a = phi [%p, e] [%b, l2]
             %b = phi [%q, e] [%a, l2]
             %k = phi [0, e] [%k1, l2]
             %k1 = add %k 1
             %go = lt %k 2
             br %go l2 x
          l2: br l
          x: ret %a
        }";
        assert_eq!(run(src, &[7, 9]), VOutcome::Returned(Const::int(7)));
    }

    #[test]
    fn fuel_runs_out() {
        let f = parse_vminus("fun f() { a: br b b: br b }").unwrap();
        assert_eq!(eval_vminus(&f, &[], 50).unwrap(), VOutcome::OutOfFuel);
    }
}
