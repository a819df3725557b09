//! Extended Vminus: a minimal SSA IR of labeled blocks holding φ-nodes,
//! binary-operation commands, `call error()`, and a terminator.

mod cfg;
mod interp;
mod simplify;
mod text;
mod validate;

use std::fmt;

use num_bigint::BigInt;

use crate::term::{BinOp, Name};

pub use cfg::{compute_dominators, predecessors, reachable_blocks, successors, DomTree, UnknownLabel};
pub use interp::{eval_vminus, VOutcome, VRunError};
pub use simplify::{simplify_function_cfg, simplify_unreachable, SimplifyError};
pub use text::{parse_vminus, parse_vminus_unchecked, print_vminus, VminusError, VminusSyntaxError};
pub use validate::{infer_sorts, validate, Position, Sort, SsaRule, ValidationError};

/// Operand of a command, φ-node, or terminator.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    /// Variable name, `%` included.
    Var(Name),
    Int(BigInt),
}

impl Value {
    pub fn int(i: i64) -> Value {
        Value::Int(BigInt::from(i))
    }

    pub fn var(s: &str) -> Value {
        Value::Var(Name::new(s))
    }

    pub fn as_var(&self) -> Option<&Name> {
        match self {
            Value::Var(x) => Some(x),
            Value::Int(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Var(x) => f.write_str(x.as_str()),
            Value::Int(i) => write!(f, "{i}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Phi {
    pub target: Name,
    /// `(value, predecessor)` pairs in source order.
    pub incoming: Vec<(Value, Name)>,
}

impl Phi {
    /// The value selected when control arrives from `pred`.
    pub fn value_from(&self, pred: &Name) -> Option<&Value> {
        self.incoming.iter().find(|(_, l)| l == pred).map(|(v, _)| v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Command {
    Assign {
        target: Name,
        op: BinOp,
        left: Value,
        right: Value,
    },
    /// `call error()`: ends the program.
    CallError,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Terminator {
    Ret(Value),
    Br(Name),
    BrCond(Value, Name, Name),
    Unreachable,
}

impl Terminator {
    /// Branch targets in order, duplicates kept.
    pub fn targets(&self) -> Vec<&Name> {
        match self {
            Terminator::Br(l) => vec![l],
            Terminator::BrCond(_, a, b) => vec![a, b],
            Terminator::Ret(_) | Terminator::Unreachable => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Block {
    pub label: Name,
    pub phis: Vec<Phi>,
    pub commands: Vec<Command>,
    pub terminator: Terminator,
}

impl Block {
    /// Number of φs, commands and the terminator.
    pub fn instruction_count(&self) -> usize {
        self.phis.len() + self.commands.len() + 1
    }
}

/// A function; its first block is the entry.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VFunction {
    pub name: Name,
    pub params: Vec<Name>,
    pub blocks: Vec<Block>,
}

impl VFunction {
    pub fn entry(&self) -> &Block {
        &self.blocks[0]
    }

    pub fn block(&self, label: &Name) -> Option<&Block> {
        self.blocks.iter().find(|b| &b.label == label)
    }

    pub fn block_mut(&mut self, label: &Name) -> Option<&mut Block> {
        self.blocks.iter_mut().find(|b| &b.label == label)
    }

    pub fn block_index(&self, label: &Name) -> Option<usize> {
        self.blocks.iter().position(|b| &b.label == label)
    }

    pub fn instruction_count(&self) -> usize {
        self.blocks.iter().map(Block::instruction_count).sum()
    }
}

impl fmt::Display for VFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_vminus(self))
    }
}

/// The running example: returns the least `x >= 0` with `x * x >= in`, and
/// reaches `unreachable` when `in` is negative.
pub const INTSQRT: &str = "\
fun intsqrt(%in) {
start:
  br loop
loop:
  %x = phi [0, start] [%x1, body]
  %isin = le %x %in
  br %isin body fail
body:
  %sq = mul %x %x
  %done = le %in %sq
  %x1 = add %x 1
  br %done exit loop
exit:
  ret %x
fail:
  unreachable
}
";
