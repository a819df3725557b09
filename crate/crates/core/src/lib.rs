//! A call-by-value λ-calculus with an `unreachable` construct, the
//! compile-time rewrite relations that exploit it, an empirical correctness
//! harness, and an SSA mini-IR whose unreachable-driven CFG simplification
//! is related back to the calculus through a block-to-function translation.

pub mod eval;
pub mod gen;
pub mod harness;
pub mod rewrite;
pub mod safety;
pub mod term;
pub mod translate;
pub mod values;
pub mod vminus;
