//! Benchmark fixtures for the muSPARK pipeline.

use muspark::oracle::{gen_program, GenConfig};
use muspark::syntax::pretty_print;

pub const SWAP: &str = include_str!("../../core/tests/corpus/accept/swap.msk");
pub const TREE_BUILDER: &str = include_str!("../../core/tests/corpus/accept/tree_builder.msk");
pub const RECORD_ASSIGN: &str = include_str!("../../core/tests/corpus/accept/record_through_access.msk");

/// Source text of a generated program with `procs` nested procedures of up to `stmts`
/// statements each.
pub fn generated(seed: u64, procs: usize, stmts: usize) -> String {
    let cfg = GenConfig { procs, stmts, ..GenConfig::default() };
    pretty_print(&gen_program(seed, &cfg))
}
