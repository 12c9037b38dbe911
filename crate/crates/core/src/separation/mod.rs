//! The tree-separation construction: the strings theta and zeta built from
//! a binary tree, compiled reductions that follow a branch, and the
//! analysis that reads a branch back off a reduction.

mod analysis;
mod blocks;
mod compile;
mod dec;
mod layout;
mod tree;

use std::sync::Arc;

pub use analysis::{
    digit_slack, extract_branch, lead_of, verify_compiled, Lead, VerifyOptions, DEFAULT_SAMPLES, LEAD_ENUMERATION_LIMIT,
};
pub use blocks::BlockKind;
pub use compile::{
    compile_reduction, compile_reduction_in, Action, CompiledReduction, CompiledStage, Piece, COMPILED_DECLARED_C,
    DEFAULT_COMPILED_STAGES,
};
pub use layout::{BlockAt, Run, Segment, SeparationStrings, Side, StageLayout, MAX_STAGES, SEGMENTS};
pub use tree::{encode_word, level_words, sn_set, tree_from_ref, tree_names, Branch, SnSet, TreeOracle};

use crate::error::Result;

/// Layouts of stages `1..=n_max` for `tree`.
pub fn build_layouts(tree: Arc<dyn TreeOracle>, n_max: u32) -> Result<Vec<Arc<StageLayout>>> {
    SeparationStrings::new(tree).build_layouts(n_max)
}
