//! Quasi-isometric reductions between recursive infinite strings.
//!
//! * [`strings`]: lazily evaluated infinite strings and their registry.
//! * [`check`]: reduction maps and the window and invariant checkers.
//! * [`catalog`]: worked example reductions and closure constructions.
//! * [`search`]: bounded search for reductions on a prefix.
//! * [`separation`]: the tree-separation strings and compiled reductions.

pub mod catalog;
pub mod check;
pub mod error;
pub mod search;
pub mod separation;
pub mod strings;

pub use error::{Error, Result};
