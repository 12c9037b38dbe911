//! Alphabets, lazily evaluated infinite strings, and the string registry.
//!
//! Positions are 1-indexed. Every string answers `symbol_at` for arbitrary
//! unbounded positions through [`BigUint`] arithmetic; a `u64` fast path is
//! available for the window sizes the checkers work with.

mod families;
mod reference;
mod registry;

use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use families::{ComponentRun, Components, ConcatString, NondenseKind};
pub use reference::Reference;
pub use registry::{registry_get, registry_names, repeat_letters};

/// Default upper bound on materialized prefix lengths.
pub const DEFAULT_PREFIX_CAP: u64 = 100_000_000;

const STANDARD_LABELS: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyz";

/// A letter, stored as its index in the standard label order `0,1,2,...`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Symbol(pub u8);

impl Symbol {
    pub fn label(self) -> char {
        STANDARD_LABELS[self.0 as usize] as char
    }

    pub fn from_label(c: char) -> Option<Symbol> {
        STANDARD_LABELS
            .iter()
            .position(|&b| b as char == c)
            .map(|i| Symbol(i as u8))
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// An ordered set of distinct letters.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    symbols: Vec<Symbol>,
}

impl Alphabet {
    pub fn new(mut symbols: Vec<Symbol>) -> Result<Self> {
        symbols.sort();
        let before = symbols.len();
        symbols.dedup();
        if symbols.is_empty() || symbols.len() != before {
            return Err(Error::Domain("alphabet must be nonempty without duplicates".into()));
        }
        if symbols.iter().any(|s| s.0 as usize >= STANDARD_LABELS.len()) {
            return Err(Error::Domain("symbol outside the label table".into()));
        }
        Ok(Alphabet { symbols })
    }

    /// The first `size` standard labels.
    pub fn standard(size: usize) -> Self {
        assert!((1..=STANDARD_LABELS.len()).contains(&size));
        Alphabet {
            symbols: (0..size as u8).map(Symbol).collect(),
        }
    }

    /// The smallest standard alphabet containing every symbol in `word`.
    pub fn covering(word: &[Symbol]) -> Self {
        let top = word.iter().map(|s| s.0).max().unwrap_or(0);
        Alphabet::standard(top as usize + 1)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn contains(&self, s: Symbol) -> bool {
        self.symbols.binary_search(&s).is_ok()
    }

    pub fn labels(&self) -> String {
        self.symbols.iter().map(|s| s.label()).collect()
    }
}

/// A finite word.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word(pub Vec<Symbol>);

impl Word {
    pub fn parse(text: &str) -> Result<Word> {
        text.chars()
            .map(|c| {
                Symbol::from_label(c).ok_or_else(|| Error::Parse {
                    input: text.to_string(),
                    reason: format!("`{c}` is not a symbol label"),
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{}", s.label())?;
        }
        Ok(())
    }
}

/// A 1-indexed position of unbounded size.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position(BigUint);

impl Position {
    pub fn new(value: BigUint) -> Result<Self> {
        if value.is_zero() {
            return Err(Error::Domain("positions start at 1".into()));
        }
        Ok(Position(value))
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }
}

impl From<u64> for Position {
    /// Panics on 0.
    fn from(v: u64) -> Self {
        assert!(v >= 1, "positions start at 1");
        Position(BigUint::from(v))
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Serialize for Position {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Position {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let v: BigUint = s.parse().map_err(serde::de::Error::custom)?;
        Position::new(v).map_err(serde::de::Error::custom)
    }
}

/// A closed interval of positions, optionally with its contents.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub lo: Position,
    pub hi: Position,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub word: Option<String>,
}

impl Window {
    pub fn new(lo: Position, hi: Position) -> Result<Self> {
        if lo > hi {
            return Err(Error::Domain(format!("empty window {lo}..{hi}")));
        }
        Ok(Window { lo, hi, word: None })
    }

    pub fn prefix(n: u64) -> Self {
        Window {
            lo: Position::from(1),
            hi: Position::from(n.max(1)),
            word: None,
        }
    }
}

/// The evaluation half of an infinite string.
pub trait SymbolSource: Send + Sync {
    fn symbol_at_big(&self, p: &BigUint) -> Symbol;

    fn symbol_at_u64(&self, p: u64) -> Symbol {
        self.symbol_at_big(&BigUint::from(p))
    }
}

/// A named, lazily evaluated total map from positions to symbols.
#[derive(Clone)]
pub struct InfiniteString {
    reference: Reference,
    alphabet: Alphabet,
    source: Arc<dyn SymbolSource>,
}

impl fmt::Debug for InfiniteString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "InfiniteString({})", self.reference)
    }
}

impl InfiniteString {
    pub fn new(reference: Reference, alphabet: Alphabet, source: Arc<dyn SymbolSource>) -> Self {
        InfiniteString {
            reference,
            alphabet,
            source,
        }
    }

    pub fn from_fn(
        reference: Reference,
        alphabet: Alphabet,
        f: impl Fn(&BigUint) -> Symbol + Send + Sync + 'static,
    ) -> Self {
        struct FnSource<F>(F);
        impl<F: Fn(&BigUint) -> Symbol + Send + Sync> SymbolSource for FnSource<F> {
            fn symbol_at_big(&self, p: &BigUint) -> Symbol {
                (self.0)(p)
            }
        }
        InfiniteString::new(reference, alphabet, Arc::new(FnSource(f)))
    }

    pub fn name(&self) -> &str {
        self.reference.name()
    }

    pub fn reference(&self) -> &Reference {
        &self.reference
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// The `p`-th letter. Panics if `p == 0`.
    pub fn symbol_at(&self, p: u64) -> Symbol {
        assert!(p >= 1, "positions start at 1");
        self.source.symbol_at_u64(p)
    }

    pub fn symbol_at_position(&self, p: &Position) -> Symbol {
        match p.to_u64() {
            Some(v) => self.source.symbol_at_u64(v),
            None => self.source.symbol_at_big(p.value()),
        }
    }

    pub fn symbol_at_big(&self, p: &BigUint) -> Symbol {
        assert!(!p.is_zero(), "positions start at 1");
        self.source.symbol_at_big(p)
    }

    pub fn prefix(&self, n: u64) -> Result<Word> {
        self.prefix_with_cap(n, DEFAULT_PREFIX_CAP)
    }

    pub fn prefix_with_cap(&self, n: u64, cap: u64) -> Result<Word> {
        if n > cap {
            return Err(Error::Resource {
                limit: "materialization cap",
                detail: format!("prefix of length {n} exceeds cap {cap}"),
            });
        }
        Ok(Word((1..=n).map(|p| self.source.symbol_at_u64(p)).collect()))
    }

    /// Materializes positions `lo..=hi`.
    pub fn window(&self, lo: u64, hi: u64) -> Result<Window> {
        let mut w = Window::new(Position::from(lo.max(1)), Position::from(hi.max(1)))?;
        if hi - lo + 1 > DEFAULT_PREFIX_CAP {
            return Err(Error::Resource {
                limit: "materialization cap",
                detail: format!("window of length {}", hi - lo + 1),
            });
        }
        w.word = Some((lo..=hi).map(|p| self.symbol_at(p).label()).collect());
        Ok(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_labels_round_trip() {
        for i in 0..36u8 {
            assert_eq!(Symbol::from_label(Symbol(i).label()), Some(Symbol(i)));
        }
        assert_eq!(Symbol::from_label('!'), None);
    }

    #[test]
    fn alphabet_rejects_duplicates() {
        assert!(Alphabet::new(vec![Symbol(0), Symbol(0)]).is_err());
        assert!(Alphabet::new(vec![]).is_err());
        assert_eq!(Alphabet::new(vec![Symbol(1), Symbol(0)]).unwrap().labels(), "01");
    }

    #[test]
    fn position_zero_rejected() {
        assert!(Position::new(BigUint::zero()).is_err());
    }

    #[test]
    fn window_materializes() {
        let s = registry_get(&Reference::parse("cyclic(w=001)").unwrap()).unwrap();
        let w = s.window(2, 5).unwrap();
        assert_eq!(w.word.as_deref(), Some("0100"));
    }
}
