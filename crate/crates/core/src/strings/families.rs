use std::sync::OnceLock;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use super::{InfiniteString, Symbol, SymbolSource};
use crate::error::{Error, Result};

/// Component offsets beyond this are resolved through the big-integer path.
const FAST_TABLE_LIMIT: u64 = 1 << 26;
const FAST_TABLE_MAX_COMPONENTS: usize = 1 << 16;

pub(crate) struct Constant(pub Symbol);

impl SymbolSource for Constant {
    fn symbol_at_big(&self, _: &BigUint) -> Symbol {
        self.0
    }
    fn symbol_at_u64(&self, _: u64) -> Symbol {
        self.0
    }
}

pub(crate) struct Cyclic(pub Vec<Symbol>);

impl SymbolSource for Cyclic {
    fn symbol_at_big(&self, p: &BigUint) -> Symbol {
        let r = (p - 1u32) % BigUint::from(self.0.len());
        self.0[r.to_usize().unwrap()]
    }
    fn symbol_at_u64(&self, p: u64) -> Symbol {
        self.0[((p - 1) % self.0.len() as u64) as usize]
    }
}

/// Each letter of `base` repeated `times` times.
pub(crate) struct Repeat {
    pub base: InfiniteString,
    pub times: u64,
}

impl SymbolSource for Repeat {
    fn symbol_at_big(&self, p: &BigUint) -> Symbol {
        let q = (p - 1u32) / self.times + 1u32;
        self.base.symbol_at_big(&q)
    }
    fn symbol_at_u64(&self, p: u64) -> Symbol {
        self.base.symbol_at((p - 1) / self.times + 1)
    }
}

/// A finite word followed by a constant tail.
pub(crate) struct HeadThenConstant {
    pub head: Vec<Symbol>,
    pub tail: Symbol,
}

impl SymbolSource for HeadThenConstant {
    fn symbol_at_big(&self, p: &BigUint) -> Symbol {
        match p.to_u64() {
            Some(v) => self.symbol_at_u64(v),
            None => self.tail,
        }
    }
    fn symbol_at_u64(&self, p: u64) -> Symbol {
        self.head.get(p as usize - 1).copied().unwrap_or(self.tail)
    }
}

/// `word` repeated `count` times inside a component.
#[derive(Clone, Debug)]
pub struct ComponentRun {
    pub word: Vec<Symbol>,
    pub count: BigUint,
}

impl ComponentRun {
    pub fn new(word: Vec<Symbol>, count: impl Into<BigUint>) -> Self {
        ComponentRun {
            word,
            count: count.into(),
        }
    }

    pub fn len(&self) -> BigUint {
        &self.count * self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty() || self.count.is_zero()
    }
}

/// A sequence of components `c_1 c_2 ...`, each a short list of runs.
pub trait Components: Send + Sync {
    /// Runs of component `i` (1-based).
    fn runs(&self, i: u64) -> Vec<ComponentRun>;

    fn component_len(&self, i: u64) -> BigUint {
        self.runs(i).iter().map(ComponentRun::len).sum()
    }

    /// Maps a 0-based offset into the concatenation to `(component, offset)`.
    /// The default scans components linearly, which suits fast-growing
    /// families.
    fn locate(&self, q: &BigUint) -> (u64, BigUint) {
        let mut start = BigUint::zero();
        let mut i = 1;
        loop {
            let end = &start + self.component_len(i);
            if q < &end {
                return (i, q - start);
            }
            start = end;
            i += 1;
        }
    }

    /// Letter at 0-based offset `q` into the concatenation.
    fn symbol_at_offset(&self, q: &BigUint) -> Symbol {
        let (i, mut o) = self.locate(q);
        for run in self.runs(i) {
            let len = run.len();
            if o < len {
                let k = (o % run.word.len()).to_usize().unwrap();
                return run.word[k];
            }
            o -= len;
        }
        unreachable!("offset beyond component")
    }
}

struct FastComponent {
    start: u64,
    runs: Vec<(Vec<Symbol>, u64)>,
}

/// A head word followed by the concatenation of a component family.
pub struct ConcatString<C> {
    head: Vec<Symbol>,
    comps: C,
    fast: OnceLock<(Vec<FastComponent>, u64)>,
}

impl<C: Components> ConcatString<C> {
    pub fn new(head: Vec<Symbol>, comps: C) -> Self {
        ConcatString {
            head,
            comps,
            fast: OnceLock::new(),
        }
    }

    pub fn components(&self) -> &C {
        &self.comps
    }

    fn fast_table(&self) -> &(Vec<FastComponent>, u64) {
        self.fast.get_or_init(|| {
            let mut table = Vec::new();
            let mut start = 0u64;
            let mut i = 1;
            while start < FAST_TABLE_LIMIT && table.len() < FAST_TABLE_MAX_COMPONENTS {
                let runs: Option<Vec<(Vec<Symbol>, u64)>> = self
                    .comps
                    .runs(i)
                    .into_iter()
                    .map(|r| r.count.to_u64().map(|c| (r.word, c)))
                    .collect();
                let Some(runs) = runs else { break };
                let len = runs
                    .iter()
                    .try_fold(0u64, |acc, (w, c)| acc.checked_add(c.checked_mul(w.len() as u64)?));
                let Some(end) = len.and_then(|l| start.checked_add(l)) else {
                    break;
                };
                table.push(FastComponent { start, runs });
                start = end;
                i += 1;
            }
            (table, start)
        })
    }

    fn read_runs_u64(runs: &[(Vec<Symbol>, u64)], mut o: u64) -> Symbol {
        for (w, c) in runs {
            let len = w.len() as u64 * c;
            if o < len {
                return w[(o % w.len() as u64) as usize];
            }
            o -= len;
        }
        unreachable!("offset beyond component")
    }

    fn symbol_after_head_big(&self, q: &BigUint) -> Symbol {
        self.comps.symbol_at_offset(q)
    }
}

impl<C: Components> SymbolSource for ConcatString<C> {
    fn symbol_at_big(&self, p: &BigUint) -> Symbol {
        if let Some(v) = p.to_u64() {
            return self.symbol_at_u64(v);
        }
        let q = p - 1u32 - self.head.len();
        self.symbol_after_head_big(&q)
    }

    fn symbol_at_u64(&self, p: u64) -> Symbol {
        let h = self.head.len() as u64;
        if p <= h {
            return self.head[p as usize - 1];
        }
        let q = p - 1 - h;
        let (table, end) = self.fast_table();
        if q < *end {
            let idx = table.partition_point(|c| c.start <= q) - 1;
            let comp = &table[idx];
            return Self::read_runs_u64(&comp.runs, q - comp.start);
        }
        self.symbol_after_head_big(&BigUint::from(q))
    }
}

/// Components `0^n tail` for `n = 1, 2, ...`.
pub(crate) struct GrowingZeros {
    pub tail: Vec<Symbol>,
}

impl GrowingZeros {
    /// Component index and offset of the 0-based offset `q`, with no bound
    /// on the index.
    fn locate_big(&self, q: &BigUint) -> (BigUint, BigUint) {
        // smallest n with total(n) > q
        let mut lo = BigUint::one();
        let mut hi = (q * 2u32).sqrt() + 2u32;
        while lo < hi {
            let mid = (&lo + &hi) / 2u32;
            if &self.total(&mid) > q {
                hi = mid;
            } else {
                lo = mid + 1u32;
            }
        }
        let before = self.total(&(&lo - 1u32));
        (lo, q - before)
    }

    /// Total length of components `1..=n`.
    fn total(&self, n: &BigUint) -> BigUint {
        (n * (n + 1u32)) / 2u32 + n * self.tail.len()
    }
}

impl Components for GrowingZeros {
    fn runs(&self, i: u64) -> Vec<ComponentRun> {
        vec![
            ComponentRun::new(vec![Symbol(0)], i),
            ComponentRun::new(self.tail.clone(), 1u32),
        ]
    }

    fn locate(&self, q: &BigUint) -> (u64, BigUint) {
        let (n, o) = self.locate_big(q);
        (n.to_u64().expect("component index fits u64"), o)
    }

    fn symbol_at_offset(&self, q: &BigUint) -> Symbol {
        let (n, o) = self.locate_big(q);
        if o < n {
            Symbol(0)
        } else {
            self.tail[(o - n).to_usize().unwrap()]
        }
    }
}

/// Which of the four double-exponential families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NondenseKind {
    /// `(01)^{2^{2^i}} 0^i 1^i`
    Sigma,
    /// `(01)^{2^{2^i}} 1^i 0^i`
    Tau,
    /// `(01)^{2^{2^i}} 0^i`
    Mu,
    /// `(01)^{2^{2^i}} 1^i`
    Nu,
}

impl NondenseKind {
    /// Length of the alternating part of component `i`: `2^{2^i+1}`.
    pub fn alternating_len(i: u64) -> BigUint {
        assert!(i < 64, "component index out of range");
        BigUint::one() << ((1u64 << i) + 1)
    }

    /// Length of the suffix after the alternating part.
    pub fn suffix_len(self, i: u64) -> u64 {
        match self {
            NondenseKind::Sigma | NondenseKind::Tau => 2 * i,
            NondenseKind::Mu | NondenseKind::Nu => i,
        }
    }
}

pub(crate) struct Nondense(pub NondenseKind);

impl Components for Nondense {
    fn runs(&self, i: u64) -> Vec<ComponentRun> {
        let pairs = NondenseKind::alternating_len(i) >> 1;
        let mut runs = vec![ComponentRun::new(vec![Symbol(0), Symbol(1)], pairs)];
        let zeros = ComponentRun::new(vec![Symbol(0)], i);
        let ones = ComponentRun::new(vec![Symbol(1)], i);
        match self.0 {
            NondenseKind::Sigma => runs.extend([zeros, ones]),
            NondenseKind::Tau => runs.extend([ones, zeros]),
            NondenseKind::Mu => runs.push(zeros),
            NondenseKind::Nu => runs.push(ones),
        }
        runs
    }

    fn component_len(&self, i: u64) -> BigUint {
        NondenseKind::alternating_len(i) + self.0.suffix_len(i)
    }
}

/// `a^n b` followed by `base` with its first `b` and first `n` letters `a`
/// removed.
pub(crate) struct PermutedPrefix {
    base: InfiniteString,
    n: u64,
    a: Symbol,
    b: Symbol,
    removed: Vec<u64>,
}

const PERMUTED_PREFIX_SCAN: u64 = 10_000_000;

impl PermutedPrefix {
    pub fn new(base: InfiniteString, n: u64, a: Symbol, b: Symbol) -> Result<Self> {
        if a == b {
            return Err(Error::Domain("letters a and b must differ".into()));
        }
        let mut removed = Vec::new();
        let (mut seen_a, mut seen_b) = (0u64, false);
        let mut p = 1u64;
        while seen_a < n || !seen_b {
            if p > PERMUTED_PREFIX_SCAN {
                return Err(Error::Resource {
                    limit: "occurrence scan",
                    detail: format!(
                        "base lacks {n} occurrences of {a} and one of {b} within {PERMUTED_PREFIX_SCAN} positions"
                    ),
                });
            }
            let s = base.symbol_at(p);
            if s == a && seen_a < n {
                seen_a += 1;
                removed.push(p);
            } else if s == b && !seen_b {
                seen_b = true;
                removed.push(p);
            }
            p += 1;
        }
        Ok(PermutedPrefix { base, n, a, b, removed })
    }
}

impl SymbolSource for PermutedPrefix {
    fn symbol_at_big(&self, p: &BigUint) -> Symbol {
        if let Some(v) = p.to_u64() {
            return self.symbol_at_u64(v);
        }
        let mut t = p - (self.n + 1);
        for &r in &self.removed {
            if BigUint::from(r) <= t {
                t += 1u32;
            }
        }
        self.base.symbol_at_big(&t)
    }

    fn symbol_at_u64(&self, p: u64) -> Symbol {
        if p <= self.n {
            return self.a;
        }
        if p == self.n + 1 {
            return self.b;
        }
        let mut t = p - (self.n + 1);
        for &r in &self.removed {
            if r <= t {
                t += 1;
            }
        }
        self.base.symbol_at(t)
    }
}
