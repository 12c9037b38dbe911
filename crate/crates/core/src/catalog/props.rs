//! Generic constructions that turn a reduction into others with predictable
//! constants: letter repetition, upgrading a many-one map to an injective
//! one, and the common lower bound of a map's source and target.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::check::{MapKind, PositionMap, ReductionMap};
use crate::error::{Error, Result};
use crate::strings::{repeat_letters, InfiniteString, Reference, Symbol, SymbolSource};

/// An expansion of `gamma` by letter repetition and the maps both ways.
#[derive(Clone, Debug)]
pub struct Expansion {
    /// `gamma` with every letter repeated `C+1` times.
    pub delta: InfiniteString,
    /// `n -> (n-1)(C+1)+1`, a `(C+1)`-1qi-reduction from gamma to delta.
    pub forward: ReductionMap,
    /// `n -> ceil(n/(C+1))`, a `C`-mqi-reduction from delta to gamma.
    pub back: ReductionMap,
}

pub fn expand_repeat(gamma: &InfiniteString, c: u64) -> Result<Expansion> {
    if c < 1 {
        return Err(Error::invalid("expand", "c", "must be at least 1"));
    }
    let times = c + 1;
    let delta = repeat_letters(gamma, times)?;
    let named = |op: &str| {
        Reference::new(op)
            .with("string", gamma.reference())
            .with("c", c)
            .to_string()
    };
    let forward = ReductionMap::from_fn(
        named("expand_g"),
        gamma.clone(),
        delta.clone(),
        times,
        MapKind::OneOne,
        move |n| (n - 1) * times + 1,
    )?;
    let back = ReductionMap::from_fn(
        named("expand_back"),
        delta.clone(),
        gamma.clone(),
        c,
        MapKind::ManyOne,
        move |n| n.div_ceil(times),
    )?;
    Ok(Expansion { delta, forward, back })
}

struct Injected {
    f: ReductionMap,
    c: u64,
}

impl PositionMap for Injected {
    /// Repeat visits to an image take the next free copy of its letter.
    /// Equal images are at most `C` apart, so earlier visits lie in
    /// `[n-C, n)`.
    fn image(&self, n: u64) -> u64 {
        let v = self.f.map_at(n);
        let visits = (n.saturating_sub(self.c).max(1)..n)
            .filter(|&m| self.f.map_at(m) == v)
            .count() as u64;
        assert!(
            visits <= self.c,
            "image {v} of `{}` has more than C+1 preimages",
            self.f.name()
        );
        (v - 1) * (self.c + 1) + 1 + visits
    }

    fn domain_limit(&self) -> Option<u64> {
        self.f.domain_limit()
    }
}

/// Upgrades a `C`-mqi-reduction `f` from beta to gamma to an injective
/// `(C^2+2C)`-reduction from beta to the expansion of gamma.
///
/// # Panics
///
/// Evaluation panics if `f` gives some image more than `C+1` preimages,
/// which no `C`-mqi-reduction does.
pub fn inject_upgrade(f: &ReductionMap) -> Result<ReductionMap> {
    let c = f.declared_c();
    let delta = repeat_letters(f.target(), c + 1)?;
    let name = Reference::new("inject").with("map", f.name());
    ReductionMap::new(
        name.to_string(),
        f.source().clone(),
        delta,
        Arc::new(Injected { f: f.clone(), c }),
        c * c + 2 * c,
        MapKind::OneOne,
    )
}

/// First-visit positions of a map: `i_k` is the `k`-th position whose image
/// was not taken by any earlier position.
struct FirstVisits {
    f: ReductionMap,
    state: Mutex<VisitState>,
}

#[derive(Default)]
struct VisitState {
    scanned: u64,
    /// Image to the index `k` of its first visit.
    rank: HashMap<u64, u64>,
    firsts: Vec<u64>,
}

impl FirstVisits {
    fn lock(&self) -> std::sync::MutexGuard<'_, VisitState> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn scan_to(&self, st: &mut VisitState, n: u64) {
        while st.scanned < n {
            st.scanned += 1;
            let v = self.f.map_at(st.scanned);
            if !st.rank.contains_key(&v) {
                st.firsts.push(st.scanned);
                let k = st.firsts.len() as u64;
                st.rank.insert(v, k);
            }
        }
    }

    /// `i_k`, scanning as far as needed.
    fn nth(&self, k: u64) -> u64 {
        let mut st = self.lock();
        while (st.firsts.len() as u64) < k {
            let next = st.scanned + 1;
            if self.f.domain_limit().is_some_and(|l| next > l) {
                panic!("first visit {k} of `{}` lies beyond its domain", self.f.name());
            }
            self.scan_to(&mut st, next);
        }
        st.firsts[k as usize - 1]
    }

    /// The `k` with `f(i_k) = f(n)`.
    fn rank_of(&self, n: u64) -> u64 {
        let mut st = self.lock();
        self.scan_to(&mut st, n);
        st.rank[&self.f.map_at(n)]
    }

    /// Number of first visits inside a bounded domain.
    fn count_in_domain(&self) -> Option<u64> {
        let limit = self.f.domain_limit()?;
        let mut st = self.lock();
        self.scan_to(&mut st, limit);
        Some(st.firsts.len() as u64)
    }
}

struct VisitedLetters {
    visits: Arc<FirstVisits>,
}

impl SymbolSource for VisitedLetters {
    fn symbol_at_big(&self, p: &BigUint) -> Symbol {
        self.symbol_at_u64(p.to_u64().expect("positions of the lower string fit 64 bits"))
    }
    fn symbol_at_u64(&self, k: u64) -> Symbol {
        self.visits.f.source().symbol_at(self.visits.nth(k))
    }
}

/// `n -> i_n`.
struct ToSource(Arc<FirstVisits>, Option<u64>);

impl PositionMap for ToSource {
    fn image(&self, n: u64) -> u64 {
        self.0.nth(n)
    }
    fn domain_limit(&self) -> Option<u64> {
        self.1
    }
}

/// `n -> f(i_n)`.
struct ToTarget(Arc<FirstVisits>, Option<u64>);

impl PositionMap for ToTarget {
    fn image(&self, n: u64) -> u64 {
        self.0.f.map_at(self.0.nth(n))
    }
    fn domain_limit(&self) -> Option<u64> {
        self.1
    }
}

/// `n -> min{k : f(i_k) = f(n)}`.
struct FromSource(Arc<FirstVisits>);

impl PositionMap for FromSource {
    fn image(&self, n: u64) -> u64 {
        self.0.rank_of(n)
    }
    fn domain_limit(&self) -> Option<u64> {
        self.0.f.domain_limit()
    }
}

/// A common lower bound `delta` of the source and target of a map.
#[derive(Clone, Debug)]
pub struct CommonLower {
    /// `delta(k) = beta(i_k)`.
    pub delta: InfiniteString,
    /// `n -> i_n`, a `(C+1)`-1qi-reduction from delta to beta.
    pub to_source: ReductionMap,
    /// `n -> f(i_n)`, a `C(C+1)`-1qi-reduction from delta to gamma.
    pub to_target: ReductionMap,
    /// `n -> min{k : f(i_k) = f(n)}`, an mqi-reduction from beta to delta.
    pub from_source: ReductionMap,
    /// Step and order constants of `from_source`: `2C+1` and `C(C+1)^2-1`.
    pub from_source_split: (u64, u64),
}

pub fn common_lower(f: &ReductionMap) -> Result<CommonLower> {
    let c = f.declared_c();
    let visits = Arc::new(FirstVisits {
        f: f.clone(),
        state: Mutex::new(VisitState::default()),
    });
    let limit = visits.count_in_domain();
    let named = |op: &str| Reference::new(op).with("map", f.name()).to_string();
    let delta = InfiniteString::new(
        Reference::new("lower").with("map", f.name()),
        f.source().alphabet().clone(),
        Arc::new(VisitedLetters { visits: visits.clone() }),
    );
    let to_source = ReductionMap::new(
        named("lower_f1"),
        delta.clone(),
        f.source().clone(),
        Arc::new(ToSource(visits.clone(), limit)),
        c + 1,
        MapKind::OneOne,
    )?;
    let to_target = ReductionMap::new(
        named("lower_f2"),
        delta.clone(),
        f.target().clone(),
        Arc::new(ToTarget(visits.clone(), limit)),
        c * (c + 1),
        MapKind::OneOne,
    )?;
    let split = (2 * c + 1, c * (c + 1) * (c + 1) - 1);
    let from_source = ReductionMap::new(
        named("lower_g"),
        f.source().clone(),
        delta.clone(),
        Arc::new(FromSource(visits)),
        split.0.max(split.1),
        MapKind::ManyOne,
    )?;
    Ok(CommonLower {
        delta,
        to_source,
        to_target,
        from_source,
        from_source_split: split,
    })
}
