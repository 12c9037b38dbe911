//! Maps from the `sigma`/`tau` families onto the `mu`/`nu` families.
//!
//! Component `i` of every family starts with the alternating word
//! `(01)^{2^{2^i}}` of length `P_i = 2^{2^i+1}`. The source suffix has length
//! `2i` and the target suffix length `i`.

use std::sync::Arc;

use serde::Serialize;

use crate::check::{MapKind, PositionMap, ReductionMap};
use crate::error::{Error, Result};
use crate::strings::{registry_get, NondenseKind, Reference};

/// Components indexed; component 6 already extends beyond every 64-bit
/// position.
const INDEXED_COMPONENTS: u64 = 6;

pub(crate) const NONDENSE_C: u64 = 4;

/// Start positions (1-based) and lengths of the intervals of component `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ComponentIntervals {
    pub i: u64,
    /// Length of the alternating prefix, `2^{2^i+1}`.
    pub alternating_len: u128,
    /// Start of the alternating prefix in the source.
    pub source_alternating: u128,
    /// Start of the source suffix, of length `2i`.
    pub source_suffix: u128,
    /// Start of the alternating prefix in the target.
    pub target_alternating: u128,
    /// Start of the target suffix, of length `i`.
    pub target_suffix: u128,
}

/// Interval starts for a source family and a target family.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntervalIndex {
    pub components: Vec<ComponentIntervals>,
    /// Source and target starts of the first component not indexed.
    pub next_start: (u128, u128),
}

impl IntervalIndex {
    pub fn new() -> Self {
        let mut components = Vec::new();
        let (mut src, mut tgt) = (1u128, 1u128);
        for i in 1..=INDEXED_COMPONENTS {
            let alternating_len = 1u128 << ((1u32 << i) + 1);
            components.push(ComponentIntervals {
                i,
                alternating_len,
                source_alternating: src,
                source_suffix: src + alternating_len,
                target_alternating: tgt,
                target_suffix: tgt + alternating_len,
            });
            src += alternating_len + 2 * i as u128;
            tgt += alternating_len + i as u128;
        }
        IntervalIndex {
            components,
            next_start: (src, tgt),
        }
    }

    /// The component whose source extent contains `x`.
    pub fn source_component(&self, x: u128) -> &ComponentIntervals {
        let idx = self.components.partition_point(|c| c.source_alternating <= x);
        &self.components[idx - 1]
    }

    /// 1-based component `i`.
    pub fn component(&self, i: u64) -> &ComponentIntervals {
        &self.components[i as usize - 1]
    }

    /// Target start of component `i`, which may be the first one not indexed.
    pub fn target_start(&self, i: u64) -> u128 {
        match self.components.get(i as usize - 1) {
            Some(c) => c.target_alternating,
            None => self.next_start.1,
        }
    }

    /// Last source position of component `i`.
    pub fn source_end(&self, i: u64) -> u128 {
        let c = self.component(i);
        c.source_suffix + 2 * i as u128 - 1
    }
}

impl Default for IntervalIndex {
    fn default() -> Self {
        IntervalIndex::new()
    }
}

struct NondenseMap {
    index: IntervalIndex,
    source: NondenseKind,
    target: NondenseKind,
}

impl NondenseMap {
    /// Images of the alternating prefix: the first `4(i-1)` letters pair up
    /// two-to-one onto target offsets `2(i-1)..4(i-1)`, the rest is identical.
    fn compress_head(c: &ComponentIntervals, m: u128) -> u128 {
        let i = c.i as u128;
        if m < 4 * (i - 1) {
            let (w, x) = (m / 4, m % 2);
            c.target_alternating + 2 * (i - 1) + 2 * w + x
        } else {
            c.target_alternating + m
        }
    }

    /// Images of the alternating prefix: identical up to the last `4i`
    /// letters, which pair up two-to-one onto target offsets `P-4i..P-2i`.
    fn compress_tail(c: &ComponentIntervals, m: u128) -> u128 {
        let i = c.i as u128;
        let cut = c.alternating_len - 4 * i;
        if m < cut {
            c.target_alternating + m
        } else {
            let q = m - cut;
            c.target_alternating + cut + 2 * (q / 4) + q % 2
        }
    }

    fn image128(&self, x: u128) -> u128 {
        let c = self.index.source_component(x);
        let i = c.i as u128;
        let m = x - c.source_alternating;
        let next = || self.index.target_start(c.i + 1);
        use NondenseKind::*;
        if m < c.alternating_len {
            return match (self.source, self.target) {
                (Sigma, Mu) | (Tau, Nu) => Self::compress_head(c, m),
                _ => Self::compress_tail(c, m),
            };
        }
        let s = m - c.alternating_len;
        let short_tail = c.target_alternating + c.alternating_len - 2 * i;
        match (self.source, self.target, s < i) {
            // 0^i onto 0^i, then 1^i onto the first i ones of the next component
            (Sigma, Mu, true) => c.target_suffix + s,
            (Sigma, Mu, false) => next() + 2 * (s - i) + 1,
            // 1^i onto the freed ones, then 0^i onto 0^i
            (Tau, Mu, true) => short_tail + 2 * s + 1,
            (Tau, Mu, false) => c.target_suffix + (s - i),
            // 0^i onto the freed zeros, then 1^i onto 1^i
            (Sigma, Nu, true) => short_tail + 2 * s,
            (Sigma, Nu, false) => c.target_suffix + (s - i),
            // 1^i onto 1^i, then 0^i onto the first i zeros of the next component
            (Tau, Nu, true) => c.target_suffix + s,
            (Tau, Nu, false) => next() + 2 * (s - i),
            _ => unreachable!("checked at construction"),
        }
    }
}

impl PositionMap for NondenseMap {
    fn image(&self, x: u64) -> u64 {
        u64::try_from(self.image128(x as u128)).expect("image fits in 64 bits")
    }
}

fn family(name: &str) -> Result<(NondenseKind, &'static str)> {
    Ok(match name {
        "alpha" => (NondenseKind::Sigma, "sigma_family"),
        "beta" => (NondenseKind::Tau, "tau_family"),
        "gamma" => (NondenseKind::Mu, "mu_family"),
        "delta" => (NondenseKind::Nu, "nu_family"),
        other => {
            return Err(Error::Unknown {
                what: "non-dense string",
                name: other.to_string(),
            })
        }
    })
}

/// The 4-mqi-reduction from `source` (`alpha` or `beta`) to `target`
/// (`gamma` or `delta`).
pub fn nondense_map(source: &str, target: &str) -> Result<ReductionMap> {
    let (src_kind, src_name) = family(source)?;
    let (tgt_kind, tgt_name) = family(target)?;
    if !matches!(src_kind, NondenseKind::Sigma | NondenseKind::Tau) {
        return Err(Error::invalid("nondense_g", "source", "must be alpha or beta"));
    }
    if !matches!(tgt_kind, NondenseKind::Mu | NondenseKind::Nu) {
        return Err(Error::invalid("nondense_g", "target", "must be gamma or delta"));
    }
    let name = Reference::new("nondense_g")
        .with("source", source)
        .with("target", target);
    ReductionMap::new(
        name.to_string(),
        registry_get(&Reference::new(src_name))?,
        registry_get(&Reference::new(tgt_name))?,
        Arc::new(NondenseMap {
            index: IntervalIndex::new(),
            source: src_kind,
            target: tgt_kind,
        }),
        NONDENSE_C,
        MapKind::ManyOne,
    )
}
