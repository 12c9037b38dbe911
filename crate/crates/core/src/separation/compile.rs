use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use super::blocks::{split_zeros, BlockKind};
use super::dec;
use super::layout::{SeparationStrings, Side, StageLayout, MAX_STAGES};
use super::tree::{Branch, TreeOracle};
use crate::check::{MapKind, PositionMap, ReductionMap};
use crate::error::{Error, Result};
use crate::strings::Reference;

/// Constant declared for compiled maps.
pub const COMPILED_DECLARED_C: u64 = 8;

/// Stages compiled and validated up front by [`compile_reduction`].
pub const DEFAULT_COMPILED_STAGES: u32 = 6;

/// What a run of source blocks does.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    /// Block `j` goes onto block `j + shift`.
    Shift(BigUint),
    /// Block `lo + k` goes onto blocks `target + 2k` and `target + 2k + 1`.
    Split { target: BigUint },
    /// The single block goes onto blocks `target` and `target + 1`.
    Stretch { target: BigUint },
}

/// Source blocks `[lo, hi)` of one stage and their action.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Piece {
    pub lo: BigUint,
    pub hi: BigUint,
    pub action: Action,
}

/// Leads and pieces of one compiled stage.
#[derive(Clone, Debug, Serialize)]
pub struct CompiledStage {
    pub n: u32,
    /// Branch bit consumed by the branching segment (`B(n-1)`); 0 at stage 1.
    pub bit: u8,
    /// Leads of the four join segments `v1..v4`; all 0 at stage 1.
    #[serde(serialize_with = "dec::vec")]
    pub joins: Vec<BigUint>,
    #[serde(skip)]
    pub pieces: Vec<Piece>,
}

impl CompiledStage {
    /// Lead carried into the next stage.
    pub fn lead_out(&self) -> &BigUint {
        &self.joins[3]
    }

    pub fn piece_for(&self, j: &BigUint) -> &Piece {
        let idx = self.pieces.partition_point(|p| &p.lo <= j) - 1;
        &self.pieces[idx]
    }
}

/// How the offsets of a source block land in the target.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Shape {
    Block(BlockKind),
    /// Two consecutive `Lam0` blocks of stage `n`.
    Split(u32),
    /// `Lam0` followed by `LamPrime`, stage `n`.
    Stretch(u32),
}

/// Spreads index `j` of a run of length `from` monotonically over a run of
/// length `to`.
fn spread(j: u64, from: u64, to: u64) -> u64 {
    if from <= 1 {
        0
    } else {
        j * (to - 1) / (from - 1)
    }
}

/// Target offsets of the ones of a `Lam0` block stretched over
/// `Lam0 LamPrime`: each goes to the unused 1 nearest to an evenly spaced
/// ideal, preferring the lower one on ties.
fn stretch_ones(n: u64) -> Vec<u64> {
    let ones: Vec<u64> = (n..2 * n)
        .chain((0..n).map(|k| 2 * n + 2 * k + 1))
        .chain(4 * n..5 * n)
        .collect();
    let mut out = Vec::with_capacity(n as usize);
    let mut floor = 0usize;
    for j in 0..n {
        // ideal * (n + 1)
        let ideal = ((n - 1) * (n + 1) + (j + 1) * (4 * n + 1)) as i128;
        let dist = |c: u64| (c as i128 * (n as i128 + 1) - ideal).abs();
        let remaining = (n - 1 - j) as usize;
        let last = ones.len() - 1 - remaining;
        let mut best = floor;
        for k in floor..=last {
            if dist(ones[k]) < dist(ones[best]) {
                best = k;
            }
        }
        out.push(ones[best]);
        floor = best + 1;
    }
    out
}

/// Offset-level alignment of a source block onto a target shape.
fn align(src: BlockKind, shape: Shape, o: u64) -> Option<u64> {
    use BlockKind::*;
    match (src, shape) {
        (s, Shape::Block(t)) if s == t => Some(o),
        (Lam0 { n }, Shape::Block(LamI { n: m, i: 1 })) if n == m => {
            let (a, _) = split_zeros(n);
            let n = n as u64;
            Some(if o < a {
                o
            } else if o < n {
                o + 1
            } else {
                o + 2
            })
        }
        (LamI { n, i }, Shape::Block(LamI { n: m, i: k })) if n == m && k == i + 1 => {
            let (a, _) = split_zeros(n);
            Some(if o < a + i as u64 { o } else { o + 1 })
        }
        (Lam0 { n }, Shape::Block(LamPrime { n: m })) if n == m => {
            let n = n as u64;
            Some(if o < n { 2 * o } else { n + o })
        }
        (Lam0 { n }, Shape::Block(Lam0 { n: m })) if m == n + 1 => {
            let n = n as u64;
            Some(if o < n { o } else { o + 1 })
        }
        (LamI { n, i }, Shape::Split(m)) if n == m && i + 1 == n => {
            let n = n as u64;
            let mut rest = o;
            let targets = [0, n, 2 * n, 3 * n];
            for (k, &(_, len)) in src.runs().iter().enumerate() {
                if rest < len {
                    return Some(targets[k] + spread(rest, len, n));
                }
                rest -= len;
            }
            None
        }
        (Lam0 { n }, Shape::Stretch(m)) if n == m => {
            let n = n as u64;
            Some(if o < n { o } else { stretch_ones(n)[(o - n) as usize] })
        }
        _ => None,
    }
}

/// A block-structured reduction from theta to zeta following a branch.
pub struct CompiledReduction {
    strings: SeparationStrings,
    branch: Branch,
    stages: Vec<OnceLock<Arc<CompiledStage>>>,
    build: Mutex<()>,
}

impl std::fmt::Debug for CompiledReduction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "CompiledReduction({}, {})",
            self.strings.tree_name(),
            self.branch.name()
        )
    }
}

impl CompiledReduction {
    pub fn strings(&self) -> &SeparationStrings {
        &self.strings
    }

    pub fn branch(&self) -> &Branch {
        &self.branch
    }

    /// The compiled stage `n`, compiling earlier stages as needed.
    pub fn stage(&self, n: u32) -> Result<Arc<CompiledStage>> {
        let idx = n as usize;
        if idx == 0 || idx >= MAX_STAGES {
            return Err(Error::Domain(format!("stage {n} outside 1..{MAX_STAGES}")));
        }
        if let Some(s) = self.stages[idx - 1].get() {
            return Ok(s.clone());
        }
        let _guard = self.build.lock().unwrap_or_else(|e| e.into_inner());
        for k in 1..=idx {
            if self.stages[k - 1].get().is_some() {
                continue;
            }
            let lead_in = match k {
                1 | 2 => BigUint::zero(),
                _ => self.stages[k - 2].get().unwrap().lead_out().clone(),
            };
            let built = compile_stage(&self.strings, &self.branch, k as u32, lead_in)?;
            let _ = self.stages[k - 1].set(Arc::new(built));
        }
        Ok(self.stages[idx - 1].get().unwrap().clone())
    }

    fn stage_or_panic(&self, n: u32) -> Arc<CompiledStage> {
        self.stage(n)
            .unwrap_or_else(|e| panic!("compiled map over `{}`: {e}", self.strings.tree_name()))
    }

    /// Lead of join segment `join` (1..=4) at stage `n >= 2`.
    pub fn join_lead(&self, n: u32, join: u8) -> Result<BigUint> {
        if n < 2 || !(1..=4).contains(&join) {
            return Err(Error::Domain(format!("no join {join} at stage {n}")));
        }
        Ok(self.stage(n)?.joins[join as usize - 1].clone())
    }

    fn image_of(&self, p: &BigUint) -> BigUint {
        let at = self.strings.locate(Side::Theta, p);
        let cs = self.stage_or_panic(at.stage);
        let piece = cs.piece_for(&at.block);
        let (target, shape) = match &piece.action {
            Action::Shift(s) => (&at.block + s, None),
            Action::Split { target } => (target + (&at.block - &piece.lo) * 2u32, Some(Shape::Split(at.stage))),
            Action::Stretch { target } => (target.clone(), Some(Shape::Stretch(at.stage))),
        };
        let tb = self.strings.block(Side::Zeta, &target);
        let shape = shape.unwrap_or(Shape::Block(tb.kind));
        let o = align(at.kind, shape, at.offset).unwrap_or_else(|| panic!("no alignment {} -> {shape:?}", at.kind));
        tb.start + o + 1u32
    }
}

impl PositionMap for CompiledReduction {
    fn image(&self, x: u64) -> u64 {
        self.image_of(&BigUint::from(x))
            .to_u64()
            .expect("image beyond 64 bits; use image_big")
    }

    fn image_big(&self, x: &BigUint) -> BigUint {
        self.image_of(x)
    }
}

fn spill(n: u32, detail: String) -> Error {
    Error::SpillOverflow { stage: n, detail }
}

fn seg(layout: &StageLayout, name: &str) -> (BigUint, BigUint) {
    layout.segment_blocks(name).expect("every stage >= 2 has all segments")
}

fn compile_stage(strings: &SeparationStrings, branch: &Branch, n: u32, lead: BigUint) -> Result<CompiledStage> {
    let layout = strings.stage(n)?;
    if n == 1 {
        let zero = BigUint::zero();
        return Ok(CompiledStage {
            n,
            bit: 0,
            joins: vec![zero.clone(); 4],
            pieces: vec![Piece {
                lo: zero.clone(),
                hi: BigUint::one(),
                action: Action::Shift(zero),
            }],
        });
    }
    let prefix = branch.prefix(n as u64 - 1);
    if !strings.tree().contains(&prefix) {
        return Err(Error::InconsistentBranch {
            tree: strings.tree_name(),
            prefix: prefix.iter().map(|b| b.to_string()).collect(),
        });
    }
    let nb = n as u64;
    let mut pieces: Vec<Piece> = Vec::new();
    let mut push = |lo: BigUint, hi: BigUint, action: Action| {
        if lo < hi {
            pieces.push(Piece { lo, hi, action });
        }
    };
    let (v1s, v1e) = seg(&layout, "v1");
    push(v1s, v1e, Action::Shift(lead.clone()));
    let mut l = lead.clone();
    for (part, join, b) in [("s1", "v2", 2), ("s2", "v3", 4)] {
        let (s, e) = seg(&layout, part);
        let m = layout.b(b) * nb;
        if l > m {
            return Err(spill(n, format!("lead {l} exceeds scaling run length {m} in {part}")));
        }
        let last_end = &s + &m * (nb - 1);
        let split_lo = &last_end - &l;
        push(s, split_lo.clone(), Action::Shift(l.clone()));
        push(
            split_lo,
            last_end.clone(),
            Action::Split {
                target: last_end.clone(),
            },
        );
        l *= 2u32;
        push(last_end, e, Action::Shift(l.clone()));
        let (js, je) = seg(&layout, join);
        push(js, je, Action::Shift(l.clone()));
    }
    let l3 = l;
    let bit = branch.bit(n as u64 - 1);
    let (ts, te) = seg(&layout, "t");
    let t = layout.b(6) * (2 * nb);
    if bit == 1 {
        if &l3 + 1u32 > t {
            return Err(spill(n, format!("lead {l3} leaves no room to stretch in t")));
        }
        let stretch = &ts + &t - &l3 - 1u32;
        push(ts.clone(), stretch.clone(), Action::Shift(l3.clone()));
        push(
            stretch.clone(),
            &stretch + 1u32,
            Action::Stretch {
                target: &ts + &t - 1u32,
            },
        );
        push(&stretch + 1u32, te, Action::Shift(&l3 + 1u32));
    } else {
        push(ts, te, Action::Shift(l3.clone()));
    }
    let l4 = &l3 + bit as u32;
    let sn = layout.sn.as_ref().expect("stage >= 2 has S_n");
    if !sn.contains(&l4) {
        return Err(Error::Internal(format!("lead {l4} at stage {n} is not in S_n")));
    }
    let (v4s, v4e) = seg(&layout, "v4");
    push(v4s, v4e, Action::Shift(l4.clone()));
    let (us, ue) = seg(&layout, "u");
    push(us, ue, Action::Shift(l4.clone()));
    let stage = CompiledStage {
        n,
        bit,
        joins: vec![lead.clone(), &lead * 2u32, &lead * 4u32, l4],
        pieces,
    };
    for p in &stage.pieces {
        validate(strings, &layout, p)?;
    }
    Ok(stage)
}

/// Checks that every block of the piece has an alignment onto its target.
fn validate(strings: &SeparationStrings, layout: &StageLayout, p: &Piece) -> Result<()> {
    let n = layout.n;
    let mut cur = p.lo.clone();
    while cur < p.hi {
        let (src, src_end) = layout.run_span(Side::Theta, &cur);
        let end = src_end.min(p.hi.clone());
        match &p.action {
            Action::Shift(s) => {
                let mut c = cur.clone();
                while c < end {
                    let t = &c + s;
                    let tl = strings.stage_of_block(&t);
                    let (kind, t_end) = tl.run_span(Side::Zeta, &t);
                    if align(src, Shape::Block(kind), 0).is_none() {
                        return Err(spill(n, format!("block {c} ({src}) would land on {kind}")));
                    }
                    c = (t_end - s).min(end.clone());
                }
            }
            Action::Split { target } => {
                let first = target + (&cur - &p.lo) * 2u32;
                let last = target + (&end - &p.lo) * 2u32 - 1u32;
                let (k0, k_end) = layout.run_span(Side::Zeta, &first);
                if align(src, Shape::Split(n), 0).is_none() || k0 != (BlockKind::Lam0 { n }) || last >= k_end {
                    return Err(spill(n, format!("split of {src} at block {cur} leaves its target run")));
                }
            }
            Action::Stretch { target } => {
                let a = layout.kind_at(Side::Zeta, target);
                let b = layout.kind_at(Side::Zeta, &(target + 1u32));
                if align(src, Shape::Stretch(n), 0).is_none()
                    || a != (BlockKind::Lam0 { n })
                    || b != (BlockKind::LamPrime { n })
                {
                    return Err(spill(n, format!("stretch target {target} is {a} {b}")));
                }
            }
        }
        cur = end;
    }
    Ok(())
}

/// Compiles the reduction following `branch`, validating the first
/// [`DEFAULT_COMPILED_STAGES`] stages.
pub fn compile_reduction(tree: Arc<dyn TreeOracle>, branch: Branch) -> Result<ReductionMap> {
    compile_reduction_in(&SeparationStrings::new(tree), branch, DEFAULT_COMPILED_STAGES)
}

/// Compiles over existing strings, validating stages `1..=stages` up front.
/// Later stages compile on first use.
pub fn compile_reduction_in(strings: &SeparationStrings, branch: Branch, stages: u32) -> Result<ReductionMap> {
    let compiled = Arc::new(CompiledReduction {
        strings: strings.clone(),
        branch,
        stages: (0..MAX_STAGES).map(|_| OnceLock::new()).collect(),
        build: Mutex::new(()),
    });
    compiled.stage(stages.max(1))?;
    let tree_ref = Reference::parse(&strings.tree_name())?;
    let name = Reference::new("compiled")
        .with("tree", tree_ref.to_string())
        .with("branch", compiled.branch.name());
    ReductionMap::new(
        name.to_string(),
        strings.theta(),
        strings.zeta(),
        compiled.clone(),
        COMPILED_DECLARED_C,
        MapKind::OneOne,
    )
    .map(|m| m.with_structure(compiled))
}
