use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use super::blocks::BlockKind;
use super::dec;
use super::tree::{sn_set, SnSet, TreeOracle};
use crate::error::{Error, Result};
use crate::strings::{Alphabet, InfiniteString, Reference, Symbol, SymbolSource};

/// Stages beyond this are never built; their positions exceed any
/// representable window long before.
pub const MAX_STAGES: usize = 40;

/// Segment names in stage order.
pub const SEGMENTS: [&str; 8] = ["v1", "s1", "v2", "s2", "v3", "t", "v4", "u"];

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Run {
    #[serde(flatten)]
    pub kind: BlockKind,
    #[serde(serialize_with = "dec::one")]
    pub count: BigUint,
}

impl Run {
    fn new(kind: BlockKind, count: BigUint) -> Self {
        Run { kind, count }
    }

    pub fn positions(&self) -> BigUint {
        &self.count * self.kind.len()
    }
}

/// One segment of a stage, on one of the two strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Segment {
    pub name: String,
    /// Global index of the segment's first block (0-based).
    #[serde(serialize_with = "dec::one")]
    pub first_block: BigUint,
    /// Positions before the segment.
    #[serde(serialize_with = "dec::one")]
    pub offset: BigUint,
    pub runs: Vec<Run>,
}

impl Segment {
    pub fn blocks(&self) -> BigUint {
        self.runs.iter().map(|r| &r.count).sum()
    }

    pub fn positions(&self) -> BigUint {
        self.runs.iter().map(Run::positions).sum()
    }
}

/// Which of the two separation strings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Theta,
    Zeta,
}

#[derive(Clone, Debug)]
pub(crate) struct FlatRun {
    pub kind: BlockKind,
    pub count: BigUint,
    pub first_block: BigUint,
    pub offset: BigUint,
}

/// Exact bookkeeping for one stage of both strings.
#[derive(Clone, Debug, Serialize)]
pub struct StageLayout {
    pub n: u32,
    /// `B^n_1..B^n_7`: global block counts before `v1, s1, v2, s2, v3, t`
    /// and `v4`. Empty at stage 1.
    #[serde(serialize_with = "dec::vec")]
    pub params: Vec<BigUint>,
    pub sn: Option<SnSet>,
    #[serde(serialize_with = "dec::one")]
    pub first_block: BigUint,
    #[serde(serialize_with = "dec::one")]
    pub blocks: BigUint,
    #[serde(serialize_with = "dec::one")]
    pub theta_offset: BigUint,
    #[serde(serialize_with = "dec::one")]
    pub theta_len: BigUint,
    #[serde(serialize_with = "dec::one")]
    pub zeta_offset: BigUint,
    #[serde(serialize_with = "dec::one")]
    pub zeta_len: BigUint,
    pub theta: Vec<Segment>,
    pub zeta: Vec<Segment>,
    #[serde(skip)]
    theta_runs: Vec<FlatRun>,
    #[serde(skip)]
    zeta_runs: Vec<FlatRun>,
}

/// A block together with a position inside it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockAt {
    pub stage: u32,
    pub kind: BlockKind,
    /// Global block index (0-based).
    pub block: BigUint,
    /// Positions before the block.
    pub start: BigUint,
    /// Offset inside the block.
    pub offset: u64,
}

impl StageLayout {
    /// `B^n_i` for `1 <= i <= 7`.
    pub fn b(&self, i: usize) -> &BigUint {
        &self.params[i - 1]
    }

    pub fn end_block(&self) -> BigUint {
        &self.first_block + &self.blocks
    }

    pub fn segments(&self, side: Side) -> &[Segment] {
        match side {
            Side::Theta => &self.theta,
            Side::Zeta => &self.zeta,
        }
    }

    /// Global block range `[start, end)` of a segment (the same on both
    /// strings).
    pub fn segment_blocks(&self, name: &str) -> Option<(BigUint, BigUint)> {
        let s = self.theta.iter().find(|s| s.name == name)?;
        Some((s.first_block.clone(), &s.first_block + s.blocks()))
    }

    fn runs(&self, side: Side) -> &[FlatRun] {
        match side {
            Side::Theta => &self.theta_runs,
            Side::Zeta => &self.zeta_runs,
        }
    }

    fn offset(&self, side: Side) -> &BigUint {
        match side {
            Side::Theta => &self.theta_offset,
            Side::Zeta => &self.zeta_offset,
        }
    }

    fn len(&self, side: Side) -> &BigUint {
        match side {
            Side::Theta => &self.theta_len,
            Side::Zeta => &self.zeta_len,
        }
    }

    fn contains_pos(&self, side: Side, q: &BigUint) -> bool {
        q < &(self.offset(side) + self.len(side))
    }

    /// Locates a 0-based position known to lie in this stage.
    fn locate_pos(&self, side: Side, q: &BigUint) -> BlockAt {
        let runs = self.runs(side);
        let idx = runs.partition_point(|r| &r.offset <= q) - 1;
        let r = &runs[idx];
        let len = r.kind.len();
        let within = q - &r.offset;
        let (bi, o) = match within.to_u64() {
            Some(w) => (BigUint::from(w / len), w % len),
            None => (&within / len, (&within % len).to_u64().unwrap()),
        };
        let start = &r.offset + &bi * len;
        BlockAt {
            stage: self.n,
            kind: r.kind,
            block: &r.first_block + bi,
            start,
            offset: o,
        }
    }

    /// Locates a global block index known to lie in this stage.
    fn locate_block(&self, side: Side, j: &BigUint) -> BlockAt {
        let runs = self.runs(side);
        let idx = runs.partition_point(|r| &r.first_block <= j) - 1;
        let r = &runs[idx];
        let start = &r.offset + (j - &r.first_block) * r.kind.len();
        BlockAt {
            stage: self.n,
            kind: r.kind,
            block: j.clone(),
            start,
            offset: 0,
        }
    }

    /// The block kind at global index `j` on `side`.
    pub fn kind_at(&self, side: Side, j: &BigUint) -> BlockKind {
        self.locate_block(side, j).kind
    }

    /// Kind of the run holding block `j` and the index one past its end.
    pub(crate) fn run_span(&self, side: Side, j: &BigUint) -> (BlockKind, BigUint) {
        let runs = self.runs(side);
        let idx = runs.partition_point(|r| &r.first_block <= j) - 1;
        let r = &runs[idx];
        (r.kind, &r.first_block + &r.count)
    }
}

fn big(v: u64) -> BigUint {
    BigUint::from(v)
}

fn flatten(segments: &[Segment]) -> Vec<FlatRun> {
    let mut out = Vec::new();
    for s in segments {
        let mut block = s.first_block.clone();
        let mut pos = s.offset.clone();
        for r in &s.runs {
            if r.count.is_zero() {
                continue;
            }
            out.push(FlatRun {
                kind: r.kind,
                count: r.count.clone(),
                first_block: block.clone(),
                offset: pos.clone(),
            });
            block += &r.count;
            pos += r.positions();
        }
    }
    out
}

/// Appends segments built from run lists, filling in the offsets.
fn place(raw: Vec<(&str, Vec<Run>)>, first_block: &BigUint, offset: &BigUint) -> Vec<Segment> {
    let mut block = first_block.clone();
    let mut pos = offset.clone();
    let mut out = Vec::new();
    for (name, runs) in raw {
        let seg = Segment {
            name: name.to_string(),
            first_block: block.clone(),
            offset: pos.clone(),
            runs,
        };
        block += seg.blocks();
        pos += seg.positions();
        out.push(seg);
    }
    out
}

fn selection_row(n: u32, sn: &SnSet) -> Vec<Run> {
    let lam0 = BlockKind::Lam0 { n };
    let lam1 = BlockKind::LamI { n, i: 1 };
    let mut runs: Vec<Run> = Vec::new();
    let mut next = BigUint::zero();
    for s in &sn.values {
        if s > &next {
            runs.push(Run::new(lam0, s - &next));
        }
        match runs.last_mut() {
            Some(r) if r.kind == lam1 => r.count += 1u32,
            _ => runs.push(Run::new(lam1, big(1))),
        }
        next = s + 1u32;
    }
    runs
}

pub(crate) fn build_stage(tree: &dyn TreeOracle, n: u32, prev: Option<&StageLayout>) -> Result<StageLayout> {
    let (first_block, theta_offset, zeta_offset) = match prev {
        Some(p) => (
            p.end_block(),
            &p.theta_offset + &p.theta_len,
            &p.zeta_offset + &p.zeta_len,
        ),
        None => (BigUint::zero(), BigUint::zero(), BigUint::zero()),
    };
    if n == 1 {
        let raw = || vec![("stage1", vec![Run::new(BlockKind::Lam0 { n: 1 }, big(1))])];
        return Ok(finish(
            n,
            Vec::new(),
            None,
            place(raw(), &first_block, &theta_offset),
            place(raw(), &first_block, &zeta_offset),
            first_block,
            theta_offset,
            zeta_offset,
        ));
    }
    let sn = sn_set(tree, n)?;
    let nb = n as u64;
    let lam0 = BlockKind::Lam0 { n };
    let mut params = vec![first_block.clone()];
    let mut th: Vec<(&str, Vec<Run>)> = Vec::new();
    let mut ze: Vec<(&str, Vec<Run>)> = Vec::new();
    let mut count = first_block.clone();
    let mut push_both = |name: &'static str, runs: Vec<Run>, count: &mut BigUint| {
        *count += runs.iter().map(|r| &r.count).sum::<BigUint>();
        th.push((name, runs.clone()));
        ze.push((name, runs));
    };
    let join = |b: &BigUint| vec![Run::new(lam0, b * (3 * nb))];
    let scaling = |b: &BigUint| {
        let m = b * nb;
        let mut runs: Vec<Run> = (1..n).map(|i| Run::new(BlockKind::LamI { n, i }, m.clone())).collect();
        runs.push(Run::new(lam0, m * 2u32));
        runs
    };
    for (join_name, part_name) in [("v1", "s1"), ("v2", "s2")] {
        let b = count.clone();
        push_both(join_name, join(&b), &mut count);
        params.push(count.clone());
        let b = count.clone();
        push_both(part_name, scaling(&b), &mut count);
        params.push(count.clone());
    }
    let b5 = count.clone();
    push_both("v3", join(&b5), &mut count);
    params.push(count.clone());
    let b6 = count.clone();
    let t = &b6 * (2 * nb);
    th.push(("t", vec![Run::new(lam0, &t + 1u32)]));
    ze.push((
        "t",
        vec![Run::new(lam0, t.clone()), Run::new(BlockKind::LamPrime { n }, big(1))],
    ));
    count += &t + 1u32;
    params.push(count.clone());
    let b7 = count.clone();
    let v4 = join(&b7);
    count += &v4[0].count;
    th.push(("v4", v4.clone()));
    ze.push(("v4", v4));
    let mut u = vec![Run::new(BlockKind::LamI { n, i: 1 }, big(1))];
    if !sn.max().is_zero() {
        u.push(Run::new(lam0, sn.max().clone()));
    }
    th.push(("u", u));
    ze.push(("u", selection_row(n, &sn)));
    Ok(finish(
        n,
        params,
        Some(sn),
        place(th, &first_block, &theta_offset),
        place(ze, &first_block, &zeta_offset),
        first_block,
        theta_offset,
        zeta_offset,
    ))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    n: u32,
    params: Vec<BigUint>,
    sn: Option<SnSet>,
    theta: Vec<Segment>,
    zeta: Vec<Segment>,
    first_block: BigUint,
    theta_offset: BigUint,
    zeta_offset: BigUint,
) -> StageLayout {
    let blocks: BigUint = theta.iter().map(Segment::blocks).sum();
    let theta_len = theta.iter().map(Segment::positions).sum();
    let zeta_len = zeta.iter().map(Segment::positions).sum();
    let theta_runs = flatten(&theta);
    let zeta_runs = flatten(&zeta);
    StageLayout {
        n,
        params,
        sn,
        first_block,
        blocks,
        theta_offset,
        theta_len,
        zeta_offset,
        zeta_len,
        theta,
        zeta,
        theta_runs,
        zeta_runs,
    }
}

struct Inner {
    tree: Arc<dyn TreeOracle>,
    stages: Vec<OnceLock<Arc<StageLayout>>>,
    build: Mutex<()>,
}

/// The pair of separation strings over one tree, with a shared layout cache.
#[derive(Clone)]
pub struct SeparationStrings {
    inner: Arc<Inner>,
}

impl std::fmt::Debug for SeparationStrings {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SeparationStrings({})", self.inner.tree.name())
    }
}

impl SeparationStrings {
    pub fn new(tree: Arc<dyn TreeOracle>) -> Self {
        SeparationStrings {
            inner: Arc::new(Inner {
                tree,
                stages: (0..MAX_STAGES).map(|_| OnceLock::new()).collect(),
                build: Mutex::new(()),
            }),
        }
    }

    pub fn tree(&self) -> &Arc<dyn TreeOracle> {
        &self.inner.tree
    }

    pub fn tree_name(&self) -> String {
        self.inner.tree.name()
    }

    /// The layout of stage `n`, building earlier stages as needed.
    pub fn stage(&self, n: u32) -> Result<Arc<StageLayout>> {
        let idx = n as usize;
        if idx == 0 || idx > MAX_STAGES {
            return Err(Error::Domain(format!("stage {n} outside 1..={MAX_STAGES}")));
        }
        if let Some(s) = self.inner.stages[idx - 1].get() {
            return Ok(s.clone());
        }
        let _guard = self.inner.build.lock().unwrap_or_else(|e| e.into_inner());
        for k in 1..=idx {
            if self.inner.stages[k - 1].get().is_some() {
                continue;
            }
            let prev = if k > 1 { self.inner.stages[k - 2].get() } else { None };
            let built = build_stage(&*self.inner.tree, k as u32, prev.map(|p| &**p))?;
            let _ = self.inner.stages[k - 1].set(Arc::new(built));
        }
        Ok(self.inner.stages[idx - 1].get().unwrap().clone())
    }

    pub(crate) fn stage_or_panic(&self, n: u32) -> Arc<StageLayout> {
        self.stage(n)
            .unwrap_or_else(|e| panic!("separation layout for tree `{}`: {e}", self.tree_name()))
    }

    pub fn build_layouts(&self, n_max: u32) -> Result<Vec<Arc<StageLayout>>> {
        if n_max < 1 {
            return Err(Error::Domain("need at least one stage".into()));
        }
        (1..=n_max).map(|n| self.stage(n)).collect()
    }

    /// Stage holding the 0-based position `q` of `side`.
    pub fn stage_of_pos(&self, side: Side, q: &BigUint) -> Arc<StageLayout> {
        let mut n = 1;
        loop {
            let s = self.stage_or_panic(n);
            if s.contains_pos(side, q) {
                return s;
            }
            n += 1;
        }
    }

    /// Stage holding the global block index `j`.
    pub fn stage_of_block(&self, j: &BigUint) -> Arc<StageLayout> {
        let mut n = 1;
        loop {
            let s = self.stage_or_panic(n);
            if j < &s.end_block() {
                return s;
            }
            n += 1;
        }
    }

    /// Locates the 1-based position `p` of `side`.
    pub fn locate(&self, side: Side, p: &BigUint) -> BlockAt {
        assert!(!p.is_zero(), "positions start at 1");
        let q = p - 1u32;
        self.stage_of_pos(side, &q).locate_pos(side, &q)
    }

    /// The block with global index `j` on `side`; `offset` is 0.
    pub fn block(&self, side: Side, j: &BigUint) -> BlockAt {
        self.stage_of_block(j).locate_block(side, j)
    }

    fn string(&self, side: Side) -> InfiniteString {
        struct Source {
            strings: SeparationStrings,
            side: Side,
        }
        impl SymbolSource for Source {
            fn symbol_at_big(&self, p: &BigUint) -> Symbol {
                let at = self.strings.locate(self.side, p);
                at.kind.symbol(at.offset)
            }
        }
        let name = match side {
            Side::Theta => "theta",
            Side::Zeta => "zeta",
        };
        let tree_ref = Reference::parse(&self.tree_name()).expect("tree names are references");
        InfiniteString::new(
            Reference::new(name).with("tree", tree_ref.to_string()),
            Alphabet::standard(2),
            Arc::new(Source {
                strings: self.clone(),
                side,
            }),
        )
    }

    pub fn theta(&self) -> InfiniteString {
        self.string(Side::Theta)
    }

    pub fn zeta(&self) -> InfiniteString {
        self.string(Side::Zeta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::separation::tree_from_ref;

    fn strings(t: &str) -> SeparationStrings {
        SeparationStrings::new(tree_from_ref(&Reference::parse(t).unwrap()).unwrap())
    }

    fn small(v: &BigUint) -> u64 {
        v.to_u64().unwrap()
    }

    #[test]
    fn stage_two_parameters() {
        let s = strings("full").stage(2).unwrap();
        let b: Vec<u64> = s.params.iter().map(small).collect();
        assert_eq!(b, vec![1, 7, 49, 343, 2401, 16807, 84036]);
        assert_eq!(small(&s.end_block()), 588_254);
        assert_eq!(small(&strings("full").stage(3).unwrap().params[0]), 588_254);
    }

    #[test]
    fn recurrences_hold() {
        for t in ["full", "single", "comb", "delayed"] {
            let ss = strings(t);
            for n in 2..=6u32 {
                let s = ss.stage(n).unwrap();
                let k = n as u64;
                let b = |i| s.b(i).clone();
                assert_eq!(b(2), b(1) * (1 + 3 * k));
                assert_eq!(b(3), b(2) * (1 + k * (k + 1)));
                assert_eq!(b(4), b(3) * (1 + 3 * k));
                assert_eq!(b(5), b(4) * (1 + k * (k + 1)));
                assert_eq!(b(6), b(5) * (1 + 3 * k));
                assert_eq!(b(7), b(6) * (1 + 2 * k) + 1u32);
                let next = ss.stage(n + 1).unwrap();
                assert_eq!(next.b(1), &(b(7) * (1 + 3 * k) + s.sn.as_ref().unwrap().max() + 1u32));
                for (x, y) in s.theta.iter().zip(&s.zeta) {
                    assert_eq!(x.blocks(), y.blocks(), "{t} stage {n} {}", x.name);
                }
                assert!(s.zeta_len >= s.theta_len);
            }
        }
    }

    #[test]
    fn theta_prefix_and_lengths() {
        let ss = strings("full");
        let th = ss.theta();
        assert_eq!(th.prefix(14).unwrap().to_string(), "01001100110011");
        let s = ss.stage(2).unwrap();
        // one lam' in place of a lam0, and one extra lam1 in the selection row
        let lam0 = 4u64;
        let lam1 = 6u64;
        let lamp = 6u64;
        let extra = (lamp - lam0) + 2 * (lam1 - lam0) - (lam1 - lam0);
        assert_eq!(&s.zeta_len - &s.theta_len, BigUint::from(extra));
        assert_eq!(small(&s.theta_len), 2_354_414);
        let u = s.zeta.iter().find(|g| g.name == "u").unwrap();
        assert_eq!(u.runs, vec![Run::new(BlockKind::LamI { n: 2, i: 1 }, big(2))]);
    }

    #[test]
    fn lookup_matches_materialized_blocks() {
        let ss = strings("comb");
        let s = ss.stage(2).unwrap();
        for side in [Side::Theta, Side::Zeta] {
            let mut word = String::new();
            for seg in s.segments(side) {
                for r in &seg.runs {
                    let c = r.count.to_usize().unwrap();
                    word.push_str(&r.kind.word().repeat(c));
                }
            }
            let string = if side == Side::Theta { ss.theta() } else { ss.zeta() };
            let start = small(s.offset(side)) + 1;
            for k in (0..word.len()).step_by(997).chain([0, word.len() - 1]) {
                assert_eq!(string.symbol_at(start + k as u64).label(), word.as_bytes()[k] as char);
            }
        }
    }

    #[test]
    fn big_positions_resolve() {
        let ss = strings("full");
        let p = BigUint::from(10u32).pow(25);
        let at = ss.locate(Side::Zeta, &p);
        assert!(at.stage >= 4);
        assert_eq!(&at.start + at.offset + 1u32, p);
    }
}
