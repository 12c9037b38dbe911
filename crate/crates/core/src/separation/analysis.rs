use std::collections::BTreeSet;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::compile::{compile_reduction, Action, CompiledReduction};
use super::dec;
use super::layout::{SeparationStrings, Side};
use super::tree::{tree_from_ref, Branch, TreeOracle};
use crate::check::{
    check_derived_invariants, check_window, CheckReport, ReductionMap, Stats, Verdict, Violation, ViolationKind,
};
use crate::error::{Error, Result};
use crate::strings::{Position, Window};

/// Inner join segments with more blocks than this are not enumerated for
/// maps without compiled structure.
pub const LEAD_ENUMERATION_LIMIT: u64 = 5_000_000;

pub const DEFAULT_SAMPLES: usize = 100_000;

/// The block offset of an inner join segment, when the map aligns it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Lead {
    pub stage: u32,
    pub join: u8,
    pub defined: bool,
    #[serde(serialize_with = "dec::opt")]
    pub value: Option<BigUint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl Lead {
    fn defined(stage: u32, join: u8, value: BigUint) -> Self {
        Lead {
            stage,
            join,
            defined: true,
            value: Some(value),
            reason: None,
        }
    }

    fn undefined(stage: u32, join: u8, reason: impl Into<String>) -> Self {
        Lead {
            stage,
            join,
            defined: false,
            value: None,
            reason: Some(reason.into()),
        }
    }
}

/// Layout strings for a map whose source is a theta string.
fn strings_for(f: &ReductionMap) -> Result<SeparationStrings> {
    if let Some(c) = f.structure::<CompiledReduction>() {
        return Ok(c.strings().clone());
    }
    let src = f.source().reference();
    if src.name() != "theta" || f.target().reference().name() != "zeta" {
        return Err(Error::Domain(format!(
            "map `{}` does not go from a theta string to a zeta string",
            f.name()
        )));
    }
    let tree = tree_from_ref(&src.nested_or("tree", "full")?)?;
    Ok(SeparationStrings::new(tree))
}

/// Measures the lead of join segment `join` (1..=4) at stage `n >= 2`.
///
/// Every block of the inner third of the segment must land whole on a
/// single `Lam0` block of the matching target segment, all with the same
/// block offset; otherwise the lead is reported undefined.
pub fn lead_of(f: &ReductionMap, n: u32, join: u8) -> Result<Lead> {
    if n < 2 || !(1..=4).contains(&join) {
        return Err(Error::Domain(format!("no join {join} at stage {n}")));
    }
    let strings = strings_for(f)?;
    let layout = strings.stage(n)?;
    let (s, e) = layout
        .segment_blocks(&format!("v{join}"))
        .expect("stage >= 2 has four joins");
    let third = &s * n;
    let lo = &s + &third;
    let hi = &lo + &third;

    if let Some(c) = f.structure::<CompiledReduction>() {
        let cs = c.stage(n)?;
        let piece = cs.piece_for(&lo);
        let Action::Shift(l) = &piece.action else {
            return Ok(Lead::undefined(n, join, "inner segment is not shifted"));
        };
        if piece.hi < hi {
            return Ok(Lead::undefined(n, join, "inner segment spans several pieces"));
        }
        for j in [lo.clone(), &hi - 1u32] {
            let src = strings.block(Side::Theta, &j);
            let tgt = strings.block(Side::Zeta, &(&j + l));
            if f.map_at_big(&(&src.start + 1u32)) != &tgt.start + 1u32 {
                return Ok(Lead::undefined(
                    n,
                    join,
                    format!("block {j} is not carried by its piece"),
                ));
            }
        }
        return Ok(Lead::defined(n, join, l.clone()));
    }

    if third > BigUint::from(LEAD_ENUMERATION_LIMIT) {
        return Ok(Lead::undefined(
            n,
            join,
            format!("inner segment has {third} blocks, above the enumeration limit"),
        ));
    }
    if let Some(limit) = f.domain_limit() {
        let last = strings.block(Side::Theta, &(&hi - 1u32));
        let needed = &last.start + last.kind.len();
        if needed > BigUint::from(limit) {
            return Err(Error::Resource {
                limit: "map domain",
                detail: format!(
                    "join {join} of stage {n} ends at {needed}, map `{}` is defined up to {limit}",
                    f.name()
                ),
            });
        }
    }
    let lo = lo.to_u64().unwrap();
    let hi = hi.to_u64().unwrap();
    let mut lead: Option<BigUint> = None;
    for j in lo..hi {
        let j = BigUint::from(j);
        let src = strings.block(Side::Theta, &j);
        let first = strings.locate(Side::Zeta, &f.map_at_big(&(&src.start + 1u32)));
        let last = strings.locate(Side::Zeta, &f.map_at_big(&(&src.start + src.kind.len())));
        if first.block != last.block {
            return Ok(Lead::undefined(
                n,
                join,
                format!("block {j} is split across target blocks"),
            ));
        }
        if first.block < s || first.block >= e || first.kind != src.kind {
            return Ok(Lead::undefined(
                n,
                join,
                format!("block {j} leaves the target join segment"),
            ));
        }
        if first.block < j {
            return Ok(Lead::undefined(n, join, format!("block {j} moves backwards")));
        }
        let l = &first.block - &j;
        match &lead {
            None => lead = Some(l),
            Some(prev) if *prev != l => {
                return Ok(Lead::undefined(
                    n,
                    join,
                    format!("offset changes from {prev} to {l} at block {j}"),
                ))
            }
            _ => {}
        }
    }
    Ok(Lead::defined(n, join, lead.unwrap_or_default()))
}

/// Smallest `c >= 1` with `C < 4^c`.
pub fn digit_slack(c_const: u64) -> u32 {
    let mut c = 1u32;
    while (c_const as u128) >= 4u128.pow(c) {
        c += 1;
    }
    c
}

/// Base-4 digits of `value`, most significant first, padded to `width`; `None`
/// when it needs more digits or uses a digit other than 0 and 1.
fn binary_digits(value: &BigUint, width: u32) -> Option<Vec<u8>> {
    let mut digits = vec![0u8; width as usize];
    let mut v = value.clone();
    for d in digits.iter_mut().rev() {
        let r = (&v % 4u32).to_u8().unwrap();
        if r > 1 {
            return None;
        }
        *d = r;
        v /= 4u32;
    }
    v.is_zero().then_some(digits)
}

/// Reads a branch off the final-join leads of stages `n0..=n1`.
///
/// With `c` minimal such that `C < 4^c`, digit `m` of the stage-`n` lead is
/// trusted once `m <= n - 1 - c`. The result is digits `1..=n0-1-c` of the
/// stage-`n0` lead followed by digit `n-1-c` of each later stage.
pub fn extract_branch(f: &ReductionMap, c_const: u64, n0: u32, n1: u32) -> Result<Vec<u8>> {
    let c = digit_slack(c_const);
    if n0 <= c || n0 < 2 || n1 < n0 {
        return Err(Error::Domain(format!(
            "need 2 <= n0 <= n1 and n0 > c = {c}, got n0={n0}, n1={n1}"
        )));
    }
    let mut digits: Vec<Vec<u8>> = Vec::new();
    for n in n0..=n1 {
        let lead = lead_of(f, n, 4)?;
        let Some(value) = lead.value else {
            return Err(Error::LeadUndefined {
                stage: n,
                join: 4,
                reason: lead.reason.unwrap_or_default(),
            });
        };
        let d = binary_digits(&value, n - 1).ok_or_else(|| Error::LeadNotEncoding {
            stage: n,
            lead: value.to_string(),
            digits: n - 1,
        })?;
        if let Some(prev) = digits.last() {
            let stable = (n - 1).saturating_sub(1 + c) as usize;
            if let Some(m) = (0..stable).find(|&m| prev[m] != d[m]) {
                return Err(Error::StabilityViolation {
                    stage: n - 1,
                    next: n,
                    digit: m as u32 + 1,
                });
            }
        }
        digits.push(d);
    }
    let head = (n0 - 1 - c) as usize;
    let mut word = digits[0][..head].to_vec();
    for (k, n) in (n0 + 1..=n1).enumerate() {
        word.push(digits[k + 1][(n - 2 - c) as usize]);
    }
    Ok(word)
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub sampled: bool,
    pub samples: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            sampled: false,
            samples: DEFAULT_SAMPLES,
            seed: 0,
        }
    }
}

/// Checks the compiled map for `branch`. Exhaustive mode runs the window
/// and invariant checks over all of stages `1..=through_stage` (at most 2);
/// sampled mode checks block seams of stage `through_stage` only.
pub fn verify_compiled(
    tree: Arc<dyn TreeOracle>,
    branch: Branch,
    through_stage: u32,
    opts: &VerifyOptions,
) -> Result<CheckReport> {
    let f = compile_reduction(tree, branch)?;
    let compiled = f.structure::<CompiledReduction>().unwrap();
    if through_stage < 1 {
        return Err(Error::Domain("need at least one stage".into()));
    }
    compiled.stage(through_stage)?;
    if opts.sampled {
        return verify_sampled(&f, compiled, through_stage, opts);
    }
    if through_stage > 2 {
        return Err(Error::Domain(format!(
            "exhaustive verification covers stages up to 2, asked for {through_stage}; use sampled mode"
        )));
    }
    let layout = compiled.strings().stage(through_stage)?;
    let n = (&layout.theta_offset + &layout.theta_len).to_u64().unwrap();
    let mut report = check_window(&f, n)?;
    if report.passed() {
        let inv = check_derived_invariants(&f, n)?;
        let inv_passed = inv.passed();
        report.violation_count += inv.violation_count;
        report.violations.extend(inv.violations);
        report.stats.max_collision = inv.stats.max_collision;
        if !inv_passed {
            report.verdict = Verdict::Fail;
        }
    }
    report.mode = "exhaustive".into();
    Ok(report)
}

struct BlockFindings {
    violations: Vec<Violation>,
    max_step: u64,
    first_value: Option<u64>,
}

fn sample_below(rng: &mut ChaCha8Rng, bound: &BigUint) -> BigUint {
    let bits = bound.bits();
    let bytes = bits.div_ceil(8) as usize;
    loop {
        let mut buf = vec![0u8; bytes];
        rng.fill_bytes(&mut buf);
        let extra = bytes as u64 * 8 - bits;
        if let Some(top) = buf.last_mut() {
            *top &= 0xffu8 >> extra;
        }
        let v = BigUint::from_bytes_le(&buf);
        if &v < bound {
            return v;
        }
    }
}

fn verify_sampled(
    f: &ReductionMap,
    compiled: &CompiledReduction,
    stage: u32,
    opts: &VerifyOptions,
) -> Result<CheckReport> {
    let strings = compiled.strings();
    let layout = strings.stage(stage)?;
    let cs = compiled.stage(stage)?;
    let first = layout.first_block.clone();
    let end = layout.end_block();
    let mut picked: BTreeSet<BigUint> = BTreeSet::new();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.samples {
        picked.insert(&first + sample_below(&mut rng, &layout.blocks));
    }
    // blocks around every piece and run boundary, where the map changes shape
    let mut edges: Vec<BigUint> = cs.pieces.iter().flat_map(|p| [p.lo.clone(), p.hi.clone()]).collect();
    for seg in layout.segments(Side::Theta) {
        let mut b = seg.first_block.clone();
        for r in &seg.runs {
            edges.push(b.clone());
            b += &r.count;
        }
    }
    for e in edges {
        for d in 0..4u32 {
            if e >= BigUint::from(d) + &first {
                picked.insert(&e - d);
            }
            let up = &e + d;
            if up < end {
                picked.insert(up);
            }
        }
    }
    let blocks: Vec<BigUint> = picked.into_iter().collect();
    let c = f.declared_c();
    let findings: Vec<BlockFindings> = blocks.par_iter().map(|j| check_block(f, strings, j, c)).collect();
    let mut total = 0u64;
    let mut kept = Vec::new();
    let mut max_step = 0;
    let mut first_value = 0;
    for b in findings {
        total += b.violations.len() as u64;
        max_step = max_step.max(b.max_step);
        if let Some(v) = b.first_value {
            first_value = v;
        }
        for v in b.violations {
            if kept.len() < crate::check::DEFAULT_VIOLATION_LIMIT {
                kept.push(v);
            }
        }
    }
    let lo = Position::new(&layout.theta_offset + 1u32)?;
    let hi = Position::new(&layout.theta_offset + &layout.theta_len)?;
    Ok(CheckReport {
        map: f.name().to_string(),
        source: f.source().reference().to_string(),
        target: f.target().reference().to_string(),
        kind: f.kind(),
        mode: format!("sampled({} blocks, seed {})", blocks.len(), opts.seed),
        window: Window::new(lo, hi)?,
        step_c: c,
        order_c: c,
        verdict: if total == 0 { Verdict::Pass } else { Verdict::Fail },
        violation_count: total,
        violations: kept,
        stats: Stats {
            first_value,
            max_step,
            min_empirical_c: 1.max(max_step).max(first_value),
            ..Stats::default()
        },
    })
}

/// Checks the first and last three positions of block `j` and the seams to
/// its neighbours.
fn check_block(f: &ReductionMap, strings: &SeparationStrings, j: &BigUint, c: u64) -> BlockFindings {
    let b = strings.block(Side::Theta, j);
    let len = b.kind.len();
    let mut offsets: BTreeSet<u64> = (0..len.min(3)).chain(len.saturating_sub(3)..len).collect();
    offsets.insert(len);
    let mut ps: Vec<BigUint> = offsets.iter().map(|&o| &b.start + o + 1u32).collect();
    if !b.start.is_zero() {
        ps.insert(0, b.start.clone());
    }
    let theta = f.source();
    let zeta = f.target();
    let images: Vec<BigUint> = ps.iter().map(|p| f.map_at_big(p)).collect();
    let mut out = BlockFindings {
        violations: Vec::new(),
        max_step: 0,
        first_value: None,
    };
    let pos = |p: &BigUint| Position::new(p.clone()).unwrap();
    for (p, y) in ps.iter().zip(&images) {
        let (s, t) = (theta.symbol_at_big(p), zeta.symbol_at_big(y));
        if s != t {
            out.violations.push(Violation::at(
                ViolationKind::ColorMismatch,
                vec![pos(p)],
                t.0 as i64,
                s.0 as i64,
            ));
        }
        if p == &BigUint::from(1u32) {
            let v = y.to_u64().unwrap_or(u64::MAX);
            out.first_value = Some(v);
            if v > c {
                out.violations.push(Violation::at(
                    ViolationKind::FirstValueTooLarge,
                    vec![pos(p)],
                    v as i64,
                    c as i64,
                ));
            }
        }
    }
    for k in 1..ps.len() {
        if ps[k] != &ps[k - 1] + 1u32 {
            continue;
        }
        let (y0, y1) = (&images[k - 1], &images[k]);
        let w = vec![pos(&ps[k - 1]), pos(&ps[k])];
        if y1 <= y0 {
            let back = (y0 - y1).to_i64().unwrap_or(i64::MAX);
            out.violations
                .push(Violation::at(ViolationKind::OrderViolation, w, -back, 1));
            continue;
        }
        let step = (y1 - y0).to_u64().unwrap_or(u64::MAX);
        out.max_step = out.max_step.max(step);
        if step > c {
            out.violations
                .push(Violation::at(ViolationKind::StepTooLarge, w, step as i64, c as i64));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::{MapKind, PositionMap};
    use crate::strings::Reference;

    fn tree(t: &str) -> Arc<dyn TreeOracle> {
        tree_from_ref(&Reference::parse(t).unwrap()).unwrap()
    }

    fn compiled(t: &str, b: &str) -> ReductionMap {
        compile_reduction(tree(t), Branch::parse(b).unwrap()).unwrap()
    }

    #[test]
    fn digits_and_slack() {
        assert_eq!(binary_digits(&BigUint::from(5u32), 2), Some(vec![1, 1]));
        assert_eq!(binary_digits(&BigUint::from(4u32), 2), Some(vec![1, 0]));
        assert_eq!(binary_digits(&BigUint::from(2u32), 2), None);
        assert_eq!(binary_digits(&BigUint::from(16u32), 2), None);
        assert_eq!(digit_slack(1), 1);
        assert_eq!(digit_slack(3), 1);
        assert_eq!(digit_slack(4), 2);
        assert_eq!(digit_slack(15), 2);
        assert_eq!(digit_slack(16), 3);
    }

    #[test]
    fn structured_and_enumerated_leads_agree() {
        let f = compiled("full", "ones");
        let structured = lead_of(&f, 2, 4).unwrap();
        assert_eq!(structured.value, Some(BigUint::from(1u32)));
        // the same map without its structure goes through enumeration
        let bare = ReductionMap::new(
            "bare",
            f.source().clone(),
            f.target().clone(),
            f.position_map().clone(),
            8,
            MapKind::OneOne,
        )
        .unwrap();
        for join in 1..=4u8 {
            assert_eq!(lead_of(&bare, 2, join).unwrap(), lead_of(&f, 2, join).unwrap());
        }
    }

    #[test]
    fn corrupted_map_has_no_lead() {
        let f = compiled("full", "zeros");
        let strings = f.structure::<CompiledReduction>().unwrap().strings().clone();
        let layout = strings.stage(2).unwrap();
        let (s, _) = layout.segment_blocks("v4").unwrap();
        // from the middle of the inner third on, land one block further
        let mid = &s * 2u32 + &s * 2u32 / 2u32 + &s;
        let cut = strings.block(Side::Theta, &mid).start.to_u64().unwrap();
        struct Shifted {
            inner: Arc<dyn PositionMap>,
            cut: u64,
        }
        impl PositionMap for Shifted {
            fn image(&self, x: u64) -> u64 {
                let y = self.inner.image(x);
                if x > self.cut {
                    y + 4
                } else {
                    y
                }
            }
        }
        let bad = ReductionMap::new(
            "shifted",
            f.source().clone(),
            f.target().clone(),
            Arc::new(Shifted {
                inner: f.position_map().clone(),
                cut,
            }),
            8,
            MapKind::OneOne,
        )
        .unwrap();
        let lead = lead_of(&bad, 2, 4).unwrap();
        assert!(!lead.defined, "{lead:?}");
        assert!(lead.reason.unwrap().contains("offset changes"));
    }

    #[test]
    fn extraction_round_trip() {
        for (t, b) in [
            ("full", "ones"),
            ("full", "alternating"),
            ("comb", "ones"),
            ("single", "zeros"),
        ] {
            let f = compiled(t, b);
            let word = extract_branch(&f, 5, 4, 6).unwrap();
            assert_eq!(word, Branch::parse(b).unwrap().prefix(3), "{t} {b}");
        }
    }

    #[test]
    fn short_tables_are_a_resource_error() {
        let f = compiled("full", "ones");
        let t = ReductionMap::from_table(
            "short",
            f.source().clone(),
            f.target().clone(),
            f.table(5).unwrap(),
            8,
            MapKind::OneOne,
        )
        .unwrap();
        let r = lead_of(&t, 2, 1);
        assert!(matches!(r, Err(Error::Resource { .. })), "{r:?}");
    }

    #[test]
    fn extraction_rejects_small_n0() {
        let f = compiled("full", "ones");
        assert!(extract_branch(&f, 100, 3, 5).is_err());
    }

    #[test]
    fn sampled_stage_three_passes() {
        let opts = VerifyOptions {
            sampled: true,
            samples: 2000,
            seed: 0,
        };
        let r = verify_compiled(tree("full"), Branch::parse("ones").unwrap(), 3, &opts).unwrap();
        assert!(r.passed(), "{:?}", r.violations);
        assert!(r.stats.max_step <= 8);
    }
}
