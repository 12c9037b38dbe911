//! Windowed verification of candidate reductions.
//!
//! [`check_window`] tests the defining conditions of a C-quasi-isometry on
//! `[1..N]`. [`check_derived_invariants`] tests consequences that every
//! such map must satisfy, and so doubles as a cross-check of the checker.

mod constants;
mod map;
mod report;

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::strings::{Symbol, Window};

pub use constants::{ab_from_c, c_from_ab, parse_rational, QiConstants};
pub use map::{read_map_csv, write_map_csv, MapKind, PositionMap, ReductionMap, TableMap};
pub use report::{CheckReport, Stats, Verdict, Violation, ViolationKind};

use report::Collector;

/// Upper bound on checked window lengths.
pub const DEFAULT_CHECK_CAP: u64 = 100_000_000;
pub const DEFAULT_VIOLATION_LIMIT: usize = 100;

/// Settings for [`check_window_with`].
#[derive(Clone, Debug)]
pub struct CheckOptions {
    /// Constant for `f(1) <= C` and `|f(x+1) - f(x)| <= C`; defaults to the
    /// declared constant.
    pub step_c: Option<u64>,
    /// Constant for `x + C < y => f(x) < f(y)`; defaults to the declared
    /// constant.
    pub order_c: Option<u64>,
    pub violation_limit: usize,
    pub cap: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            step_c: None,
            order_c: None,
            violation_limit: DEFAULT_VIOLATION_LIMIT,
            cap: DEFAULT_CHECK_CAP,
        }
    }
}

/// Images and letters over `[1..n]`, 0-indexed by `x - 1`.
struct Materialized {
    fx: Vec<u64>,
    src: Vec<Symbol>,
    tgt: Vec<Symbol>,
}

fn materialize(f: &ReductionMap, n: u64, cap: u64) -> Result<Materialized> {
    if n < 1 {
        return Err(Error::Domain("window length must be at least 1".into()));
    }
    if n > cap {
        return Err(Error::Resource {
            limit: "check cap",
            detail: format!("window {n} exceeds cap {cap}"),
        });
    }
    if let Some(limit) = f.domain_limit() {
        if n > limit {
            return Err(Error::Resource {
                limit: "map domain",
                detail: format!("map `{}` is defined on [1..{limit}], asked for {n}", f.name()),
            });
        }
    }
    let fx: Vec<u64> = (1..=n).into_par_iter().map(|x| f.map_at(x)).collect();
    if let Some(i) = fx.iter().position(|&v| v == 0) {
        return Err(Error::Domain(format!("f({}) = 0; positions start at 1", i + 1)));
    }
    let src: Vec<Symbol> = (1..=n).into_par_iter().map(|x| f.source().symbol_at(x)).collect();
    let tgt: Vec<Symbol> = fx.par_iter().map(|&v| f.target().symbol_at(v)).collect();
    Ok(Materialized { fx, src, tgt })
}

/// Measures the window without reference to any constant.
fn measure(fx: &[u64]) -> Stats {
    let n = fx.len();
    let mut prefix_max = Vec::with_capacity(n);
    let mut running = 0u64;
    let mut max_step = 0u64;
    let mut max_crossover = 0u64;
    let mut max_displacement = 0u64;
    for (i, &v) in fx.iter().enumerate() {
        if i > 0 {
            max_step = max_step.max(v.abs_diff(fx[i - 1]));
            max_crossover = max_crossover.max(running.saturating_sub(v));
        }
        max_displacement = max_displacement.max(v.abs_diff(i as u64 + 1));
        running = running.max(v);
        prefix_max.push(running);
    }
    // Largest y - x over pairs x < y with f(x) >= f(y); the order condition
    // holds for C exactly when C is at least this.
    let mut order_need = 0u64;
    for (j, &v) in fx.iter().enumerate() {
        let i = prefix_max.partition_point(|&m| m < v);
        if i < j {
            order_need = order_need.max((j - i) as u64);
        }
    }
    let mut sorted = fx.to_vec();
    sorted.sort_unstable();
    let mut max_collision = 0u64;
    let mut run = 0u64;
    for (k, &v) in sorted.iter().enumerate() {
        run = if k > 0 && sorted[k - 1] == v { run + 1 } else { 1 };
        max_collision = max_collision.max(run);
    }
    let first_value = fx.first().copied().unwrap_or(0);
    Stats {
        first_value,
        max_step,
        max_crossover,
        max_collision,
        max_displacement,
        min_empirical_c: 1.max(first_value).max(max_step).max(order_need),
    }
}

fn report(
    f: &ReductionMap,
    mode: &str,
    n: u64,
    step_c: u64,
    order_c: u64,
    collector: Collector,
    stats: Stats,
) -> CheckReport {
    CheckReport {
        map: f.name().to_string(),
        source: f.source().reference().to_string(),
        target: f.target().reference().to_string(),
        kind: f.kind(),
        mode: mode.to_string(),
        window: Window::prefix(n),
        step_c,
        order_c,
        verdict: if collector.total == 0 {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
        violation_count: collector.total,
        violations: collector.list,
        stats,
    }
}

/// Checks the defining conditions on `[1..n]` with the declared constant.
pub fn check_window(f: &ReductionMap, n: u64) -> Result<CheckReport> {
    check_window_with(f, n, &CheckOptions::default())
}

/// Checks with separate constants for the step and order conditions.
pub fn check_window_split(f: &ReductionMap, n: u64, step_c: u64, order_c: u64) -> Result<CheckReport> {
    check_window_with(
        f,
        n,
        &CheckOptions {
            step_c: Some(step_c),
            order_c: Some(order_c),
            ..CheckOptions::default()
        },
    )
}

pub fn check_window_with(f: &ReductionMap, n: u64, opts: &CheckOptions) -> Result<CheckReport> {
    let m = materialize(f, n, opts.cap)?;
    let step_c = opts.step_c.unwrap_or(f.declared_c());
    let order_c = opts.order_c.unwrap_or(f.declared_c());
    let mut out = Collector::new(opts.violation_limit);
    scan_conditions(f, &m, step_c, order_c, &mut out);
    Ok(report(f, "window", n, step_c, order_c, out, measure(&m.fx)))
}

fn scan_conditions(f: &ReductionMap, m: &Materialized, step_c: u64, order_c: u64, out: &mut Collector) {
    let fx = &m.fx;
    let n = fx.len();
    let pos = |i: usize| i as u64 + 1;
    if fx[0] > step_c {
        out.push(|| Violation::new(ViolationKind::FirstValueTooLarge, &[1], fx[0] as i64, step_c as i64));
    }
    // running maximum of f over positions <= y - order_c - 1, with the first
    // position attaining it
    let mut lag_max: Option<(u64, usize)> = None;
    let lag = order_c as usize + 1;
    let mut first_seen: HashMap<u64, usize> = HashMap::new();
    let injective = f.kind().injective();
    for i in 0..n {
        if m.src[i] != m.tgt[i] {
            out.push(|| {
                Violation::new(
                    ViolationKind::ColorMismatch,
                    &[pos(i)],
                    m.tgt[i].0 as i64,
                    m.src[i].0 as i64,
                )
            });
        }
        if i > 0 {
            let step = fx[i].abs_diff(fx[i - 1]);
            if step > step_c {
                out.push(|| {
                    Violation::new(
                        ViolationKind::StepTooLarge,
                        &[pos(i - 1), pos(i)],
                        step as i64,
                        step_c as i64,
                    )
                });
            }
        }
        if i >= lag {
            let j = i - lag;
            if lag_max.map_or(true, |(v, _)| fx[j] > v) {
                lag_max = Some((fx[j], j));
            }
            let (mx, at) = lag_max.unwrap();
            if fx[i] <= mx {
                out.push(|| {
                    Violation::new(
                        ViolationKind::OrderViolation,
                        &[pos(at), pos(i)],
                        fx[i] as i64 - mx as i64,
                        1,
                    )
                });
            }
        }
        if injective {
            if let Some(&prev) = first_seen.get(&fx[i]) {
                out.push(|| Violation::new(ViolationKind::InjectivityBreach, &[pos(prev), pos(i)], fx[i] as i64, 1));
            } else {
                first_seen.insert(fx[i], i);
            }
        }
    }
    if f.kind() == MapKind::Permutation {
        let c = step_c.max(order_c);
        let bound = (n as u64).saturating_sub(2 * c * c);
        let mut covered = vec![false; bound as usize + 1];
        for &v in fx {
            if v <= bound {
                covered[v as usize] = true;
            }
        }
        for v in 1..=bound {
            if !covered[v as usize] {
                out.push(|| Violation::new(ViolationKind::SurjectivityGap, &[v], 0, 1));
            }
        }
    }
}

/// Checks consequences of the definition on `[1..n]`; requires that
/// [`check_window`] passes first.
pub fn check_derived_invariants(f: &ReductionMap, n: u64) -> Result<CheckReport> {
    check_derived_invariants_with(f, n, &CheckOptions::default())
}

pub fn check_derived_invariants_with(f: &ReductionMap, n: u64, opts: &CheckOptions) -> Result<CheckReport> {
    let m = materialize(f, n, opts.cap)?;
    let c = f.declared_c();
    let mut base = Collector::new(opts.violation_limit);
    scan_conditions(f, &m, c, c, &mut base);
    if base.total > 0 {
        return Err(Error::Precondition(format!(
            "map `{}` fails the window check with C={c} ({} violations)",
            f.name(),
            base.total
        )));
    }
    let mut out = Collector::new(opts.violation_limit);
    scan_invariants(f, &m, c, &mut out);
    Ok(report(f, "invariants", n, c, c, out, measure(&m.fx)))
}

fn scan_invariants(f: &ReductionMap, m: &Materialized, c: u64, out: &mut Collector) {
    let fx = &m.fx;
    let pos = |i: usize| i as u64 + 1;

    // collision multiplicity
    let mut preimages: HashMap<u64, Vec<usize>> = HashMap::new();
    for (i, &v) in fx.iter().enumerate() {
        preimages.entry(v).or_default().push(i);
    }
    let mut values: Vec<u64> = preimages.keys().copied().collect();
    values.sort_unstable();
    for v in &values {
        let xs = &preimages[v];
        if xs.len() as u64 > c + 1 {
            let w: Vec<u64> = xs.iter().map(|&i| pos(i)).collect();
            out.push(|| Violation::new(ViolationKind::CollisionExcess, &w, xs.len() as i64, c as i64 + 1));
        }
    }

    // crossover f(n) - f(m) <= C^2 for n < m
    let mut best: Option<(u64, usize)> = None;
    for (i, &v) in fx.iter().enumerate() {
        if let Some((mx, at)) = best {
            if mx > v && mx - v > c * c {
                out.push(|| {
                    Violation::new(
                        ViolationKind::CrossoverExcess,
                        &[pos(at), pos(i)],
                        (mx - v) as i64,
                        (c * c) as i64,
                    )
                });
            }
        }
        if best.map_or(true, |(mx, _)| v > mx) {
            best = Some((v, i));
        }
    }

    // image gaps between consecutive distinct in-window values
    if values[0] > c {
        out.push(|| Violation::new(ViolationKind::ImageGapExcess, &[values[0]], values[0] as i64, c as i64));
    }
    for w in values.windows(2) {
        if w[1] - w[0] > c {
            out.push(|| {
                Violation::new(
                    ViolationKind::ImageGapExcess,
                    &[w[0], w[1]],
                    (w[1] - w[0]) as i64,
                    c as i64,
                )
            });
        }
    }

    // letter density
    for &a in f.source().alphabet().symbols() {
        let occ: Vec<usize> = (0..fx.len()).filter(|&i| m.src[i] == a).collect();
        let Some(&first) = occ.first() else { continue };
        let k = occ.windows(2).map(|w| (w[1] - w[0]) as u64).fold(pos(first), u64::max);
        // every y < reach is followed within span by an image of an
        // occurrence, and those images never exceed reach
        let reach = occ.iter().map(|&i| fx[i]).max().unwrap();
        let span = k * c;
        let hits: Vec<u64> = (1..=reach)
            .into_par_iter()
            .filter(|&t| f.target().symbol_at(t) == a)
            .collect();
        let mut prev = 0u64;
        for &t in &hits {
            if t - prev > span {
                let w = [prev.max(1), t];
                out.push(|| Violation::new(ViolationKind::DensityGap, &w, (t - prev) as i64, span as i64));
            }
            prev = t;
        }
    }

    if f.kind() == MapKind::Permutation {
        for (i, &v) in fx.iter().enumerate() {
            let d = v.abs_diff(pos(i));
            if d > 2 * c * c {
                out.push(|| {
                    Violation::new(
                        ViolationKind::DisplacementExcess,
                        &[pos(i)],
                        d as i64,
                        (2 * c * c) as i64,
                    )
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strings::{registry_get, InfiniteString, Reference};
    use proptest::prelude::*;

    fn s(r: &str) -> InfiniteString {
        registry_get(&Reference::parse(r).unwrap()).unwrap()
    }

    fn table(src: &str, tgt: &str, t: Vec<u64>, c: u64, kind: MapKind) -> ReductionMap {
        ReductionMap::from_table("t", s(src), s(tgt), t, c, kind).unwrap()
    }

    /// Direct quadratic evaluation of the defining conditions.
    fn naive_pass(fx: &[u64], src: &dyn Fn(u64) -> Symbol, tgt: &dyn Fn(u64) -> Symbol, c: u64) -> bool {
        let n = fx.len();
        if fx[0] > c {
            return false;
        }
        for x in 1..=n {
            if src(x as u64) != tgt(fx[x - 1]) {
                return false;
            }
            if x < n && fx[x].abs_diff(fx[x - 1]) > c {
                return false;
            }
            for y in 1..=n {
                if x as u64 + c < y as u64 && fx[x - 1] >= fx[y - 1] {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn identity_passes() {
        let f = ReductionMap::from_fn("id", s("constant"), s("constant"), 1, MapKind::Permutation, |x| x).unwrap();
        let r = check_window(&f, 1000).unwrap();
        assert!(r.passed(), "{:?}", r.violations);
        assert_eq!(r.stats.min_empirical_c, 1);
        assert!(check_derived_invariants(&f, 1000).unwrap().passed());
    }

    #[test]
    fn shift_by_two_fails_first_value() {
        let f = ReductionMap::from_fn("x+2", s("constant"), s("constant"), 1, MapKind::OneOne, |x| x + 2).unwrap();
        let r = check_window(&f, 50).unwrap();
        assert!(!r.passed());
        assert_eq!(r.violations[0].kind, ViolationKind::FirstValueTooLarge);
        assert_eq!(r.violations[0].observed, 3);
        assert_eq!(r.count(ViolationKind::FirstValueTooLarge), 1);
        assert_eq!(r.violation_count, 1);
    }

    #[test]
    fn reports_every_violation_kind_it_sees() {
        // colors differ at odd positions, a backwards step at x=3
        let f = table("cyclic(w=01)", "constant(a=1)", vec![1, 2, 1, 3, 9], 2, MapKind::OneOne);
        let r = check_window(&f, 5).unwrap();
        assert_eq!(r.count(ViolationKind::ColorMismatch), 3);
        assert_eq!(r.count(ViolationKind::StepTooLarge), 1);
        assert_eq!(r.count(ViolationKind::InjectivityBreach), 1);
    }

    #[test]
    fn order_violation_located() {
        // f(1) = 3 and f(5) = 3 with C = 3: 1 + 3 < 5
        let f = table("constant", "constant", vec![3, 4, 5, 4, 3], 3, MapKind::ManyOne);
        let r = check_window(&f, 5).unwrap();
        assert_eq!(r.count(ViolationKind::OrderViolation), 1);
        let v = &r.violations[0];
        assert_eq!(v.witness, vec![1u64.into(), 5u64.into()]);
        assert_eq!(r.stats.min_empirical_c, 4);
    }

    #[test]
    fn surjectivity_gap_in_permutation_mode() {
        let t: Vec<u64> = (1..=40).map(|x| if x < 10 { x } else { x + 1 }).collect();
        let f = table("constant", "constant", t, 1, MapKind::Permutation);
        let r = check_window(&f, 40).unwrap();
        assert_eq!(r.count(ViolationKind::SurjectivityGap), 1);
        let gap = r
            .violations
            .iter()
            .find(|v| v.kind == ViolationKind::SurjectivityGap)
            .unwrap();
        assert_eq!(gap.witness, vec![10u64.into()]);
    }

    #[test]
    fn violation_limit_truncates_but_counts() {
        let f = ReductionMap::from_fn("alt", s("cyclic(w=01)"), s("constant"), 1, MapKind::ManyOne, |x| x).unwrap();
        let opts = CheckOptions {
            violation_limit: 5,
            ..Default::default()
        };
        let r = check_window_with(&f, 1000, &opts).unwrap();
        assert_eq!(r.violations.len(), 5);
        assert_eq!(r.violation_count, 500);
    }

    #[test]
    fn crossover_excess_detected() {
        // an arbitrary window-valid map checked by invariants is never
        // flagged; a map breaking the crossover bound must fail the base check
        let c = 2u64;
        let mut t: Vec<u64> = (1..=40).collect();
        t.swap(9, 9 + (c * c) as usize + 1);
        let f = table("constant", "constant", t, c, MapKind::OneOne);
        assert!(check_derived_invariants(&f, 40).is_err());
        let mut out = Collector::new(100);
        let m = materialize(&f, 40, DEFAULT_CHECK_CAP).unwrap();
        scan_invariants(&f, &m, c, &mut out);
        assert!(out.list.iter().any(|v| v.kind == ViolationKind::CrossoverExcess));
    }

    #[test]
    fn density_gap_detected_directly() {
        // '1' appears every 2 positions in the source but only every 5 in
        // the target window, which no 1-map could produce
        let f = table("cyclic(w=01)", "cyclic(w=00001)", vec![1, 5, 6, 10], 1, MapKind::OneOne);
        let m = materialize(&f, 4, DEFAULT_CHECK_CAP).unwrap();
        let mut out = Collector::new(100);
        scan_invariants(&f, &m, 1, &mut out);
        assert!(out.list.iter().any(|v| v.kind == ViolationKind::DensityGap));
    }

    #[test]
    fn window_beyond_table_is_resource_error() {
        let f = table("constant", "constant", vec![1, 2], 1, MapKind::ManyOne);
        assert!(matches!(check_window(&f, 3), Err(Error::Resource { .. })));
    }

    proptest! {
        #[test]
        fn agrees_with_naive_evaluation(
            raw in proptest::collection::vec(1u64..30, 1..50),
            c in 1u64..5,
            w in "[01]{1,4}",
            v in "[01]{1,4}",
        ) {
            let src = s(&format!("cyclic(w={w})"));
            let tgt = s(&format!("cyclic(w={v})"));
            let f = ReductionMap::from_table("p", src.clone(), tgt.clone(), raw.clone(), c, MapKind::ManyOne).unwrap();
            let r = check_window(&f, raw.len() as u64).unwrap();
            let expected = naive_pass(&raw, &|x| src.symbol_at(x), &|y| tgt.symbol_at(y), c);
            prop_assert_eq!(r.passed(), expected);
        }

        #[test]
        fn near_monotone_maps_agree_with_naive(
            steps in proptest::collection::vec(-2i64..4, 1..50),
            c in 1u64..4,
        ) {
            // random walks are far more likely to pass than uniform tables
            let mut t = Vec::new();
            let mut cur = 1i64;
            for s in steps {
                cur = (cur + s).max(1);
                t.push(cur as u64);
            }
            let f = table("constant", "constant", t.clone(), c, MapKind::ManyOne);
            let r = check_window(&f, t.len() as u64).unwrap();
            let z = |_: u64| Symbol(0);
            prop_assert_eq!(r.passed(), naive_pass(&t, &z, &z, c));
            if r.passed() {
                let inv = check_derived_invariants(&f, t.len() as u64).unwrap();
                prop_assert!(inv.passed(), "{:?}", inv.violations);
                prop_assert!(inv.stats.max_collision <= c + 1);
                prop_assert!(inv.stats.max_crossover <= c * c);
                prop_assert!(r.stats.min_empirical_c <= c);
            }
        }
    }
}
