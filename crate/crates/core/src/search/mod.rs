//! Depth-first search for `C`-reductions on a finite prefix.
//!
//! A problem fixes the source prefix length `N`, a target bound `M`
//! (default `N*C + C`, the largest image condition (a) allows, raised to
//! `N + 2C^2` for permutations, whose displacement is at most `2C^2`) and a
//! mode.
//! Values of `f(1), f(2), ...` are tried in ascending order, so the first
//! witness found is the lexicographically least one. Exhausting the tree
//! shows that no `C`-reduction of that mode exists between the infinite
//! strings, because every such reduction restricts to a solution. It says
//! nothing about larger constants, and a found witness says nothing about
//! the infinite strings: no finite search decides reducibility.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::check::{check_window_split, MapKind, ReductionMap};
use crate::error::{Error, Result};
use crate::strings::{InfiniteString, Symbol};

/// `N*C + C` bounds every image; permutations may also reach `N + 2C^2`.
fn default_target_len(c: u64, n: u64, mode: MapKind) -> u64 {
    let step_bound = n * c + c;
    if mode == MapKind::Permutation {
        step_bound.max(n + 2 * c * c)
    } else {
        step_bound
    }
}

/// Node budget used when a problem sets none.
pub const DEFAULT_NODE_BUDGET: u64 = 200_000_000;

/// Order in which candidate values are tried.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateOrder {
    /// Ascending, which yields the lexicographically least witness.
    #[default]
    Ascending,
    /// A seeded shuffle, for drawing varied witnesses reproducibly.
    Shuffled(u64),
}

#[derive(Clone, Debug)]
pub struct SearchProblem {
    pub source: InfiniteString,
    pub target: InfiniteString,
    pub c: u64,
    pub n: u64,
    pub m: u64,
    pub mode: MapKind,
    pub budget: u64,
    pub order: CandidateOrder,
}

impl SearchProblem {
    pub fn new(source: InfiniteString, target: InfiniteString, c: u64, n: u64, mode: MapKind) -> Result<Self> {
        if c < 1 || n < 1 {
            return Err(Error::Domain(format!(
                "search needs C >= 1 and N >= 1, got C={c}, N={n}"
            )));
        }
        Ok(SearchProblem {
            source,
            target,
            c,
            n,
            m: default_target_len(c, n, mode),
            mode,
            budget: DEFAULT_NODE_BUDGET,
            order: CandidateOrder::Ascending,
        })
    }

    /// Overrides the target bound `M`, which must be at least `C`. A bound
    /// below the default can rule out genuine reductions, so exhaustion then
    /// only speaks about maps into `[1..M]`.
    pub fn with_target_len(mut self, m: u64) -> Result<Self> {
        if m < self.c {
            return Err(Error::Domain(format!("target bound M={m} is below C={}", self.c)));
        }
        self.m = m;
        Ok(self)
    }

    pub fn with_budget(mut self, nodes: u64) -> Self {
        self.budget = nodes;
        self
    }

    pub fn with_order(mut self, order: CandidateOrder) -> Self {
        self.order = order;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", content = "witness", rename_all = "snake_case")]
pub enum Outcome {
    Found(Vec<u64>),
    ExhaustedNone,
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchResult {
    #[serde(flatten)]
    pub outcome: Outcome,
    pub nodes: u64,
    /// Wall time; left out of serialized reports so they stay reproducible.
    #[serde(skip)]
    pub elapsed: Duration,
}

impl SearchResult {
    pub fn witness(&self) -> Option<&[u64]> {
        match &self.outcome {
            Outcome::Found(w) => Some(w),
            Outcome::ExhaustedNone => None,
        }
    }
}

struct Searcher<'a> {
    p: &'a SearchProblem,
    src: Vec<Symbol>,
    /// `tgt[v]` for `v = 1..=M`; index 0 unused.
    tgt: Vec<Symbol>,
    letters: Vec<Symbol>,
    /// `f[x]` for assigned `x`; index 0 unused.
    f: Vec<u64>,
    /// `pm[x] = max(f[1..=x])`, with `pm[0] = 0`.
    pm: Vec<u64>,
    used: Vec<bool>,
    band: u64,
    rng: Option<ChaCha8Rng>,
}

impl Searcher<'_> {
    fn injective(&self) -> bool {
        self.p.mode.injective()
    }

    fn permutation(&self) -> bool {
        self.p.mode == MapKind::Permutation
    }

    /// Prefix max up to `k`, which may be below 1.
    fn pm_at(&self, k: i64) -> u64 {
        if k < 1 {
            0
        } else {
            self.pm[k as usize]
        }
    }

    fn candidates(&mut self, x: u64) -> Vec<u64> {
        let c = self.p.c;
        let (mut lo, mut hi) = if x == 1 {
            (1, c.min(self.p.m))
        } else {
            let prev = self.f[x as usize - 1];
            let floor = self.pm_at(x as i64 - c as i64 - 1) + 1;
            (prev.saturating_sub(c).max(1).max(floor), (prev + c).min(self.p.m))
        };
        if self.permutation() {
            lo = lo.max(x.saturating_sub(self.band));
            hi = hi.min(x + self.band);
        }
        let letter = self.src[x as usize - 1];
        let mut out: Vec<u64> = (lo..=hi)
            .filter(|&v| self.tgt[v as usize] == letter && !(self.injective() && self.used[v as usize]))
            .collect();
        if let Some(rng) = self.rng.as_mut() {
            out.shuffle(rng);
        }
        out
    }

    /// Counting lookahead for injective modes after `f(1..=x)` is fixed.
    ///
    /// Later positions take values above `pm(x-C)` and, by the step bound,
    /// at most `f(x) + C(h-x)` at position `h` (and `h + 2C^2` for
    /// permutations). For every letter and horizon `h`, the positions in
    /// `(x, h]` need that many unused values of their letter in reach. For
    /// permutations, unused values that must be covered need enough later
    /// positions of their letter within the displacement band.
    fn feasible(&self, x: u64) -> bool {
        if !self.injective() || x == self.p.n {
            return self.coverage_ok(x);
        }
        let (n, m, c) = (self.p.n, self.p.m, self.p.c);
        let floor = self.pm_at(x as i64 - c as i64) + 1;
        let fx = self.f[x as usize];
        for &a in &self.letters {
            let (mut need, mut avail, mut reach) = (0u64, 0u64, floor.saturating_sub(1));
            for h in x + 1..=n {
                if self.src[h as usize - 1] == a {
                    need += 1;
                }
                let mut top = (fx + c * (h - x)).min(m);
                if self.permutation() {
                    top = top.min(h + self.band);
                }
                while reach < top {
                    reach += 1;
                    if self.tgt[reach as usize] == a && !self.used[reach as usize] {
                        avail += 1;
                    }
                }
                if need > avail {
                    return false;
                }
            }
        }
        self.coverage_ok(x)
    }

    /// Every value up to `N - 2C^2` must end up covered. Values below the
    /// reach of later positions are final; the rest need enough later
    /// positions of their letter before the band closes.
    fn coverage_ok(&self, x: u64) -> bool {
        if !self.permutation() {
            return true;
        }
        let n = self.p.n;
        let Some(last) = n.checked_sub(self.band).filter(|&l| l >= 1) else {
            return true;
        };
        let floor = self.pm_at(x as i64 - self.p.c as i64) + 1;
        let open = |v: u64| !self.used[v as usize];
        if x == n {
            return (1..=last).all(|v| !open(v));
        }
        if (1..floor.min(last + 1)).any(open) {
            return false;
        }
        for &a in &self.letters {
            let mut uncovered = 0u64;
            let mut supply = 0u64;
            let mut y = x;
            for v in 1..=last {
                if self.tgt[v as usize] == a && open(v) {
                    uncovered += 1;
                }
                let horizon = (v + self.band).min(n);
                while y < horizon {
                    y += 1;
                    if self.src[y as usize - 1] == a {
                        supply += 1;
                    }
                }
                if uncovered > supply {
                    return false;
                }
            }
        }
        true
    }

    fn assign(&mut self, x: u64, v: u64) {
        self.f[x as usize] = v;
        self.pm[x as usize] = self.pm[x as usize - 1].max(v);
        self.used[v as usize] = true;
    }

    fn unassign(&mut self, x: u64) {
        let v = self.f[x as usize];
        self.used[v as usize] = false;
    }

    fn run(&mut self) -> Result<(Outcome, u64)> {
        let n = self.p.n;
        let mut nodes = 0u64;
        let mut stack: Vec<(Vec<u64>, usize)> = vec![(self.candidates(1), 0)];
        loop {
            let x = stack.len() as u64;
            let top = stack.last_mut().unwrap();
            if top.1 > 0 {
                self.unassign(x);
            }
            let Some(&v) = top.0.get(top.1) else {
                stack.pop();
                if stack.is_empty() {
                    return Ok((Outcome::ExhaustedNone, nodes));
                }
                continue;
            };
            top.1 += 1;
            nodes += 1;
            if nodes > self.p.budget {
                return Err(Error::Resource {
                    limit: "search nodes",
                    detail: format!("budget of {} nodes spent at position {x} of {n}", self.p.budget),
                });
            }
            self.assign(x, v);
            if !self.feasible(x) {
                continue;
            }
            if x == n {
                return Ok((Outcome::Found(self.f[1..].to_vec()), nodes));
            }
            let next = self.candidates(x + 1);
            stack.push((next, 0));
        }
    }
}

/// Runs the search. A witness is re-checked with [`check_window_split`]
/// before it is returned.
pub fn search(p: &SearchProblem) -> Result<SearchResult> {
    let start = Instant::now();
    let src = p.source.prefix(p.n)?.0;
    let mut tgt = vec![Symbol(0)];
    tgt.extend(p.target.prefix(p.m)?.0);
    let mut letters: Vec<Symbol> = src.iter().chain(&tgt[1..]).copied().collect();
    letters.sort();
    letters.dedup();
    let mut s = Searcher {
        p,
        src,
        tgt,
        letters,
        f: vec![0; p.n as usize + 1],
        pm: vec![0; p.n as usize + 1],
        used: vec![false; p.m as usize + 1],
        band: 2 * p.c * p.c,
        rng: match p.order {
            CandidateOrder::Ascending => None,
            CandidateOrder::Shuffled(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        },
    };
    let (outcome, nodes) = s.run()?;
    if let Outcome::Found(w) = &outcome {
        let f = witness_map(p, w.clone())?;
        let report = check_window_split(&f, p.n, p.c, p.c)?;
        if !report.passed() {
            return Err(Error::Internal(format!(
                "search witness fails the window check: {:?}",
                report.violations.first()
            )));
        }
    }
    Ok(SearchResult {
        outcome,
        nodes,
        elapsed: start.elapsed(),
    })
}

/// The witness as a table map from the problem's source to its target.
pub fn witness_map(p: &SearchProblem, witness: Vec<u64>) -> Result<ReductionMap> {
    ReductionMap::from_table(
        "search witness",
        p.source.clone(),
        p.target.clone(),
        witness,
        p.c,
        p.mode,
    )
}

/// Smallest `C <= c_max` with a witness on `n` positions, and the witness.
pub fn min_c(
    source: &InfiniteString,
    target: &InfiniteString,
    n: u64,
    c_max: u64,
    mode: MapKind,
    budget: u64,
) -> Result<Option<(u64, Vec<u64>)>> {
    if c_max < 1 {
        return Err(Error::Domain("C_max must be at least 1".into()));
    }
    for c in 1..=c_max {
        let p = SearchProblem::new(source.clone(), target.clone(), c, n, mode)?.with_budget(budget);
        if let Outcome::Found(w) = search(&p)?.outcome {
            return Ok(Some((c, w)));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strings::{registry_get, Reference};

    fn s(text: &str) -> InfiniteString {
        registry_get(&Reference::parse(text).unwrap()).unwrap()
    }

    fn problem(src: &str, tgt: &str, c: u64, n: u64, mode: MapKind) -> SearchProblem {
        SearchProblem::new(s(src), s(tgt), c, n, mode).unwrap()
    }

    /// Direct transcription of the conditions, checked on every prefix.
    fn naive_ok(src: &[Symbol], tgt: &[Symbol], f: &[u64], c: u64, mode: MapKind, n: usize) -> bool {
        let k = f.len();
        let x = k - 1;
        let v = f[x];
        if tgt[v as usize - 1] != src[x] {
            return false;
        }
        if x == 0 && v > c {
            return false;
        }
        if x > 0 && f[x].abs_diff(f[x - 1]) > c {
            return false;
        }
        for (y, &w) in f.iter().enumerate().take(x) {
            if y as u64 + c < x as u64 && w >= v {
                return false;
            }
            if mode.injective() && w == v {
                return false;
            }
        }
        if mode == MapKind::Permutation {
            let band = 2 * c * c;
            if (x as u64 + 1).abs_diff(v) > band {
                return false;
            }
            if k == n {
                let last = n as i64 - band as i64;
                return (1..=last).all(|t| f.contains(&(t as u64)));
            }
        }
        true
    }

    fn naive(p: &SearchProblem) -> Option<Vec<u64>> {
        let src = p.source.prefix(p.n).unwrap().0;
        let tgt = p.target.prefix(p.m).unwrap().0;
        let n = p.n as usize;
        let mut f: Vec<u64> = Vec::new();
        fn go(f: &mut Vec<u64>, src: &[Symbol], tgt: &[Symbol], p: &SearchProblem, n: usize) -> bool {
            if f.len() == n {
                return true;
            }
            for v in 1..=p.m {
                f.push(v);
                if naive_ok(src, tgt, f, p.c, p.mode, n) && go(f, src, tgt, p, n) {
                    return true;
                }
                f.pop();
            }
            false
        }
        go(&mut f, &src, &tgt, p, n).then_some(f)
    }

    #[test]
    fn constant_strings_first_witness() {
        let r = search(&problem("constant", "constant", 1, 5, MapKind::ManyOne)).unwrap();
        assert_eq!(r.witness(), Some(&[1, 1, 2, 2, 3][..]));
        let r = search(&problem("constant", "constant", 1, 5, MapKind::Permutation)).unwrap();
        assert_eq!(r.witness(), Some(&[1, 2, 3, 4, 5][..]));
    }

    #[test]
    fn period_two_into_period_three() {
        let r = search(&problem("cyclic(w=01)", "cyclic(w=001)", 2, 20, MapKind::ManyOne)).unwrap();
        assert!(r.witness().is_some());
    }

    #[test]
    fn agrees_with_naive_enumeration() {
        let words = [
            "constant",
            "constant(a=1)",
            "cyclic(w=01)",
            "cyclic(w=001)",
            "cyclic(w=011)",
        ];
        for a in words {
            for b in words {
                for c in 1..=2 {
                    for n in [1, 3, 5, 7] {
                        for mode in [MapKind::ManyOne, MapKind::OneOne, MapKind::Permutation] {
                            let p = problem(a, b, c, n, mode).with_target_len((n * c + c).min(12)).unwrap();
                            let got = search(&p).unwrap();
                            assert_eq!(
                                got.witness().map(|w| w.to_vec()),
                                naive(&p),
                                "{a} {b} C={c} N={n} {mode}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn permutation_bound_covers_displacement() {
        assert_eq!(problem("constant", "constant", 2, 4, MapKind::ManyOne).m, 10);
        assert_eq!(problem("constant", "constant", 2, 4, MapKind::Permutation).m, 12);
        assert_eq!(problem("constant", "constant", 2, 40, MapKind::Permutation).m, 82);
    }

    #[test]
    fn density_mismatch_has_no_permutation() {
        let r = search(&problem("cyclic(w=001)", "cyclic(w=01)", 1, 60, MapKind::Permutation)).unwrap();
        assert_eq!(r.outcome, Outcome::ExhaustedNone);
    }

    #[test]
    fn exhaustion_is_monotone_in_the_window() {
        let mut seen_none = false;
        for n in 1..40 {
            let r = search(&problem("cyclic(w=001)", "cyclic(w=01)", 1, n, MapKind::Permutation)).unwrap();
            if seen_none {
                assert_eq!(r.outcome, Outcome::ExhaustedNone, "N={n}");
            }
            seen_none |= r.outcome == Outcome::ExhaustedNone;
        }
        assert!(seen_none);
    }

    #[test]
    fn min_c_examples() {
        let (a, b) = (s("cyclic(w=01)"), s("cyclic(w=001)"));
        assert_eq!(
            min_c(&a, &a, 10, 3, MapKind::ManyOne, DEFAULT_NODE_BUDGET)
                .unwrap()
                .unwrap()
                .0,
            1
        );
        assert_eq!(
            min_c(&a, &b, 30, 3, MapKind::OneOne, DEFAULT_NODE_BUDGET)
                .unwrap()
                .unwrap()
                .0,
            2
        );
        let (z, o) = (s("constant"), s("constant(a=1)"));
        assert_eq!(
            min_c(&z, &o, 1, 4, MapKind::ManyOne, DEFAULT_NODE_BUDGET).unwrap(),
            None
        );
    }

    #[test]
    fn budget_is_an_error_not_a_verdict() {
        let p = problem("cyclic(w=01)", "cyclic(w=001)", 2, 200, MapKind::ManyOne).with_budget(50);
        assert!(matches!(search(&p), Err(Error::Resource { .. })));
    }

    #[test]
    fn shuffled_order_is_reproducible_and_valid() {
        let p =
            problem("cyclic(w=011)", "cyclic(w=01)", 2, 300, MapKind::ManyOne).with_order(CandidateOrder::Shuffled(7));
        let a = search(&p).unwrap();
        let b = search(&p).unwrap();
        assert_eq!(a.witness(), b.witness());
        assert_eq!(a.nodes, b.nodes);
        assert!(a.witness().is_some());
    }
}
