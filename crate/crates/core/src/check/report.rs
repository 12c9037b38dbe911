use serde::{Deserialize, Serialize};

use crate::check::MapKind;
use crate::strings::{Position, Window};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    ColorMismatch,
    FirstValueTooLarge,
    StepTooLarge,
    OrderViolation,
    InjectivityBreach,
    SurjectivityGap,
    CrossoverExcess,
    CollisionExcess,
    ImageGapExcess,
    DisplacementExcess,
    /// A letter that recurs with bounded gaps in the source is missing from
    /// a correspondingly scaled target factor.
    DensityGap,
}

/// One failed condition. `witness` holds source positions, except for
/// `SurjectivityGap`, `ImageGapExcess` and `DensityGap`, whose witnesses are
/// the target positions involved.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub witness: Vec<Position>,
    pub observed: i64,
    pub allowed: i64,
}

impl Violation {
    pub fn new(kind: ViolationKind, witness: &[u64], observed: i64, allowed: i64) -> Self {
        Violation {
            kind,
            witness: witness.iter().map(|&p| Position::from(p)).collect(),
            observed,
            allowed,
        }
    }

    /// Like [`Violation::new`] for positions beyond 64 bits.
    pub fn at(kind: ViolationKind, witness: Vec<Position>, observed: i64, allowed: i64) -> Self {
        Violation {
            kind,
            witness,
            observed,
            allowed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Measurements taken over the checked window.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub first_value: u64,
    pub max_step: u64,
    /// Largest `f(n) - f(m)` over `n < m`; 0 for nondecreasing maps.
    pub max_crossover: u64,
    pub max_collision: u64,
    pub max_displacement: u64,
    /// Smallest `C` for which the first-value, step and order conditions
    /// hold on the window.
    pub min_empirical_c: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub map: String,
    pub source: String,
    pub target: String,
    pub kind: MapKind,
    pub mode: String,
    pub window: Window,
    /// Constant used for the first-value and step conditions.
    pub step_c: u64,
    /// Constant used for the order condition.
    pub order_c: u64,
    pub verdict: Verdict,
    pub violation_count: u64,
    pub violations: Vec<Violation>,
    pub stats: Stats,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }
}

/// Collects violations up to a limit while counting all of them.
pub(crate) struct Collector {
    limit: usize,
    pub(crate) total: u64,
    pub(crate) list: Vec<Violation>,
}

impl Collector {
    pub(crate) fn new(limit: usize) -> Self {
        Collector {
            limit,
            total: 0,
            list: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, make: impl FnOnce() -> Violation) {
        self.total += 1;
        if self.list.len() < self.limit {
            self.list.push(make());
        }
    }
}
