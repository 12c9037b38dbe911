use std::fmt;

use serde::{Deserialize, Serialize};

use crate::strings::Symbol;

/// The block words the separation strings are assembled from, all for a
/// fixed stage `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockKind {
    /// `0^n 1^n`
    Lam0 { n: u32 },
    /// `0^{floor((n+1)/2)} 1^i 0^{ceil((n+1)/2)} 1^n` for `1 <= i <= n-1`
    LamI { n: u32, i: u32 },
    /// `(01)^n 1^n`
    LamPrime { n: u32 },
}

impl BlockKind {
    pub fn stage(self) -> u32 {
        match self {
            BlockKind::Lam0 { n } | BlockKind::LamI { n, .. } | BlockKind::LamPrime { n } => n,
        }
    }

    pub fn len(self) -> u64 {
        match self {
            BlockKind::Lam0 { n } => 2 * n as u64,
            BlockKind::LamI { n, i } => 2 * n as u64 + 1 + i as u64,
            BlockKind::LamPrime { n } => 3 * n as u64,
        }
    }

    pub fn is_empty(self) -> bool {
        false
    }

    /// Maximal runs of the word as `(letter, length)`.
    pub fn runs(self) -> Vec<(u8, u64)> {
        match self {
            BlockKind::Lam0 { n } => vec![(0, n as u64), (1, n as u64)],
            BlockKind::LamI { n, i } => {
                let (a, b) = split_zeros(n);
                vec![(0, a), (1, i as u64), (0, b), (1, n as u64)]
            }
            BlockKind::LamPrime { n } => {
                let mut out: Vec<(u8, u64)> = Vec::new();
                for _ in 0..n {
                    out.push((0, 1));
                    out.push((1, 1));
                }
                out.last_mut().unwrap().1 += n as u64;
                out
            }
        }
    }

    /// Letter at 0-based offset `o < len()`.
    pub fn symbol(self, o: u64) -> Symbol {
        debug_assert!(o < self.len());
        let bit = match self {
            BlockKind::Lam0 { n } => (o >= n as u64) as u8,
            BlockKind::LamI { n, i } => {
                let (a, b) = split_zeros(n);
                let i = i as u64;
                (o >= a && o < a + i || o >= a + i + b) as u8
            }
            BlockKind::LamPrime { n } => {
                if o < 2 * n as u64 {
                    (o % 2) as u8
                } else {
                    1
                }
            }
        };
        Symbol(bit)
    }

    pub fn word(self) -> String {
        (0..self.len()).map(|o| self.symbol(o).label()).collect()
    }
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockKind::Lam0 { n } => write!(f, "lam({n},0)"),
            BlockKind::LamI { n, i } => write!(f, "lam({n},{i})"),
            BlockKind::LamPrime { n } => write!(f, "lam'({n})"),
        }
    }
}

/// Lengths of the two zero runs of `LamI` blocks.
pub(crate) fn split_zeros(n: u32) -> (u64, u64) {
    let n = n as u64;
    (n.div_ceil(2), (n + 2) / 2)
}
