use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use serde::Serialize;

use super::dec;
use crate::error::{Error, Result};
use crate::strings::Reference;

/// Largest level the enumerator will materialize.
const MAX_LEVEL_WORDS: usize = 1 << 22;

/// A prefix-closed set of binary words, given by membership.
pub trait TreeOracle: Send + Sync {
    /// Canonical reference text, e.g. `comb(teeth=2)`.
    fn name(&self) -> String;
    fn contains(&self, word: &[u8]) -> bool;
}

impl fmt::Debug for dyn TreeOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TreeOracle({})", self.name())
    }
}

struct FullTree;

impl TreeOracle for FullTree {
    fn name(&self) -> String {
        "full".into()
    }
    fn contains(&self, _: &[u8]) -> bool {
        true
    }
}

/// Only the words `0^k`.
struct SingleBranch;

impl TreeOracle for SingleBranch {
    fn name(&self) -> String {
        "single".into()
    }
    fn contains(&self, w: &[u8]) -> bool {
        w.iter().all(|&b| b == 0)
    }
}

/// The branch `1^w` with a finite tooth `1^k 0^j`, `j <= teeth`, at every
/// node.
struct Comb {
    teeth: u64,
}

impl TreeOracle for Comb {
    fn name(&self) -> String {
        format!("comb(teeth={})", self.teeth)
    }
    fn contains(&self, w: &[u8]) -> bool {
        let ones = w.iter().take_while(|&&b| b == 1).count();
        let rest = &w[ones..];
        rest.iter().all(|&b| b == 0) && rest.len() as u64 <= self.teeth
    }
}

/// Words whose first `depth` bits are 0, with full branching below.
struct Delayed {
    depth: u64,
}

impl TreeOracle for Delayed {
    fn name(&self) -> String {
        format!("delayed(depth={})", self.depth)
    }
    fn contains(&self, w: &[u8]) -> bool {
        w.iter().take(self.depth as usize).all(|&b| b == 0)
    }
}

pub fn tree_names() -> &'static [(&'static str, &'static str)] {
    &[
        ("full", "every binary word"),
        ("single", "the words 0^k"),
        ("comb", "teeth>=0 (default 2): words 1^k 0^j with j <= teeth"),
        ("delayed", "depth>=0 (default 2): first `depth` bits 0, then everything"),
    ]
}

pub fn tree_from_ref(r: &Reference) -> Result<Arc<dyn TreeOracle>> {
    Ok(match r.name() {
        "full" => {
            r.expect_keys(&[])?;
            Arc::new(FullTree)
        }
        "single" => {
            r.expect_keys(&[])?;
            Arc::new(SingleBranch)
        }
        "comb" => {
            r.expect_keys(&["teeth"])?;
            Arc::new(Comb {
                teeth: r.u64_or("teeth", 2)?,
            })
        }
        "delayed" => {
            r.expect_keys(&["depth"])?;
            Arc::new(Delayed {
                depth: r.u64_or("depth", 2)?,
            })
        }
        other => {
            return Err(Error::Unknown {
                what: "tree",
                name: other.to_string(),
            })
        }
    })
}

/// The tree words of length `depth`, in lexicographic order.
pub fn level_words(tree: &dyn TreeOracle, depth: usize) -> Result<Vec<Vec<u8>>> {
    let mut level: Vec<Vec<u8>> = vec![Vec::new()];
    for d in 0..depth {
        let mut next = Vec::new();
        for w in &level {
            for b in [0u8, 1] {
                let mut c = w.clone();
                c.push(b);
                if tree.contains(&c) {
                    next.push(c);
                }
            }
        }
        if next.is_empty() {
            return Err(Error::EmptyLevel { depth: d + 1 });
        }
        if next.len() > MAX_LEVEL_WORDS {
            return Err(Error::Resource {
                limit: "tree level size",
                detail: format!("{} words at depth {}", next.len(), d + 1),
            });
        }
        level = next;
    }
    Ok(level)
}

/// Encodings `sum b_m 4^{n-1-m}` of the depth-`(n-1)` tree words.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SnSet {
    pub n: u32,
    #[serde(serialize_with = "dec::vec")]
    pub values: Vec<BigUint>,
}

impl SnSet {
    pub fn max(&self) -> &BigUint {
        self.values.last().expect("nonempty")
    }

    pub fn contains(&self, v: &BigUint) -> bool {
        self.values.binary_search(v).is_ok()
    }
}

/// Base-4 value of a 0/1 word, most significant digit first.
pub fn encode_word(word: &[u8]) -> BigUint {
    word.iter().fold(BigUint::from(0u32), |acc, &b| acc * 4u32 + b as u32)
}

pub fn sn_set(tree: &dyn TreeOracle, n: u32) -> Result<SnSet> {
    if n < 2 {
        return Err(Error::Domain(format!("S_n needs n >= 2, got {n}")));
    }
    let mut values: Vec<BigUint> = level_words(tree, n as usize - 1)?
        .iter()
        .map(|w| encode_word(w))
        .collect();
    values.sort();
    values.dedup();
    Ok(SnSet { n, values })
}

/// An infinite 0/1 sequence `B(1) B(2) ...`.
#[derive(Clone)]
pub struct Branch {
    name: String,
    bits: Arc<dyn Fn(u64) -> u8 + Send + Sync>,
}

impl fmt::Debug for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Branch({})", self.name)
    }
}

impl Branch {
    pub fn new(name: impl Into<String>, bits: impl Fn(u64) -> u8 + Send + Sync + 'static) -> Self {
        Branch {
            name: name.into(),
            bits: Arc::new(bits),
        }
    }

    /// Parses `zeros`, `ones`, `alternating` (1010...), or `bits:<w>`
    /// (w followed by zeros).
    pub fn parse(spec: &str) -> Result<Branch> {
        match spec {
            "zeros" => Ok(Branch::new("zeros", |_| 0)),
            "ones" => Ok(Branch::new("ones", |_| 1)),
            "alternating" => Ok(Branch::new("alternating", |m| (m % 2) as u8)),
            _ => {
                let w = spec.strip_prefix("bits:").ok_or_else(|| Error::Unknown {
                    what: "branch",
                    name: spec.to_string(),
                })?;
                let bits: Vec<u8> = w
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(0),
                        '1' => Ok(1),
                        _ => Err(Error::Parse {
                            input: spec.to_string(),
                            reason: "branch bits must be 0 or 1".into(),
                        }),
                    })
                    .collect::<Result<_>>()?;
                Ok(Branch::new(spec, move |m| {
                    bits.get(m as usize - 1).copied().unwrap_or(0)
                }))
            }
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `B(m)` for `m >= 1`.
    pub fn bit(&self, m: u64) -> u8 {
        assert!(m >= 1, "branch bits are 1-indexed");
        (self.bits)(m)
    }

    pub fn prefix(&self, len: u64) -> Vec<u8> {
        (1..=len).map(|m| self.bit(m)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree(s: &str) -> Arc<dyn TreeOracle> {
        tree_from_ref(&Reference::parse(s).unwrap()).unwrap()
    }

    fn small(v: &SnSet) -> Vec<u64> {
        v.values.iter().map(|x| x.try_into().unwrap()).collect()
    }

    #[test]
    fn sn_examples() {
        assert_eq!(small(&sn_set(&*tree("full"), 2).unwrap()), vec![0, 1]);
        assert_eq!(small(&sn_set(&*tree("full"), 3).unwrap()), vec![0, 1, 4, 5]);
        assert_eq!(small(&sn_set(&*tree("single"), 4).unwrap()), vec![0]);
        // comb words of length 3: 111, 110, 100
        assert_eq!(small(&sn_set(&*tree("comb"), 4).unwrap()), vec![16, 20, 21]);
        assert_eq!(small(&sn_set(&*tree("delayed(depth=2)"), 4).unwrap()), vec![0, 1]);
    }

    #[test]
    fn trees_are_prefix_closed() {
        for t in ["full", "single", "comb(teeth=1)", "comb", "delayed(depth=3)"] {
            let t = tree(t);
            for d in 1..8 {
                for w in level_words(&*t, d).unwrap() {
                    assert!(t.contains(&w[..d - 1]));
                }
            }
        }
    }

    #[test]
    fn empty_level_reported() {
        struct Finite;
        impl TreeOracle for Finite {
            fn name(&self) -> String {
                "finite".into()
            }
            fn contains(&self, w: &[u8]) -> bool {
                w.len() <= 2
            }
        }
        assert!(matches!(sn_set(&Finite, 4), Err(Error::EmptyLevel { depth: 3 })));
    }

    #[test]
    fn branches_parse() {
        assert_eq!(Branch::parse("alternating").unwrap().prefix(4), vec![1, 0, 1, 0]);
        assert_eq!(Branch::parse("bits:011").unwrap().prefix(5), vec![0, 1, 1, 0, 0]);
        assert!(Branch::parse("bits:012").is_err());
        assert!(Branch::parse("other").is_err());
    }
}
