//! Closed-form maps between periodic strings and between the growing-zero
//! strings `(0^n t)_{n>=1}`.

use crate::check::{MapKind, ReductionMap};
use crate::error::{Error, Result};
use crate::strings::{registry_get, InfiniteString, Reference};

pub(crate) const EXAMPLE_NAMES: [&str; 6] = [
    "e_b_forward",
    "e_b_backward",
    "e_d_beta_to_alpha",
    "e_d_alpha_to_beta",
    "e_d_gamma_to_alpha",
    "suffix_embed",
];

fn string(text: &str) -> InfiniteString {
    registry_get(&Reference::parse(text).expect("valid reference")).expect("registered string")
}

/// Total length of the first `n` components `0^j t`, `j = 1..=n`.
fn growing_total(n: u64, tail: u64) -> u128 {
    let n = n as u128;
    n * (n + 1) / 2 + n * tail as u128
}

/// Component `n >= 1` and offset inside it for the 0-based offset `z` into
/// the concatenation of the components `0^j t`.
fn growing_locate(z: u64, tail: u64) -> (u64, u64) {
    let (mut lo, mut hi) = (1u64, 1u64 << 33);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if growing_total(mid, tail) > z as u128 {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    (lo, (z as u128 - growing_total(lo - 1, tail)) as u64)
}

/// 1-based start of component `n` after a head of length `head`.
fn growing_start(n: u64, tail: u64, head: u64) -> u64 {
    (growing_total(n - 1, tail) + head as u128 + 1) as u64
}

/// The map named `name`, one of [`EXAMPLE_NAMES`].
pub(crate) fn example_map(name: &str) -> Result<ReductionMap> {
    let period2 = "cyclic(w=01)";
    let period3 = "cyclic(w=001)";
    let alpha = "growing_zeros";
    let beta = "growing_zeros(tail=11)";
    let gamma = "growing_zeros(head=1)";
    let build = |src: &str, tgt: &str, c, kind, f: fn(u64) -> u64| {
        ReductionMap::from_fn(name, string(src), string(tgt), c, kind, f)
    };
    match name {
        // 3n-2 -> 4n-3, 3n-1 -> 4n-1, 3n -> 4n
        "e_b_forward" => build(period3, period2, 2, MapKind::OneOne, |x| {
            let (n, r) = ((x - 1) / 3 + 1, (x - 1) % 3);
            [4 * n - 3, 4 * n - 1, 4 * n][r as usize]
        }),
        // 2n-1 -> 3n-2, 2n -> 3n
        "e_b_backward" => build(period2, period3, 2, MapKind::OneOne, |x| {
            let n = x.div_ceil(2);
            if x % 2 == 1 {
                3 * n - 2
            } else {
                3 * n
            }
        }),
        // zeros of 0^n 11 onto the zeros of 0^n 1, both 1s onto its 1
        "e_d_beta_to_alpha" => build(beta, alpha, 1, MapKind::ManyOne, |x| {
            let (n, o) = growing_locate(x - 1, 2);
            growing_start(n, 1, 0) + o.min(n)
        }),
        // zeros of 0^n 1 onto the zeros of 0^n 11, its 1 onto the first 1
        "e_d_alpha_to_beta" => build(alpha, beta, 2, MapKind::ManyOne, |x| {
            let (n, o) = growing_locate(x - 1, 1);
            growing_start(n, 2, 0) + o
        }),
        // the leading 1 onto the first 1; 0^n 1 left-aligned onto 0^{n+1} 1
        "e_d_gamma_to_alpha" => build(gamma, alpha, 2, MapKind::OneOne, |x| {
            if x == 1 {
                return 2;
            }
            let (n, o) = growing_locate(x - 2, 1);
            growing_start(n + 1, 1, 0) + if o < n { o } else { n + 1 }
        }),
        "suffix_embed" => build(alpha, gamma, 2, MapKind::OneOne, |x| x + 1),
        _ => Err(Error::Unknown {
            what: "catalog map",
            name: name.to_string(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::check_window;

    #[test]
    fn closed_form_values() {
        let fwd = example_map("e_b_forward").unwrap();
        assert_eq!(fwd.map_at(6), 8);
        assert_eq!(fwd.table(6).unwrap(), vec![1, 3, 4, 5, 7, 8]);
        let back = example_map("e_b_backward").unwrap();
        assert_eq!(back.map_at(5), 7);
        assert_eq!(back.table(4).unwrap(), vec![1, 3, 4, 6]);
    }

    #[test]
    fn growing_blocks_locate() {
        // 01 001 0001: offsets 0..9
        let expect = [(1, 0), (1, 1), (2, 0), (2, 1), (2, 2), (3, 0), (3, 1), (3, 2), (3, 3)];
        for (z, e) in expect.iter().enumerate() {
            assert_eq!(growing_locate(z as u64, 1), *e);
        }
        assert_eq!(growing_start(3, 1, 0), 6);
        assert_eq!(growing_start(2, 2, 1), 5);
    }

    #[test]
    fn both_ones_collapse() {
        // beta = 011 0011 00011 ..., alpha = 01 001 0001 ...
        let f = example_map("e_d_beta_to_alpha").unwrap();
        assert_eq!(f.table(10).unwrap(), vec![1, 2, 2, 3, 4, 5, 5, 6, 7, 8]);
        let g = example_map("e_d_alpha_to_beta").unwrap();
        assert_eq!(g.table(5).unwrap(), vec![1, 2, 4, 5, 6]);
        let h = example_map("e_d_gamma_to_alpha").unwrap();
        // gamma = 1 01 001 ..., alpha = 01 001 0001 ...
        assert_eq!(h.table(6).unwrap(), vec![2, 3, 5, 6, 7, 9]);
    }

    #[test]
    fn examples_pass_with_their_constants() {
        for name in EXAMPLE_NAMES {
            let f = example_map(name).unwrap();
            let r = check_window(&f, 20_000).unwrap();
            assert!(r.passed(), "{name}: {:?}", &r.violations[..r.violations.len().min(3)]);
        }
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(example_map("nope"), Err(Error::Unknown { .. })));
    }
}
