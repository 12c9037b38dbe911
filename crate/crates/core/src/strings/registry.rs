use std::sync::Arc;

use super::families::{
    ConcatString, Constant, Cyclic, GrowingZeros, HeadThenConstant, Nondense, NondenseKind, PermutedPrefix, Repeat,
};
use super::{Alphabet, InfiniteString, Reference, Symbol, Word};
use crate::error::{Error, Result};
use crate::separation;

/// Registry names with their parameter schemas, for listings and usage text.
pub fn registry_names() -> &'static [(&'static str, &'static str)] {
    &[
        ("constant", "a=<letter> (default 0): a^w"),
        ("cyclic", "w=<word> (default 01): (w)^w"),
        ("ones_then_zeros", "k>=1 (default 1): 1^k 0^w"),
        ("ones_twos_zeros", "i>=1, k>=1 (default 1,1): 1^i 2^k 0^w"),
        (
            "growing_zeros",
            "head=<word> (default empty), tail=<word> (default 1): head (0^n tail)_{n>=1}",
        ),
        ("sigma_family", "((01)^{2^{2^i}} 0^i 1^i)_{i>=1}"),
        ("tau_family", "((01)^{2^{2^i}} 1^i 0^i)_{i>=1}"),
        ("mu_family", "((01)^{2^{2^i}} 0^i)_{i>=1}"),
        ("nu_family", "((01)^{2^{2^i}} 1^i)_{i>=1}"),
        (
            "permuted_prefix",
            "base=<ref>, n>=0, a=<letter>, b=<letter>: a^n b then base without its first b and first n a's",
        ),
        (
            "repeat",
            "base=<ref>, times>=1 (default 2): every letter of base repeated `times` times",
        ),
        ("theta", "tree=<tree ref> (default full): source separation string"),
        ("zeta", "tree=<tree ref> (default full): target separation string"),
    ]
}

fn letter(r: &Reference, key: &str, default: &str) -> Result<Symbol> {
    let raw = r.str_or(key, default);
    let mut chars = raw.chars();
    match (chars.next().and_then(Symbol::from_label), chars.next()) {
        (Some(s), None) => Ok(s),
        _ => Err(Error::invalid(r.name(), key, format!("`{raw}` is not a single letter"))),
    }
}

fn word(r: &Reference, key: &str, default: &str) -> Result<Word> {
    Word::parse(r.str_or(key, default)).map_err(|e| Error::invalid(r.name(), key, e.to_string()))
}

fn positive(r: &Reference, key: &str) -> Result<u64> {
    let v = r.u64_or(key, 1)?;
    if v < 1 {
        return Err(Error::invalid(r.name(), key, "must be at least 1"));
    }
    Ok(v)
}

/// Binary alphabet widened to cover `extra`.
fn binary_with(extra: &[Symbol]) -> Alphabet {
    let mut all = vec![Symbol(0), Symbol(1)];
    all.extend_from_slice(extra);
    Alphabet::covering(&all)
}

/// `base` with every letter repeated `times` times, named
/// `repeat(base=...,times=...)`.
pub fn repeat_letters(base: &InfiniteString, times: u64) -> Result<InfiniteString> {
    if times < 1 {
        return Err(Error::invalid("repeat", "times", "must be at least 1"));
    }
    let reference = Reference::new("repeat")
        .with("base", base.reference())
        .with("times", times);
    Ok(InfiniteString::new(
        reference,
        base.alphabet().clone(),
        Arc::new(Repeat {
            base: base.clone(),
            times,
        }),
    ))
}

/// Resolves a registry reference to a lazy string.
pub fn registry_get(r: &Reference) -> Result<InfiniteString> {
    let name = r.name();
    let made = match name {
        "constant" => {
            r.expect_keys(&["a"])?;
            let a = letter(r, "a", "0")?;
            InfiniteString::new(r.clone(), Alphabet::covering(&[a]), Arc::new(Constant(a)))
        }
        "cyclic" => {
            r.expect_keys(&["w"])?;
            let w = word(r, "w", "01")?;
            if w.is_empty() {
                return Err(Error::invalid(name, "w", "must be nonempty"));
            }
            let alphabet = Alphabet::covering(w.symbols());
            InfiniteString::new(r.clone(), alphabet, Arc::new(Cyclic(w.0)))
        }
        "ones_then_zeros" => {
            r.expect_keys(&["k"])?;
            let k = positive(r, "k")?;
            let head = vec![Symbol(1); k as usize];
            InfiniteString::new(
                r.clone(),
                Alphabet::standard(2),
                Arc::new(HeadThenConstant { head, tail: Symbol(0) }),
            )
        }
        "ones_twos_zeros" => {
            r.expect_keys(&["i", "k"])?;
            let i = positive(r, "i")?;
            let k = positive(r, "k")?;
            let mut head = vec![Symbol(1); i as usize];
            head.extend(std::iter::repeat(Symbol(2)).take(k as usize));
            InfiniteString::new(
                r.clone(),
                Alphabet::standard(3),
                Arc::new(HeadThenConstant { head, tail: Symbol(0) }),
            )
        }
        "growing_zeros" => {
            r.expect_keys(&["head", "tail"])?;
            let head = word(r, "head", "")?;
            let tail = word(r, "tail", "1")?;
            let alphabet = binary_with(&[head.symbols(), tail.symbols()].concat());
            InfiniteString::new(
                r.clone(),
                alphabet,
                Arc::new(ConcatString::new(head.0, GrowingZeros { tail: tail.0 })),
            )
        }
        "sigma_family" | "tau_family" | "mu_family" | "nu_family" => {
            r.expect_keys(&[])?;
            let kind = match name {
                "sigma_family" => NondenseKind::Sigma,
                "tau_family" => NondenseKind::Tau,
                "mu_family" => NondenseKind::Mu,
                _ => NondenseKind::Nu,
            };
            InfiniteString::new(
                r.clone(),
                Alphabet::standard(2),
                Arc::new(ConcatString::new(Vec::new(), Nondense(kind))),
            )
        }
        "permuted_prefix" => {
            r.expect_keys(&["base", "n", "a", "b"])?;
            let base = registry_get(&r.nested("base")?)?;
            let n = r.u64_or("n", 1)?;
            let a = letter(r, "a", "0")?;
            let b = letter(r, "b", "1")?;
            let mut alphabet = base.alphabet().symbols().to_vec();
            alphabet.extend([a, b]);
            InfiniteString::new(
                r.clone(),
                Alphabet::covering(&alphabet),
                Arc::new(PermutedPrefix::new(base, n, a, b)?),
            )
        }
        "repeat" => {
            r.expect_keys(&["base", "times"])?;
            let base = registry_get(&r.nested("base")?)?;
            repeat_letters(&base, r.u64_or("times", 2)?)?
        }
        "theta" | "zeta" => {
            r.expect_keys(&["tree"])?;
            let tree = separation::tree_from_ref(&r.nested_or("tree", "full")?)?;
            let strings = separation::SeparationStrings::new(tree);
            if name == "theta" {
                strings.theta()
            } else {
                strings.zeta()
            }
        }
        _ => {
            return Err(Error::Unknown {
                what: "string",
                name: name.to_string(),
            })
        }
    };
    Ok(made)
}
