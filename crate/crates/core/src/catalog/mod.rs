//! Executable reductions with their claimed constants.
//!
//! Entries are addressed by references such as `e_b_forward`,
//! `nondense_g(source=beta,target=delta)` or `inject(map=e_b_backward)`;
//! [`catalog_lookup`] also accepts a leading `catalog:`.

mod examples;
mod nondense;
mod props;

use std::io::Write;

use serde::Serialize;

pub use nondense::{nondense_map, ComponentIntervals, IntervalIndex};
pub use props::{common_lower, expand_repeat, inject_upgrade, CommonLower, Expansion};

use crate::check::{write_map_csv, MapKind, ReductionMap};
use crate::error::{Error, Result};
use crate::separation::{compile_reduction, tree_from_ref, Branch};
use crate::strings::{registry_get, Reference};

/// A catalog entry: how to build it and the constant it is claimed to meet.
#[derive(Clone, Debug, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub params: &'static str,
    pub summary: &'static str,
    /// Claimed constant, as a function of the input constant `C` where the
    /// entry is built from another map.
    pub constant: &'static str,
    /// A representative reference.
    pub example: &'static str,
}

const fn entry(
    name: &'static str,
    params: &'static str,
    summary: &'static str,
    constant: &'static str,
    example: &'static str,
) -> CatalogEntry {
    CatalogEntry {
        name,
        params,
        summary,
        constant,
        example,
    }
}

static ENTRIES: [CatalogEntry; 15] = [
    entry(
        "e_b_forward",
        "",
        "(001)^w -> (01)^w: 3n-2 -> 4n-3, 3n-1 -> 4n-1, 3n -> 4n",
        "2",
        "e_b_forward",
    ),
    entry(
        "e_b_backward",
        "",
        "(01)^w -> (001)^w: 2n-1 -> 3n-2, 2n -> 3n",
        "2",
        "e_b_backward",
    ),
    entry(
        "e_d_beta_to_alpha",
        "",
        "(0^n 11)_n -> (0^n 1)_n: zeros to zeros, both 1s to the 1",
        "1",
        "e_d_beta_to_alpha",
    ),
    entry(
        "e_d_alpha_to_beta",
        "",
        "(0^n 1)_n -> (0^n 11)_n: zeros to zeros, the 1 to the first 1",
        "2",
        "e_d_alpha_to_beta",
    ),
    entry(
        "e_d_gamma_to_alpha",
        "",
        "1(0^n 1)_n -> (0^n 1)_n: leading 1 to the first 1, 0^n 1 left-aligned in 0^{n+1} 1",
        "2",
        "e_d_gamma_to_alpha",
    ),
    entry(
        "suffix_embed",
        "",
        "(0^n 1)_n -> 1(0^n 1)_n: x -> x+1",
        "2",
        "suffix_embed",
    ),
    entry(
        "nondense_g",
        "source=alpha|beta (default alpha), target=gamma|delta (default gamma)",
        "sigma/tau family -> mu/nu family",
        "4",
        "nondense_g(source=alpha,target=gamma)",
    ),
    entry(
        "identity",
        "string=<ref> (default cyclic(w=01))",
        "x -> x",
        "1",
        "identity(string=cyclic(w=01))",
    ),
    entry(
        "expand_g",
        "string=<ref> (default cyclic(w=01)), c>=1 (default 1)",
        "string -> each letter repeated c+1 times: n -> (n-1)(c+1)+1",
        "c+1",
        "expand_g(c=2,string=cyclic(w=011))",
    ),
    entry(
        "expand_back",
        "string=<ref> (default cyclic(w=01)), c>=1 (default 1)",
        "each letter repeated c+1 times -> string: n -> ceil(n/(c+1))",
        "c",
        "expand_back(c=2,string=cyclic(w=011))",
    ),
    entry(
        "inject",
        "map=<catalog ref>",
        "injective upgrade of a C-map into the (C+1)-fold expansion of its target",
        "C^2+2C",
        "inject(map=e_d_beta_to_alpha)",
    ),
    entry(
        "lower_f1",
        "map=<catalog ref>",
        "lower string -> source: n -> i_n, i_n the n-th first-visit position",
        "C+1",
        "lower_f1(map=e_d_beta_to_alpha)",
    ),
    entry(
        "lower_f2",
        "map=<catalog ref>",
        "lower string -> target: n -> f(i_n)",
        "C(C+1)",
        "lower_f2(map=e_d_beta_to_alpha)",
    ),
    entry(
        "lower_g",
        "map=<catalog ref>",
        "source -> lower string: n -> min{k : f(i_k) = f(n)}",
        "step 2C+1, order C(C+1)^2-1",
        "lower_g(map=e_d_beta_to_alpha)",
    ),
    entry(
        "compiled",
        "tree=<tree ref> (default full), branch=zeros|ones|alternating|bits:<w> (default zeros)",
        "block-structured reduction from theta to zeta following a branch",
        "8",
        "compiled(branch=ones,tree=full)",
    ),
];

pub fn catalog_entries() -> &'static [CatalogEntry] {
    &ENTRIES
}

/// Representative references covering every entry, used for listings and
/// blanket checks.
pub fn catalog_instances() -> Vec<Reference> {
    let mut refs: Vec<&str> = ENTRIES.iter().map(|e| e.example).collect();
    refs.extend([
        "nondense_g(source=beta,target=gamma)",
        "nondense_g(source=alpha,target=delta)",
        "nondense_g(source=beta,target=delta)",
        "inject(map=e_b_backward)",
        "lower_f1(map=e_b_forward)",
        "lower_f2(map=e_b_forward)",
        "lower_g(map=e_b_forward)",
        "compiled(branch=alternating,tree=full)",
        "compiled(branch=ones,tree=comb)",
    ]);
    refs.into_iter()
        .map(|r| Reference::parse(r).expect("valid catalog reference"))
        .collect()
}

/// Builds the map for `text`, with or without the `catalog:` prefix.
pub fn catalog_lookup(text: &str) -> Result<ReductionMap> {
    catalog_get(&Reference::parse(text.strip_prefix("catalog:").unwrap_or(text))?)
}

fn nested_map(r: &Reference) -> Result<ReductionMap> {
    catalog_get(&r.nested("map")?)
}

/// Builds the map for a catalog reference. The result is named by the
/// canonical form of `r`.
pub fn catalog_get(r: &Reference) -> Result<ReductionMap> {
    let name = r.name();
    let map = match name {
        _ if examples::EXAMPLE_NAMES.contains(&name) => {
            r.expect_keys(&[])?;
            examples::example_map(name)?
        }
        "nondense_g" => {
            r.expect_keys(&["source", "target"])?;
            nondense_map(r.str_or("source", "alpha"), r.str_or("target", "gamma"))?
        }
        "identity" => {
            r.expect_keys(&["string"])?;
            let s = registry_get(&r.nested_or("string", "cyclic(w=01)")?)?;
            ReductionMap::from_fn(name, s.clone(), s, 1, MapKind::Permutation, |x| x)?
        }
        "expand_g" | "expand_back" => {
            r.expect_keys(&["string", "c"])?;
            let s = registry_get(&r.nested_or("string", "cyclic(w=01)")?)?;
            let e = expand_repeat(&s, r.u64_or("c", 1)?)?;
            if name == "expand_g" {
                e.forward
            } else {
                e.back
            }
        }
        "inject" => {
            r.expect_keys(&["map"])?;
            inject_upgrade(&nested_map(r)?)?
        }
        "lower_f1" | "lower_f2" | "lower_g" => {
            r.expect_keys(&["map"])?;
            let low = common_lower(&nested_map(r)?)?;
            match name {
                "lower_f1" => low.to_source,
                "lower_f2" => low.to_target,
                _ => low.from_source,
            }
        }
        "compiled" => {
            r.expect_keys(&["tree", "branch"])?;
            let tree = tree_from_ref(&r.nested_or("tree", "full")?)?;
            compile_reduction(tree, Branch::parse(r.str_or("branch", "zeros"))?)?
        }
        _ => {
            return Err(Error::Unknown {
                what: "catalog map",
                name: name.to_string(),
            })
        }
    };
    Ok(map.renamed(r.to_string()))
}

/// Writes `f(1..=n)` as `x,fx` CSV.
pub fn emit_csv<W: Write>(map: &ReductionMap, n: u64, out: W) -> Result<()> {
    write_map_csv(out, &map.table(n)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::{check_derived_invariants, check_window};

    #[test]
    fn every_instance_passes_with_its_constant() {
        for r in catalog_instances() {
            let f = catalog_get(&r).unwrap();
            let rep = check_window(&f, 4000).unwrap();
            assert!(
                rep.passed(),
                "{r}: {:?}",
                &rep.violations[..rep.violations.len().min(3)]
            );
            let inv = check_derived_invariants(&f, 4000).unwrap();
            assert!(
                inv.passed(),
                "{r}: {:?}",
                &inv.violations[..inv.violations.len().min(3)]
            );
        }
    }

    #[test]
    fn names_are_canonical() {
        let f = catalog_lookup("catalog:nondense_g(target=delta,source=beta)").unwrap();
        assert_eq!(f.name(), "nondense_g(source=beta,target=delta)");
        assert_eq!(catalog_lookup("identity").unwrap().kind(), MapKind::Permutation);
    }

    #[test]
    fn every_entry_has_a_working_example() {
        for e in catalog_entries() {
            let f = catalog_lookup(e.example).unwrap();
            assert_eq!(Reference::parse(f.name()).unwrap().name(), e.name);
        }
    }

    #[test]
    fn emits_csv() {
        let mut out = Vec::new();
        emit_csv(&catalog_lookup("e_b_backward").unwrap(), 3, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "x,fx\n1,1\n2,3\n3,4\n");
    }

    #[test]
    fn unknown_and_malformed() {
        assert!(matches!(catalog_lookup("nope"), Err(Error::Unknown { .. })));
        assert!(catalog_lookup("e_b_forward(c=2)").is_err());
        assert!(catalog_lookup("inject").is_err());
    }
}
