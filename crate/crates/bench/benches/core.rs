use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use qistring::catalog::catalog_lookup;
use qistring::check::{check_derived_invariants, check_window, MapKind};
use qistring::search::{search, SearchProblem};
use qistring::separation::{tree_from_ref, verify_compiled, Branch, VerifyOptions};
use qistring::strings::{registry_get, Reference};

fn string(text: &str) -> qistring::strings::InfiniteString {
    registry_get(&Reference::parse(text).unwrap()).unwrap()
}

fn prefixes(c: &mut Criterion) {
    let s = string("growing_zeros");
    c.bench_function("prefix growing_zeros 1e5", |b| {
        b.iter(|| black_box(s.prefix(100_000).unwrap()))
    });
}

fn checks(c: &mut Criterion) {
    let f = catalog_lookup("e_b_forward").unwrap();
    c.bench_function("check_window e_b_forward 1e5", |b| {
        b.iter(|| black_box(check_window(&f, 100_000).unwrap()))
    });
    let g = catalog_lookup("nondense_g").unwrap();
    c.bench_function("invariants nondense_g 2e4", |b| {
        b.iter(|| black_box(check_derived_invariants(&g, 20_000).unwrap()))
    });
}

fn searches(c: &mut Criterion) {
    let p = SearchProblem::new(
        string("cyclic(w=001)"),
        string("cyclic(w=01)"),
        2,
        200,
        MapKind::Permutation,
    )
    .unwrap();
    c.bench_function("search permutation 001->01 C=2 N=200", |b| {
        b.iter(|| black_box(search(&p).unwrap()))
    });
    let p = SearchProblem::new(
        string("cyclic(w=011)"),
        string("cyclic(w=01)"),
        2,
        300,
        MapKind::ManyOne,
    )
    .unwrap();
    c.bench_function("search many_one 011->01 C=2 N=300", |b| {
        b.iter(|| black_box(search(&p).unwrap()))
    });
}

fn separation(c: &mut Criterion) {
    let tree = tree_from_ref(&Reference::new("full")).unwrap();
    let opts = VerifyOptions {
        sampled: true,
        samples: 2_000,
        seed: 0,
    };
    c.bench_function("verify_compiled sampled stage 3", |b| {
        b.iter(|| black_box(verify_compiled(tree.clone(), Branch::parse("ones").unwrap(), 3, &opts).unwrap()))
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = prefixes, checks, searches, separation
}
criterion_main!(benches);
