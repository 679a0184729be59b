//! Rayon pool against a single worker on the data-parallel kernels.
//!
//! `cargo bench -p towerforge` compares the default pool with a one-thread
//! pool; `--no-default-features` compiles the plain sequential path instead.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use std::sync::Arc;
use towerforge::combinat::{enumerate_rank2_in, plans_for_family};
use towerforge::localring::{dichotomy, quotient, FiniteLocalRing};
use towerforge::par;

fn workers() -> [(&'static str, Option<usize>); 2] {
    [("pool", None), ("single", Some(1))]
}

fn subspace_enumeration(c: &mut Criterion) {
    let mut group = c.benchmark_group("enumerate_and_plan");
    group.sample_size(10);
    for (label, threads) in workers() {
        group.bench_function(BenchmarkId::new(label, "p3_m6"), |b| {
            b.iter(|| {
                par::with_threads(threads, || {
                    let fam = enumerate_rank2_in(3, 6).unwrap();
                    black_box(plans_for_family(&fam).unwrap().len())
                })
            })
        });
    }
    group.finish();
}

fn socle_quotients(c: &mut Criterion) {
    let s = Arc::new(FiniteLocalRing::monomial_quotient(3, &[3, 2]).unwrap());
    let lines: Vec<usize> = s
        .socle()
        .elements()
        .iter()
        .copied()
        .filter(|&x| x != 0 && s.maximal_ideal().contains(x))
        .collect();
    let mut group = c.benchmark_group("dichotomy_over_socle");
    group.sample_size(10);
    for (label, threads) in workers() {
        group.bench_function(BenchmarkId::new(label, "f3_shape_3_2"), |b| {
            b.iter(|| {
                par::with_threads(threads, || {
                    let branches = par::map(&lines, |&x| {
                        let pi = quotient(&s, &s.additive_closure(&[x])).unwrap();
                        dichotomy(&pi).unwrap().branch()
                    });
                    black_box(branches)
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, subspace_enumeration, socle_quotients);
criterion_main!(benches);
