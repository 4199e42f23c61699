use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use thorpe_lab::identities::identity_names;
use thorpe_lab::{check, decompose, CaseSpec};
use thorpe_lab_bench::{curvature, curvature_power};

fn wedge(c: &mut Criterion) {
    let mut group = c.benchmark_group("wedge");
    for n in [6, 8, 10, 12] {
        let r = curvature(n, 1).unwrap();
        let r2 = r.power(2).unwrap();
        group.bench_with_input(BenchmarkId::new("R^2 ∧ R", n), &n, |b, _| b.iter(|| black_box(&r2).wedge(&r)));
    }
    group.finish();
}

fn star(c: &mut Criterion) {
    let mut group = c.benchmark_group("hodge_star");
    for n in [8, 10, 12] {
        let w = curvature_power(n, 2, 2).unwrap();
        group.bench_with_input(BenchmarkId::new("R^2", n), &n, |b, _| b.iter(|| black_box(&w).hodge_star()));
    }
    group.finish();
}

fn decomposition(c: &mut Criterion) {
    let mut group = c.benchmark_group("decompose");
    group.sample_size(20);
    for (n, k) in [(8, 2), (10, 2), (12, 3)] {
        let w = curvature_power(n, k, 3).unwrap();
        group.bench_with_input(BenchmarkId::new(format!("R^{k}"), n), &n, |b, _| b.iter(|| decompose(black_box(&w))));
    }
    group.finish();
}

fn suite_case(c: &mut Criterion) {
    let mut group = c.benchmark_group("identity_case");
    for name in ["gen_lanczos", "hyper_identity", "thorpe_criteria_equiv"] {
        assert!(identity_names().contains(&name));
        let spec = CaseSpec { n: 8, p: if name == "thorpe_criteria_equiv" { 4 } else { 3 }, seed: 0, inputs: None };
        group.bench_function(name, |b| b.iter(|| check(name, black_box(&spec)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, wedge, star, decomposition, suite_case);
criterion_main!(benches);
