use criterion::{criterion_group, criterion_main, Criterion};
use qfinder_bench::input;
use qfinder_core::assembler::Mode;
use qfinder_core::frontend::{run, RunConfig};
use qfinder_core::verifier::verify;
use std::hint::black_box;

fn pipelines(c: &mut Criterion) {
    let mut group = c.benchmark_group("derive");
    group.sample_size(10);
    for (name, mode) in [("qgauss", Mode::Basic), ("pfaff_saalschutz", Mode::Basic), ("bailey_daum", Mode::Plus)] {
        let doc = input(name);
        let config = RunConfig { mode, ..RunConfig::default() };
        group.bench_function(name, |b| b.iter(|| black_box(run(&doc, &config).unwrap())));
    }
    group.finish();
}

fn verification(c: &mut Criterion) {
    let doc = input("qgauss");
    let result = run(&doc, &RunConfig::default()).unwrap();
    let id = &result.identities[0].identity;
    c.bench_function("verify/qgauss/20", |b| b.iter(|| black_box(verify(id, 20, 6, 0))));
}

criterion_group!(benches, pipelines, verification);
criterion_main!(benches);
