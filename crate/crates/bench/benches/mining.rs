use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qsel_bench::workload;
use qsel_core::baseline::ChowLiuTree;
use qsel_core::itemset::mine_frequent;

fn mining(c: &mut Criterion) {
    let (data, _, _) = workload(200, 4, 1);
    let mut group = c.benchmark_group("offline");
    for t in [15u64, 50, 200] {
        group.bench_with_input(BenchmarkId::new("mine_frequent", t), &t, |b, &t| {
            b.iter(|| mine_frequent(&data, t).unwrap())
        });
    }
    group.bench_function("chow_liu", |b| b.iter(|| ChowLiuTree::build(&data).unwrap()));
    group.bench_function("exact_count", |b| {
        let (_, _, queries) = workload(200, 6, 50);
        b.iter(|| queries.iter().map(|q| data.exact_count(q).unwrap()).sum::<u64>())
    });
    group.finish();
}

criterion_group!(benches, mining);
criterion_main!(benches);
