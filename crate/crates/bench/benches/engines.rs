use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qsel_bench::workload;
use qsel_core::maxent::{maxent_query_prob, EngineKind, QueryOptions};

fn engines(c: &mut Criterion) {
    let opts = QueryOptions::default();
    let mut group = c.benchmark_group("maxent_query");
    group.sample_size(20);
    for n_q in [4, 6, 8] {
        let (_, items, queries) = workload(25, n_q, 20);
        for engine in EngineKind::ALL {
            group.bench_with_input(BenchmarkId::new(engine.as_str(), n_q), &queries, |b, queries| {
                b.iter(|| {
                    for q in queries {
                        maxent_query_prob(&items, q, engine, &opts).unwrap();
                    }
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, engines);
criterion_main!(benches);
