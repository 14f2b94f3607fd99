//! Shared inputs for the criterion benchmarks.

use qsel_core::{
    generate_queries, generate_synthetic, mine_frequent, BooleanQuery, ItemsetCollection, SparseDataset, SyntheticSpec,
};

/// The default correlated dataset, its itemsets at threshold `t`, and
/// `count` conjunctive queries of size `n_q`.
pub fn workload(t: u64, n_q: usize, count: usize) -> (SparseDataset, ItemsetCollection, Vec<BooleanQuery>) {
    let data = generate_synthetic(&SyntheticSpec::correlated_default()).expect("valid synthetic spec");
    let stats = data.compute_stats().expect("non-empty data");
    let items = mine_frequent(&data, t).expect("mining succeeds");
    let queries = generate_queries(&stats, n_q, count, false, 11).expect("query generation succeeds");
    (data, items, queries)
}
