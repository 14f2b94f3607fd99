//! Small hand-built instances shared by tests, benches, and examples.

use crate::itemset::{Itemset, ItemsetCollection};

/// Pairs of the six-attribute running example: A2A3, A3A4, A4A6, A3A5, A5A6,
/// with attributes numbered from 0 (A1 = 0, ..., A6 = 5).
pub const EXAMPLE_PAIRS: [[usize; 2]; 5] = [[1, 2], [2, 3], [3, 5], [2, 4], [4, 5]];

/// The six singletons plus [`EXAMPLE_PAIRS`] over `n` rows, with
/// mildly correlated counts.
pub fn six_attr_example(n: usize) -> ItemsetCollection {
    let singles = [0.30, 0.25, 0.40, 0.35, 0.20, 0.30];
    let mut items: Vec<Itemset> = singles
        .iter()
        .enumerate()
        .map(|(a, p)| Itemset::new(vec![a], (p * n as f64).round() as u64))
        .collect();
    let pairs = [0.12, 0.20, 0.15, 0.13, 0.10];
    for (pair, p) in EXAMPLE_PAIRS.iter().zip(pairs) {
        items.push(Itemset::new(pair.to_vec(), (p * n as f64).round() as u64));
    }
    ItemsetCollection::from_items(1, 6, n, items).expect("fixture is valid")
}
