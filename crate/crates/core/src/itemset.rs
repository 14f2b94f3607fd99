//! Frequent itemset mining.
//!
//! An itemset is a set of attributes read as the event "all of these are 1".
//! It is T-frequent when at least T rows contain it. [`mine_frequent`] is a
//! levelwise Apriori miner; the resulting [`ItemsetCollection`] is the only
//! input the maximum-entropy model consumes.
//!
//! File format:
//!
//! ```text
//! T=25 k=20 n=5000
//! 812 : 0
//! 133 : 0 3
//! ```

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use itertools::Itertools;

use crate::dataset::SparseDataset;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Itemset {
    /// Strictly increasing attribute indices.
    pub attrs: Vec<usize>,
    /// Number of rows containing every attribute in `attrs`.
    pub count: u64,
}

impl Itemset {
    pub fn new(attrs: Vec<usize>, count: u64) -> Self {
        Itemset { attrs, count }
    }

    pub fn len(&self) -> usize {
        self.attrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attrs.is_empty()
    }

    /// Relative frequency `count / n`.
    pub fn freq(&self, n: usize) -> f64 {
        self.count as f64 / n as f64
    }
}

/// A downward-closed family of itemsets, ordered by size then
/// lexicographically.
#[derive(Clone, Debug)]
pub struct ItemsetCollection {
    threshold: u64,
    k: usize,
    n: usize,
    items: Vec<Itemset>,
    index: HashMap<Vec<usize>, usize>,
}

impl PartialEq for ItemsetCollection {
    fn eq(&self, other: &Self) -> bool {
        (self.threshold, self.k, self.n, &self.items) == (other.threshold, other.k, other.n, &other.items)
    }
}

impl ItemsetCollection {
    /// Validates and sorts a hand-built collection.
    pub fn from_items(threshold: u64, k: usize, n: usize, mut items: Vec<Itemset>) -> Result<Self> {
        for it in &items {
            if it.attrs.is_empty() {
                return Err(Error::InvalidArgument("empty itemset".into()));
            }
            if let Some(&a) = it.attrs.iter().find(|&&a| a >= k) {
                return Err(Error::AttributeOutOfRange { attr: a, k });
            }
            if !it.attrs.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "itemset {:?} not strictly increasing",
                    it.attrs
                )));
            }
            if it.count > n as u64 {
                return Err(Error::InvalidArgument(format!(
                    "itemset {:?} count {} exceeds n={n}",
                    it.attrs, it.count
                )));
            }
        }
        items.sort_by(|a, b| (a.len(), &a.attrs).cmp(&(b.len(), &b.attrs)));
        let mut index = HashMap::with_capacity(items.len());
        for (i, it) in items.iter().enumerate() {
            if index.insert(it.attrs.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate itemset {:?}", it.attrs)));
            }
        }
        for it in items.iter().filter(|it| it.len() > 1) {
            for skip in 0..it.len() {
                let sub: Vec<usize> = sub_without(&it.attrs, skip);
                if !index.contains_key(&sub) {
                    return Err(Error::InvalidArgument(format!(
                        "collection not downward closed: {:?} present but {:?} missing",
                        it.attrs, sub
                    )));
                }
            }
        }
        Ok(ItemsetCollection {
            threshold,
            k,
            n,
            items,
            index,
        })
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn items(&self) -> &[Itemset] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, attrs: &[usize]) -> Option<&Itemset> {
        self.index.get(attrs).map(|&i| &self.items[i])
    }

    /// Members whose attributes all lie in `vars`, by size then
    /// lexicographically.
    pub fn restrict_to(&self, vars: &[usize]) -> Vec<&Itemset> {
        let mut member = vec![false; self.k];
        for &v in vars {
            if v < self.k {
                member[v] = true;
            }
        }
        self.items
            .iter()
            .filter(|it| it.attrs.iter().all(|&a| member[a]))
            .collect()
    }

    /// Stored parameter count: one unit per attribute listed in each itemset
    /// plus one per itemset count.
    pub fn memory_cost(&self) -> u64 {
        self.items.iter().map(|it| it.len() as u64 + 1).sum()
    }

    /// Adds every singleton missing from the collection, with its count in
    /// `data`. Added singletons may fall below the threshold.
    pub fn with_all_singletons(mut self, data: &SparseDataset) -> Self {
        let mut counts = vec![0u64; data.k()];
        for row in data.rows() {
            for &a in row {
                counts[a] += 1;
            }
        }
        for (a, &c) in counts.iter().enumerate().take(self.k) {
            if !self.index.contains_key(&vec![a]) {
                self.items.push(Itemset::new(vec![a], c));
            }
        }
        Self::from_items(self.threshold, self.k, self.n, self.items)
            .expect("adding singletons keeps the collection valid")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("T={} k={} n={}\n", self.threshold, self.k, self.n);
        for it in &self.items {
            write!(out, "{} :", it.count).unwrap();
            for a in &it.attrs {
                write!(out, " {a}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing T=<int> k=<int> n=<int> header"))?;
        let mut fields = HashMap::new();
        for tok in header.split_whitespace() {
            let (key, val) = tok
                .split_once('=')
                .ok_or_else(|| Error::parse(hline, format!("bad header token {tok:?}")))?;
            let val: u64 = val
                .parse()
                .map_err(|_| Error::parse(hline, format!("bad header value {tok:?}")))?;
            fields.insert(key, val);
        }
        let field = |key: &str| {
            fields
                .get(key)
                .copied()
                .ok_or_else(|| Error::parse(hline, format!("header missing {key}=")))
        };
        let (threshold, k, n) = (field("T")?, field("k")? as usize, field("n")? as usize);

        let mut items = Vec::new();
        for (lineno, line) in lines {
            let (count, attrs) = line
                .split_once(':')
                .ok_or_else(|| Error::parse(lineno, "expected '<count> : <attrs>'"))?;
            let count = count
                .trim()
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad count {:?}", count.trim())))?;
            let attrs = attrs
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| Error::parse(lineno, format!("non-integer token {t:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if attrs.is_empty() || !attrs.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::parse(
                    lineno,
                    "attributes must be nonempty and strictly increasing",
                ));
            }
            if let Some(&a) = attrs.iter().find(|&&a| a >= k) {
                return Err(Error::parse(lineno, format!("attribute {a} out of range [0, {k})")));
            }
            items.push(Itemset::new(attrs, count));
        }
        Self::from_items(threshold, k, n, items)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn sub_without(attrs: &[usize], skip: usize) -> Vec<usize> {
    attrs
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != skip)
        .map(|(_, &a)| a)
        .collect()
}

/// All itemsets with count at least `threshold`.
pub fn mine_frequent(data: &SparseDataset, threshold: u64) -> Result<ItemsetCollection> {
    if threshold < 1 {
        return Err(Error::InvalidArgument("threshold must be at least 1".into()));
    }
    if data.n() == 0 {
        return Err(Error::EmptyDataset);
    }

    let mut single = vec![0u64; data.k()];
    for row in data.rows() {
        for &a in row {
            single[a] += 1;
        }
    }
    let frequent_attr: Vec<bool> = single.iter().map(|&c| c >= threshold).collect();
    // Rows projected onto frequent attributes; nothing else can join a frequent set.
    let rows: Vec<Vec<usize>> = data
        .rows()
        .iter()
        .map(|r| r.iter().copied().filter(|&a| frequent_attr[a]).collect())
        .filter(|r: &Vec<usize>| r.len() >= 2)
        .collect();

    let mut items: Vec<Itemset> = single
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c >= threshold)
        .map(|(a, &c)| Itemset::new(vec![a], c))
        .collect();
    let mut level: Vec<Vec<usize>> = items.iter().map(|it| it.attrs.clone()).collect();

    while level.len() > 1 {
        let candidates = join_and_prune(&level);
        if candidates.is_empty() {
            break;
        }
        let counts = count_candidates(&rows, &candidates);
        level.clear();
        for (cand, count) in candidates.into_iter().zip(counts) {
            if count >= threshold {
                level.push(cand.clone());
                items.push(Itemset::new(cand, count));
            }
        }
    }

    ItemsetCollection::from_items(threshold, data.k(), data.n(), items)
}

/// Prefix join of sorted size-L sets, keeping candidates whose every L-subset
/// is frequent.
fn join_and_prune(level: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let known: HashSet<&[usize]> = level.iter().map(Vec::as_slice).collect();
    let l = level[0].len();
    let mut out = Vec::new();
    for (i, a) in level.iter().enumerate() {
        for b in &level[i + 1..] {
            if a[..l - 1] != b[..l - 1] {
                break;
            }
            let mut cand = a.clone();
            cand.push(b[l - 1]);
            let all_frequent = (0..cand.len() - 2).all(|skip| {
                let sub = sub_without(&cand, skip);
                known.contains(sub.as_slice())
            });
            if all_frequent {
                out.push(cand);
            }
        }
    }
    out
}

fn count_candidates(rows: &[Vec<usize>], candidates: &[Vec<usize>]) -> Vec<u64> {
    let size = candidates[0].len();
    let lookup: HashMap<&[usize], usize> = candidates.iter().enumerate().map(|(i, c)| (c.as_slice(), i)).collect();
    let mut counts = vec![0u64; candidates.len()];
    for row in rows.iter().filter(|r| r.len() >= size) {
        if binomial(row.len(), size) <= candidates.len() as u64 {
            for combo in row.iter().copied().combinations(size) {
                if let Some(&i) = lookup.get(combo.as_slice()) {
                    counts[i] += 1;
                }
            }
        } else {
            for (i, c) in candidates.iter().enumerate() {
                if c.iter().all(|a| SparseDataset::row_has(row, *a)) {
                    counts[i] += 1;
                }
            }
        }
    }
    counts
}

fn binomial(n: usize, k: usize) -> u64 {
    let k = k.min(n - k) as u64;
    let mut acc = 1u64;
    for i in 0..k {
        acc = acc.saturating_mul(n as u64 - i) / (i + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SyntheticSpec};
    use crate::fixtures::six_attr_example;

    fn brute_force(data: &SparseDataset, threshold: u64) -> Vec<Itemset> {
        let k = data.k();
        let mut out = Vec::new();
        for mask in 1u32..1 << k {
            let attrs: Vec<usize> = (0..k).filter(|&a| mask >> a & 1 == 1).collect();
            let count = data
                .rows()
                .iter()
                .filter(|r| attrs.iter().all(|a| r.contains(a)))
                .count() as u64;
            if count >= threshold {
                out.push(Itemset::new(attrs, count));
            }
        }
        out.sort_by(|a, b| (a.len(), &a.attrs).cmp(&(b.len(), &b.attrs)));
        out
    }

    #[test]
    fn all_zero_data_mines_nothing() {
        let d = SparseDataset::new(5, vec![vec![]; 10]).unwrap();
        assert!(mine_frequent(&d, 1).unwrap().is_empty());
    }

    #[test]
    fn three_row_hand_count() {
        let d = SparseDataset::new(2, vec![vec![0, 1], vec![0, 1], vec![0]]).unwrap();
        let c = mine_frequent(&d, 2).unwrap();
        assert_eq!(
            c.items(),
            &[
                Itemset::new(vec![0], 3),
                Itemset::new(vec![1], 2),
                Itemset::new(vec![0, 1], 2)
            ]
        );
    }

    #[test]
    fn zero_threshold_rejected() {
        let d = SparseDataset::new(2, vec![vec![0]]).unwrap();
        assert!(mine_frequent(&d, 0).is_err());
    }

    #[test]
    fn matches_exhaustive_enumeration() {
        let d = generate_synthetic(&SyntheticSpec {
            k: 12,
            n: 500,
            base_density: 0.2,
            blocks: vec![vec![0, 1, 2, 3], vec![6, 7, 8]],
            block_strength: 0.9,
            seed: 3,
        })
        .unwrap();
        for t in [1, 5, 25] {
            assert_eq!(
                mine_frequent(&d, t).unwrap().items(),
                brute_force(&d, t).as_slice(),
                "T={t}"
            );
        }
    }

    #[test]
    fn restrict_to_filters_and_orders() {
        let c = six_attr_example(100);
        assert!(c.restrict_to(&[]).is_empty());
        assert_eq!(c.restrict_to(&[0, 1, 2, 3, 4, 5]).len(), 11);
        let sub: Vec<&[usize]> = c.restrict_to(&[5, 4]).iter().map(|it| it.attrs.as_slice()).collect();
        assert_eq!(sub, vec![&[4][..], &[5][..], &[4, 5][..]]);
    }

    #[test]
    fn memory_cost_counts() {
        let empty = ItemsetCollection::from_items(1, 3, 10, vec![]).unwrap();
        assert_eq!(empty.memory_cost(), 0);
        let c = six_attr_example(100);
        assert_eq!(c.memory_cost(), 27);
        let naive: u64 = c.items().iter().map(|it| it.attrs.len() as u64).sum::<u64>() + c.len() as u64;
        assert_eq!(c.memory_cost(), naive);
    }

    #[test]
    fn from_items_validates() {
        let bad = vec![Itemset::new(vec![0, 1], 3)];
        assert!(ItemsetCollection::from_items(1, 3, 10, bad).is_err());
        let dup = vec![Itemset::new(vec![0], 3), Itemset::new(vec![0], 2)];
        assert!(ItemsetCollection::from_items(1, 3, 10, dup).is_err());
        let range = vec![Itemset::new(vec![7], 3)];
        assert!(ItemsetCollection::from_items(1, 3, 10, range).is_err());
    }

    #[test]
    fn text_round_trip_and_errors() {
        let d = generate_synthetic(&SyntheticSpec {
            n: 400,
            ..SyntheticSpec::correlated_default()
        })
        .unwrap();
        let c = mine_frequent(&d, 10).unwrap();
        assert_eq!(ItemsetCollection::parse(&c.to_text()).unwrap(), c);
        assert!(matches!(
            ItemsetCollection::parse("T=1 k=3 n=5\n2 : 0 0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            ItemsetCollection::parse("T=1 k=3\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn singleton_injection() {
        let d = SparseDataset::new(3, vec![vec![0], vec![0, 1], vec![0]]).unwrap();
        let c = mine_frequent(&d, 2).unwrap().with_all_singletons(&d);
        assert_eq!(c.get(&[1]).unwrap().count, 1);
        assert_eq!(c.get(&[2]).unwrap().count, 0);
        assert!(c.get(&[0, 1]).is_none());
    }

    #[test]
    fn threshold_monotonicity_and_antimonotone_counts() {
        let d = generate_synthetic(&SyntheticSpec {
            n: 1000,
            ..SyntheticSpec::correlated_default()
        })
        .unwrap();
        let lo = mine_frequent(&d, 10).unwrap();
        let hi = mine_frequent(&d, 40).unwrap();
        for it in hi.items() {
            assert_eq!(lo.get(&it.attrs), Some(it));
        }
        for it in lo.items().iter().filter(|it| it.len() > 1) {
            for skip in 0..it.len() {
                let sub = lo.get(&sub_without(&it.attrs, skip)).unwrap();
                assert!(sub.count >= it.count);
            }
        }
        let stats = d.compute_stats().unwrap();
        for (a, m) in stats.marginal.iter().enumerate() {
            if (m * d.n() as f64).round() as u64 >= 10 {
                assert!(lo.get(&[a]).is_some());
            }
        }
    }
}
