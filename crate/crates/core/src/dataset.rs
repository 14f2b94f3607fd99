//! Sparse binary datasets, the synthetic generator, and the full-scan count
//! oracle.
//!
//! Text format:
//!
//! ```text
//! k=6
//! # comment
//! 0 2 5
//! .
//! 3
//! ```
//!
//! The first line gives the attribute count. Each following non-blank line
//! is one row listing the attributes equal to 1 in strictly increasing
//! order; a row with no ones is written as a lone `.`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::query::BooleanQuery;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseDataset {
    k: usize,
    rows: Vec<Vec<usize>>,
}

impl SparseDataset {
    /// Builds a dataset, checking that every row is strictly increasing and
    /// in `[0, k)`.
    pub fn new(k: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            check_row(row, k).map_err(|msg| Error::InvalidArgument(format!("row {i}: {msg}")))?;
        }
        Ok(SparseDataset { k, rows })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing k=<integer> header"))?;
        let k: usize = header
            .strip_prefix("k=")
            .and_then(|v| v.trim().parse().ok())
            .filter(|&k| k >= 1)
            .ok_or_else(|| Error::parse(hline, format!("malformed header {header:?}")))?;
        let mut rows = Vec::new();
        for (lineno, line) in lines {
            if line == "." {
                rows.push(Vec::new());
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>()
                        .map_err(|_| Error::parse(lineno, format!("non-integer token {tok:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            check_row(&row, k).map_err(|msg| Error::parse(lineno, msg))?;
            rows.push(row);
        }
        Ok(SparseDataset { k, rows })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("k={}\n", self.k);
        for row in &self.rows {
            if row.is_empty() {
                out.push('.');
            } else {
                for (i, a) in row.iter().enumerate() {
                    if i > 0 {
                        out.push(' ');
                    }
                    write!(out, "{a}").unwrap();
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    #[inline]
    pub fn row_has(row: &[usize], attr: usize) -> bool {
        row.binary_search(&attr).is_ok()
    }

    /// Number of rows satisfying `q`. This is the ground truth every model
    /// is scored against.
    pub fn exact_count(&self, q: &BooleanQuery) -> Result<u64> {
        q.check_range(self.k)?;
        Ok(self
            .rows
            .iter()
            .filter(|row| q.eval(&|attr| Self::row_has(row, attr)))
            .count() as u64)
    }

    pub fn compute_stats(&self) -> Result<DatasetStats> {
        let n = self.n();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let mut counts = vec![0u64; self.k];
        let mut total = 0u64;
        let mut max = 0usize;
        for row in &self.rows {
            for &a in row {
                counts[a] += 1;
            }
            total += row.len() as u64;
            max = max.max(row.len());
        }
        let mean = total as f64 / n as f64;
        let var = self.rows.iter().map(|r| (r.len() as f64 - mean).powi(2)).sum::<f64>() / n as f64;
        Ok(DatasetStats {
            k: self.k,
            n,
            total_ones: total,
            mean_ones_per_row: mean,
            std_ones_per_row: var.sqrt(),
            max_ones_per_row: max,
            marginal: counts.iter().map(|&c| c as f64 / n as f64).collect(),
        })
    }
}

fn check_row(row: &[usize], k: usize) -> std::result::Result<(), String> {
    for (i, &a) in row.iter().enumerate() {
        if a >= k {
            return Err(format!("attribute {a} out of range [0, {k})"));
        }
        if i > 0 && row[i - 1] >= a {
            return Err(format!("indices not strictly increasing at {a}"));
        }
    }
    Ok(())
}

/// Summary statistics of a dataset. `std_ones_per_row` is the population
/// standard deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetStats {
    pub k: usize,
    pub n: usize,
    pub total_ones: u64,
    pub mean_ones_per_row: f64,
    pub std_ones_per_row: f64,
    pub max_ones_per_row: usize,
    pub marginal: Vec<f64>,
}

/// Parameters of the block-correlated synthetic generator.
///
/// Every attribute fires independently with probability `base_density`.
/// Each block additionally has a latent event, drawn once per row with
/// probability `base_density`; when it fires, each block member is switched
/// on with probability `block_strength`. With `block_strength = 0` all
/// attributes are independent.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub k: usize,
    pub n: usize,
    pub base_density: f64,
    pub blocks: Vec<Vec<usize>>,
    pub block_strength: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Twenty attributes, 5000 rows, three blocks of four.
    pub fn correlated_default() -> Self {
        SyntheticSpec {
            k: 20,
            n: 5000,
            base_density: 0.05,
            blocks: vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7], vec![8, 9, 10, 11]],
            block_strength: 0.8,
            seed: 20010101,
        }
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SparseDataset> {
    let SyntheticSpec {
        k,
        n,
        base_density,
        ref blocks,
        block_strength,
        seed,
    } = *spec;
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if !(base_density > 0.0 && base_density < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "base_density {base_density} not in (0, 1)"
        )));
    }
    if !(0.0..=1.0).contains(&block_strength) {
        return Err(Error::InvalidArgument(format!(
            "block_strength {block_strength} not in [0, 1]"
        )));
    }
    let mut owner = vec![None; k];
    for (b, block) in blocks.iter().enumerate() {
        for &a in block {
            if a >= k {
                return Err(Error::AttributeOutOfRange { attr: a, k });
            }
            if owner[a].replace(b).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "attribute {a} appears in more than one block"
                )));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut latent = vec![false; blocks.len()];
    let rows = (0..n)
        .map(|_| {
            for l in latent.iter_mut() {
                *l = rng.gen_bool(base_density);
            }
            (0..k)
                .filter(|&a| {
                    let background = rng.gen_bool(base_density);
                    let boosted = rng.gen::<f64>() < block_strength;
                    background || owner[a].is_some_and(|b| latent[b] && boosted)
                })
                .collect()
        })
        .collect();
    Ok(SparseDataset { k, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::generate_queries;

    // Naive evaluator over dense rows, coded independently of `exact_count`.
    fn naive_count(data: &SparseDataset, q: &BooleanQuery) -> u64 {
        fn eval(q: &BooleanQuery, dense: &[bool]) -> bool {
            match q {
                BooleanQuery::Lit(l) => dense[l.attr] == l.value,
                BooleanQuery::And(p) => {
                    let mut acc = true;
                    for x in p {
                        acc &= eval(x, dense);
                    }
                    acc
                }
                BooleanQuery::Or(p) => {
                    let mut acc = false;
                    for x in p {
                        acc |= eval(x, dense);
                    }
                    acc
                }
                BooleanQuery::Not(x) => !eval(x, dense),
            }
        }
        let mut count = 0;
        for row in data.rows() {
            let mut dense = vec![false; data.k()];
            for &a in row {
                dense[a] = true;
            }
            if eval(q, &dense) {
                count += 1;
            }
        }
        count
    }

    fn small_synth(seed: u64) -> SparseDataset {
        generate_synthetic(&SyntheticSpec {
            k: 12,
            n: 800,
            base_density: 0.15,
            blocks: vec![vec![0, 1, 2], vec![5, 6, 7, 8]],
            block_strength: 0.8,
            seed,
        })
        .unwrap()
    }

    #[test]
    fn parse_empty_and_single_row() {
        let d = SparseDataset::parse("k=4\n").unwrap();
        assert_eq!((d.k(), d.n()), (4, 0));
        let d = SparseDataset::parse("k=6\n0 2 5\n").unwrap();
        assert_eq!(d.rows(), &[vec![0, 2, 5]]);
        let d = SparseDataset::parse("# c\nk=3\n.\n\n1\n").unwrap();
        assert_eq!(d.rows(), &[vec![], vec![1]]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("k=x\n", 1),
            ("k=3\n0 1\n0 3\n", 3),
            ("k=3\n2 1\n", 2),
            ("k=3\n0\n1 a\n", 3),
            ("", 1),
        ];
        for (text, line) in cases {
            match SparseDataset::parse(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn file_round_trip() {
        let d = generate_synthetic(&SyntheticSpec {
            n: 1000,
            ..SyntheticSpec::correlated_default()
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.txt");
        d.save(&path).unwrap();
        assert_eq!(SparseDataset::load(&path).unwrap(), d);
    }

    #[test]
    fn generator_is_deterministic() {
        assert_eq!(small_synth(5), small_synth(5));
        assert_ne!(small_synth(5), small_synth(6));
    }

    #[test]
    fn generator_rejects_bad_args() {
        let base = SyntheticSpec::correlated_default();
        let overlapping = SyntheticSpec {
            blocks: vec![vec![0, 1], vec![1, 2]],
            ..base.clone()
        };
        assert!(generate_synthetic(&overlapping).is_err());
        assert!(generate_synthetic(&SyntheticSpec {
            base_density: 1.0,
            ..base.clone()
        })
        .is_err());
        assert!(generate_synthetic(&SyntheticSpec {
            block_strength: 1.5,
            ..base.clone()
        })
        .is_err());
        assert!(generate_synthetic(&SyntheticSpec {
            blocks: vec![vec![25]],
            ..base
        })
        .is_err());
    }

    #[test]
    fn zero_strength_is_uncorrelated() {
        let d = generate_synthetic(&SyntheticSpec {
            k: 10,
            n: 5000,
            base_density: 0.2,
            blocks: vec![vec![0, 1, 2], vec![3, 4]],
            block_strength: 0.0,
            seed: 11,
        })
        .unwrap();
        let n = d.n() as f64;
        let m = d.compute_stats().unwrap().marginal;
        for i in 0..10 {
            for j in i + 1..10 {
                let q = BooleanQuery::and(vec![BooleanQuery::lit(i, true), BooleanQuery::lit(j, true)]);
                let pij = d.exact_count(&q).unwrap() as f64 / n;
                let corr = (pij - m[i] * m[j]) / (m[i] * (1.0 - m[i]) * m[j] * (1.0 - m[j])).sqrt();
                assert!(corr.abs() < 4.0 / n.sqrt(), "({i},{j}) corr {corr}");
            }
        }
    }

    #[test]
    fn blocks_are_positively_correlated() {
        let d = generate_synthetic(&SyntheticSpec {
            k: 30,
            n: 5000,
            base_density: 0.1,
            blocks: vec![vec![0, 1, 2]],
            block_strength: 0.8,
            seed: 7,
        })
        .unwrap();
        let n = d.n() as f64;
        let m = d.compute_stats().unwrap().marginal;
        let q = BooleanQuery::and(vec![BooleanQuery::lit(0, true), BooleanQuery::lit(1, true)]);
        let p01 = d.exact_count(&q).unwrap() as f64 / n;
        assert!(p01 > m[0] * m[1]);
    }

    #[test]
    fn exact_count_basics() {
        let d = SparseDataset::new(2, vec![vec![0], vec![1]]).unwrap();
        assert_eq!(d.exact_count(&BooleanQuery::And(vec![])).unwrap(), 2);
        assert_eq!(d.exact_count(&BooleanQuery::lit(0, true)).unwrap(), 1);
        assert!(matches!(
            d.exact_count(&BooleanQuery::lit(2, true)),
            Err(Error::AttributeOutOfRange { attr: 2, k: 2 })
        ));
    }

    #[test]
    fn exact_count_matches_naive_evaluator() {
        let d = small_synth(1);
        let stats = d.compute_stats().unwrap();
        let mut qs = generate_queries(&stats, 4, 100, false, 2).unwrap();
        qs.extend(generate_queries(&stats, 5, 100, true, 3).unwrap());
        for q in &qs {
            assert_eq!(d.exact_count(q).unwrap(), naive_count(&d, q), "{q}");
            let neg = BooleanQuery::not(q.clone());
            assert_eq!(d.exact_count(q).unwrap() + d.exact_count(&neg).unwrap(), d.n() as u64);
        }
    }

    #[test]
    fn stats_hand_cases() {
        let d = SparseDataset::new(4, vec![vec![0, 1, 2]]).unwrap();
        let s = d.compute_stats().unwrap();
        assert_eq!(
            (s.mean_ones_per_row, s.std_ones_per_row, s.max_ones_per_row),
            (3.0, 0.0, 3)
        );
        assert_eq!(s.marginal, vec![1.0, 1.0, 1.0, 0.0]);

        let d = SparseDataset::new(2, vec![vec![], vec![0, 1]]).unwrap();
        let s = d.compute_stats().unwrap();
        assert_eq!(
            (s.mean_ones_per_row, s.std_ones_per_row, s.max_ones_per_row),
            (1.0, 1.0, 2)
        );

        let empty = SparseDataset::new(3, vec![]).unwrap();
        assert!(matches!(empty.compute_stats(), Err(Error::EmptyDataset)));
    }

    #[test]
    fn stats_match_naive_recount() {
        let d = small_synth(4);
        let s = d.compute_stats().unwrap();
        let n = d.n() as f64;
        let lens: Vec<f64> = d.rows().iter().map(|r| r.len() as f64).collect();
        let total: f64 = lens.iter().sum();
        let mean = total / n;
        let std = (lens.iter().map(|l| l * l).sum::<f64>() / n - mean * mean).sqrt();
        assert_eq!(s.total_ones as f64, total);
        assert!((s.mean_ones_per_row - mean).abs() < 1e-12);
        assert!((s.std_ones_per_row - std).abs() < 1e-9);
        let mut sum = 0.0;
        for a in 0..d.k() {
            let c = d.exact_count(&BooleanQuery::lit(a, true)).unwrap();
            assert_eq!((s.marginal[a] * n).round() as u64, c);
            sum += s.marginal[a] * n;
        }
        assert!((sum - total).abs() <= 1e-9 * total);
    }
}
