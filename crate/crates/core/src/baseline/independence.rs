use super::{parse_common, write_floats, Estimator};
use crate::dataset::SparseDataset;
use crate::error::{Error, Result};
use crate::query::Literal;

/// One marginal per attribute; queries are answered as products.
#[derive(Clone, Debug, PartialEq)]
pub struct IndependenceModel {
    marginal: Vec<f64>,
    n: usize,
}

impl IndependenceModel {
    pub fn build(data: &SparseDataset) -> Result<Self> {
        if data.n() == 0 {
            return Err(Error::EmptyDataset);
        }
        let mut counts = vec![0u64; data.k()];
        for row in data.rows() {
            for &a in row {
                counts[a] += 1;
            }
        }
        let n = data.n();
        Ok(IndependenceModel {
            marginal: counts.iter().map(|&c| c as f64 / n as f64).collect(),
            n,
        })
    }

    pub fn from_marginals(marginal: Vec<f64>, n: usize) -> Result<Self> {
        if let Some(p) = marginal.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidArgument(format!("marginal {p} outside [0, 1]")));
        }
        Ok(IndependenceModel { marginal, n })
    }

    pub fn marginal(&self) -> &[f64] {
        &self.marginal
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("model=independence\nn={}\n", self.n);
        write_floats(&mut out, &self.marginal);
        out
    }

    pub(super) fn from_lines(lines: &[(usize, &str)]) -> Result<Self> {
        let (n, marginal) = parse_common(lines)?;
        if let Some((line, _)) = lines.get(3) {
            return Err(Error::parse(*line, "unexpected content after marginals"));
        }
        Ok(IndependenceModel { marginal, n })
    }
}

impl Estimator for IndependenceModel {
    fn conjunctive_prob(&self, literals: &[Literal]) -> f64 {
        literals
            .iter()
            .map(|l| {
                let p = self.marginal[l.attr];
                if l.value {
                    p
                } else {
                    1.0 - p
                }
            })
            .product()
    }

    fn k(&self) -> usize {
        self.marginal.len()
    }

    fn memory_params(&self) -> u64 {
        self.marginal.len() as u64
    }
}
