//! Baseline estimators: the attribute-independence model and the Chow-Liu
//! dependence tree.
//!
//! Both serialize to a small text format:
//!
//! ```text
//! model=chowliu
//! n=5000
//! 0.12 0.3 0.08
//! 0 1 0.1 0.02 0.2 0.68
//! ```
//!
//! Line three holds the `k` marginals; Chow-Liu models add one line per tree
//! edge, `i j p11 p10 p01 p00`.

mod chowliu;
mod independence;

use std::fs;
use std::path::Path;

pub use chowliu::{ChowLiuTree, TreeEdge};
pub use independence::IndependenceModel;

use crate::error::{Error, Result};
use crate::query::{as_conjunctive, satisfying_assignments, BooleanQuery, Literal, DEFAULT_VAR_BOUND};

/// A model that answers Boolean queries with a probability.
pub trait Estimator {
    /// Probability of a conjunction of literals over distinct attributes.
    fn conjunctive_prob(&self, literals: &[Literal]) -> f64;

    /// Number of attributes the model covers.
    fn k(&self) -> usize;

    /// Parameter count reported in benchmark memory columns.
    fn memory_params(&self) -> u64;

    /// Probability of an arbitrary query. Non-conjunctive queries are summed
    /// over their satisfying assignments.
    fn prob(&self, q: &BooleanQuery) -> Result<f64> {
        q.check_range(self.k())?;
        if let Some(conj) = as_conjunctive(q) {
            return Ok(self.conjunctive_prob(conj.literals()));
        }
        let minterms = satisfying_assignments(q, DEFAULT_VAR_BOUND)?;
        let mut lits: Vec<Literal> = minterms.vars.iter().map(|&a| Literal::new(a, false)).collect();
        Ok(minterms
            .assignments
            .iter()
            .map(|&mask| {
                for (i, l) in lits.iter_mut().enumerate() {
                    l.value = mask >> i & 1 == 1;
                }
                self.conjunctive_prob(&lits)
            })
            .sum())
    }
}

/// Either baseline, as read back from a model file.
#[derive(Clone, Debug, PartialEq)]
pub enum BaselineModel {
    Independence(IndependenceModel),
    ChowLiu(ChowLiuTree),
}

impl BaselineModel {
    pub fn as_estimator(&self) -> &dyn Estimator {
        match self {
            BaselineModel::Independence(m) => m,
            BaselineModel::ChowLiu(t) => t,
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            BaselineModel::Independence(m) => m.to_text(),
            BaselineModel::ChowLiu(t) => t.to_text(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let lines = content_lines(text);
        match lines.first() {
            Some((_, "model=independence")) => IndependenceModel::from_lines(&lines).map(BaselineModel::Independence),
            Some((_, "model=chowliu")) => ChowLiuTree::from_lines(&lines).map(BaselineModel::ChowLiu),
            Some((line, other)) => Err(Error::parse(*line, format!("unknown model header {other:?}"))),
            None => Err(Error::parse(1, "empty model file")),
        }
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

fn content_lines(text: &str) -> Vec<(usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

/// Parses the shared `n=` and marginal lines that follow the header.
fn parse_common(lines: &[(usize, &str)]) -> Result<(usize, Vec<f64>)> {
    let (nline, ntext) = *lines.get(1).ok_or_else(|| Error::parse(1, "missing n= line"))?;
    let n = ntext
        .strip_prefix("n=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::parse(nline, format!("malformed {ntext:?}")))?;
    let (mline, mtext) = *lines
        .get(2)
        .ok_or_else(|| Error::parse(nline + 1, "missing marginal line"))?;
    let marginal = parse_floats(mline, mtext)?;
    if marginal.is_empty() {
        return Err(Error::parse(mline, "no marginals"));
    }
    if let Some(p) = marginal.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::parse(mline, format!("marginal {p} outside [0, 1]")));
    }
    Ok((n, marginal))
}

fn parse_floats(line: usize, text: &str) -> Result<Vec<f64>> {
    text.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::parse(line, format!("bad number {t:?}")))
        })
        .collect()
}

fn write_floats(out: &mut String, values: &[f64]) {
    use std::fmt::Write as _;
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "{v}").unwrap();
    }
    out.push('\n');
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SyntheticSpec};

    #[test]
    fn model_files_round_trip() {
        let data = generate_synthetic(&SyntheticSpec {
            n: 600,
            ..SyntheticSpec::correlated_default()
        })
        .unwrap();
        let models = [
            BaselineModel::Independence(IndependenceModel::build(&data).unwrap()),
            BaselineModel::ChowLiu(ChowLiuTree::build(&data).unwrap()),
        ];
        let dir = tempfile::tempdir().unwrap();
        for m in models {
            let path = dir.path().join("m.txt");
            m.save(&path).unwrap();
            let back = BaselineModel::load(&path).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn model_file_errors() {
        assert!(BaselineModel::parse("").is_err());
        assert!(matches!(
            BaselineModel::parse("model=mixture\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            BaselineModel::parse("model=independence\nn=3\n0.5 1.2\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            BaselineModel::parse("model=chowliu\nn=3\n0.5 0.5\n0 1 0.5 0.5\n"),
            Err(Error::Parse { line: 4, .. })
        ));
    }
}
