//! Boolean count queries over binary attributes.
//!
//! A [`BooleanQuery`] is an expression tree of attribute literals joined by
//! AND / OR / NOT. Conjunctions of literals on distinct attributes get their
//! own type, [`ConjunctiveQuery`], because every model has a fast path for
//! them. Everything else is evaluated through the minterm expansion returned
//! by [`satisfying_assignments`].

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::DatasetStats;
use crate::error::{Error, Result};

/// Default cap on the number of distinct variables a query may mention.
pub const DEFAULT_VAR_BOUND: usize = 20;

/// Hard cap: assignments are stored as `u32` bitmasks.
pub const MAX_VARS: usize = 30;

/// `attr = value`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub attr: usize,
    pub value: bool,
}

impl Literal {
    pub fn new(attr: usize, value: bool) -> Self {
        Literal { attr, value }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BooleanQuery {
    Lit(Literal),
    /// Empty conjunction is `true`.
    And(Vec<BooleanQuery>),
    /// Empty disjunction is `false`.
    Or(Vec<BooleanQuery>),
    Not(Box<BooleanQuery>),
}

impl BooleanQuery {
    pub fn lit(attr: usize, value: bool) -> Self {
        BooleanQuery::Lit(Literal::new(attr, value))
    }

    pub fn and(parts: Vec<BooleanQuery>) -> Self {
        BooleanQuery::And(parts)
    }

    pub fn or(parts: Vec<BooleanQuery>) -> Self {
        BooleanQuery::Or(parts)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(q: BooleanQuery) -> Self {
        BooleanQuery::Not(Box::new(q))
    }

    /// Evaluates the query with `value(attr)` giving each attribute's value.
    pub fn eval<F: Fn(usize) -> bool>(&self, value: &F) -> bool {
        match self {
            BooleanQuery::Lit(l) => value(l.attr) == l.value,
            BooleanQuery::And(parts) => parts.iter().all(|p| p.eval(value)),
            BooleanQuery::Or(parts) => parts.iter().any(|p| p.eval(value)),
            BooleanQuery::Not(q) => !q.eval(value),
        }
    }

    /// Largest attribute index mentioned, if any.
    pub fn max_attr(&self) -> Option<usize> {
        query_vars(self).into_iter().next_back()
    }

    pub fn check_range(&self, k: usize) -> Result<()> {
        match self.max_attr() {
            Some(attr) if attr >= k => Err(Error::AttributeOutOfRange { attr, k }),
            _ => Ok(()),
        }
    }

    fn collect_vars(&self, out: &mut BTreeSet<usize>) {
        match self {
            BooleanQuery::Lit(l) => {
                out.insert(l.attr);
            }
            BooleanQuery::And(parts) | BooleanQuery::Or(parts) => parts.iter().for_each(|p| p.collect_vars(out)),
            BooleanQuery::Not(q) => q.collect_vars(out),
        }
    }
}

/// Distinct attributes mentioned anywhere in `q`, ascending.
pub fn query_vars(q: &BooleanQuery) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    q.collect_vars(&mut out);
    out
}

/// A conjunction of literals over pairwise-distinct attributes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConjunctiveQuery {
    literals: Vec<Literal>,
}

impl ConjunctiveQuery {
    pub fn new(literals: Vec<Literal>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for l in &literals {
            if !seen.insert(l.attr) {
                return Err(Error::InvalidArgument(format!(
                    "attribute {} appears twice in conjunction",
                    l.attr
                )));
            }
        }
        Ok(ConjunctiveQuery { literals })
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn to_query(&self) -> BooleanQuery {
        BooleanQuery::And(self.literals.iter().map(|&l| BooleanQuery::Lit(l)).collect())
    }
}

/// Returns the literal list if `q` is a pure conjunction (nested ANDs are
/// flattened) over distinct attributes.
pub fn as_conjunctive(q: &BooleanQuery) -> Option<ConjunctiveQuery> {
    fn flatten(q: &BooleanQuery, out: &mut Vec<Literal>) -> bool {
        match q {
            BooleanQuery::Lit(l) => {
                out.push(*l);
                true
            }
            BooleanQuery::And(parts) => parts.iter().all(|p| flatten(p, out)),
            _ => false,
        }
    }
    let mut lits = Vec::new();
    if !flatten(q, &mut lits) {
        return None;
    }
    ConjunctiveQuery::new(lits).ok()
}

/// The satisfying full assignments of a query's variables.
///
/// Bit `i` of each assignment is the value of `vars[i]`. Distinct
/// assignments are disjoint events, so probabilities over them add.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Minterms {
    pub vars: Vec<usize>,
    pub assignments: Vec<u32>,
}

impl Minterms {
    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }
}

pub fn satisfying_assignments(q: &BooleanQuery, bound: usize) -> Result<Minterms> {
    let vars: Vec<usize> = query_vars(q).into_iter().collect();
    let bound = bound.min(MAX_VARS);
    if vars.len() > bound {
        return Err(Error::VariableBound {
            found: vars.len(),
            bound,
        });
    }
    let assignments = (0..1u32 << vars.len())
        .filter(|&mask| {
            q.eval(&|attr| {
                let pos = vars.binary_search(&attr).expect("attr is a query var");
                mask >> pos & 1 == 1
            })
        })
        .collect();
    Ok(Minterms { vars, assignments })
}

/// Draws a random query workload.
///
/// Attributes are picked without replacement with probability proportional
/// to their marginal frequency; each literal is then set to 1 with that
/// attribute's marginal probability. With `arbitrary`, each connective
/// between consecutive literals is AND or OR with probability 1/2, and the
/// tree is left-associated.
pub fn generate_queries(
    stats: &DatasetStats,
    n_q: usize,
    count: usize,
    arbitrary: bool,
    seed: u64,
) -> Result<Vec<BooleanQuery>> {
    let marginal = &stats.marginal;
    if n_q == 0 || n_q > marginal.len() {
        return Err(Error::InvalidArgument(format!(
            "query size {n_q} must be in [1, {}]",
            marginal.len()
        )));
    }
    let support = marginal.iter().filter(|&&m| m > 0.0).count();
    if support < n_q {
        return Err(Error::InvalidArgument(format!(
            "only {support} attributes have nonzero marginal, need {n_q}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut dist =
            WeightedIndex::new(marginal.iter().copied()).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let mut lits = Vec::with_capacity(n_q);
        for _ in 0..n_q {
            let attr = dist.sample(&mut rng);
            let value = rng.gen_bool(marginal[attr].clamp(0.0, 1.0));
            lits.push(BooleanQuery::lit(attr, value));
            if lits.len() < n_q {
                dist.update_weights(&[(attr, &0.0)])
                    .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            }
        }
        let q = if arbitrary {
            let mut it = lits.into_iter();
            let mut acc = it.next().expect("n_q >= 1");
            for lit in it {
                acc = if rng.gen_bool(0.5) {
                    BooleanQuery::And(vec![acc, lit])
                } else {
                    BooleanQuery::Or(vec![acc, lit])
                };
            }
            acc
        } else {
            BooleanQuery::And(lits)
        };
        out.push(q);
    }
    Ok(out)
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(= {} {})", self.attr, self.value as u8)
    }
}

impl fmt::Display for BooleanQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, op: &str, parts: &[BooleanQuery]| {
            write!(f, "({op}")?;
            for p in parts {
                write!(f, " {p}")?;
            }
            write!(f, ")")
        };
        match self {
            BooleanQuery::Lit(l) => l.fmt(f),
            BooleanQuery::And(parts) => list(f, "and", parts),
            BooleanQuery::Or(parts) => list(f, "or", parts),
            BooleanQuery::Not(q) => write!(f, "(not {q})"),
        }
    }
}

impl FromStr for BooleanQuery {
    type Err = Error;

    /// Parses either the prefix form `(and (= 3 1) (or (= 5 0) (= 7 1)))`
    /// or the conjunction shorthand `3=1 & 5=0`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('(') {
            let tokens = tokenize(s);
            let mut pos = 0;
            let q = parse_sexpr(&tokens, &mut pos)?;
            if pos != tokens.len() {
                return Err(Error::parse(1, format!("trailing input after query: {s}")));
            }
            Ok(q)
        } else {
            let lits = s
                .split('&')
                .map(|part| {
                    let (a, v) = part
                        .trim()
                        .split_once('=')
                        .ok_or_else(|| Error::parse(1, format!("expected attr=value, got {part:?}")))?;
                    Ok(BooleanQuery::Lit(Literal::new(
                        parse_attr(a.trim())?,
                        parse_bit(v.trim())?,
                    )))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(if lits.len() == 1 {
                lits.into_iter().next().unwrap()
            } else {
                BooleanQuery::And(lits)
            })
        }
    }
}

fn tokenize(s: &str) -> Vec<&str> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, c) in s.char_indices() {
        match c {
            '(' | ')' => {
                if let Some(st) = start.take() {
                    tokens.push(&s[st..i]);
                }
                tokens.push(&s[i..i + 1]);
            }
            c if c.is_whitespace() => {
                if let Some(st) = start.take() {
                    tokens.push(&s[st..i]);
                }
            }
            _ => {
                start.get_or_insert(i);
            }
        }
    }
    if let Some(st) = start {
        tokens.push(&s[st..]);
    }
    tokens
}

fn parse_sexpr(tokens: &[&str], pos: &mut usize) -> Result<BooleanQuery> {
    let next = |pos: &mut usize| -> Result<&str> {
        let t = tokens
            .get(*pos)
            .copied()
            .ok_or_else(|| Error::parse(1, "unexpected end of query"))?;
        *pos += 1;
        Ok(t)
    };
    if next(pos)? != "(" {
        return Err(Error::parse(1, "expected '('"));
    }
    let op = next(pos)?;
    let q = match op {
        "=" => {
            let attr = parse_attr(next(pos)?)?;
            let value = parse_bit(next(pos)?)?;
            BooleanQuery::Lit(Literal::new(attr, value))
        }
        "and" | "or" => {
            let mut parts = Vec::new();
            while tokens.get(*pos) == Some(&"(") {
                parts.push(parse_sexpr(tokens, pos)?);
            }
            if op == "and" {
                BooleanQuery::And(parts)
            } else {
                BooleanQuery::Or(parts)
            }
        }
        "not" => BooleanQuery::not(parse_sexpr(tokens, pos)?),
        other => return Err(Error::parse(1, format!("unknown operator {other:?}"))),
    };
    if next(pos)? != ")" {
        return Err(Error::parse(1, format!("expected ')' to close {op}")));
    }
    Ok(q)
}

fn parse_attr(s: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::parse(1, format!("bad attribute index {s:?}")))
}

fn parse_bit(s: &str) -> Result<bool> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(Error::parse(1, format!("literal value must be 0 or 1, got {s:?}"))),
    }
}

/// Reads a query file: one query per line, `#` comments and blank lines skipped.
pub fn parse_query_file(text: &str) -> Result<Vec<BooleanQuery>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            l.parse().map_err(|e| match e {
                Error::Parse { msg, .. } => Error::parse(i + 1, msg),
                other => other,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stats_with(marginal: Vec<f64>) -> DatasetStats {
        DatasetStats {
            k: marginal.len(),
            n: 1,
            total_ones: 0,
            mean_ones_per_row: 0.0,
            std_ones_per_row: 0.0,
            max_ones_per_row: 0,
            marginal,
        }
    }

    #[test]
    fn vars_collapse_duplicates() {
        assert_eq!(query_vars(&BooleanQuery::lit(0, true)), BTreeSet::from([0]));
        let q: BooleanQuery = "(and (= 0 1) (or (= 2 0) (= 0 1)))".parse().unwrap();
        assert_eq!(query_vars(&q), BTreeSet::from([0, 2]));
    }

    #[test]
    fn minterms_of_simple_queries() {
        let m = satisfying_assignments(&BooleanQuery::lit(0, true), 20).unwrap();
        assert_eq!(m.assignments, vec![0b1]);
        let q: BooleanQuery = "(or (= 0 1) (= 1 1))".parse().unwrap();
        let m = satisfying_assignments(&q, 20).unwrap();
        assert_eq!(m.vars, vec![0, 1]);
        assert_eq!(m.assignments, vec![0b01, 0b10, 0b11]);
    }

    #[test]
    fn variable_bound_enforced() {
        let q = BooleanQuery::and((0..5).map(|i| BooleanQuery::lit(i, true)).collect());
        assert!(matches!(
            satisfying_assignments(&q, 4),
            Err(Error::VariableBound { found: 5, bound: 4 })
        ));
    }

    #[test]
    fn conjunctive_detection() {
        let q: BooleanQuery = "0=1 & 3=0".parse().unwrap();
        let c = as_conjunctive(&q).unwrap();
        assert_eq!(c.literals(), &[Literal::new(0, true), Literal::new(3, false)]);
        assert!(as_conjunctive(&"(or (= 0 1) (= 1 1))".parse().unwrap()).is_none());
        assert!(as_conjunctive(&"(and (= 0 1) (= 0 0))".parse().unwrap()).is_none());
        // nested ANDs flatten
        let nested: BooleanQuery = "(and (and (= 1 1) (= 2 0)) (= 4 1))".parse().unwrap();
        assert_eq!(as_conjunctive(&nested).unwrap().len(), 3);
    }

    #[test]
    fn parse_display_round_trip() {
        let text = "(and (= 3 1) (or (= 5 0) (not (= 7 1))))";
        let q: BooleanQuery = text.parse().unwrap();
        assert_eq!(q.to_string(), text);
        assert!("(and (= 3 1)".parse::<BooleanQuery>().is_err());
        assert!("(xor (= 3 1))".parse::<BooleanQuery>().is_err());
        assert!("3=2".parse::<BooleanQuery>().is_err());
    }

    #[test]
    fn query_file_reports_line() {
        let err = parse_query_file("# header\n0=1\n\n(= 1 x)\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
    }

    #[test]
    fn forced_selection_uses_every_attribute() {
        let stats = stats_with(vec![0.3; 5]);
        for q in generate_queries(&stats, 5, 50, false, 1).unwrap() {
            assert_eq!(query_vars(&q).len(), 5);
        }
    }

    #[test]
    fn sparse_marginals_give_mostly_negative_literals() {
        let marginal: Vec<f64> = (0..40).map(|i| 0.02 + 0.002 * i as f64).collect();
        assert!(marginal.iter().all(|&m| m <= 0.1));
        let qs = generate_queries(&stats_with(marginal), 6, 500, false, 3).unwrap();
        let positives: usize = qs
            .iter()
            .map(|q| as_conjunctive(q).unwrap().literals().iter().filter(|l| l.value).count())
            .sum();
        assert!(positives as f64 / 500.0 <= 1.5);
    }

    #[test]
    fn generation_is_deterministic() {
        let stats = stats_with(vec![0.1, 0.2, 0.05, 0.4, 0.3, 0.15]);
        let a = generate_queries(&stats, 3, 20, true, 9).unwrap();
        let b = generate_queries(&stats, 3, 20, true, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generation_errors() {
        let stats = stats_with(vec![0.0, 0.2, 0.0]);
        assert!(generate_queries(&stats, 4, 1, false, 0).is_err());
        assert!(generate_queries(&stats, 2, 1, false, 0).is_err());
        assert!(generate_queries(&stats_with(vec![0.0; 3]), 1, 1, false, 0).is_err());
    }

    fn arb_query(max_attr: usize) -> impl Strategy<Value = BooleanQuery> {
        let leaf = (0..max_attr, any::<bool>()).prop_map(|(a, v)| BooleanQuery::lit(a, v));
        leaf.prop_recursive(6, 48, 3, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 1..3).prop_map(BooleanQuery::And),
                prop::collection::vec(inner.clone(), 1..3).prop_map(BooleanQuery::Or),
                inner.prop_map(BooleanQuery::not),
            ]
        })
    }

    // Independent leaf traversal using an explicit stack.
    fn leaves(q: &BooleanQuery) -> BTreeSet<usize> {
        let mut stack = vec![q];
        let mut out = BTreeSet::new();
        while let Some(node) = stack.pop() {
            match node {
                BooleanQuery::Lit(l) => {
                    out.insert(l.attr);
                }
                BooleanQuery::And(p) | BooleanQuery::Or(p) => stack.extend(p.iter()),
                BooleanQuery::Not(inner) => stack.push(inner),
            }
        }
        out
    }

    proptest! {
        #[test]
        fn vars_match_leaf_traversal(q in arb_query(10)) {
            prop_assert_eq!(query_vars(&q), leaves(&q));
        }

        #[test]
        fn minterms_match_truth_table(q in arb_query(8)) {
            let m = satisfying_assignments(&q, 20).unwrap();
            let n = m.n_vars();
            for mask in 0..1u32 << n {
                let direct = q.eval(&|attr| {
                    let pos = m.vars.iter().position(|&v| v == attr).unwrap();
                    mask >> pos & 1 == 1
                });
                prop_assert_eq!(direct, m.assignments.contains(&mask));
            }
            let neg = satisfying_assignments(&BooleanQuery::not(q.clone()), 20).unwrap();
            prop_assert_eq!(m.assignments.len() + neg.assignments.len(), 1usize << n);
        }

        #[test]
        fn display_parse_round_trip(q in arb_query(12)) {
            let back: BooleanQuery = q.to_string().parse().unwrap();
            prop_assert_eq!(back, q);
        }

        #[test]
        fn conjunctive_workload_is_conjunctive(seed in any::<u64>()) {
            let stats = stats_with(vec![0.1, 0.5, 0.2, 0.05, 0.3, 0.25, 0.4]);
            for q in generate_queries(&stats, 4, 5, false, seed).unwrap() {
                let c = as_conjunctive(&q).unwrap();
                prop_assert_eq!(c.len(), 4);
                let m = satisfying_assignments(&q, 20).unwrap();
                prop_assert_eq!(m.assignments.len(), 1);
            }
        }
    }
}
