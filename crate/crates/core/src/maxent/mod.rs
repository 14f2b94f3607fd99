//! Per-query maximum-entropy model over frequent-itemset constraints.
//!
//! When a query arrives, the itemsets that mention only query variables
//! become constraints `P(all attrs of c_j = 1) = f_j`. The maximum-entropy
//! distribution meeting them has the product form
//!
//! ```text
//! P(x) = mu0 * prod_j mu_j^[x satisfies c_j]
//! ```
//!
//! and is fitted by iterative scaling. The per-constraint marginal `S_j`
//! that each scaling step needs can be computed three ways, see
//! [`EngineKind`]:
//!
//! * brute force enumeration of the free variables,
//! * bucket elimination along a maximum-cardinality order,
//! * a clique tree of the triangulated constraint graph, where each step
//!   touches only the owning clique's table and the change is propagated
//!   over the separators.
//!
//! All three follow the same iterate sequence, so they return the same
//! estimate up to rounding.

mod bucket;
mod clique_tree;
mod factorization;
mod graph;
mod scaling;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

pub use bucket::bucket_constraint_sum;
pub use clique_tree::{fit_clique_tree, CliqueTreeModel};
pub use factorization::{MaxentFactorization, LOG_RANGE};
pub use graph::{build_graph, ConstraintGraph, JoinEdge};
pub use scaling::{constraint_sum, iterative_scaling, FitResult, ScalingOptions, SumResult};

use crate::error::{Error, Result};
use crate::itemset::ItemsetCollection;
use crate::query::{satisfying_assignments, BooleanQuery, DEFAULT_VAR_BOUND};

/// `P(all attrs = 1) = freq` over local variable positions.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    attrs: Vec<usize>,
    mask: u32,
    freq: f64,
}

impl Constraint {
    pub fn new(attrs: Vec<usize>, freq: f64) -> Result<Self> {
        if attrs.is_empty() {
            return Err(Error::InvalidArgument("constraint needs at least one variable".into()));
        }
        if !(freq > 0.0 && freq < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "constraint frequency {freq} not in (0, 1)"
            )));
        }
        let mut mask = 0u32;
        for &a in &attrs {
            if a >= crate::query::MAX_VARS || mask >> a & 1 == 1 {
                return Err(Error::InvalidArgument(format!("bad constraint variables {attrs:?}")));
            }
            mask |= 1 << a;
        }
        let mut attrs = attrs;
        attrs.sort_unstable();
        Ok(Constraint { attrs, mask, freq })
    }

    pub fn attrs(&self) -> &[usize] {
        &self.attrs
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    pub fn freq(&self) -> f64 {
        self.freq
    }

    #[inline]
    pub fn satisfied_by(&self, x: u32) -> bool {
        x & self.mask == self.mask
    }
}

/// Constraints for the query variables `vars` (ascending, global indices).
///
/// Frequencies are clamped into `[1/(2n), 1 - 1/(2n)]` and attributes are
/// renumbered to their position in `vars`. Order is by size, then
/// lexicographic, which is the round-robin order used when fitting.
pub fn build_constraints(collection: &ItemsetCollection, vars: &[usize]) -> Result<Vec<Constraint>> {
    if vars.len() > crate::query::MAX_VARS {
        return Err(Error::VariableBound {
            found: vars.len(),
            bound: crate::query::MAX_VARS,
        });
    }
    let n = collection.n().max(1) as f64;
    let lo = 1.0 / (2.0 * n);
    let hi = 1.0 - lo;
    collection
        .restrict_to(vars)
        .into_iter()
        .map(|it| {
            let local = it
                .attrs
                .iter()
                .map(|a| vars.binary_search(a).expect("restricted to vars"))
                .collect();
            Constraint::new(local, (it.count as f64 / n).clamp(lo, hi))
        })
        .collect()
}

/// How constraint marginals are summed while fitting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EngineKind {
    BruteForce,
    BucketElimination,
    CliqueTree,
}

impl EngineKind {
    pub const ALL: [EngineKind; 3] = [
        EngineKind::BruteForce,
        EngineKind::BucketElimination,
        EngineKind::CliqueTree,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EngineKind::BruteForce => "brute_force",
            EngineKind::BucketElimination => "bucket_elimination",
            EngineKind::CliqueTree => "clique_tree",
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EngineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "brute_force" | "brute" => Ok(EngineKind::BruteForce),
            "bucket_elimination" | "bucket" => Ok(EngineKind::BucketElimination),
            "clique_tree" | "clique" => Ok(EngineKind::CliqueTree),
            other => Err(Error::InvalidArgument(format!("unknown engine {other:?}"))),
        }
    }
}

/// Per-query record of how a maxent estimate was produced.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    pub n_q: usize,
    pub engine: EngineKind,
    pub constraints: usize,
    pub sweeps: usize,
    pub converged: bool,
    pub terms_evaluated: u64,
    pub induced_width: usize,
    pub clique_count: usize,
    pub log_domain: bool,
    /// Largest disagreement between the two cliques' views of a separator
    /// marginal; zero outside the clique-tree engine.
    pub calibration_discrepancy: f64,
    pub wall_us: u64,
}

/// Options for [`maxent_query_prob`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QueryOptions {
    pub scaling: ScalingOptions,
    pub var_bound: usize,
}

impl Default for QueryOptions {
    fn default() -> Self {
        QueryOptions {
            scaling: ScalingOptions::default(),
            var_bound: DEFAULT_VAR_BOUND,
        }
    }
}

/// Estimates `P(q)` from a fresh maxent fit over the query's variables.
///
/// Conjunctive queries monitor and return their single cell; other queries
/// sum the fitted distribution over their satisfying assignments.
pub fn maxent_query_prob(
    collection: &ItemsetCollection,
    q: &BooleanQuery,
    engine: EngineKind,
    opts: &QueryOptions,
) -> Result<(f64, Diagnostics)> {
    q.check_range(collection.k())?;
    let start = Instant::now();
    let minterms = satisfying_assignments(q, opts.var_bound)?;
    let n_q = minterms.n_vars();
    let constraints = build_constraints(collection, &minterms.vars)?;
    let n_constraints = constraints.len();

    let (prob, fit, graph_stats, discrepancy) = match engine {
        EngineKind::BruteForce | EngineKind::BucketElimination => {
            let fit = iterative_scaling(constraints, n_q, &minterms.assignments, &opts.scaling, engine)?;
            let z = if minterms.assignments.len() > 1 {
                fit.factorization.partition(engine, fit.elimination_order.as_deref())
            } else {
                1.0
            };
            (fit.estimate / z, fit, None, 0.0)
        }
        EngineKind::CliqueTree => {
            let graph = build_graph(&constraints, n_q);
            let stats = (graph.induced_width(), graph.cliques().len());
            let model = fit_clique_tree(constraints, n_q, graph, &minterms.assignments, &opts.scaling)?;
            let disc = model.calibration_discrepancy();
            (model.fit.estimate, model.fit, Some(stats), disc)
        }
    };
    let wall_us = start.elapsed().as_micros() as u64;

    let (induced_width, clique_count) = graph_stats.unwrap_or_else(|| {
        let g = build_graph(fit.factorization.constraints(), n_q);
        (g.induced_width(), g.cliques().len())
    });
    let diag = Diagnostics {
        n_q,
        engine,
        constraints: n_constraints,
        sweeps: fit.sweeps,
        converged: fit.converged,
        terms_evaluated: fit.terms_evaluated,
        induced_width,
        clique_count,
        log_domain: fit.log_domain,
        calibration_discrepancy: discrepancy,
        wall_us,
    };
    Ok((prob.clamp(0.0, 1.0), diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::{Estimator, IndependenceModel};
    use crate::dataset::{generate_synthetic, SyntheticSpec};
    use crate::fixtures::six_attr_example;
    use crate::itemset::{mine_frequent, Itemset};
    use crate::query::generate_queries;

    #[test]
    fn six_attr_example_constraints() {
        let c = six_attr_example(1000);
        let cons = build_constraints(&c, &[0, 1, 2, 3, 4, 5]).unwrap();
        assert_eq!(cons.len(), 11);
        let none = build_constraints(&c, &[]).unwrap();
        assert!(none.is_empty());
        let sub = build_constraints(&c, &[2, 4]).unwrap();
        let attrs: Vec<&[usize]> = sub.iter().map(|c| c.attrs()).collect();
        assert_eq!(attrs, vec![&[0][..], &[1][..], &[0, 1][..]]);
    }

    #[test]
    fn frequencies_are_clamped() {
        let items = vec![Itemset::new(vec![0], 10), Itemset::new(vec![1], 0)];
        let c = ItemsetCollection::from_items(1, 2, 10, items).unwrap();
        let cons = build_constraints(&c, &[0, 1]).unwrap();
        assert_eq!(cons[0].freq(), 1.0 - 1.0 / 20.0);
        assert_eq!(cons[1].freq(), 1.0 / 20.0);
    }

    #[test]
    fn engine_names_round_trip() {
        for e in EngineKind::ALL {
            assert_eq!(e.to_string().parse::<EngineKind>().unwrap(), e);
        }
        assert!("gibbs".parse::<EngineKind>().is_err());
    }

    #[test]
    fn untouched_variables_are_uniform() {
        let c = ItemsetCollection::from_items(1, 10, 100, vec![Itemset::new(vec![0], 30)]).unwrap();
        let q: BooleanQuery = "3=1 & 4=0 & 7=1".parse().unwrap();
        let any: BooleanQuery = "(or (= 3 1) (= 4 0))".parse().unwrap();
        for engine in EngineKind::ALL {
            let (p, d) = maxent_query_prob(&c, &q, engine, &QueryOptions::default()).unwrap();
            assert!((p - 0.125).abs() < 1e-12);
            assert!(d.converged);
            assert_eq!(d.constraints, 0);
            let (p, _) = maxent_query_prob(&c, &any, engine, &QueryOptions::default()).unwrap();
            assert!((p - 0.75).abs() < 1e-12);
        }
    }

    #[test]
    fn singletons_only_match_independence() {
        let marginal = vec![0.1, 0.35, 0.6, 0.05, 0.22, 0.5];
        let n = 1_000_000;
        let items = marginal
            .iter()
            .enumerate()
            .map(|(a, p)| Itemset::new(vec![a], (p * n as f64) as u64))
            .collect();
        let c = ItemsetCollection::from_items(1, 6, n, items).unwrap();
        let ind = IndependenceModel::from_marginals(marginal, n).unwrap();
        let q: BooleanQuery = "0=1 & 1=0 & 2=1 & 4=0 & 5=1".parse().unwrap();
        for engine in EngineKind::ALL {
            let (p, _) = maxent_query_prob(&c, &q, engine, &QueryOptions::default()).unwrap();
            let expected = ind.prob(&q).unwrap();
            assert!(
                (p - expected).abs() < 1e-6 * expected.max(1e-3),
                "{engine}: {p} vs {expected}"
            );
        }
    }

    #[test]
    fn bound_exceeded() {
        let c = six_attr_example(100);
        let q = BooleanQuery::and((0..6).map(|a| BooleanQuery::lit(a, true)).collect());
        let opts = QueryOptions {
            var_bound: 5,
            ..QueryOptions::default()
        };
        assert!(matches!(
            maxent_query_prob(&c, &q, EngineKind::BruteForce, &opts),
            Err(Error::VariableBound { .. })
        ));
    }

    #[test]
    fn beats_independence_on_correlated_data() {
        let data = generate_synthetic(&SyntheticSpec::correlated_default()).unwrap();
        let stats = data.compute_stats().unwrap();
        let items = mine_frequent(&data, 50).unwrap();
        let ind = IndependenceModel::build(&data).unwrap();
        let n = data.n() as f64;
        let (mut err_me, mut err_ind) = (0.0, 0.0);
        for q in generate_queries(&stats, 6, 200, false, 17).unwrap() {
            let exact = data.exact_count(&q).unwrap() as f64;
            if exact == 0.0 {
                continue;
            }
            let (p, _) = maxent_query_prob(&items, &q, EngineKind::CliqueTree, &QueryOptions::default()).unwrap();
            err_me += (p * n - exact).abs() / exact;
            err_ind += (ind.prob(&q).unwrap() * n - exact).abs() / exact;
        }
        assert!(err_me < err_ind, "{err_me} vs {err_ind}");
    }
}
