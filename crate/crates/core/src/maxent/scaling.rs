//! Iterative scaling over the product form.

use super::bucket::bucket_constraint_sum;
use super::factorization::{brute_sum, MaxentFactorization};
use super::graph::build_graph;
use super::{Constraint, EngineKind};
use crate::error::{Error, Result};

/// Stopping rule for iterative scaling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingOptions {
    /// Relative change in the monitored probability below which a sweep
    /// counts as settled.
    pub epsilon: f64,
    pub max_sweeps: usize,
    /// After settling, every constraint must hold to `constraint_tol * f_j`
    /// or sweeping continues.
    pub constraint_tol: f64,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        ScalingOptions {
            epsilon: 1e-4,
            max_sweeps: 200,
            constraint_tol: 1e-3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SumResult {
    pub value: f64,
    pub terms: u64,
}

/// `S_j`, the model probability that constraint `j` is satisfied.
///
/// Bucket elimination needs an order and a factorization still in linear
/// range; otherwise the sum falls back to log-domain enumeration.
pub fn constraint_sum(
    fact: &MaxentFactorization,
    j: usize,
    engine: EngineKind,
    order: Option<&[usize]>,
) -> Result<SumResult> {
    let mask = fact.constraints()[j].mask();
    let full = (1u32 << fact.n_vars()) - 1;
    let (value, terms) = match (engine, order) {
        (EngineKind::CliqueTree, _) => {
            return Err(Error::InvalidArgument(
                "clique-tree sums are taken from the clique tables".into(),
            ))
        }
        (EngineKind::BucketElimination, Some(order)) if fact.is_linear() => bucket_constraint_sum(fact, j, order),
        _ => brute_sum(fact, mask, full),
    };
    Ok(SumResult { value, terms })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub factorization: MaxentFactorization,
    /// Probability of the monitored cells at the last sweep.
    pub estimate: f64,
    pub sweeps: usize,
    pub converged: bool,
    /// Terms summed while computing `S_j` across all sweeps.
    pub terms_evaluated: u64,
    pub log_domain: bool,
    pub elimination_order: Option<Vec<usize>>,
}

/// Scaling factors `(a, b)` that set constraint `j` to its target: `mu_j`
/// is multiplied by `a` and `mu0` by `b`.
pub(crate) fn update_factors(f: f64, s: f64) -> (f64, f64) {
    (f * (1.0 - s) / (s * (1.0 - f)), (1.0 - f) / (1.0 - s))
}

pub(crate) fn check_sum(j: usize, s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::DegenerateConstraint { index: j, sum: s })
    }
}

pub(crate) fn settled(prev: f64, cur: f64, epsilon: f64) -> bool {
    if prev == 0.0 {
        cur == 0.0
    } else {
        ((cur - prev) / prev).abs() < epsilon
    }
}

/// Fits the product form to `constraints` over `n_vars` variables, sweeping
/// the constraints round-robin in the given order until the probability of
/// `target_cells` settles and every constraint holds.
///
/// The fit starts from the uniform distribution and each step keeps the
/// total mass at one.
pub fn iterative_scaling(
    constraints: Vec<Constraint>,
    n_vars: usize,
    target_cells: &[u32],
    opts: &ScalingOptions,
    engine: EngineKind,
) -> Result<FitResult> {
    if engine == EngineKind::CliqueTree {
        return Err(Error::InvalidArgument(
            "use fit_clique_tree for the clique-tree engine".into(),
        ));
    }
    let order = (engine == EngineKind::BucketElimination)
        .then(|| build_graph(&constraints, n_vars).elimination_order().to_vec());
    let mut fact = MaxentFactorization::uniform(n_vars, constraints);
    let m = fact.constraints().len();

    let mut prev = fact.cells_prob(target_cells);
    let mut sweeps = 0;
    let mut converged = m == 0;
    let mut terms_evaluated = 0u64;
    while !converged && sweeps < opts.max_sweeps {
        sweeps += 1;
        for j in 0..m {
            let s = constraint_sum(&fact, j, engine, order.as_deref())?;
            terms_evaluated += s.terms;
            check_sum(j, s.value)?;
            let (a, b) = update_factors(fact.constraints()[j].freq(), s.value);
            fact.scale(j, a, b);
        }
        let cur = fact.cells_prob(target_cells);
        if settled(prev, cur, opts.epsilon) {
            converged = constraints_hold(&fact, engine, order.as_deref(), opts.constraint_tol)?;
        }
        prev = cur;
    }

    Ok(FitResult {
        estimate: prev,
        sweeps,
        converged,
        terms_evaluated,
        log_domain: !fact.is_linear(),
        elimination_order: order,
        factorization: fact,
    })
}

fn constraints_hold(fact: &MaxentFactorization, engine: EngineKind, order: Option<&[usize]>, tol: f64) -> Result<bool> {
    for (j, c) in fact.constraints().iter().enumerate() {
        let s = constraint_sum(fact, j, engine, order)?.value;
        if (s - c.freq()).abs() > tol * c.freq() {
            return Ok(false);
        }
    }
    Ok(true)
}
