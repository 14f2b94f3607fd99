//! Clique-tree engine.
//!
//! The fitted distribution is held as calibrated clique marginals,
//! `P(x) = prod_C P_C(x_C) / prod_S P_S(x_S)`. Each constraint belongs to the
//! smallest clique that contains it. A scaling step reads `S_j` from that
//! clique's table alone, rescales the table, and pushes the separator ratio
//! changes outwards so every other clique stays consistent.

use super::factorization::MaxentFactorization;
use super::graph::ConstraintGraph;
use super::scaling::{check_sum, settled, update_factors, FitResult, ScalingOptions};
use super::Constraint;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct CliqueTreeModel {
    pub fit: FitResult,
    graph: ConstraintGraph,
    tables: Vec<Vec<f64>>,
    separators: Vec<Vec<f64>>,
    /// Per tree edge, the separator index of every entry of clique `a` and
    /// of clique `b`.
    projections: Vec<[Vec<usize>; 2]>,
    neighbours: Vec<Vec<(usize, usize)>>,
    owner: Vec<usize>,
}

/// Index into a table over `vars` for the assignment `x`.
#[inline]
fn gather(vars: &[usize], x: u32) -> usize {
    vars.iter()
        .enumerate()
        .fold(0, |idx, (i, &v)| idx | ((x >> v & 1) as usize) << i)
}

fn scatter(vars: &[usize], idx: usize) -> u32 {
    vars.iter()
        .enumerate()
        .fold(0, |x, (i, &v)| x | ((idx >> i & 1) as u32) << v)
}

fn marginal(table: &[f64], proj: &[usize], size: usize) -> Vec<f64> {
    let mut out = vec![0.0; size];
    for (p, &s) in table.iter().zip(proj) {
        out[s] += p;
    }
    out
}

/// Fits the constraints on the clique tree of `graph`, monitoring the
/// probability of `target_cells` exactly as plain iterative scaling does.
pub fn fit_clique_tree(
    constraints: Vec<Constraint>,
    n_vars: usize,
    graph: ConstraintGraph,
    target_cells: &[u32],
    opts: &ScalingOptions,
) -> Result<CliqueTreeModel> {
    let cliques = graph.cliques();
    let masks = graph.clique_masks();

    let owner = constraints
        .iter()
        .enumerate()
        .map(|(j, c)| {
            (0..cliques.len())
                .filter(|&i| masks[i] & c.mask() == c.mask())
                .min_by_key(|&i| cliques[i].len())
                .ok_or_else(|| Error::InvalidArgument(format!("constraint {j} fits no clique")))
        })
        .collect::<Result<Vec<usize>>>()?;

    let tables = cliques
        .iter()
        .map(|c| vec![1.0 / (1u64 << c.len()) as f64; 1 << c.len()])
        .collect();
    let separators = graph
        .tree_edges()
        .iter()
        .map(|e| vec![1.0 / (1u64 << e.separator.len()) as f64; 1 << e.separator.len()])
        .collect();
    let projections = graph
        .tree_edges()
        .iter()
        .map(|e| {
            [e.a, e.b].map(|c| {
                (0..1usize << cliques[c].len())
                    .map(|idx| gather(&e.separator, scatter(&cliques[c], idx)))
                    .collect()
            })
        })
        .collect();
    let mut neighbours = vec![Vec::new(); cliques.len()];
    for (k, e) in graph.tree_edges().iter().enumerate() {
        neighbours[e.a].push((k, e.b));
        neighbours[e.b].push((k, e.a));
    }
    // constraint masks re-expressed in each owner's table index
    let local_masks: Vec<usize> = constraints
        .iter()
        .zip(&owner)
        .map(|(c, &o)| gather(&cliques[o], c.mask()))
        .collect();

    let mut model = CliqueTreeModel {
        fit: FitResult {
            factorization: MaxentFactorization::uniform(n_vars, constraints),
            estimate: 0.0,
            sweeps: 0,
            converged: false,
            terms_evaluated: 0,
            log_domain: false,
            elimination_order: Some(graph.elimination_order().to_vec()),
        },
        graph,
        tables,
        separators,
        projections,
        neighbours,
        owner,
    };

    let m = local_masks.len();
    let mut prev = model.cells_prob(target_cells);
    model.fit.converged = m == 0;
    while !model.fit.converged && model.fit.sweeps < opts.max_sweeps {
        model.fit.sweeps += 1;
        for (j, &lm) in local_masks.iter().enumerate() {
            let o = model.owner[j];
            let s = model.owner_sum(o, lm);
            model.fit.terms_evaluated += 1 << (model.graph.cliques()[o].len() - lm.count_ones() as usize);
            check_sum(j, s).map_err(|e| Error::Clique {
                clique: o,
                source: Box::new(e),
            })?;
            let f = model.fit.factorization.constraints()[j].freq();
            let (a, b) = update_factors(f, s);
            model.fit.factorization.scale(j, a, b);
            for (idx, p) in model.tables[o].iter_mut().enumerate() {
                *p *= if idx & lm == lm { a * b } else { b };
            }
            model.propagate(o);
        }
        let cur = model.cells_prob(target_cells);
        if settled(prev, cur, opts.epsilon) {
            model.fit.converged = (0..m).all(|j| {
                let f = model.fit.factorization.constraints()[j].freq();
                (model.owner_sum(model.owner[j], local_masks[j]) - f).abs() <= opts.constraint_tol * f
            });
        }
        prev = cur;
    }
    model.fit.estimate = prev;
    model.fit.log_domain = !model.fit.factorization.is_linear();
    Ok(model)
}

impl CliqueTreeModel {
    fn owner_sum(&self, o: usize, local_mask: usize) -> f64 {
        self.tables[o]
            .iter()
            .enumerate()
            .filter(|&(idx, _)| idx & local_mask == local_mask)
            .map(|(_, p)| p)
            .sum()
    }

    /// Rescales every clique reachable from `from` so that it agrees with
    /// the updated table of `from` on their shared separators.
    fn propagate(&mut self, from: usize) {
        let mut stack = vec![(from, usize::MAX)];
        while let Some((c, via)) = stack.pop() {
            for i in 0..self.neighbours[c].len() {
                let (k, next) = self.neighbours[c][i];
                if k == via {
                    continue;
                }
                let edge = &self.graph.tree_edges()[k];
                let (src, dst) = if edge.a == c { (0, 1) } else { (1, 0) };
                let updated = marginal(&self.tables[c], &self.projections[k][src], self.separators[k].len());
                let ratio: Vec<f64> = updated.iter().zip(&self.separators[k]).map(|(u, o)| u / o).collect();
                for (p, &s) in self.tables[next].iter_mut().zip(&self.projections[k][dst]) {
                    *p *= ratio[s];
                }
                self.separators[k] = updated;
                stack.push((next, k));
            }
        }
    }

    pub fn graph(&self) -> &ConstraintGraph {
        &self.graph
    }

    /// Marginal table of clique `i`, indexed by the bits of its variables
    /// in ascending order.
    pub fn clique_table(&self, i: usize) -> &[f64] {
        &self.tables[i]
    }

    /// Clique that owns each constraint.
    pub fn owners(&self) -> &[usize] {
        &self.owner
    }

    /// `P(x)` assembled from the clique and separator tables.
    pub fn joint_eval(&self, x: u32) -> f64 {
        let cliques = self.graph.cliques();
        let mut p: f64 = (0..cliques.len())
            .map(|i| self.tables[i][gather(&cliques[i], x)])
            .product();
        for (k, e) in self.graph.tree_edges().iter().enumerate() {
            p /= self.separators[k][gather(&e.separator, x)];
        }
        p
    }

    pub fn cells_prob(&self, cells: &[u32]) -> f64 {
        cells.iter().map(|&x| self.joint_eval(x)).sum()
    }

    /// Largest gap between the separator marginals implied by the two
    /// cliques of a tree edge.
    pub fn calibration_discrepancy(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, e) in self.graph.tree_edges().iter().enumerate() {
            let size = self.separators[k].len();
            let a = marginal(&self.tables[e.a], &self.projections[k][0], size);
            let b = marginal(&self.tables[e.b], &self.projections[k][1], size);
            for (x, y) in a.iter().zip(&b) {
                worst = worst.max((x - y).abs());
            }
        }
        worst
    }
}
