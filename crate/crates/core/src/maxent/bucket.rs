//! Bucket elimination for the constraint sums.
//!
//! Every constraint contributes a factor over its variables that equals
//! `mu_j` when they are all 1 and 1 otherwise. Fixing the evidence bits
//! shrinks or absorbs those factors; the remaining free variables are then
//! summed out one at a time along the elimination order.
//!
//! The reported term count is the number of intermediate table entries
//! formed, i.e. the partial sums the elimination writes down. It is
//! always strictly below the `2^free` terms of plain enumeration.

use super::factorization::MaxentFactorization;

enum Factor {
    /// `mu` when every bit of `mask` is set, 1 otherwise.
    Indicator { mask: u32, mu: f64 },
    /// Intermediate message over `scope`, bit `i` of the index = `scope[i]`.
    Table { scope: Vec<usize>, table: Vec<f64> },
}

impl Factor {
    fn scope_mask(&self) -> u32 {
        match self {
            Factor::Indicator { mask, .. } => *mask,
            Factor::Table { scope, .. } => scope.iter().fold(0, |m, &v| m | 1 << v),
        }
    }

    #[inline]
    fn value(&self, x: u32) -> f64 {
        match self {
            Factor::Indicator { mask, mu } => {
                if x & mask == *mask {
                    *mu
                } else {
                    1.0
                }
            }
            Factor::Table { scope, table } => {
                let mut idx = 0usize;
                for (i, &v) in scope.iter().enumerate() {
                    idx |= ((x >> v & 1) as usize) << i;
                }
                table[idx]
            }
        }
    }
}

/// Sum of `P(x)` over assignments with every bit of `evidence` set.
/// `order` must list every variable; evidence variables are skipped.
pub(crate) fn eliminate(fact: &MaxentFactorization, evidence: u32, order: &[usize]) -> (f64, u64) {
    debug_assert_eq!(order.len(), fact.n_vars());
    let mut constant = fact.mu0();
    let mut factors = Vec::with_capacity(fact.constraints().len());
    for (c, &m) in fact.constraints().iter().zip(fact.mu()) {
        let rest = c.mask() & !evidence;
        if rest == 0 {
            constant *= m;
        } else {
            factors.push(Factor::Indicator { mask: rest, mu: m });
        }
    }

    let mut terms = 0u64;
    let mut bucket = Vec::new();
    for &v in order {
        if evidence >> v & 1 == 1 {
            continue;
        }
        bucket.clear();
        let mut i = 0;
        while i < factors.len() {
            if factors[i].scope_mask() >> v & 1 == 1 {
                bucket.push(factors.swap_remove(i));
            } else {
                i += 1;
            }
        }
        if bucket.is_empty() {
            // unconstrained variable: both values contribute equally
            constant *= 2.0;
            terms += 1;
            continue;
        }
        let scope_mask = bucket.iter().fold(0u32, |m, f| m | f.scope_mask()) & !(1 << v);
        let scope: Vec<usize> = (0..32).filter(|&u| scope_mask >> u & 1 == 1).collect();

        let mut table = vec![0.0; 1 << scope.len()];
        for (idx, entry) in table.iter_mut().enumerate() {
            let mut x = 0u32;
            for (i, &u) in scope.iter().enumerate() {
                x |= ((idx >> i & 1) as u32) << u;
            }
            let mut off = 1.0;
            let mut on = 1.0;
            for f in &bucket {
                off *= f.value(x);
                on *= f.value(x | 1 << v);
            }
            *entry = off + on;
        }
        terms += table.len() as u64;
        if scope.is_empty() {
            constant *= table[0];
        } else {
            factors.push(Factor::Table { scope, table });
        }
    }
    debug_assert!(factors.is_empty());
    (constant, terms)
}

/// `S_j` by bucket elimination, with the number of terms formed.
pub fn bucket_constraint_sum(fact: &MaxentFactorization, j: usize, order: &[usize]) -> (f64, u64) {
    eliminate(fact, fact.constraints()[j].mask(), order)
}
