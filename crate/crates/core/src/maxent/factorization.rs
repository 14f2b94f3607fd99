use super::bucket::eliminate;
use super::{Constraint, EngineKind};
use crate::error::{Error, Result};

/// `ln(1e300)`: parameters whose log magnitude exceeds this switch
/// evaluation to the log domain.
pub const LOG_RANGE: f64 = 690.775_527_898_213_7;

/// Product-form distribution `mu0 * prod_j mu_j^[x satisfies c_j]` over
/// `n_vars` local binary variables.
///
/// Parameters are kept as logarithms with a linear-domain cache; the cache
/// is used while every parameter lies in `[1e-300, 1e300]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxentFactorization {
    n_vars: usize,
    constraints: Vec<Constraint>,
    log_mu0: f64,
    log_mu: Vec<f64>,
    mu0: f64,
    mu: Vec<f64>,
    linear: bool,
}

impl MaxentFactorization {
    /// The uniform starting point: `mu0 = 2^-n`, every `mu_j = 1`.
    pub fn uniform(n_vars: usize, constraints: Vec<Constraint>) -> Self {
        let m = constraints.len();
        let log_mu0 = -(n_vars as f64) * std::f64::consts::LN_2;
        MaxentFactorization {
            n_vars,
            constraints,
            log_mu0,
            log_mu: vec![0.0; m],
            mu0: log_mu0.exp(),
            mu: vec![1.0; m],
            linear: true,
        }
    }

    pub fn from_params(n_vars: usize, constraints: Vec<Constraint>, mu0: f64, mu: Vec<f64>) -> Result<Self> {
        if mu.len() != constraints.len() {
            return Err(Error::InvalidArgument("one mu per constraint required".into()));
        }
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(mu0) || !mu.iter().all(|&m| positive(m)) {
            return Err(Error::InvalidArgument("parameters must be positive and finite".into()));
        }
        if constraints.iter().any(|c| c.mask() >> n_vars != 0) {
            return Err(Error::InvalidArgument("constraint outside the variable range".into()));
        }
        let mut f = Self::uniform(n_vars, constraints);
        f.log_mu0 = mu0.ln();
        f.log_mu = mu.iter().map(|m| m.ln()).collect();
        f.refresh();
        Ok(f)
    }

    /// Builds directly from log parameters, for values beyond `f64` range.
    pub fn from_log_params(
        n_vars: usize,
        constraints: Vec<Constraint>,
        log_mu0: f64,
        log_mu: Vec<f64>,
    ) -> Result<Self> {
        if log_mu.len() != constraints.len() || !log_mu0.is_finite() || log_mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "one finite log mu per constraint required".into(),
            ));
        }
        let mut f = Self::uniform(n_vars, constraints);
        f.log_mu0 = log_mu0;
        f.log_mu = log_mu;
        f.refresh();
        Ok(f)
    }

    fn refresh(&mut self) {
        self.linear = self.log_mu0.abs() <= LOG_RANGE && self.log_mu.iter().all(|v| v.abs() <= LOG_RANGE);
        self.mu0 = self.log_mu0.exp();
        for (m, l) in self.mu.iter_mut().zip(&self.log_mu) {
            *m = l.exp();
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn log_mu0(&self) -> f64 {
        self.log_mu0
    }

    pub fn log_mu(&self) -> &[f64] {
        &self.log_mu
    }

    /// False once any parameter has left `[1e-300, 1e300]`.
    pub fn is_linear(&self) -> bool {
        self.linear
    }

    /// Multiplies `mu_j` by `a` and `mu0` by `b`.
    pub(crate) fn scale(&mut self, j: usize, a: f64, b: f64) {
        self.log_mu0 += b.ln();
        self.log_mu[j] += a.ln();
        self.mu0 = self.log_mu0.exp();
        self.mu[j] = self.log_mu[j].exp();
        // sticky: once out of range, the rest of the fit stays in log mode
        self.linear = self.linear && self.log_mu0.abs() <= LOG_RANGE && self.log_mu[j].abs() <= LOG_RANGE;
    }

    /// `P(x)` for a full assignment `x` (bit `i` = variable `i`).
    #[inline]
    pub fn product_eval(&self, x: u32) -> f64 {
        if !self.linear {
            return self.log_product_eval(x).exp();
        }
        let mut p = self.mu0;
        for (c, &m) in self.constraints.iter().zip(&self.mu) {
            if c.satisfied_by(x) {
                p *= m;
            }
        }
        p
    }

    /// `ln P(x)`.
    pub fn log_product_eval(&self, x: u32) -> f64 {
        let mut l = self.log_mu0;
        for (c, &m) in self.constraints.iter().zip(&self.log_mu) {
            if c.satisfied_by(x) {
                l += m;
            }
        }
        l
    }

    /// Sum of `P(x)` over the listed full assignments.
    pub fn cells_prob(&self, cells: &[u32]) -> f64 {
        cells.iter().map(|&x| self.product_eval(x)).sum()
    }

    /// Total mass over all `2^n` assignments.
    pub fn partition(&self, engine: EngineKind, order: Option<&[usize]>) -> f64 {
        match (engine, order) {
            (EngineKind::BucketElimination, Some(order)) if self.linear => eliminate(self, 0, order).0,
            _ => brute_sum(self, 0, (1u32 << self.n_vars) - 1).0,
        }
    }
}

/// Sum of `P(x)` over assignments with every bit of `fixed` set, by
/// enumeration of the remaining `free` bits. Returns the value and the
/// number of terms. Switches to log-sum-exp when the factorization is out
/// of linear range.
pub(crate) fn brute_sum(fact: &MaxentFactorization, fixed: u32, full: u32) -> (f64, u64) {
    let free = full & !fixed;
    let terms = 1u64 << free.count_ones();
    if fact.is_linear() {
        let mut total = 0.0;
        let mut sub = free;
        loop {
            total += fact.product_eval(fixed | sub);
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & free;
        }
        (total, terms)
    } else {
        let mut logs = Vec::with_capacity(terms as usize);
        let mut sub = free;
        loop {
            logs.push(fact.log_product_eval(fixed | sub));
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & free;
        }
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = logs.iter().map(|l| (l - max).exp()).sum();
        ((max + s.ln()).exp(), terms)
    }
}
