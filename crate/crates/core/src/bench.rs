//! Benchmark harness: runs every model over a seeded query workload and
//! writes per-query and summary CSVs.
//!
//! The summary has one row per (model, engine, T, n_q). Baseline models have
//! no engine or threshold; those columns read `-`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::baseline::{ChowLiuTree, Estimator, IndependenceModel};
use crate::dataset::{generate_synthetic, SparseDataset, SyntheticSpec};
use crate::error::{Error, Result};
use crate::format::sig6;
use crate::itemset::mine_frequent;
use crate::maxent::{maxent_query_prob, EngineKind, QueryOptions, ScalingOptions};
use crate::query::{generate_queries, BooleanQuery, DEFAULT_VAR_BOUND};

pub const SUMMARY_HEADER: &str =
    "model,engine,T,n_q,mean_rel_error,mean_online_us,offline_ms,memory_params,n_queries,n_excluded,n_nonconverged";

pub const QUERY_HEADER: &str = "query_id,model,engine,T,n_q,sweeps,converged,terms_evaluated,induced_width,clique_count,estimate,exact,rel_error,wall_us";

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    File(PathBuf),
    Synthetic(SyntheticSpec),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub source: DataSource,
    pub thresholds: Vec<u64>,
    pub query_sizes: Vec<usize>,
    pub queries_per_size: usize,
    pub arbitrary: bool,
    pub engines: Vec<EngineKind>,
    pub epsilon: f64,
    pub max_sweeps: usize,
    pub seed: u64,
    pub var_bound: usize,
    /// Add every singleton to the mined itemsets, frequent or not.
    pub all_singletons: bool,
    pub output: PathBuf,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            source: DataSource::Synthetic(SyntheticSpec::correlated_default()),
            thresholds: vec![15, 30, 50, 60, 100, 200],
            query_sizes: vec![4, 6, 8],
            queries_per_size: 200,
            arbitrary: false,
            engines: EngineKind::ALL.to_vec(),
            epsilon: ScalingOptions::default().epsilon,
            max_sweeps: ScalingOptions::default().max_sweeps,
            seed: 7,
            var_bound: DEFAULT_VAR_BOUND,
            all_singletons: false,
            output: PathBuf::from("bench-out"),
        }
    }
}

fn parse_list<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::parse(line, format!("bad {key} entry {s:?}")))
        })
        .collect()
}

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::parse(line, format!("bad value {value:?} for {key}")))
}

/// `0-3;4-7` or `0,1,2;5,6`: blocks separated by `;`, each a range or a
/// comma list.
fn parse_blocks(line: usize, value: &str) -> Result<Vec<Vec<usize>>> {
    value
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|b| match b.split_once('-') {
            Some((lo, hi)) => {
                let lo: usize = parse_value(line, "blocks", lo.trim())?;
                let hi: usize = parse_value(line, "blocks", hi.trim())?;
                Ok((lo..=hi).collect())
            }
            None => parse_list(line, "blocks", b),
        })
        .collect()
}

/// Parses a block list such as `0-3;4-7` or `0,1,2;5,6`.
pub fn parse_block_spec(value: &str) -> Result<Vec<Vec<usize>>> {
    parse_blocks(1, value)
}

impl BenchConfig {
    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    ///
    /// Keys: `data`, `k`, `n`, `base_density`, `blocks`, `block_strength`,
    /// `data_seed`, `thresholds`, `query_sizes`, `queries_per_size`,
    /// `arbitrary`, `engines`, `epsilon`, `max_sweeps`, `seed`, `var_bound`,
    /// `all_singletons`, `output`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = BenchConfig::default();
        let mut spec = SyntheticSpec::correlated_default();
        let mut file = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::parse(line, "expected key=value"))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "data" => file = Some(PathBuf::from(value)),
                "k" => spec.k = parse_value(line, key, value)?,
                "n" => spec.n = parse_value(line, key, value)?,
                "base_density" => spec.base_density = parse_value(line, key, value)?,
                "blocks" => spec.blocks = parse_blocks(line, value)?,
                "block_strength" => spec.block_strength = parse_value(line, key, value)?,
                "data_seed" => spec.seed = parse_value(line, key, value)?,
                "thresholds" => cfg.thresholds = parse_list(line, key, value)?,
                "query_sizes" => cfg.query_sizes = parse_list(line, key, value)?,
                "queries_per_size" => cfg.queries_per_size = parse_value(line, key, value)?,
                "arbitrary" => cfg.arbitrary = parse_value(line, key, value)?,
                "engines" => cfg.engines = parse_list(line, key, value)?,
                "epsilon" => cfg.epsilon = parse_value(line, key, value)?,
                "max_sweeps" => cfg.max_sweeps = parse_value(line, key, value)?,
                "seed" => cfg.seed = parse_value(line, key, value)?,
                "var_bound" => cfg.var_bound = parse_value(line, key, value)?,
                "all_singletons" => cfg.all_singletons = parse_value(line, key, value)?,
                "output" => cfg.output = PathBuf::from(value),
                other => return Err(Error::parse(line, format!("unknown key {other:?}"))),
            }
        }
        cfg.source = match file {
            Some(path) => DataSource::File(path),
            None => DataSource::Synthetic(spec),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.into()));
        if self.thresholds.iter().any(|&t| t < 1) {
            return bad("thresholds must be at least 1");
        }
        if self.query_sizes.iter().any(|&s| s < 1 || s > self.var_bound) {
            return bad("query sizes must lie in 1..=var_bound");
        }
        if self.queries_per_size < 1 {
            return bad("queries_per_size must be at least 1");
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return bad("epsilon must be positive");
        }
        Ok(())
    }

    fn load_data(&self) -> Result<SparseDataset> {
        match &self.source {
            DataSource::File(path) => SparseDataset::load(path),
            DataSource::Synthetic(spec) => generate_synthetic(spec),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub model: String,
    pub engine: Option<EngineKind>,
    pub threshold: Option<u64>,
    pub n_q: usize,
    /// NaN when every query of the cell was excluded.
    pub mean_rel_error: f64,
    pub mean_online_us: f64,
    pub offline_ms: f64,
    pub memory_params: u64,
    pub n_queries: usize,
    pub n_excluded: usize,
    pub n_nonconverged: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueryRow {
    pub query_id: usize,
    pub model: String,
    pub engine: Option<EngineKind>,
    pub threshold: Option<u64>,
    pub n_q: usize,
    /// Maxent only: sweeps, converged, terms, induced width, cliques.
    pub fit: Option<(usize, bool, u64, usize, usize)>,
    /// Estimated count, `n * P(q)`.
    pub estimate: f64,
    pub exact: u64,
    /// `None` for queries with a zero exact count.
    pub rel_error: Option<f64>,
    pub wall_us: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchResult {
    pub summary: Vec<SummaryRow>,
    pub queries: Vec<QueryRow>,
}

impl BenchResult {
    pub fn cell(
        &self,
        model: &str,
        engine: Option<EngineKind>,
        threshold: Option<u64>,
        n_q: usize,
    ) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|r| r.model == model && r.engine == engine && r.threshold == threshold && r.n_q == n_q)
    }
}

/// Mean of `|estimate - exact| / exact`.
pub fn empirical_relative_error(estimates: &[f64], exacts: &[u64]) -> Result<f64> {
    if estimates.len() != exacts.len() {
        return Err(Error::InvalidArgument(
            "estimates and exact counts differ in length".into(),
        ));
    }
    if estimates.is_empty() {
        return Err(Error::InvalidArgument("no queries to average".into()));
    }
    let mut total = 0.0;
    for (id, (&e, &c)) in estimates.iter().zip(exacts).enumerate() {
        if c == 0 {
            return Err(Error::ZeroExactCount { id });
        }
        total += (e - c as f64).abs() / c as f64;
    }
    Ok(total / estimates.len() as f64)
}

struct Workload {
    n_q: usize,
    ids: Vec<usize>,
    queries: Vec<BooleanQuery>,
    exact: Vec<u64>,
}

struct Cell<'a> {
    model: &'a str,
    engine: Option<EngineKind>,
    threshold: Option<u64>,
    offline_ms: f64,
    memory_params: u64,
}

fn summarize(cell: &Cell, w: &Workload, rows: Vec<QueryRow>, out: &mut BenchResult) -> Result<()> {
    let (mut est, mut exact) = (Vec::new(), Vec::new());
    for r in &rows {
        if r.exact > 0 {
            est.push(r.estimate);
            exact.push(r.exact);
        }
    }
    let mean_rel_error = if est.is_empty() {
        f64::NAN
    } else {
        empirical_relative_error(&est, &exact)?
    };
    out.summary.push(SummaryRow {
        model: cell.model.to_string(),
        engine: cell.engine,
        threshold: cell.threshold,
        n_q: w.n_q,
        mean_rel_error,
        mean_online_us: rows.iter().map(|r| r.wall_us).sum::<f64>() / rows.len() as f64,
        offline_ms: cell.offline_ms,
        memory_params: cell.memory_params,
        n_queries: rows.len(),
        n_excluded: rows.len() - est.len(),
        n_nonconverged: rows.iter().filter(|r| matches!(r.fit, Some((_, false, ..)))).count(),
    });
    out.queries.extend(rows);
    Ok(())
}

fn rel_error(estimate: f64, exact: u64) -> Option<f64> {
    (exact > 0).then(|| (estimate - exact as f64).abs() / exact as f64)
}

fn run_baseline(model: &dyn Estimator, cell: &Cell, w: &Workload, n: f64, out: &mut BenchResult) -> Result<()> {
    let mut rows = Vec::with_capacity(w.queries.len());
    for ((q, &id), &exact) in w.queries.iter().zip(&w.ids).zip(&w.exact) {
        let start = Instant::now();
        let p = model.prob(q)?;
        let wall_us = start.elapsed().as_secs_f64() * 1e6;
        let estimate = p * n;
        rows.push(QueryRow {
            query_id: id,
            model: cell.model.to_string(),
            engine: None,
            threshold: None,
            n_q: w.n_q,
            fit: None,
            estimate,
            exact,
            rel_error: rel_error(estimate, exact),
            wall_us,
        });
    }
    summarize(cell, w, rows, out)
}

/// Runs the full workload. Timed sections run one at a time; only the
/// exact counts are computed in parallel.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchResult> {
    config.validate()?;
    let data = config.load_data()?;
    let stats = data.compute_stats()?;
    let n = data.n() as f64;

    let mut workloads = Vec::new();
    let mut next_id = 0;
    for &n_q in &config.query_sizes {
        let seed = config.seed.wrapping_add(n_q as u64);
        let queries = generate_queries(&stats, n_q, config.queries_per_size, config.arbitrary, seed)?;
        let exact = queries
            .par_iter()
            .map(|q| data.exact_count(q))
            .collect::<Result<Vec<u64>>>()?;
        let ids = (next_id..next_id + queries.len()).collect();
        next_id += queries.len();
        workloads.push(Workload {
            n_q,
            ids,
            queries,
            exact,
        });
    }

    let start = Instant::now();
    let independence = IndependenceModel::build(&data)?;
    let ind_ms = start.elapsed().as_secs_f64() * 1e3;
    let start = Instant::now();
    let chowliu = ChowLiuTree::build(&data)?;
    let cl_ms = start.elapsed().as_secs_f64() * 1e3;

    let mut out = BenchResult::default();
    for w in &workloads {
        let cell = Cell {
            model: "independence",
            engine: None,
            threshold: None,
            offline_ms: ind_ms,
            memory_params: independence.memory_params(),
        };
        run_baseline(&independence, &cell, w, n, &mut out)?;
        let cell = Cell {
            model: "chowliu",
            offline_ms: cl_ms,
            memory_params: chowliu.memory_params(),
            ..cell
        };
        run_baseline(&chowliu, &cell, w, n, &mut out)?;
    }

    let opts = QueryOptions {
        scaling: ScalingOptions {
            epsilon: config.epsilon,
            max_sweeps: config.max_sweeps,
            ..ScalingOptions::default()
        },
        var_bound: config.var_bound,
    };
    for &t in &config.thresholds {
        let start = Instant::now();
        let mut items = mine_frequent(&data, t)?;
        if config.all_singletons {
            items = items.with_all_singletons(&data);
        }
        let offline_ms = start.elapsed().as_secs_f64() * 1e3;
        for &engine in &config.engines {
            for w in &workloads {
                let cell = Cell {
                    model: "maxent",
                    engine: Some(engine),
                    threshold: Some(t),
                    offline_ms,
                    memory_params: items.memory_cost(),
                };
                let mut rows = Vec::with_capacity(w.queries.len());
                for ((q, &id), &exact) in w.queries.iter().zip(&w.ids).zip(&w.exact) {
                    let (p, d) = maxent_query_prob(&items, q, engine, &opts)?;
                    let estimate = p * n;
                    rows.push(QueryRow {
                        query_id: id,
                        model: "maxent".into(),
                        engine: Some(engine),
                        threshold: Some(t),
                        n_q: w.n_q,
                        fit: Some((
                            d.sweeps,
                            d.converged,
                            d.terms_evaluated,
                            d.induced_width,
                            d.clique_count,
                        )),
                        estimate,
                        exact,
                        rel_error: rel_error(estimate, exact),
                        wall_us: d.wall_us as f64,
                    });
                }
                summarize(&cell, w, rows, &mut out)?;
            }
        }
    }
    out.summary
        .sort_by_key(|r| (r.n_q, model_rank(&r.model), r.threshold, r.engine));
    out.queries
        .sort_by_key(|r| (r.query_id, model_rank(&r.model), r.threshold, r.engine));
    Ok(out)
}

fn model_rank(model: &str) -> usize {
    match model {
        "independence" => 0,
        "chowliu" => 1,
        _ => 2,
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

pub fn summary_csv(result: &BenchResult) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in &result.summary {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.model,
            opt(r.engine),
            opt(r.threshold),
            r.n_q,
            sig6(r.mean_rel_error),
            sig6(r.mean_online_us),
            sig6(r.offline_ms),
            r.memory_params,
            r.n_queries,
            r.n_excluded,
            r.n_nonconverged
        )
        .unwrap();
    }
    out
}

pub fn queries_csv(result: &BenchResult) -> String {
    let mut out = format!("{QUERY_HEADER}\n");
    for r in &result.queries {
        let fit = match r.fit {
            Some((sweeps, conv, terms, width, cliques)) => {
                format!("{sweeps},{},{terms},{width},{cliques}", u8::from(conv))
            }
            None => "-,-,-,-,-".into(),
        };
        writeln!(
            out,
            "{},{},{},{},{},{fit},{},{},{},{}",
            r.query_id,
            r.model,
            opt(r.engine),
            opt(r.threshold),
            r.n_q,
            sig6(r.estimate),
            r.exact,
            r.rel_error.map_or_else(|| "-".into(), sig6),
            sig6(r.wall_us)
        )
        .unwrap();
    }
    out
}

/// Writes `summary.csv` and `queries.csv` into the directory `dir`.
pub fn emit_report(result: &BenchResult, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, text) in [
        ("summary.csv", summary_csv(result)),
        ("queries.csv", queries_csv(result)),
    ] {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Reads a summary CSV as written by [`emit_report`].
pub fn parse_summary_csv(text: &str) -> Result<Vec<SummaryRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == SUMMARY_HEADER => {}
        _ => return Err(Error::parse(1, "missing summary header")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 11 {
            return Err(Error::parse(line_no, format!("expected 11 fields, found {}", f.len())));
        }
        let engine = match f[1] {
            "-" => None,
            e => Some(e.parse()?),
        };
        let threshold = match f[2] {
            "-" => None,
            t => Some(parse_value(line_no, "T", t)?),
        };
        rows.push(SummaryRow {
            model: f[0].to_string(),
            engine,
            threshold,
            n_q: parse_value(line_no, "n_q", f[3])?,
            mean_rel_error: parse_value(line_no, "mean_rel_error", f[4])?,
            mean_online_us: parse_value(line_no, "mean_online_us", f[5])?,
            offline_ms: parse_value(line_no, "offline_ms", f[6])?,
            memory_params: parse_value(line_no, "memory_params", f[7])?,
            n_queries: parse_value(line_no, "n_queries", f[8])?,
            n_excluded: parse_value(line_no, "n_excluded", f[9])?,
            n_nonconverged: parse_value(line_no, "n_nonconverged", f[10])?,
        });
    }
    Ok(rows)
}

/// `(model, engine, T)` to `n_q` to mean relative error.
pub type ErrorTable = BTreeMap<(String, Option<EngineKind>, Option<u64>), BTreeMap<usize, f64>>;

/// Groups summary rows by `(model, engine, T)`, mapping `n_q` to the mean
/// relative error.
pub fn error_table(result: &BenchResult) -> ErrorTable {
    let mut table: BTreeMap<_, BTreeMap<_, _>> = BTreeMap::new();
    for r in &result.summary {
        table
            .entry((r.model.clone(), r.engine, r.threshold))
            .or_default()
            .insert(r.n_q, r.mean_rel_error);
    }
    table
}
