//! Selectivity estimation for Boolean count queries over sparse binary
//! transaction data.
//!
//! Three estimators are provided: an independence model, a Chow-Liu
//! dependence tree, and a per-query maximum-entropy model fitted to the
//! frequent itemsets that mention the query's attributes. The maxent model
//! can be fitted by brute force, bucket elimination, or a clique tree.

pub mod baseline;
pub mod bench;
pub mod dataset;
pub mod error;
pub mod fixtures;
pub mod format;
pub mod itemset;
pub mod maxent;
pub mod query;

pub use baseline::{BaselineModel, ChowLiuTree, Estimator, IndependenceModel};
pub use bench::{
    emit_report, empirical_relative_error, run_benchmark, BenchConfig, BenchResult, DataSource, QueryRow, SummaryRow,
};
pub use dataset::{generate_synthetic, DatasetStats, SparseDataset, SyntheticSpec};
pub use error::{Error, Result};
pub use itemset::{mine_frequent, Itemset, ItemsetCollection};
pub use maxent::{maxent_query_prob, Diagnostics, EngineKind, QueryOptions, ScalingOptions};
pub use query::{generate_queries, query_vars, satisfying_assignments, BooleanQuery, ConjunctiveQuery, Literal};
