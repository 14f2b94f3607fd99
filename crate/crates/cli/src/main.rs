use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use qsel_core::baseline::{BaselineModel, ChowLiuTree, IndependenceModel};
use qsel_core::bench::{emit_report, parse_block_spec, run_benchmark, BenchConfig};
use qsel_core::dataset::{generate_synthetic, SparseDataset, SyntheticSpec};
use qsel_core::format::sig6;
use qsel_core::itemset::{mine_frequent, ItemsetCollection};
use qsel_core::maxent::{maxent_query_prob, EngineKind, QueryOptions, ScalingOptions};
use qsel_core::query::{generate_queries, BooleanQuery, DEFAULT_VAR_BOUND};

#[derive(Parser)]
#[command(name = "qsel", version, about = "Selectivity estimation for sparse binary data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    Independence,
    Chowliu,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a block-correlated synthetic dataset.
    GenData {
        #[arg(long, default_value_t = 20)]
        k: usize,
        #[arg(long, default_value_t = 5000)]
        n: usize,
        #[arg(long, default_value_t = 0.05)]
        density: f64,
        /// Blocks separated by `;`, each a range `a-b` or a list `a,b,c`.
        #[arg(long, default_value = "0-3;4-7;8-11")]
        blocks: String,
        #[arg(long, default_value_t = 0.8)]
        strength: f64,
        #[arg(long, default_value_t = 20010101)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Print dataset statistics.
    Stats {
        data: PathBuf,
        /// Also list every attribute's marginal.
        #[arg(long)]
        marginals: bool,
    },
    /// Mine the itemsets with count >= T.
    Mine {
        data: PathBuf,
        #[arg(short = 't', long)]
        threshold: u64,
        /// Keep every singleton even below the threshold.
        #[arg(long)]
        all_singletons: bool,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Fit a baseline model and save it.
    BuildModel {
        data: PathBuf,
        #[arg(long, value_enum)]
        model: ModelKind,
        /// Add-one smoothing of the Chow-Liu pair tables.
        #[arg(long)]
        laplace: bool,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Estimate one query, e.g. `"3=1 & 5=0"` or `"(or (= 3 1) (= 5 0))"`.
    Query {
        query: String,
        /// Baseline model file.
        #[arg(long, conflicts_with = "itemsets")]
        model: Option<PathBuf>,
        /// Itemset file; selects the maxent model.
        #[arg(long)]
        itemsets: Option<PathBuf>,
        #[arg(long, default_value = "clique_tree")]
        engine: EngineKind,
        #[arg(long, default_value_t = 1e-4)]
        epsilon: f64,
        #[arg(long, default_value_t = 200)]
        max_sweeps: usize,
        #[arg(long, default_value_t = DEFAULT_VAR_BOUND)]
        var_bound: usize,
        /// Dataset to compute the exact count against.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Draw a random query workload.
    GenQueries {
        data: PathBuf,
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 200)]
        count: usize,
        /// Mix AND and OR connectives.
        #[arg(long)]
        arbitrary: bool,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Output file; stdout when absent.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run a benchmark described by a key=value config file.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn load_data(path: &PathBuf) -> Result<SparseDataset> {
    SparseDataset::load(path).with_context(|| format!("loading dataset {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData {
            k,
            n,
            density,
            blocks,
            strength,
            seed,
            out,
        } => {
            let spec = SyntheticSpec {
                k,
                n,
                base_density: density,
                blocks: parse_block_spec(&blocks).context("bad --blocks")?,
                block_strength: strength,
                seed,
            };
            let data = generate_synthetic(&spec)?;
            data.save(&out)?;
            eprintln!(
                "wrote {} rows over {} attributes to {}",
                data.n(),
                data.k(),
                out.display()
            );
        }
        Command::Stats { data, marginals } => {
            let s = load_data(&data)?.compute_stats()?;
            println!("k\t{}", s.k);
            println!("n\t{}", s.n);
            println!("total_ones\t{}", s.total_ones);
            println!("mean_ones_per_row\t{}", sig6(s.mean_ones_per_row));
            println!("std_ones_per_row\t{}", sig6(s.std_ones_per_row));
            println!("max_ones_per_row\t{}", s.max_ones_per_row);
            if marginals {
                for (a, p) in s.marginal.iter().enumerate() {
                    println!("marginal[{a}]\t{}", sig6(*p));
                }
            }
        }
        Command::Mine {
            data,
            threshold,
            all_singletons,
            out,
        } => {
            let data = load_data(&data)?;
            let mut items = mine_frequent(&data, threshold)?;
            if all_singletons {
                items = items.with_all_singletons(&data);
            }
            items.save(&out)?;
            eprintln!(
                "wrote {} itemsets (memory {}) to {}",
                items.len(),
                items.memory_cost(),
                out.display()
            );
        }
        Command::BuildModel {
            data,
            model,
            laplace,
            out,
        } => {
            let data = load_data(&data)?;
            let model = match model {
                ModelKind::Independence => BaselineModel::Independence(IndependenceModel::build(&data)?),
                ModelKind::Chowliu => BaselineModel::ChowLiu(ChowLiuTree::build_with(&data, laplace)?),
            };
            model.save(&out)?;
            eprintln!(
                "wrote model with {} parameters to {}",
                model.as_estimator().memory_params(),
                out.display()
            );
        }
        Command::Query {
            query,
            model,
            itemsets,
            engine,
            epsilon,
            max_sweeps,
            var_bound,
            data,
        } => {
            let q: BooleanQuery = query.parse().context("parsing query")?;
            let data = data.as_ref().map(load_data).transpose()?;
            let (p, n) = match (model, itemsets) {
                (Some(path), None) => {
                    let m = BaselineModel::load(&path).with_context(|| format!("loading model {}", path.display()))?;
                    let n = match &m {
                        BaselineModel::Independence(m) => m.n(),
                        BaselineModel::ChowLiu(t) => t.n(),
                    };
                    (m.as_estimator().prob(&q)?, n)
                }
                (None, Some(path)) => {
                    let items = ItemsetCollection::load(&path)
                        .with_context(|| format!("loading itemsets {}", path.display()))?;
                    let opts = QueryOptions {
                        scaling: ScalingOptions {
                            epsilon,
                            max_sweeps,
                            ..ScalingOptions::default()
                        },
                        var_bound,
                    };
                    let (p, d) = maxent_query_prob(&items, &q, engine, &opts)?;
                    println!("engine\t{}", d.engine);
                    println!("n_q\t{}", d.n_q);
                    println!("constraints\t{}", d.constraints);
                    println!("sweeps\t{}", d.sweeps);
                    println!("converged\t{}", d.converged);
                    println!("terms_evaluated\t{}", d.terms_evaluated);
                    println!("induced_width\t{}", d.induced_width);
                    println!("clique_count\t{}", d.clique_count);
                    println!("wall_us\t{}", d.wall_us);
                    if !d.converged {
                        eprintln!("warning: iterative scaling did not converge in {} sweeps", d.sweeps);
                    }
                    (p, items.n())
                }
                _ => bail!("give exactly one of --model or --itemsets"),
            };
            println!("probability\t{}", sig6(p));
            println!("estimate\t{}", sig6(p * n as f64));
            if let Some(data) = data {
                println!("exact\t{}", data.exact_count(&q)?);
            }
        }
        Command::GenQueries {
            data,
            size,
            count,
            arbitrary,
            seed,
            out,
        } => {
            let stats = load_data(&data)?.compute_stats()?;
            let mut text = String::new();
            for q in generate_queries(&stats, size, count, arbitrary, seed)? {
                text.push_str(&q.to_string());
                text.push('\n');
            }
            match out {
                Some(path) => fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
        }
        Command::Bench { config, output } => {
            let mut cfg = BenchConfig::load(&config).with_context(|| format!("reading config {}", config.display()))?;
            if let Some(dir) = output {
                cfg.output = dir;
            }
            let result = run_benchmark(&cfg)?;
            emit_report(&result, &cfg.output)?;
            eprintln!(
                "wrote {} summary rows and {} query rows to {}",
                result.summary.len(),
                result.queries.len(),
                cfg.output.display()
            );
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
