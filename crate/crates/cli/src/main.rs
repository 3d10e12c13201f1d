//! Command-line front end for the sparse nonlinear GCCA solvers: simulate
//! benchmark data, fit or tune a model, evaluate selections, or run the full
//! replication study.
//!
//! Exit codes: 0 success, 2 input error, 3 numerical failure, 4 config
//! error. `--threads` (or the `NSGCCA_THREADS` environment variable) caps
//! the worker pool; all commands are deterministic for a fixed seed.

mod commands;
mod config;
mod errors;
mod matrix_io;
mod output;
mod study;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use commands::Method;
use config::FileConfig;
use errors::{CliError, CliResult};
use nsgcca::model_selection::GridMode;
use study::StudyGrid;

#[derive(Parser)]
#[command(name = "nsgcca", version, about = "Sparse nonlinear generalized CCA")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct CommonRunArgs {
    /// Optional key-value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Solver method.
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// One CSV matrix per view (rows = variables, columns = samples).
    #[arg(long, num_args = 1..)]
    views: Vec<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: NSGCCA_THREADS or all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic three-view benchmark dataset.
    Simulate {
        /// Data model: linear or nonlinear.
        #[arg(long, default_value = "linear")]
        model: String,
        /// Variables per view.
        #[arg(long, default_value_t = 30)]
        p: usize,
        /// Samples.
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// Signal variables per view.
        #[arg(long, default_value_t = 5)]
        q: usize,
        /// Noise variance.
        #[arg(long, default_value_t = 0.2)]
        noise_var: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one model at explicit parameter values.
    Fit {
        #[command(flatten)]
        common: CommonRunArgs,
        /// Penalty per view, or one shared value (hsic-sgcca).
        #[arg(long, num_args = 1.., allow_negative_numbers = false)]
        lambda: Vec<f64>,
        /// Sparsity budget per view, or one shared value (ts-/sa-kgcca).
        #[arg(long, num_args = 1..)]
        budget: Vec<f64>,
        /// Constraint regularization for sa-kgcca.
        #[arg(long)]
        eps_reg: Option<f64>,
    },
    /// Cross-validated grid search with multi-start, then a full-data fit.
    Tune {
        #[command(flatten)]
        common: CommonRunArgs,
        /// Explicit shared grid values (default: the method's standard grid).
        #[arg(long, num_args = 1..)]
        grid: Vec<f64>,
        /// Constraint regularization for sa-kgcca.
        #[arg(long)]
        eps_reg: Option<f64>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        starts: Option<usize>,
        /// Tune once and reuse across starts (cheaper, not the reference
        /// procedure).
        #[arg(long)]
        tune_once: bool,
        /// Grid combination across views: shared or product.
        #[arg(long, default_value = "shared")]
        grid_mode: String,
    },
    /// Score a solution against simulation ground truth and/or class labels.
    Evaluate {
        /// solution.json or tuned.json.
        #[arg(long)]
        solution: Option<PathBuf>,
        /// manifest.json from `simulate` (enables selection metrics).
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Feature matrix CSV (rows = features, columns = samples).
        #[arg(long)]
        features: Option<PathBuf>,
        /// One class label per line (enables cluster metrics).
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replication study over the benchmark settings; one CSV row per
    /// (method, model, setting, replication).
    Study {
        /// Fraction of the full 100 replications per setting.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Setting families to run: i (vary p), ii (vary n), iii (vary q).
        #[arg(long, num_args = 1..)]
        setting: Vec<String>,
        /// Methods to run (default: all three).
        #[arg(long, num_args = 1.., value_enum)]
        methods: Vec<Method>,
        /// Override the varied p values of setting i.
        #[arg(long, num_args = 1..)]
        p_list: Vec<usize>,
        /// Override the varied n values of setting ii.
        #[arg(long, num_args = 1..)]
        n_list: Vec<usize>,
        /// Override the varied q values of setting iii.
        #[arg(long, num_args = 1..)]
        q_list: Vec<usize>,
        /// Fixed p where it does not vary.
        #[arg(long)]
        p_base: Option<usize>,
        /// Fixed n where it does not vary.
        #[arg(long)]
        n_base: Option<usize>,
        /// Fixed q where it does not vary.
        #[arg(long)]
        q_base: Option<usize>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        starts: Option<usize>,
        #[arg(long)]
        tune_once: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn init_threads(threads: Option<usize>) -> CliResult<()> {
    let threads = match threads {
        Some(t) => Some(t),
        None => match std::env::var("NSGCCA_THREADS") {
            Ok(raw) => Some(raw.parse::<usize>().map_err(|_| {
                CliError::Config(format!("NSGCCA_THREADS has invalid value {raw:?}"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(threads) = threads {
        if threads == 0 {
            return Err(CliError::Input("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Input(e.to_string()))?;
    }
    Ok(())
}

fn load_config(path: Option<&PathBuf>) -> CliResult<FileConfig> {
    match path {
        Some(path) => FileConfig::load(path),
        None => Ok(FileConfig::default()),
    }
}

struct ResolvedRun {
    method: Method,
    views: Vec<PathBuf>,
    out: PathBuf,
    seed: u64,
}

fn resolve_run(common: &CommonRunArgs, file: &FileConfig) -> CliResult<ResolvedRun> {
    init_threads(common.threads.or(file.get_parsed::<usize>("run.threads")?))?;
    let method = match common.method {
        Some(m) => m,
        None => file
            .get_parsed::<Method>("run.method")?
            .ok_or_else(|| CliError::Input("missing --method".into()))?,
    };
    let views = if !common.views.is_empty() {
        common.views.clone()
    } else {
        file.get_paths("run.views")?
            .ok_or_else(|| CliError::Input("missing --views".into()))?
    };
    let out = match &common.out {
        Some(out) => out.clone(),
        None => file
            .get_parsed::<String>("run.out")?
            .map(PathBuf::from)
            .ok_or_else(|| CliError::Input("missing --out".into()))?,
    };
    let seed = common.seed.or(file.get_parsed::<u64>("run.seed")?).unwrap_or(0);
    Ok(ResolvedRun { method, views, out, seed })
}

fn parse_grid_mode(raw: &str) -> CliResult<GridMode> {
    match raw {
        "shared" => Ok(GridMode::Shared),
        "product" => Ok(GridMode::Product),
        other => Err(CliError::Input(format!("unknown grid mode {other:?}"))),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate { model, p, n, q, noise_var, seed, out } => {
            commands::cmd_simulate(&model, p, n, q, noise_var, seed, &out)
        }
        Command::Fit { common, lambda, budget, eps_reg } => {
            let file = load_config(common.config.as_ref())?;
            let run = resolve_run(&common, &file)?;
            let lambda = if !lambda.is_empty() {
                lambda
            } else {
                file.get_list::<f64>("solver.lambda")?.unwrap_or_default()
            };
            let budget = if !budget.is_empty() {
                budget
            } else {
                file.get_list::<f64>("solver.budget")?.unwrap_or_default()
            };
            let eps_reg = eps_reg
                .or(file.get_parsed::<f64>("solver.eps_reg")?)
                .unwrap_or(0.02);
            commands::cmd_fit(run.method, &run.views, &lambda, &budget, eps_reg, &run.out)
        }
        Command::Tune { common, grid, eps_reg, folds, starts, tune_once, grid_mode } => {
            let file = load_config(common.config.as_ref())?;
            let run = resolve_run(&common, &file)?;
            let folds = folds.or(file.get_parsed::<usize>("cv.folds")?).unwrap_or(5);
            let starts = starts.or(file.get_parsed::<usize>("cv.starts")?).unwrap_or(10);
            let tune_once =
                tune_once || file.get_parsed::<bool>("cv.tune_once")?.unwrap_or(false);
            let mode_raw = file
                .get("cv.grid_mode")
                .filter(|_| grid_mode == "shared")
                .unwrap_or(&grid_mode);
            let mode = parse_grid_mode(mode_raw)?;
            let eps_reg = eps_reg
                .or(file.get_parsed::<f64>("solver.eps_reg")?)
                .unwrap_or(0.02);
            commands::cmd_tune(
                run.method, &run.views, &grid, eps_reg, folds, starts, run.seed, tune_once,
                mode, &run.out,
            )
        }
        Command::Evaluate { solution, manifest, features, labels, out } => {
            commands::cmd_evaluate(
                solution.as_deref(),
                manifest.as_deref(),
                features.as_deref(),
                labels.as_deref(),
                &out,
            )
        }
        Command::Study {
            scale,
            setting,
            methods,
            p_list,
            n_list,
            q_list,
            p_base,
            n_base,
            q_base,
            folds,
            starts,
            tune_once,
            seed,
            threads,
            out,
        } => {
            init_threads(threads)?;
            let mut grid = StudyGrid::default();
            if !p_list.is_empty() {
                grid.p_list = p_list;
            }
            if !n_list.is_empty() {
                grid.n_list = n_list;
            }
            if !q_list.is_empty() {
                grid.q_list = q_list;
            }
            if let Some(p) = p_base {
                grid.p_base = p;
            }
            if let Some(n) = n_base {
                grid.n_base = n;
            }
            if let Some(q) = q_base {
                grid.q_base = q;
            }
            study::cmd_study(
                scale,
                &setting,
                &methods,
                &grid,
                folds.unwrap_or(5),
                starts.unwrap_or(10),
                seed,
                tune_once,
                &out,
            )
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("{err}");
        std::process::exit(err.exit_code());
    }
}
