//! The simulate / fit / tune / evaluate commands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nsgcca::hsic_sgcca::{fit_hsic_sgcca, HsicSgccaConfig};
use nsgcca::metrics::{cluster_scores, joint_label_confusion};
use nsgcca::model_selection::{
    lambda_grid_default, s_grid, tune_hsic_sgcca, tune_sa_kgcca, tune_ts_kgcca, CvPlan, GridMode,
};
use nsgcca::sa_kgcca::{fit_sa_kgcca, SaKgccaConfig};
use nsgcca::simulate::{SimModel, SimSpec};
use nsgcca::ts_kgcca::{fit_ts_kgcca, TsKgccaConfig};
use nsgcca::MultiViewDataset;

use crate::errors::{CliError, CliResult};
use crate::matrix_io::{read_labels, read_matrix, read_views, write_json, write_matrix};
use crate::output::{
    write_cv_table, ManifestDoc, MetricsDoc, SolutionBlock, SolutionDoc, TunedDoc, SCHEMA_VERSION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    #[value(name = "hsic-sgcca")]
    HsicSgcca,
    #[value(name = "ts-kgcca")]
    TsKgcca,
    #[value(name = "sa-kgcca")]
    SaKgcca,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::HsicSgcca => "hsic-sgcca",
            Method::TsKgcca => "ts-kgcca",
            Method::SaKgcca => "sa-kgcca",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hsic-sgcca" => Ok(Method::HsicSgcca),
            "ts-kgcca" => Ok(Method::TsKgcca),
            "sa-kgcca" => Ok(Method::SaKgcca),
            other => Err(format!("unknown method {other:?}")),
        }
    }
}

fn ensure_out_dir(out: &Path) -> CliResult<()> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Input(format!("{}: {e}", out.display())))
}

/// Expands a shared-or-per-view parameter list to exactly `k` values.
pub fn per_view_params(values: &[f64], k: usize, what: &str) -> CliResult<Vec<f64>> {
    match values.len() {
        1 => Ok(vec![values[0]; k]),
        len if len == k => Ok(values.to_vec()),
        len => Err(CliError::Input(format!(
            "{what}: got {len} values for {k} views (give one shared value or one per view)"
        ))),
    }
}

pub fn cmd_simulate(
    model: &str,
    p: usize,
    n: usize,
    q: usize,
    noise_var: f64,
    seed: u64,
    out: &Path,
) -> CliResult<()> {
    let model = match model {
        "linear" => SimModel::Linear,
        "nonlinear" => SimModel::Nonlinear,
        other => return Err(CliError::Input(format!("unknown model {other:?}"))),
    };
    let mut spec = SimSpec::new(model, p, n, q, seed);
    spec.noise_var = noise_var;
    let data = spec.generate()?;
    ensure_out_dir(out)?;
    let mut view_files = Vec::new();
    for (k, view) in data.views().iter().enumerate() {
        let file = format!("view{}.csv", k + 1);
        let names: Vec<String> = (1..=view.p()).map(|j| format!("v{j}")).collect();
        write_matrix(&out.join(&file), view.data(), &names)?;
        view_files.push(file);
    }
    let manifest = ManifestDoc {
        schema_version: SCHEMA_VERSION,
        kind: "manifest".into(),
        model: match model {
            SimModel::Linear => "linear".into(),
            SimModel::Nonlinear => "nonlinear".into(),
        },
        p,
        n,
        q,
        noise_var,
        seed,
        views: view_files,
        signal_indices: spec.signal_indices(),
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(())
}

fn canonical_block(sol: &nsgcca::hsic_sgcca::CanonicalSolution) -> SolutionBlock {
    SolutionBlock {
        weights: sol.u.clone(),
        selected: sol.selected.clone(),
        objective: sol.objective(),
        objective_trace: sol.objective_trace.clone(),
        converged: sol.converged,
    }
}

fn sa_block(sol: &nsgcca::sa_kgcca::SaKgccaSolution) -> SolutionBlock {
    SolutionBlock {
        weights: sol.norm_scores.clone(),
        selected: sol.selected.clone(),
        objective: sol.objective(),
        objective_trace: sol.objective_trace.clone(),
        converged: sol.converged,
    }
}

/// Runs a plain fit with explicit parameters; returns the block plus the
/// parameters actually used (after shared-value expansion).
pub fn run_fit(
    method: Method,
    data: &MultiViewDataset,
    lambda: &[f64],
    budget: &[f64],
    eps_reg: f64,
) -> CliResult<(SolutionBlock, Vec<f64>)> {
    let k = data.k();
    match method {
        Method::HsicSgcca => {
            if lambda.is_empty() {
                return Err(CliError::Input("hsic-sgcca needs --lambda".into()));
            }
            let lambda = per_view_params(lambda, k, "--lambda")?;
            let cfg = HsicSgccaConfig::new(lambda.clone());
            let sol = fit_hsic_sgcca(data, &cfg, None)?;
            Ok((canonical_block(&sol), lambda))
        }
        Method::TsKgcca => {
            if budget.is_empty() {
                return Err(CliError::Input("ts-kgcca needs --budget".into()));
            }
            let budget = per_view_params(budget, k, "--budget")?;
            let cfg = TsKgccaConfig::new(budget.clone());
            let sol = fit_ts_kgcca(data, &cfg, None)?;
            Ok((canonical_block(&sol), budget))
        }
        Method::SaKgcca => {
            if budget.is_empty() {
                return Err(CliError::Input("sa-kgcca needs --budget".into()));
            }
            let budget = per_view_params(budget, k, "--budget")?;
            let mut cfg = SaKgccaConfig::new(budget.clone());
            cfg.eps_reg = eps_reg;
            let sol = fit_sa_kgcca(data, &cfg, None)?;
            Ok((sa_block(&sol), budget))
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_fit(
    method: Method,
    views: &[PathBuf],
    lambda: &[f64],
    budget: &[f64],
    eps_reg: f64,
    out: &Path,
) -> CliResult<()> {
    let data = read_views(views)?;
    let clock = Instant::now();
    let (block, params) = run_fit(method, &data, lambda, budget, eps_reg)?;
    let wall_time_secs = clock.elapsed().as_secs_f64();
    ensure_out_dir(out)?;
    let doc = SolutionDoc {
        schema_version: SCHEMA_VERSION,
        kind: "solution".into(),
        method: method.name().into(),
        lambda: (method == Method::HsicSgcca).then(|| params.clone()),
        budget: (method != Method::HsicSgcca).then(|| params.clone()),
        eps_reg: (method == Method::SaKgcca).then_some(eps_reg),
        solution: block,
        wall_time_secs,
    };
    write_json(&out.join("solution.json"), &doc)?;
    Ok(())
}

pub struct TuneOutcome {
    pub doc: TunedDoc,
    pub cv_table: Vec<nsgcca::model_selection::CvRecord>,
}

/// Runs the paper's tuning pipeline (grid CV + multi-start) and a separately
/// timed refit at the chosen parameters.
pub fn run_tune(
    method: Method,
    data: &MultiViewDataset,
    grid_override: &[f64],
    eps_reg: f64,
    plan: &CvPlan,
    mode: GridMode,
) -> CliResult<TuneOutcome> {
    let grids: Vec<Vec<f64>> = if !grid_override.is_empty() {
        match mode {
            GridMode::Shared => vec![grid_override.to_vec()],
            GridMode::Product => vec![grid_override.to_vec(); data.k()],
        }
    } else {
        match (method, mode) {
            (Method::HsicSgcca, GridMode::Shared) => vec![lambda_grid_default()],
            (Method::HsicSgcca, GridMode::Product) => vec![lambda_grid_default(); data.k()],
            (_, GridMode::Shared) => vec![s_grid(data.view(0).p())],
            (_, GridMode::Product) => {
                data.views().iter().map(|v| s_grid(v.p())).collect()
            }
        }
    };
    let clock = Instant::now();
    let (mut doc, cv_table) = match method {
        Method::HsicSgcca => {
            let tuned = tune_hsic_sgcca(data, &grids, mode, plan)?;
            let doc = TunedDoc {
                schema_version: SCHEMA_VERSION,
                kind: "tuned".into(),
                method: method.name().into(),
                chosen_lambda: Some(tuned.lambda.clone()),
                chosen_budget: None,
                eps_reg: None,
                cv_score: tuned.cv_score,
                start_index: tuned.start_index,
                grid_mode: mode_name(mode).into(),
                tune_per_start: tuned.tune_per_start,
                folds: plan.folds,
                starts: plan.starts,
                seed: plan.seed,
                tune_secs: 0.0,
                refit_secs: 0.0,
                solution: canonical_block(&tuned.solution),
            };
            (doc, tuned.cv_table)
        }
        Method::TsKgcca => {
            let tuned = tune_ts_kgcca(data, &grids, mode, plan)?;
            let doc = TunedDoc {
                schema_version: SCHEMA_VERSION,
                kind: "tuned".into(),
                method: method.name().into(),
                chosen_lambda: None,
                chosen_budget: Some(tuned.s.clone()),
                eps_reg: None,
                cv_score: tuned.cv_score,
                start_index: tuned.start_index,
                grid_mode: mode_name(mode).into(),
                tune_per_start: tuned.tune_per_start,
                folds: plan.folds,
                starts: plan.starts,
                seed: plan.seed,
                tune_secs: 0.0,
                refit_secs: 0.0,
                solution: canonical_block(&tuned.solution),
            };
            (doc, tuned.cv_table)
        }
        Method::SaKgcca => {
            let tuned = tune_sa_kgcca(data, &grids, mode, eps_reg, plan)?;
            let doc = TunedDoc {
                schema_version: SCHEMA_VERSION,
                kind: "tuned".into(),
                method: method.name().into(),
                chosen_lambda: None,
                chosen_budget: Some(tuned.s.clone()),
                eps_reg: Some(eps_reg),
                cv_score: tuned.cv_score,
                start_index: tuned.start_index,
                grid_mode: mode_name(mode).into(),
                tune_per_start: tuned.tune_per_start,
                folds: plan.folds,
                starts: plan.starts,
                seed: plan.seed,
                tune_secs: 0.0,
                refit_secs: 0.0,
                solution: sa_block(&tuned.solution),
            };
            (doc, tuned.cv_table)
        }
    };
    doc.tune_secs = clock.elapsed().as_secs_f64();
    // Runtime convention: the reported fit time is a fresh fit at the chosen
    // parameters, timed apart from the tuning search.
    let chosen = doc
        .chosen_lambda
        .clone()
        .or_else(|| doc.chosen_budget.clone())
        .unwrap_or_default();
    let refit_clock = Instant::now();
    let (lambda, budget): (&[f64], &[f64]) = match method {
        Method::HsicSgcca => (&chosen, &[]),
        _ => (&[], &chosen),
    };
    run_fit(method, data, lambda, budget, eps_reg)?;
    doc.refit_secs = refit_clock.elapsed().as_secs_f64();
    Ok(TuneOutcome { doc, cv_table })
}

fn mode_name(mode: GridMode) -> &'static str {
    match mode {
        GridMode::Shared => "shared",
        GridMode::Product => "product",
    }
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_tune(
    method: Method,
    views: &[PathBuf],
    grid_override: &[f64],
    eps_reg: f64,
    folds: usize,
    starts: usize,
    seed: u64,
    tune_once: bool,
    mode: GridMode,
    out: &Path,
) -> CliResult<()> {
    let data = read_views(views)?;
    let plan = CvPlan { folds, starts, seed, tune_per_start: !tune_once };
    let outcome = run_tune(method, &data, grid_override, eps_reg, &plan, mode)?;
    ensure_out_dir(out)?;
    write_json(&out.join("tuned.json"), &outcome.doc)?;
    write_cv_table(&out.join("cv_table.csv"), &outcome.cv_table)?;
    Ok(())
}

pub fn cmd_evaluate(
    solution: Option<&Path>,
    manifest: Option<&Path>,
    features: Option<&Path>,
    labels: Option<&Path>,
    out: &Path,
) -> CliResult<()> {
    if manifest.is_none() && labels.is_none() {
        return Err(CliError::Input(
            "evaluate needs --manifest (selection metrics) and/or --labels (cluster metrics)"
                .into(),
        ));
    }
    let selection = match manifest {
        None => None,
        Some(manifest_path) => {
            let solution_path = solution.ok_or_else(|| {
                CliError::Input("selection metrics need --solution".into())
            })?;
            let manifest: ManifestDoc = read_json(manifest_path)?;
            let selected = read_selected(solution_path)?;
            let expected: Vec<usize> = (0..manifest.q).collect();
            if manifest.signal_indices != expected {
                return Err(CliError::Input(
                    "manifest signal indices are not the leading block".into(),
                ));
            }
            if selected.len() != manifest.views.len() {
                return Err(CliError::Input(format!(
                    "solution has {} views, manifest {}",
                    selected.len(),
                    manifest.views.len()
                )));
            }
            Some(joint_label_confusion(&selected, manifest.p, manifest.q))
        }
    };
    let cluster = match labels {
        None => None,
        Some(labels_path) => {
            let features_path = features.ok_or_else(|| {
                CliError::Input("cluster metrics need --features".into())
            })?;
            let (matrix, _) = read_matrix(features_path)?;
            let labels = read_labels(labels_path)?;
            if labels.len() != matrix.ncols() {
                return Err(CliError::Input(format!(
                    "{} labels for {} samples",
                    labels.len(),
                    matrix.ncols()
                )));
            }
            Some(cluster_scores(&matrix.transpose(), &labels)?)
        }
    };
    ensure_out_dir(out)?;
    let doc = MetricsDoc {
        schema_version: SCHEMA_VERSION,
        kind: "metrics".into(),
        selection,
        cluster,
    };
    write_json(&out.join("metrics.json"), &doc)?;
    write_metrics_csv(&out.join("metrics.csv"), &doc)?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Pulls the per-view selected index sets out of a solution or tuned file.
fn read_selected(path: &Path) -> CliResult<Vec<Vec<usize>>> {
    let value: serde_json::Value = read_json(path)?;
    let block = match value.get("kind").and_then(|k| k.as_str()) {
        Some("solution") | Some("tuned") => value.get("solution"),
        _ => return Err(CliError::Input(format!("{}: not a solution file", path.display()))),
    };
    let selected = block
        .and_then(|b| b.get("selected"))
        .and_then(|s| s.as_array())
        .ok_or_else(|| CliError::Input(format!("{}: missing selected sets", path.display())))?;
    selected
        .iter()
        .map(|view| {
            view.as_array()
                .map(|indices| {
                    indices
                        .iter()
                        .filter_map(|v| v.as_u64().map(|u| u as usize))
                        .collect()
                })
                .ok_or_else(|| CliError::Input(format!("{}: malformed selected sets", path.display())))
        })
        .collect()
}

fn write_metrics_csv(path: &Path, doc: &MetricsDoc) -> CliResult<()> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    writer
        .write_record(["metric", "value"])
        .map_err(|e| CliError::Input(e.to_string()))?;
    let mut rows: Vec<(String, String)> = Vec::new();
    if let Some(sel) = &doc.selection {
        rows.push(("tp".into(), sel.tp.to_string()));
        rows.push(("fp".into(), sel.fp.to_string()));
        rows.push(("tn".into(), sel.tn.to_string()));
        rows.push(("fn".into(), sel.fn_.to_string()));
        rows.push(("f1".into(), format!("{}", sel.f1)));
        rows.push(("mcc".into(), format!("{}", sel.mcc)));
        rows.push(("precision".into(), format!("{}", sel.precision)));
        rows.push(("recall".into(), format!("{}", sel.recall)));
        rows.push(("specificity".into(), format!("{}", sel.specificity)));
        rows.push(("success".into(), sel.success.to_string()));
    }
    if let Some(cluster) = &doc.cluster {
        rows.push(("swiss".into(), format!("{}", cluster.swiss)));
        rows.push(("davies_bouldin".into(), format!("{}", cluster.davies_bouldin)));
        rows.push(("silhouette".into(), format!("{}", cluster.silhouette)));
        rows.push((
            "calinski_harabasz".into(),
            format!("{}", cluster.calinski_harabasz),
        ));
        rows.push((
            "has_singleton_class".into(),
            cluster.has_singleton_class.to_string(),
        ));
    }
    for (metric, value) in rows {
        writer
            .write_record([metric, value])
            .map_err(|e| CliError::Input(e.to_string()))?;
    }
    writer
        .flush()
        .map_err(|e| CliError::Input(e.to_string()))?;
    Ok(())
}
