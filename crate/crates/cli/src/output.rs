//! Serialized output documents.
//!
//! Every JSON file carries `schema_version` and a `kind` discriminator; the
//! corresponding JSON Schemas are shipped under `crates/cli/schemas/`.

use nsgcca::metrics::{ClusterScore, SelectionReport};
use nsgcca::model_selection::CvRecord;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Ground truth record written next to simulated view matrices.
#[derive(Debug, Serialize, Deserialize)]
pub struct ManifestDoc {
    pub schema_version: u32,
    pub kind: String,
    pub model: String,
    pub p: usize,
    pub n: usize,
    pub q: usize,
    pub noise_var: f64,
    pub seed: u64,
    pub views: Vec<String>,
    pub signal_indices: Vec<usize>,
}

/// Per-view weights of a fitted model. For HSIC-SGCCA and TS-KGCCA these are
/// the canonical coefficient vectors; for SA-KGCCA they are the per-variable
/// group norms that play the same selection role.
#[derive(Debug, Serialize, Deserialize)]
pub struct SolutionBlock {
    pub weights: Vec<Vec<f64>>,
    pub selected: Vec<Vec<usize>>,
    pub objective: f64,
    pub objective_trace: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub schema_version: u32,
    pub kind: String,
    pub method: String,
    pub lambda: Option<Vec<f64>>,
    pub budget: Option<Vec<f64>>,
    pub eps_reg: Option<f64>,
    pub solution: SolutionBlock,
    pub wall_time_secs: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TunedDoc {
    pub schema_version: u32,
    pub kind: String,
    pub method: String,
    pub chosen_lambda: Option<Vec<f64>>,
    pub chosen_budget: Option<Vec<f64>>,
    pub eps_reg: Option<f64>,
    pub cv_score: f64,
    pub start_index: usize,
    pub grid_mode: String,
    pub tune_per_start: bool,
    pub folds: usize,
    pub starts: usize,
    pub seed: u64,
    pub tune_secs: f64,
    pub refit_secs: f64,
    pub solution: SolutionBlock,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MetricsDoc {
    pub schema_version: u32,
    pub kind: String,
    pub selection: Option<SelectionReport>,
    pub cluster: Option<ClusterScore>,
}

/// Writes the per-start CV table as CSV.
pub fn write_cv_table(path: &std::path::Path, table: &[CvRecord]) -> crate::errors::CliResult<()> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| crate::errors::CliError::Input(format!("{}: {e}", path.display())))?;
    writer
        .write_record(["start", "grid_index", "params", "fold", "score"])
        .map_err(|e| crate::errors::CliError::Input(e.to_string()))?;
    for record in table {
        let params = record
            .params
            .iter()
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join(" ");
        let score = record.score.map_or(String::new(), |v| format!("{v}"));
        writer
            .write_record([
                record.start.to_string(),
                record.grid_index.to_string(),
                params,
                record.fold.to_string(),
                score,
            ])
            .map_err(|e| crate::errors::CliError::Input(e.to_string()))?;
    }
    writer
        .flush()
        .map_err(|e| crate::errors::CliError::Input(e.to_string()))?;
    Ok(())
}
