//! The replication study: the three simulation settings crossed with both
//! data models and all three methods, one CSV row per replication.
//!
//! Fixed header:
//! `method,model,setting,p,n,q,replication,seed,chosen_params,tp,fp,tn,fn,f1,mcc,precision,recall,specificity,success,tune_secs,fit_secs`

use std::path::Path;
use std::time::Instant;

use nsgcca::model_selection::CvPlan;
use nsgcca::simulate::{SimModel, SimSpec};

use crate::commands::{run_fit, run_tune, Method};
use crate::errors::{CliError, CliResult};

pub const STUDY_HEADER: [&str; 21] = [
    "method",
    "model",
    "setting",
    "p",
    "n",
    "q",
    "replication",
    "seed",
    "chosen_params",
    "tp",
    "fp",
    "tn",
    "fn",
    "f1",
    "mcc",
    "precision",
    "recall",
    "specificity",
    "success",
    "tune_secs",
    "fit_secs",
];

/// One simulation setting family: which dimension varies and its values.
pub struct Setting {
    pub name: &'static str,
    pub cases: Vec<(usize, usize, usize)>,
}

pub struct StudyGrid {
    pub p_list: Vec<usize>,
    pub n_list: Vec<usize>,
    pub q_list: Vec<usize>,
    pub p_base: usize,
    pub n_base: usize,
    pub q_base: usize,
}

impl Default for StudyGrid {
    fn default() -> Self {
        Self {
            p_list: vec![30, 50, 100, 200],
            n_list: vec![100, 200, 400],
            q_list: vec![5, 10, 20],
            p_base: 100,
            n_base: 100,
            q_base: 5,
        }
    }
}

impl StudyGrid {
    /// (p, n, q) cases of one setting family.
    fn setting(&self, name: &'static str) -> Setting {
        let cases = match name {
            "i" => self.p_list.iter().map(|&p| (p, self.n_base, self.q_base)).collect(),
            "ii" => self.n_list.iter().map(|&n| (self.p_base, n, self.q_base)).collect(),
            "iii" => self.q_list.iter().map(|&q| (self.p_base, self.n_base, q)).collect(),
            _ => unreachable!(),
        };
        Setting { name, cases }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_study(
    scale: f64,
    settings: &[String],
    methods: &[Method],
    grid: &StudyGrid,
    folds: usize,
    starts: usize,
    seed: u64,
    tune_once: bool,
    out: &Path,
) -> CliResult<()> {
    if scale <= 0.0 {
        return Err(CliError::Input("--scale must be positive".into()));
    }
    let replications = ((100.0 * scale).round() as usize).max(1);
    let families: Vec<Setting> = {
        let wanted: Vec<&str> = if settings.is_empty() {
            vec!["i", "ii", "iii"]
        } else {
            settings.iter().map(String::as_str).collect()
        };
        wanted
            .iter()
            .map(|&name| match name {
                "i" | "ii" | "iii" => Ok(grid.setting(match name {
                    "i" => "i",
                    "ii" => "ii",
                    _ => "iii",
                })),
                other => Err(CliError::Input(format!("unknown setting {other:?}"))),
            })
            .collect::<CliResult<_>>()?
    };
    let methods: Vec<Method> = if methods.is_empty() {
        vec![Method::HsicSgcca, Method::TsKgcca, Method::SaKgcca]
    } else {
        methods.to_vec()
    };

    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Input(format!("{}: {e}", out.display())))?;
    let path = out.join("study.csv");
    let mut writer = csv::Writer::from_path(&path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    writer
        .write_record(STUDY_HEADER)
        .map_err(|e| CliError::Input(e.to_string()))?;

    for family in &families {
        for &(p, n, q) in &family.cases {
            for model in [SimModel::Linear, SimModel::Nonlinear] {
                let model_name = match model {
                    SimModel::Linear => "linear",
                    SimModel::Nonlinear => "nonlinear",
                };
                for rep in 0..replications {
                    let data_seed = seed
                        .wrapping_mul(1_000_003)
                        .wrapping_add((p * 7 + n * 11 + q * 13) as u64)
                        .wrapping_add(rep as u64 * 101);
                    let spec = SimSpec::new(model, p, n, q, data_seed);
                    let data = spec.generate()?;
                    for &method in &methods {
                        let plan = CvPlan {
                            folds,
                            starts,
                            seed: data_seed ^ 0x5DEE_CE66,
                            tune_per_start: !tune_once,
                        };
                        let tune_clock = Instant::now();
                        let outcome = run_tune(
                            method,
                            &data,
                            &[],
                            0.02,
                            &plan,
                            nsgcca::model_selection::GridMode::Shared,
                        )?;
                        let tune_secs = tune_clock.elapsed().as_secs_f64();
                        let chosen = outcome
                            .doc
                            .chosen_lambda
                            .clone()
                            .or(outcome.doc.chosen_budget.clone())
                            .unwrap_or_default();
                        let fit_clock = Instant::now();
                        let (lambda, budget): (&[f64], &[f64]) = match method {
                            Method::HsicSgcca => (&chosen, &[]),
                            _ => (&[], &chosen),
                        };
                        run_fit(method, &data, lambda, budget, 0.02)?;
                        let fit_secs = fit_clock.elapsed().as_secs_f64();
                        let report = nsgcca::metrics::joint_label_confusion(
                            &outcome.doc.solution.selected,
                            p,
                            q,
                        );
                        let chosen_str = chosen
                            .iter()
                            .map(|v| format!("{v}"))
                            .collect::<Vec<_>>()
                            .join(" ");
                        writer
                            .write_record([
                                method.name().to_string(),
                                model_name.to_string(),
                                family.name.to_string(),
                                p.to_string(),
                                n.to_string(),
                                q.to_string(),
                                rep.to_string(),
                                data_seed.to_string(),
                                chosen_str,
                                report.tp.to_string(),
                                report.fp.to_string(),
                                report.tn.to_string(),
                                report.fn_.to_string(),
                                format!("{}", report.f1),
                                format!("{}", report.mcc),
                                format!("{}", report.precision),
                                format!("{}", report.recall),
                                format!("{}", report.specificity),
                                report.success.to_string(),
                                format!("{tune_secs:.3}"),
                                format!("{fit_secs:.3}"),
                            ])
                            .map_err(|e| CliError::Input(e.to_string()))?;
                    }
                }
            }
        }
    }
    writer
        .flush()
        .map_err(|e| CliError::Input(e.to_string()))?;
    Ok(())
}
