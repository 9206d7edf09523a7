//! Report files: evaluation tables, disparity tables and run manifests.
//!
//! CSV and JSON reports depend only on their inputs, so repeated runs give
//! byte-identical files. Timing and timestamps go into a separate manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::eval::disparity::{alpha_label, DisparityReport};
use crate::eval::{Evaluation, RiskReport};
use crate::policy_file::{PolicyHeader, SolverVariant};

pub const REPORT_FORMAT: &str = "recourse-report";
pub const REPORT_VERSION: u32 = 1;

/// Evaluation of one policy plus where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyEvaluation {
    pub policy: String,
    pub config: String,
    pub config_hash: String,
    pub schema_hash: String,
    pub variant: SolverVariant,
    pub beta: f64,
    pub horizon: usize,
    pub evaluation: Evaluation,
}

impl PolicyEvaluation {
    pub fn new(policy: impl Into<String>, header: &PolicyHeader, evaluation: Evaluation) -> Self {
        Self {
            policy: policy.into(),
            config: header.config.name.clone(),
            config_hash: header.config_hash.clone(),
            schema_hash: header.schema_hash.clone(),
            variant: header.variant,
            beta: header.beta,
            horizon: header.horizon,
            evaluation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub format: String,
    pub version: u32,
    pub n_trials: usize,
    pub alphas: Vec<f64>,
    pub seed: u64,
    pub policies: Vec<PolicyEvaluation>,
}

impl EvaluationReport {
    pub fn new(
        n_trials: usize,
        alphas: Vec<f64>,
        seed: u64,
        policies: Vec<PolicyEvaluation>,
    ) -> Self {
        Self {
            format: REPORT_FORMAT.into(),
            version: REPORT_VERSION,
            n_trials,
            alphas,
            seed,
            policies,
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:.6}")
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), num)
}

/// Column names shared by every measure table.
pub fn measure_columns(alphas: &[f64]) -> Vec<String> {
    let mut cols = vec!["rho_H".to_string(), "mu".into(), "sigma2".into()];
    for &a in alphas {
        cols.push(format!("VaR_{}", alpha_label(a)));
        cols.push(format!("CVaR_{}", alpha_label(a)));
    }
    cols.push("sparsity".into());
    cols.push("proximity".into());
    cols
}

fn measure_cells(r: &RiskReport) -> Vec<String> {
    let mut cells = vec![num(r.rho_h), num(r.mu_cost), num(r.sigma2_cost)];
    for t in &r.tail {
        cells.push(num(t.var));
        cells.push(opt(t.cvar));
    }
    cells.push(opt(r.sparsity));
    cells.push(opt(r.proximity));
    cells
}

/// One row per instance and an `AGGREGATE` row per policy.
pub fn evaluation_csv(report: &EvaluationReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = [
        "policy", "config", "variant", "beta", "horizon", "instance", "n",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(measure_columns(&report.alphas));
    header.push("mu_se".into());
    header.push("sigma2_se".into());
    w.write_record(&header)?;
    for p in &report.policies {
        let lead = |instance: String, n: usize| {
            vec![
                p.policy.clone(),
                p.config.clone(),
                p.variant.to_string(),
                num(p.beta),
                p.horizon.to_string(),
                instance,
                n.to_string(),
            ]
        };
        for r in &p.evaluation.per_instance {
            let mut row = lead(r.instance.to_string(), r.report.n_trials);
            row.extend(measure_cells(&r.report));
            row.push(num(r.report.mu_se));
            row.push(num(r.report.sigma2_se));
            w.write_record(&row)?;
        }
        let agg = &p.evaluation.aggregate;
        let mut row = lead("AGGREGATE".into(), agg.n_instances);
        row.extend(measure_cells(agg));
        row.push(num(agg.mu_se));
        row.push(num(agg.sigma2_se));
        w.write_record(&row)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

pub fn evaluation_json(report: &EvaluationReport) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(report)?;
    bytes.push(b'\n');
    Ok(bytes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisparityOutput {
    pub format: String,
    pub version: u32,
    pub policy: String,
    pub config_hash: String,
    pub beta: f64,
    pub horizon: usize,
    pub group_feature: String,
    pub group_a: String,
    pub group_b: String,
    pub n_trials: usize,
    pub seed: u64,
    pub report: DisparityReport,
}

pub fn disparity_csv(out: &DisparityOutput) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "measure",
        &format!("{}={}", out.group_feature, out.group_a),
        &format!("{}={}", out.group_feature, out.group_b),
        "delta",
        "u_statistic",
        "p_value",
        "test",
        "n_a",
        "n_b",
    ])?;
    for c in &out.report.comparisons {
        let (u, p, method) = match &c.test {
            Some(t) => (
                num(t.u),
                format!("{:.6e}", t.p_value),
                format!("{:?}", t.method).to_lowercase(),
            ),
            None => ("n/a".into(), "n/a".into(), "n/a".into()),
        };
        w.write_record([
            c.measure.clone(),
            opt(c.group_a),
            opt(c.group_b),
            opt(c.delta),
            u,
            p,
            method,
            c.n_a.to_string(),
            c.n_b.to_string(),
        ])?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

pub fn disparity_json(out: &DisparityOutput) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(out)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes `stem.csv` and `stem.json` next to each other; `out` may carry
/// either extension or none.
pub fn output_pair(out: &Path) -> (PathBuf, PathBuf) {
    let stem = match out.extension().and_then(|e| e.to_str()) {
        Some("csv") | Some("json") => out.with_extension(""),
        _ => out.to_path_buf(),
    };
    let with = |ext: &str| {
        let mut s = stem.clone().into_os_string();
        s.push(".");
        s.push(ext);
        PathBuf::from(s)
    };
    (with("csv"), with("json"))
}

/// Everything that determines a run, plus when it happened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub tool_version: String,
    pub config_paths: Vec<String>,
    pub config_hashes: Vec<String>,
    pub betas: Vec<f64>,
    pub horizon: Option<usize>,
    pub alphas: Vec<f64>,
    pub n_trials: Option<usize>,
    pub seed: Option<u64>,
    pub variant: Option<SolverVariant>,
    pub instances: Option<String>,
    pub outputs: Vec<String>,
    /// `(label, seconds)` per solve performed by the command.
    #[serde(default)]
    pub solve_seconds: Vec<(String, f64)>,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    pub wall_time_s: f64,
}

impl RunManifest {
    pub fn start(command: &str, args: Vec<String>) -> Self {
        Self {
            command: command.into(),
            args,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config_paths: Vec::new(),
            config_hashes: Vec::new(),
            betas: Vec::new(),
            horizon: None,
            alphas: Vec::new(),
            n_trials: None,
            seed: None,
            variant: None,
            instances: None,
            outputs: Vec::new(),
            solve_seconds: Vec::new(),
            started_unix_s: unix_now(),
            finished_unix_s: 0.0,
            wall_time_s: 0.0,
        }
    }

    /// Stamps the finish time and writes `<primary output>.manifest.json`.
    pub fn finish(mut self, primary_output: &Path) -> Result<PathBuf> {
        self.finished_unix_s = unix_now();
        self.wall_time_s = self.finished_unix_s - self.started_unix_s;
        let mut name = primary_output.as_os_str().to_owned();
        name.push(".manifest.json");
        let path = PathBuf::from(name);
        fs::write(&path, serde_json::to_vec_pretty(&self)?)?;
        Ok(path)
    }
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}
