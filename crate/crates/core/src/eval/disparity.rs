//! Group comparison of risk measures under one policy.

use serde::{Deserialize, Serialize};

use super::mwu::{mann_whitney_u, MannWhitney};
use super::{Evaluation, RiskReport};
use crate::error::{Error, Result};

/// Column label for a tail level, e.g. `0.95` -> `"95"`.
pub fn alpha_label(alpha: f64) -> String {
    let pct = (alpha * 100.0 * 1e6).round() / 1e6;
    format!("{pct}")
}

/// Names and accessors of every compared measure, in report order.
pub fn measure_names(alphas: &[f64]) -> Vec<String> {
    let mut names = vec!["rho_H".to_string(), "mu".into(), "sigma2".into()];
    for &a in alphas {
        names.push(format!("VaR_{}", alpha_label(a)));
        names.push(format!("CVaR_{}", alpha_label(a)));
    }
    names.push("sparsity".into());
    names.push("proximity".into());
    names
}

/// Measure values of a report in [`measure_names`] order.
pub fn measure_values(r: &RiskReport) -> Vec<Option<f64>> {
    let mut v = vec![Some(r.rho_h), Some(r.mu_cost), Some(r.sigma2_cost)];
    for t in &r.tail {
        v.push(Some(t.var));
        v.push(t.cvar);
    }
    v.push(r.sparsity);
    v.push(r.proximity);
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureComparison {
    pub measure: String,
    pub group_a: Option<f64>,
    pub group_b: Option<f64>,
    /// `|group_a - group_b|`, absent when either side is undefined.
    pub delta: Option<f64>,
    /// Test over per-instance values; absent when a side has none.
    pub test: Option<MannWhitney>,
    pub n_a: usize,
    pub n_b: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisparityReport {
    pub group_a: RiskReport,
    pub group_b: RiskReport,
    pub comparisons: Vec<MeasureComparison>,
}

impl DisparityReport {
    pub fn comparison(&self, measure: &str) -> Option<&MeasureComparison> {
        self.comparisons.iter().find(|c| c.measure == measure)
    }
}

pub fn disparity(a: &Evaluation, b: &Evaluation) -> Result<DisparityReport> {
    let alphas = a.aggregate.alphas();
    if alphas != b.aggregate.alphas() {
        return Err(Error::InvalidArgument(
            "groups were evaluated with different alpha sets".into(),
        ));
    }
    let names = measure_names(&alphas);
    let agg_a = measure_values(&a.aggregate);
    let agg_b = measure_values(&b.aggregate);
    let per = |e: &Evaluation, i: usize| -> Vec<f64> {
        e.per_instance
            .iter()
            .filter_map(|r| measure_values(&r.report)[i])
            .collect()
    };
    let mut comparisons = Vec::with_capacity(names.len());
    for (i, name) in names.into_iter().enumerate() {
        let (xa, xb) = (per(a, i), per(b, i));
        let test = if xa.is_empty() || xb.is_empty() {
            None
        } else {
            Some(mann_whitney_u(&xa, &xb)?)
        };
        let delta = match (agg_a[i], agg_b[i]) {
            (Some(x), Some(y)) => Some((x - y).abs()),
            _ => None,
        };
        comparisons.push(MeasureComparison {
            measure: name,
            group_a: agg_a[i],
            group_b: agg_b[i],
            delta,
            test,
            n_a: xa.len(),
            n_b: xb.len(),
        });
    }
    Ok(DisparityReport {
        group_a: a.aggregate.clone(),
        group_b: b.aggregate.clone(),
        comparisons,
    })
}
