//! Empirical Value-at-Risk and Conditional Value-at-Risk of cost samples.

use crate::error::{Error, Result};

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "alpha must be in (0, 1), got {alpha}"
        )))
    }
}

fn sorted(costs: &[f64]) -> Result<Vec<f64>> {
    if costs.is_empty() {
        return Err(Error::EmptySample);
    }
    if costs.iter().any(|c| c.is_nan()) {
        return Err(Error::InvalidArgument("cost sample contains NaN".into()));
    }
    let mut v = costs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

fn var_sorted(sorted: &[f64], alpha: f64) -> f64 {
    let n = sorted.len();
    let mut i = 0;
    while i < n {
        let x = sorted[i];
        let mut j = i;
        while j < n && sorted[j] == x {
            j += 1;
        }
        // F(x) = #{c <= x} / n, compared without rounding the threshold
        if j as f64 / n as f64 >= alpha {
            return x;
        }
        i = j;
    }
    sorted[n - 1]
}

/// Smallest sample value whose empirical CDF reaches `alpha`.
pub fn var_alpha(costs: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(var_sorted(&sorted(costs)?, alpha))
}

/// Mean of the samples strictly above [`var_alpha`]; `None` when nothing
/// exceeds it (e.g. a point mass).
pub fn cvar_alpha(costs: &[f64], alpha: f64) -> Result<Option<f64>> {
    check_alpha(alpha)?;
    let v = sorted(costs)?;
    Ok(tail_mean(&v, var_sorted(&v, alpha)))
}

fn tail_mean(sorted: &[f64], threshold: f64) -> Option<f64> {
    let start = sorted.partition_point(|&c| c <= threshold);
    let tail = &sorted[start..];
    (!tail.is_empty()).then(|| tail.iter().sum::<f64>() / tail.len() as f64)
}

/// VaR and CVaR at several levels with a single sort.
pub fn var_cvar(costs: &[f64], alphas: &[f64]) -> Result<Vec<(f64, f64, Option<f64>)>> {
    let v = sorted(costs)?;
    alphas
        .iter()
        .map(|&alpha| {
            check_alpha(alpha)?;
            let var = var_sorted(&v, alpha);
            Ok((alpha, var, tail_mean(&v, var)))
        })
        .collect()
}
