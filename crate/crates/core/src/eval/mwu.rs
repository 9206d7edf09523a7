//! Two-sided Mann-Whitney U test.
//!
//! Small samples use the exact permutation distribution of the (midrank)
//! rank sum, counted with a subset-sum recurrence so ties are handled
//! exactly. Larger samples use the tie-corrected normal approximation with a
//! continuity correction.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Below this size (smaller group) the exact distribution is used.
pub const EXACT_MIN_GROUP: usize = 8;
/// Upper bound on the combined size for the exact route.
pub const EXACT_MAX_TOTAL: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MwuMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U statistic of the first sample.
    pub u: f64,
    pub p_value: f64,
    pub method: MwuMethod,
}

/// Midranks (1-based) of the pooled sample, doubled so they are integers.
fn doubled_midranks(pooled: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0u64; pooled.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && pooled[order[j]] == pooled[order[i]] {
            j += 1;
        }
        // positions i..j share rank (i+1 + j)/2, doubled: i + 1 + j
        let r2 = (i + 1 + j) as u64;
        for &k in &order[i..j] {
            ranks[k] = r2;
        }
        i = j;
    }
    ranks
}

fn check(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument("sample contains NaN".into()));
    }
    Ok(())
}

pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    check(a, b)?;
    if a.len().min(b.len()) < EXACT_MIN_GROUP && a.len() + b.len() <= EXACT_MAX_TOTAL {
        mann_whitney_u_exact(a, b)
    } else {
        mann_whitney_u_normal(a, b)
    }
}

fn u_from_rank_sum2(rank_sum2: u64, n_a: usize) -> f64 {
    rank_sum2 as f64 / 2.0 - (n_a * (n_a + 1)) as f64 / 2.0
}

/// Exact two-sided p-value: probability, over all equally likely splits of
/// the pooled ranks, of a rank sum at least as far from its mean.
pub fn mann_whitney_u_exact(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    check(a, b)?;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = doubled_midranks(&pooled);
    let n = pooled.len();
    let k = a.len();
    let observed: u64 = ranks[..k].iter().sum();
    let max_sum: u64 = ranks.iter().sum();

    // ways[j][s]: number of j-subsets of the ranks seen so far summing to s
    let width = max_sum as usize + 1;
    let mut ways = vec![vec![0f64; width]; k + 1];
    ways[0][0] = 1.0;
    for &r in &ranks {
        let r = r as usize;
        for j in (1..=k).rev() {
            let (lo, hi) = ways.split_at_mut(j);
            let prev = &lo[j - 1];
            let cur = &mut hi[0];
            for s in (r..width).rev() {
                if prev[s - r] != 0.0 {
                    cur[s] += prev[s - r];
                }
            }
        }
    }

    // mean of the doubled rank sum is k (n + 1); compare doubled distances
    let mean2 = (k * (n + 1)) as i64;
    let observed_dev = (observed as i64 - mean2).abs();
    let mut total = 0.0;
    let mut extreme = 0.0;
    for (s, &w) in ways[k].iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        total += w;
        if (s as i64 - mean2).abs() >= observed_dev {
            extreme += w;
        }
    }
    Ok(MannWhitney {
        u: u_from_rank_sum2(observed, k),
        p_value: (extreme / total).min(1.0),
        method: MwuMethod::Exact,
    })
}

pub fn mann_whitney_u_normal(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    check(a, b)?;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = doubled_midranks(&pooled);
    let (n_a, n_b) = (a.len() as f64, b.len() as f64);
    let n = n_a + n_b;
    let observed: u64 = ranks[..a.len()].iter().sum();
    let u = u_from_rank_sum2(observed, a.len());

    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let var = n_a * n_b / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return Ok(MannWhitney {
            u,
            p_value: 1.0,
            method: MwuMethod::Normal,
        });
    }
    let dev = (u - n_a * n_b / 2.0).abs();
    let z = (dev - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::standard();
    let p = 2.0 * (1.0 - normal.cdf(z));
    Ok(MannWhitney {
        u,
        p_value: p.clamp(0.0, 1.0),
        method: MwuMethod::Normal,
    })
}
