//! Monte-Carlo evaluation of recourse policies.
//!
//! Every instance gets its own ChaCha8 stream seeded with
//! `seed + instance position`, so results do not depend on thread count.

pub mod disparity;
pub mod mwu;
pub mod risk;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{ActionId, RecourseMdp};
use crate::schema::{Mutability, StateIndex};
use crate::solver::PolicyTable;

pub use disparity::{disparity, DisparityReport, MeasureComparison};
pub use mwu::{mann_whitney_u, MannWhitney, MwuMethod};
pub use risk::{cvar_alpha, var_alpha, var_cvar};

pub const DEFAULT_ALPHAS: [f64; 2] = [0.80, 0.95];
pub const DEFAULT_TRIALS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RolloutStep {
    pub state: StateIndex,
    pub action: ActionId,
    pub cost: f64,
    pub successor: StateIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutRecord {
    pub initial: StateIndex,
    pub trace: Vec<RolloutStep>,
    pub total_cost: f64,
    pub succeeded: bool,
    pub steps_to_goal: Option<usize>,
}

impl RolloutRecord {
    pub fn final_state(&self) -> StateIndex {
        self.trace.last().map_or(self.initial, |s| s.successor)
    }
}

/// Samples one recourse attempt, stopping on goal entry or after the
/// policy's horizon.
pub fn rollout<R: Rng + ?Sized>(
    mdp: &RecourseMdp,
    policy: &PolicyTable,
    s0: StateIndex,
    rng: &mut R,
) -> Result<RolloutRecord> {
    if policy.num_states() != mdp.num_states() {
        return Err(Error::SchemaMismatch(format!(
            "policy covers {} states, model has {}",
            policy.num_states(),
            mdp.num_states()
        )));
    }
    if s0.as_usize() >= mdp.num_states() {
        return Err(Error::IndexOutOfRange {
            index: s0.0,
            cardinality: mdp.num_states() as u64,
        });
    }
    let mut s = s0;
    let mut trace = Vec::new();
    let mut total_cost = 0.0;
    for h in 1..=policy.horizon() {
        if mdp.is_goal(s) {
            break;
        }
        let a = policy.action(h, s);
        let outcomes = mdp.transitions(s, a)?;
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = outcomes[outcomes.len() - 1];
        for o in &outcomes {
            acc += o.probability;
            if u < acc {
                chosen = *o;
                break;
            }
        }
        trace.push(RolloutStep {
            state: s,
            action: a,
            cost: chosen.cost,
            successor: chosen.successor,
        });
        total_cost += chosen.cost;
        s = chosen.successor;
    }
    let succeeded = mdp.is_goal(s);
    Ok(RolloutRecord {
        initial: s0,
        steps_to_goal: succeeded.then_some(trace.len()),
        trace,
        total_cost,
        succeeded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub n_trials: usize,
    pub alphas: Vec<f64>,
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            n_trials: DEFAULT_TRIALS,
            alphas: DEFAULT_ALPHAS.to_vec(),
            seed: 0,
        }
    }
}

impl EvalOptions {
    fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::InvalidArgument("n_trials must be positive".into()));
        }
        if self.alphas.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one alpha is required".into(),
            ));
        }
        for &a in &self.alphas {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "alpha must be in (0, 1), got {a}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRisk {
    pub alpha: f64,
    pub var: f64,
    pub cvar: Option<f64>,
}

/// Risk measures of one instance, or their unweighted mean over instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub n_instances: usize,
    pub n_trials: usize,
    pub rng_seed: u64,
    pub rho_h: f64,
    pub mu_cost: f64,
    pub sigma2_cost: f64,
    /// Monte-Carlo standard error of `mu_cost`.
    pub mu_se: f64,
    /// Monte-Carlo standard error of `sigma2_cost`.
    pub sigma2_se: f64,
    pub tail: Vec<TailRisk>,
    /// Means over successful rollouts; `None` when none succeeded.
    pub sparsity: Option<f64>,
    pub proximity: Option<f64>,
}

impl RiskReport {
    pub fn var_at(&self, alpha: f64) -> Option<f64> {
        self.tail.iter().find(|t| t.alpha == alpha).map(|t| t.var)
    }

    pub fn cvar_at(&self, alpha: f64) -> Option<f64> {
        self.tail
            .iter()
            .find(|t| t.alpha == alpha)
            .and_then(|t| t.cvar)
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.tail.iter().map(|t| t.alpha).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub instance: StateIndex,
    pub report: RiskReport,
    #[serde(skip)]
    pub costs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub per_instance: Vec<InstanceReport>,
    pub aggregate: RiskReport,
    /// Instances already favorable at the start, left out of the report.
    pub skipped: Vec<StateIndex>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn mean_opt(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = xs.flatten().collect();
    (!v.is_empty()).then(|| mean(&v))
}

fn check_immutables(mdp: &RecourseMdp, record: &RolloutRecord) -> Result<()> {
    let schema = mdp.schema();
    let end = record.final_state();
    for (i, f) in schema.features().iter().enumerate() {
        if f.mutability == Mutability::Immutable
            && schema.level_of(record.initial, i) != schema.level_of(end, i)
        {
            return Err(Error::InvalidAction {
                action: format!("rollout from {}", record.initial),
                reason: format!("immutable feature {} changed", f.name),
            });
        }
    }
    Ok(())
}

/// Runs `n_trials` rollouts from one initial state.
pub fn evaluate_instance(
    mdp: &RecourseMdp,
    policy: &PolicyTable,
    s0: StateIndex,
    options: &EvalOptions,
    seed: u64,
) -> Result<InstanceReport> {
    options.validate()?;
    let schema = mdp.schema();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut costs = Vec::with_capacity(options.n_trials);
    let mut successes = 0usize;
    let mut sparsity = Vec::new();
    let mut proximity = Vec::new();
    let start = schema.decode(s0)?;
    for _ in 0..options.n_trials {
        let record = rollout(mdp, policy, s0, &mut rng)?;
        check_immutables(mdp, &record)?;
        costs.push(record.total_cost);
        if record.succeeded {
            successes += 1;
            let d = schema.feature_distance(&start, &schema.decode(record.final_state())?)?;
            sparsity.push(d.sparsity as f64);
            proximity.push(d.proximity);
        }
    }
    let n = costs.len() as f64;
    let mu = mean(&costs);
    let sigma2 = costs.iter().map(|c| (c - mu) * (c - mu)).sum::<f64>() / n;
    let m4 = costs.iter().map(|c| (c - mu).powi(4)).sum::<f64>() / n;
    let tail = var_cvar(&costs, &options.alphas)?
        .into_iter()
        .map(|(alpha, var, cvar)| TailRisk { alpha, var, cvar })
        .collect();
    let report = RiskReport {
        n_instances: 1,
        n_trials: options.n_trials,
        rng_seed: seed,
        rho_h: successes as f64 / n,
        mu_cost: mu,
        sigma2_cost: sigma2,
        mu_se: (sigma2 / n).sqrt(),
        sigma2_se: ((m4 - sigma2 * sigma2).max(0.0) / n).sqrt(),
        tail,
        sparsity: (!sparsity.is_empty()).then(|| mean(&sparsity)),
        proximity: (!proximity.is_empty()).then(|| mean(&proximity)),
    };
    Ok(InstanceReport {
        instance: s0,
        report,
        costs,
    })
}

/// Unweighted mean of per-instance reports. Standard errors combine as for
/// a mean of independent estimates.
pub fn aggregate(reports: &[RiskReport], seed: u64) -> Result<RiskReport> {
    let first = reports.first().ok_or(Error::EmptySample)?;
    let alphas = first.alphas();
    if reports.iter().any(|r| r.alphas() != alphas) {
        return Err(Error::InvalidArgument(
            "reports use different alpha sets".into(),
        ));
    }
    let k = reports.len() as f64;
    let col = |f: fn(&RiskReport) -> f64| reports.iter().map(f).sum::<f64>() / k;
    let se =
        |f: fn(&RiskReport) -> f64| reports.iter().map(|r| f(r) * f(r)).sum::<f64>().sqrt() / k;
    let tail = alphas
        .iter()
        .enumerate()
        .map(|(i, &alpha)| TailRisk {
            alpha,
            var: reports.iter().map(|r| r.tail[i].var).sum::<f64>() / k,
            cvar: mean_opt(reports.iter().map(|r| r.tail[i].cvar)),
        })
        .collect();
    Ok(RiskReport {
        n_instances: reports.len(),
        n_trials: first.n_trials,
        rng_seed: seed,
        rho_h: col(|r| r.rho_h),
        mu_cost: col(|r| r.mu_cost),
        sigma2_cost: col(|r| r.sigma2_cost),
        mu_se: se(|r| r.mu_se),
        sigma2_se: se(|r| r.sigma2_se),
        tail,
        sparsity: mean_opt(reports.iter().map(|r| r.sparsity)),
        proximity: mean_opt(reports.iter().map(|r| r.proximity)),
    })
}

/// Evaluates a policy on every instance that starts unfavorable.
pub fn evaluate(
    mdp: &RecourseMdp,
    policy: &PolicyTable,
    instances: &[StateIndex],
    options: &EvalOptions,
) -> Result<Evaluation> {
    options.validate()?;
    if instances.is_empty() {
        return Err(Error::InvalidArgument("no instances to evaluate".into()));
    }
    let per_instance: Vec<Option<InstanceReport>> = instances
        .par_iter()
        .enumerate()
        .map(|(i, &s0)| {
            if s0.as_usize() >= mdp.num_states() {
                return Err(Error::IndexOutOfRange {
                    index: s0.0,
                    cardinality: mdp.num_states() as u64,
                });
            }
            if mdp.is_goal(s0) {
                return Ok(None);
            }
            evaluate_instance(
                mdp,
                policy,
                s0,
                options,
                options.seed.wrapping_add(i as u64),
            )
            .map(Some)
        })
        .collect::<Result<_>>()?;

    let mut skipped = Vec::new();
    let mut reports = Vec::with_capacity(per_instance.len());
    for (r, &s0) in per_instance.into_iter().zip(instances) {
        match r {
            Some(r) => reports.push(r),
            None => skipped.push(s0),
        }
    }
    if !skipped.is_empty() {
        log::warn!("{} instance(s) already favorable, skipped", skipped.len());
    }
    if reports.is_empty() {
        return Err(Error::InvalidArgument(
            "every instance is already favorable; nothing to evaluate".into(),
        ));
    }
    let plain: Vec<RiskReport> = reports.iter().map(|r| r.report.clone()).collect();
    Ok(Evaluation {
        aggregate: aggregate(&plain, options.seed)?,
        per_instance: reports,
        skipped,
    })
}
