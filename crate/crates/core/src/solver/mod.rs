//! Greedy risk-sensitive value iteration and its variants.
//!
//! Values use the reward convention (reward = -cost) and are maximized. Each
//! backward step scores an action by the mean of `reward + V_{h+1}` over its
//! outcomes minus `beta` times a deviation of that same quantity. The
//! recursion is greedy: it does not optimize the mean/deviation of the total
//! cost distribution exactly, see [`oracle`] for the exhaustive comparison.

pub mod episodic;
pub mod oracle;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{ActionId, RecourseMdp, TransitionOutcome};
use crate::schema::StateIndex;

pub use episodic::{g_rsevi, EpisodicConfig, EpisodicRun};
pub use oracle::{
    enumerate_policies_oracle, policy_cost_distribution, CostDistribution, OracleResult,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationMode {
    /// Standard deviation over all outcomes.
    FullSigma,
    /// Only outcomes whose value falls below the mean contribute.
    LowerPartial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub beta: f64,
    pub horizon: usize,
    pub deviation: DeviationMode,
}

impl SolverConfig {
    pub fn new(beta: f64, horizon: usize) -> Self {
        Self {
            beta,
            horizon,
            deviation: DeviationMode::FullSigma,
        }
    }

    pub fn lower_partial(mut self) -> Self {
        self.deviation = DeviationMode::LowerPartial;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "beta must be a non-negative number, got {}",
                self.beta
            )));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-step policy and values. Steps are 1-based as in `pi_1 .. pi_H`;
/// `V_{H+1}` is stored and identically zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTable {
    horizon: usize,
    num_states: usize,
    pi: Vec<Vec<ActionId>>,
    values: Vec<Vec<f64>>,
    /// True when only part of the table was actually optimized (episodic
    /// solver); other entries hold the greedy choice under untouched Q.
    partial: bool,
}

impl PolicyTable {
    pub(crate) fn from_parts(
        pi: Vec<Vec<ActionId>>,
        values: Vec<Vec<f64>>,
        partial: bool,
    ) -> Result<Self> {
        let horizon = pi.len();
        if horizon == 0 || values.len() != horizon + 1 {
            return Err(Error::malformed(
                "policy table",
                "step counts do not line up",
            ));
        }
        let num_states = values[0].len();
        if pi.iter().any(|row| row.len() != num_states)
            || values.iter().any(|row| row.len() != num_states)
        {
            return Err(Error::malformed("policy table", "ragged rows"));
        }
        if values[horizon].iter().any(|&v| v != 0.0) {
            return Err(Error::malformed(
                "policy table",
                "terminal values must be zero",
            ));
        }
        Ok(Self {
            horizon,
            num_states,
            pi,
            values,
            partial,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn is_partial(&self) -> bool {
        self.partial
    }

    /// Action at step `h` (1-based).
    #[inline]
    pub fn action(&self, h: usize, s: StateIndex) -> ActionId {
        self.pi[h - 1][s.as_usize()]
    }

    /// `V_h(s)` for `h` in `1..=H+1`.
    #[inline]
    pub fn value(&self, h: usize, s: StateIndex) -> f64 {
        self.values[h - 1][s.as_usize()]
    }

    pub fn step_actions(&self, h: usize) -> &[ActionId] {
        &self.pi[h - 1]
    }

    pub fn step_values(&self, h: usize) -> &[f64] {
        &self.values[h - 1]
    }
}

/// Mean and deviation of `reward + V_{h+1}` over an outcome distribution.
pub fn mean_and_deviation(
    outcomes: &[TransitionOutcome],
    next_values: &[f64],
    mode: DeviationMode,
) -> (f64, f64) {
    let branch = |o: &TransitionOutcome| -o.cost + next_values[o.successor.as_usize()];
    let mu: f64 = outcomes.iter().map(|o| o.probability * branch(o)).sum();
    let var: f64 = outcomes
        .iter()
        .filter(|o| mode == DeviationMode::FullSigma || branch(o) < mu)
        .map(|o| {
            let d = branch(o) - mu;
            o.probability * d * d
        })
        .sum();
    (mu, var.sqrt())
}

/// Risk-sensitive action value from an explicit outcome list.
#[inline]
pub fn q_from_outcomes(
    outcomes: &[TransitionOutcome],
    next_values: &[f64],
    beta: f64,
    mode: DeviationMode,
) -> f64 {
    let (mu, dev) = mean_and_deviation(outcomes, next_values, mode);
    if beta == 0.0 {
        mu
    } else {
        mu - beta * dev
    }
}

/// Risk-sensitive value of taking `a` in `s` given `V_{h+1}`.
pub fn q_value(
    mdp: &RecourseMdp,
    s: StateIndex,
    a: ActionId,
    next_values: &[f64],
    beta: f64,
    mode: DeviationMode,
) -> Result<f64> {
    if next_values.len() != mdp.num_states() {
        return Err(Error::InvalidArgument(format!(
            "next_values has {} entries for {} states",
            next_values.len(),
            mdp.num_states()
        )));
    }
    let outcomes = mdp.transitions(s, a)?;
    Ok(q_from_outcomes(&outcomes, next_values, beta, mode))
}

/// Best action and value of one state; ties go to the lowest action id.
pub(crate) fn greedy_backup(
    mdp: &RecourseMdp,
    s: StateIndex,
    next_values: &[f64],
    beta: f64,
    mode: DeviationMode,
) -> (ActionId, f64) {
    let mut best = (ActionId::NOOP, f64::NEG_INFINITY);
    for (a, outcomes) in mdp.choices(s) {
        let q = q_from_outcomes(&outcomes, next_values, beta, mode);
        if q > best.1 {
            best = (a, q);
        }
    }
    best
}

/// Single backward sweep over every state for `h = H .. 1`.
pub fn g_rsvi(mdp: &RecourseMdp, config: &SolverConfig) -> Result<PolicyTable> {
    config.validate()?;
    let n = mdp.num_states();
    let horizon = config.horizon;
    let mut values = vec![vec![0.0; n]; horizon + 1];
    let mut pi = vec![vec![ActionId::NOOP; n]; horizon];

    for h in (0..horizon).rev() {
        let (head, tail) = values.split_at_mut(h + 1);
        let next = &tail[0];
        let current = &mut head[h];
        pi[h]
            .par_iter_mut()
            .zip(current.par_iter_mut())
            .enumerate()
            .for_each(|(s, (action, value))| {
                let (a, v) = greedy_backup(
                    mdp,
                    StateIndex(s as u64),
                    next,
                    config.beta,
                    config.deviation,
                );
                *action = a;
                *value = v;
            });
    }
    PolicyTable::from_parts(pi, values, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use smallvec::smallvec;

    fn outcome(s: u64, p: f64, cost: f64) -> TransitionOutcome {
        TransitionOutcome {
            successor: StateIndex(s),
            probability: p,
            cost,
        }
    }

    #[test]
    fn deterministic_action_has_no_risk_term() {
        let o: smallvec::SmallVec<[_; 2]> = smallvec![outcome(1, 1.0, 1.0)];
        for beta in [0.0, 0.5, 3.0] {
            let q = q_from_outcomes(&o, &[0.0, 0.0], beta, DeviationMode::FullSigma);
            assert_eq!(q, -1.0);
        }
    }

    #[test]
    fn two_branch_hand_example() {
        // success p=0.9 to a state worth 0, failure p=0.1 to a state worth -1, cost 1
        let o = [outcome(0, 0.9, 1.0), outcome(1, 0.1, 1.0)];
        let next = [0.0, -1.0];
        let (mu, sd) = mean_and_deviation(&o, &next, DeviationMode::FullSigma);
        assert!((mu + 1.1).abs() < 1e-12);
        assert!((sd * sd - 0.09).abs() < 1e-12);
        let q = q_from_outcomes(&o, &next, 0.5, DeviationMode::FullSigma);
        assert!((q + 1.25).abs() < 1e-12);

        let (_, lp) = mean_and_deviation(&o, &next, DeviationMode::LowerPartial);
        assert!((lp - (0.1f64 * 0.81).sqrt()).abs() < 1e-12);
        assert!((lp - 0.2846).abs() < 1e-4);
        let q = q_from_outcomes(&o, &next, 0.5, DeviationMode::LowerPartial);
        assert!((q + 1.2423).abs() < 1e-4);
    }

    #[test]
    fn invalid_solver_config() {
        assert!(SolverConfig::new(-0.1, 3).validate().is_err());
        assert!(SolverConfig::new(f64::NAN, 3).validate().is_err());
        assert!(SolverConfig::new(0.1, 0).validate().is_err());
    }
}
