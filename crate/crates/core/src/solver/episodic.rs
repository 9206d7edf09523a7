//! Episodic variant of greedy risk-sensitive value iteration.
//!
//! Episodes start from one initial state, roll forward with epsilon-greedy
//! action selection and sampled successors, then back up the visited
//! `(h, s, a)` triples in reverse using the exact model probabilities.
//! Q-values start at zero, which is optimistic under negative rewards.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::{q_from_outcomes, PolicyTable, SolverConfig};
use crate::error::{Error, Result};
use crate::mdp::{ActionId, RecourseMdp};
use crate::schema::StateIndex;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodicConfig {
    pub max_episodes: usize,
    pub epsilon_decay: f64,
    pub initial_epsilon: f64,
    pub rng_seed: u64,
    pub initial_state: StateIndex,
}

impl EpisodicConfig {
    pub fn new(initial_state: StateIndex) -> Self {
        Self {
            max_episodes: 10_000,
            epsilon_decay: 0.9995,
            initial_epsilon: 1.0,
            rng_seed: 0,
            initial_state,
        }
    }

    /// Exploration rate of episode `k` (0-based).
    pub fn epsilon(&self, k: usize) -> f64 {
        self.initial_epsilon * self.epsilon_decay.powi(k as i32)
    }

    fn validate(&self) -> Result<()> {
        if self.max_episodes == 0 {
            return Err(Error::InvalidArgument(
                "max_episodes must be positive".into(),
            ));
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay < 1.0) {
            return Err(Error::InvalidArgument(
                "epsilon_decay must be in (0, 1)".into(),
            ));
        }
        if !(self.initial_epsilon > 0.0 && self.initial_epsilon <= 1.0) {
            return Err(Error::InvalidArgument(
                "initial_epsilon must be in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EpisodicRun {
    pub policy: PolicyTable,
    /// Sampled total cost of each episode, in order.
    pub episode_costs: Vec<f64>,
    /// Distinct `(h, s)` pairs that received a backup.
    pub visited: usize,
}

impl EpisodicRun {
    /// Mean and population standard deviation of the last `window` episode costs.
    pub fn tail_stats(&self, window: usize) -> (f64, f64) {
        let start = self.episode_costs.len().saturating_sub(window);
        let tail = &self.episode_costs[start..];
        let n = tail.len() as f64;
        let mean = tail.iter().sum::<f64>() / n;
        let var = tail.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / n;
        (mean, var.sqrt())
    }
}

type QRow = SmallVec<[(ActionId, f64); 8]>;

struct QTable<'a> {
    mdp: &'a RecourseMdp,
    // keyed by (h - 1, s)
    rows: HashMap<(usize, StateIndex), QRow>,
}

impl<'a> QTable<'a> {
    fn row(&mut self, h: usize, s: StateIndex) -> &mut QRow {
        let mdp = self.mdp;
        self.rows.entry((h, s)).or_insert_with(|| {
            mdp.applicable_actions(s)
                .into_iter()
                .map(|a| (a, 0.0))
                .collect()
        })
    }

    /// `max_a Q_h(s, a)`; untouched rows are all zero.
    fn value(&self, h: usize, horizon: usize, s: StateIndex) -> f64 {
        if h >= horizon {
            return 0.0;
        }
        self.rows
            .get(&(h, s))
            .map(|row| greedy(row).1)
            .unwrap_or(0.0)
    }
}

fn greedy(row: &QRow) -> (ActionId, f64) {
    let mut best = row[0];
    for &(a, q) in &row[1..] {
        if q > best.1 {
            best = (a, q);
        }
    }
    best
}

pub fn g_rsevi(
    mdp: &RecourseMdp,
    config: &SolverConfig,
    ep: &EpisodicConfig,
) -> Result<EpisodicRun> {
    config.validate()?;
    ep.validate()?;
    if ep.initial_state.0 >= mdp.schema().cardinality() {
        return Err(Error::IndexOutOfRange {
            index: ep.initial_state.0,
            cardinality: mdp.schema().cardinality(),
        });
    }
    let horizon = config.horizon;
    let mut rng = ChaCha8Rng::seed_from_u64(ep.rng_seed);
    let mut q = QTable {
        mdp,
        rows: HashMap::new(),
    };
    let mut episode_costs = Vec::with_capacity(ep.max_episodes);
    let mut trace: Vec<(StateIndex, ActionId)> = Vec::with_capacity(horizon);
    let mut next_values = vec![0.0; mdp.num_states()];

    for k in 0..ep.max_episodes {
        let epsilon = ep.epsilon(k);
        trace.clear();
        let mut s = ep.initial_state;
        let mut total = 0.0;
        for h in 0..horizon {
            let row = q.row(h, s);
            let a = if rng.random_bool(epsilon) {
                row[rng.random_range(0..row.len())].0
            } else {
                greedy(row).0
            };
            trace.push((s, a));
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
            total += chosen.cost;
            s = chosen.successor;
        }
        episode_costs.push(total);

        for h in (0..horizon).rev() {
            let (s, a) = trace[h];
            let outcomes = mdp.transitions(s, a)?;
            for o in &outcomes {
                next_values[o.successor.as_usize()] = q.value(h + 1, horizon, o.successor);
            }
            let value = q_from_outcomes(&outcomes, &next_values, config.beta, config.deviation);
            let row = q.row(h, s);
            if let Some(entry) = row.iter_mut().find(|(id, _)| *id == a) {
                entry.1 = value;
            }
        }
    }

    // Untouched entries fall back to the greedy choice under all-zero Q,
    // i.e. the lowest applicable action id.
    let n = mdp.num_states();
    let fallback: Vec<ActionId> = (0..n as u64)
        .map(|s| mdp.applicable_actions(StateIndex(s))[0])
        .collect();
    let mut pi = vec![fallback; horizon];
    let mut values = vec![vec![0.0; n]; horizon + 1];
    for (&(h, s), row) in &q.rows {
        let (a, v) = greedy(row);
        pi[h][s.as_usize()] = a;
        values[h][s.as_usize()] = v;
    }

    Ok(EpisodicRun {
        policy: PolicyTable::from_parts(pi, values, true)?,
        episode_costs,
        visited: q.rows.len(),
    })
}
