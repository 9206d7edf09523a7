//! Exact total-cost distributions and exhaustive policy search for tiny MDPs.
//!
//! Used to measure how far the greedy recursion is from the true optimum of
//! `mean(total reward) - beta * std(total reward)` at a given initial state.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::PolicyTable;
use crate::error::{Error, Result};
use crate::mdp::{ActionId, RecourseMdp};
use crate::schema::StateIndex;

pub const ORACLE_MAX_STATES: usize = 8;
pub const ORACLE_MAX_ACTIONS: usize = 3;
pub const ORACLE_MAX_HORIZON: usize = 4;

/// Exact distribution of the total cost accrued over the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostDistribution {
    /// `(total cost, probability)`, one atom per outcome path.
    pub atoms: Vec<(f64, f64)>,
    /// Probability of ending in a goal state.
    pub success: f64,
}

impl CostDistribution {
    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|(c, p)| c * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.atoms
            .iter()
            .map(|(c, p)| p * (c - mu) * (c - mu))
            .sum()
    }

    /// `mean(-cost) - beta * std(cost)`.
    pub fn objective(&self, beta: f64) -> f64 {
        -self.mean() - beta * self.variance().sqrt()
    }
}

/// Propagates the exact outcome tree of a (possibly step-dependent) policy.
pub fn policy_cost_distribution<F>(
    mdp: &RecourseMdp,
    s0: StateIndex,
    horizon: usize,
    mut policy: F,
) -> Result<CostDistribution>
where
    F: FnMut(usize, StateIndex) -> ActionId,
{
    // (state, accrued cost, probability)
    let mut frontier = vec![(s0, 0.0f64, 1.0f64)];
    for h in 1..=horizon {
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for (s, cost, p) in frontier {
            if mdp.is_goal(s) {
                next.push((s, cost, p));
                continue;
            }
            for o in mdp.transitions(s, policy(h, s))? {
                next.push((o.successor, cost + o.cost, p * o.probability));
            }
        }
        frontier = next;
    }
    let success = frontier
        .iter()
        .filter(|(s, _, _)| mdp.is_goal(*s))
        .map(|(_, _, p)| p)
        .sum();
    Ok(CostDistribution {
        atoms: frontier.into_iter().map(|(_, c, p)| (c, p)).collect(),
        success,
    })
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Optimal actions on the states reachable under the optimal policy;
    /// other entries hold the lowest applicable action.
    pub policy: PolicyTable,
    pub distribution: CostDistribution,
    pub objective: f64,
    pub policies_evaluated: u64,
}

type Assignment = Vec<BTreeMap<StateIndex, ActionId>>;

struct Search<'a> {
    mdp: &'a RecourseMdp,
    horizon: usize,
    beta: f64,
    best: Option<(f64, Assignment, CostDistribution)>,
    evaluated: u64,
}

impl Search<'_> {
    fn layer_states(&self, frontier: &[(StateIndex, f64, f64)]) -> Vec<StateIndex> {
        let mut states: Vec<StateIndex> = frontier
            .iter()
            .map(|(s, _, _)| *s)
            .filter(|s| !self.mdp.is_goal(*s))
            .collect();
        states.sort();
        states.dedup();
        states
    }

    fn recurse(
        &mut self,
        h: usize,
        frontier: Vec<(StateIndex, f64, f64)>,
        assignment: &mut Assignment,
    ) -> Result<()> {
        if h > self.horizon {
            self.evaluated += 1;
            let success = frontier
                .iter()
                .filter(|(s, _, _)| self.mdp.is_goal(*s))
                .map(|(_, _, p)| p)
                .sum();
            let dist = CostDistribution {
                atoms: frontier.iter().map(|&(_, c, p)| (c, p)).collect(),
                success,
            };
            let objective = dist.objective(self.beta);
            if self.best.as_ref().is_none_or(|(b, _, _)| objective > *b) {
                self.best = Some((objective, assignment.clone(), dist));
            }
            return Ok(());
        }

        let states = self.layer_states(&frontier);
        let options: Vec<_> = states
            .iter()
            .map(|&s| self.mdp.applicable_actions(s))
            .collect();
        let mut pick = vec![0usize; states.len()];
        loop {
            let layer: BTreeMap<StateIndex, ActionId> = states
                .iter()
                .zip(&pick)
                .zip(&options)
                .map(|((&s, &i), opts)| (s, opts[i]))
                .collect();
            let mut next = Vec::with_capacity(frontier.len() * 2);
            for &(s, cost, p) in &frontier {
                match layer.get(&s) {
                    None => next.push((s, cost, p)),
                    Some(&a) => {
                        for o in self.mdp.transitions(s, a)? {
                            next.push((o.successor, cost + o.cost, p * o.probability));
                        }
                    }
                }
            }
            assignment.push(layer);
            self.recurse(h + 1, next, assignment)?;
            assignment.pop();

            // odometer over the per-state choices
            let mut i = 0;
            loop {
                if i == pick.len() {
                    return Ok(());
                }
                pick[i] += 1;
                if pick[i] < options[i].len() {
                    break;
                }
                pick[i] = 0;
                i += 1;
            }
        }
    }
}

/// Exhaustively searches every deterministic per-step policy (restricted to
/// reachable states) for the maximizer of `mean - beta * std` of total reward
/// from `s0`. Refuses problems above the size limits.
pub fn enumerate_policies_oracle(
    mdp: &RecourseMdp,
    horizon: usize,
    beta: f64,
    s0: StateIndex,
) -> Result<OracleResult> {
    if mdp.num_states() > ORACLE_MAX_STATES
        || mdp.actions().len() > ORACLE_MAX_ACTIONS
        || horizon > ORACLE_MAX_HORIZON
    {
        return Err(Error::TooLarge(format!(
            "{} states, {} actions, horizon {} (limits {ORACLE_MAX_STATES}/{ORACLE_MAX_ACTIONS}/{ORACLE_MAX_HORIZON})",
            mdp.num_states(),
            mdp.actions().len(),
            horizon
        )));
    }
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    if s0.as_usize() >= mdp.num_states() {
        return Err(Error::IndexOutOfRange {
            index: s0.0,
            cardinality: mdp.num_states() as u64,
        });
    }
    let mut search = Search {
        mdp,
        horizon,
        beta,
        best: None,
        evaluated: 0,
    };
    search.recurse(1, vec![(s0, 0.0, 1.0)], &mut Vec::new())?;
    let (objective, assignment, distribution) = search.best.expect("at least one policy");

    let n = mdp.num_states();
    let mut pi: Vec<Vec<ActionId>> = (0..horizon)
        .map(|_| {
            (0..n as u64)
                .map(|s| mdp.applicable_actions(StateIndex(s))[0])
                .collect()
        })
        .collect();
    for (h, layer) in assignment.iter().enumerate() {
        for (&s, &a) in layer {
            pi[h][s.as_usize()] = a;
        }
    }
    let values = vec![vec![0.0; n]; horizon + 1];
    Ok(OracleResult {
        policy: PolicyTable::from_parts(pi, values, true)?,
        distribution,
        objective,
        policies_evaluated: search.evaluated,
    })
}
