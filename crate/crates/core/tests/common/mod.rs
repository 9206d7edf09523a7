//! Independent oracles and fixtures shared by the integration tests.

#![allow(dead_code)]

use std::sync::Arc;

use rand::Rng;
use recourse::mdp::{ActionSpec, Effect, EffectMode, RecourseMdp, SuccessProb};
use recourse::model::{Comparator, Condition, Rule, RuleModel};
use recourse::schema::{FeatureKind, FeatureSchema, FeatureSpec, Mutability, StateIndex};

/// Plain finite-horizon value iteration under the expected-reward criterion.
/// `values[h - 1]` holds `V_h` for `h = 1 ..= H + 1`.
pub fn value_iteration(mdp: &RecourseMdp, horizon: usize) -> Vec<Vec<f64>> {
    let n = mdp.num_states();
    let mut values = vec![vec![0.0; n]; horizon + 1];
    for h in (0..horizon).rev() {
        for s in 0..n {
            let s = StateIndex(s as u64);
            let mut best = f64::NEG_INFINITY;
            for (_, outcomes) in mdp.choices(s) {
                let mut q = 0.0;
                for o in &outcomes {
                    q += o.probability * (-o.cost + values[h + 1][o.successor.as_usize()]);
                }
                best = best.max(q);
            }
            values[h][s.as_usize()] = best;
        }
    }
    values
}

/// Random recourse MDP with at most 6 states and 3 actions, plus a
/// non-goal start state. Retries until a non-goal state exists.
pub fn random_small_mdp<R: Rng>(rng: &mut R, horizon: usize) -> (RecourseMdp, StateIndex) {
    loop {
        let shapes: [&[usize]; 6] = [&[2], &[3], &[4], &[5], &[6], &[2, 3]];
        let shape = shapes[rng.random_range(0..shapes.len())];
        let names = ["a", "b", "c", "d", "e", "f"];
        let features: Vec<FeatureSpec> = shape
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                FeatureSpec::new(
                    format!("x{i}"),
                    FeatureKind::Ordinal,
                    &names[..k],
                    Mutability::Actionable,
                )
            })
            .collect();
        let schema = FeatureSchema::new(features, "goal").unwrap();

        let n_actions = rng.random_range(1..=3);
        let actions: Vec<ActionSpec> = (0..n_actions)
            .map(|i| {
                let f = rng.random_range(0..shape.len());
                let mode = match rng.random_range(0..3) {
                    0 => EffectMode::SetTo(rng.random_range(0..shape[f]) as u16),
                    1 => EffectMode::Increment,
                    _ => EffectMode::Decrement,
                };
                let p = if rng.random_bool(0.25) {
                    1.0
                } else {
                    rng.random_range(0.1..0.95)
                };
                let other = (f + 1) % shape.len();
                let side_effects = if shape.len() > 1 && rng.random_bool(0.3) {
                    vec![Effect::new(other, EffectMode::Increment)]
                } else {
                    Vec::new()
                };
                let on_failure =
                    (rng.random_bool(0.2)).then(|| Effect::new(f, EffectMode::Decrement));
                ActionSpec {
                    name: format!("act{i}"),
                    cost: rng.random_range(0.5..3.0),
                    primary: Effect::new(f, mode),
                    success: SuccessProb::Fixed(p),
                    side_effects,
                    on_failure,
                }
            })
            .collect();

        let rules: Vec<Rule> = (0..rng.random_range(1..=2))
            .map(|_| {
                let f = rng.random_range(0..shape.len());
                Rule::new(vec![Condition::new(
                    f,
                    Comparator::Eq,
                    rng.random_range(0..shape[f]) as u16,
                )])
            })
            .collect();
        let model = Arc::new(RuleModel::new(rules));
        let mdp = RecourseMdp::new(schema, actions, model, horizon, None).unwrap();
        let starts: Vec<StateIndex> = (0..mdp.num_states() as u64)
            .map(StateIndex)
            .filter(|&s| !mdp.is_goal(s))
            .collect();
        if starts.is_empty() {
            continue;
        }
        let s0 = starts[rng.random_range(0..starts.len())];
        return (mdp, s0);
    }
}

/// Midranks computed by counting, 1-based.
fn midranks(pooled: &[f64]) -> Vec<f64> {
    pooled
        .iter()
        .map(|&x| {
            let less = pooled.iter().filter(|&&y| y < x).count() as f64;
            let equal = pooled.iter().filter(|&&y| y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Exact two-sided Mann-Whitney p-value by listing every way of choosing
/// which pooled positions belong to the first sample.
pub fn mann_whitney_brute_force(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let n = pooled.len();
    let k = a.len();
    let mean = k as f64 * (n as f64 + 1.0) / 2.0;
    let observed: f64 = ranks[..k].iter().sum();
    let dev = (observed - mean).abs();
    let (mut total, mut extreme) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        total += 1;
        let sum: f64 = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| ranks[i])
            .sum();
        if (sum - mean).abs() >= dev - 1e-9 {
            extreme += 1;
        }
    }
    extreme as f64 / total as f64
}

/// Exact cost distribution of repeating a `p`-success unit-cost attempt
/// until success or `h` attempts: `(cost, probability, succeeded)`.
pub fn truncated_geometric(p: f64, h: usize) -> Vec<(f64, f64, bool)> {
    let mut out = Vec::new();
    for k in 1..=h {
        out.push((k as f64, (1.0 - p).powi(k as i32 - 1) * p, true));
    }
    out.push((h as f64, (1.0 - p).powi(h as i32), false));
    out
}

/// Analytic VaR of a discrete distribution: smallest atom with CDF >= alpha.
pub fn discrete_var(atoms: &[(f64, f64)], alpha: f64) -> f64 {
    let mut sorted = atoms.to_vec();
    sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut cdf = 0.0;
    for (x, p) in &sorted {
        cdf += p;
        if cdf >= alpha - 1e-12 {
            return *x;
        }
    }
    sorted.last().unwrap().0
}

/// Analytic CVaR: mean of the atoms strictly above the VaR.
pub fn discrete_cvar(atoms: &[(f64, f64)], alpha: f64) -> Option<f64> {
    let var = discrete_var(atoms, alpha);
    let (mass, sum) = atoms
        .iter()
        .filter(|(x, _)| *x > var)
        .fold((0.0, 0.0), |(m, s), (x, p)| (m + p, s + x * p));
    (mass > 0.0).then(|| sum / mass)
}

/// Merges atoms with equal cost.
pub fn merge_atoms(atoms: impl IntoIterator<Item = (f64, f64)>) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (x, p) in atoms {
        match out.iter_mut().find(|(y, _)| (*y - x).abs() < 1e-12) {
            Some(slot) => slot.1 += p,
            None => out.push((x, p)),
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}
