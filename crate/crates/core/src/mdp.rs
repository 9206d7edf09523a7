//! The finite-horizon recourse MDP: factored states, one-feature actions with
//! success probabilities, and absorbing zero-cost goal states.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::{smallvec, SmallVec};

use crate::error::{Error, Result};
use crate::model::DecisionModel;
use crate::schema::{FeatureSchema, Mutability, StateIndex};

/// Largest state space we memoize goal flags for.
pub const MAX_STATES: u64 = 1 << 31;

/// Declared actions are numbered in config order; the two synthetic actions
/// sort after every declared one so lowest-id tie-breaking never picks them
/// over a real action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub u16);

impl ActionId {
    /// Zero-cost self loop available only in goal states.
    pub const NOOP: ActionId = ActionId(u16::MAX);
    /// Self loop at the cheapest action cost for non-goal dead ends.
    pub const STALL: ActionId = ActionId(u16::MAX - 1);

    pub fn is_declared(self) -> bool {
        self != Self::NOOP && self != Self::STALL
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ActionId::NOOP => f.write_str("noop"),
            ActionId::STALL => f.write_str("stall"),
            ActionId(i) => write!(f, "#{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectMode {
    SetTo(u16),
    /// One level up, saturating when applied as a side effect.
    Increment,
    /// One level down, saturating when applied as a side effect.
    Decrement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Effect {
    pub feature: usize,
    pub mode: EffectMode,
}

impl Effect {
    pub fn new(feature: usize, mode: EffectMode) -> Self {
        Self { feature, mode }
    }

    /// Target level, or `None` when the effect would not change the feature.
    fn target(&self, current: u16, levels: u16) -> Option<u16> {
        match self.mode {
            EffectMode::SetTo(l) => (l != current).then_some(l),
            EffectMode::Increment => (current + 1 < levels).then_some(current + 1),
            EffectMode::Decrement => current.checked_sub(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuccessProb {
    Fixed(f64),
    /// Indexed by the target level of the primary effect; `None` marks a
    /// target the action cannot reach.
    PerTarget(Vec<Option<f64>>),
}

impl SuccessProb {
    fn for_target(&self, target: u16) -> Option<f64> {
        match self {
            SuccessProb::Fixed(p) => Some(*p),
            SuccessProb::PerTarget(map) => map.get(target as usize).copied().flatten(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSpec {
    pub name: String,
    /// Paid on every attempt, successful or not.
    pub cost: f64,
    pub primary: Effect,
    pub success: SuccessProb,
    /// Applied on the success branch only.
    #[serde(default)]
    pub side_effects: Vec<Effect>,
    /// Where a failed attempt lands; `None` keeps the state unchanged.
    #[serde(default)]
    pub on_failure: Option<Effect>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionOutcome {
    pub successor: StateIndex,
    pub probability: f64,
    pub cost: f64,
}

pub type Outcomes = SmallVec<[TransitionOutcome; 2]>;

pub struct RecourseMdp {
    schema: FeatureSchema,
    actions: Vec<ActionSpec>,
    model: Arc<dyn DecisionModel>,
    horizon: usize,
    goal_restriction: Option<BTreeSet<StateIndex>>,
    goal: Vec<bool>,
    min_cost: f64,
    dead_ends: usize,
}

impl fmt::Debug for RecourseMdp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RecourseMdp")
            .field("states", &self.schema.cardinality())
            .field("actions", &self.actions.len())
            .field("horizon", &self.horizon)
            .field("goals", &self.goal_count())
            .field("dead_ends", &self.dead_ends)
            .finish()
    }
}

impl RecourseMdp {
    /// Validates the action models and memoizes the goal flag of every state.
    pub fn new(
        schema: FeatureSchema,
        actions: Vec<ActionSpec>,
        model: Arc<dyn DecisionModel>,
        horizon: usize,
        goal_restriction: Option<Vec<StateIndex>>,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        if schema.cardinality() > MAX_STATES {
            return Err(Error::Schema(format!(
                "state space of {} states is too large to solve tabularly",
                schema.cardinality()
            )));
        }
        if actions.len() >= ActionId::STALL.0 as usize {
            return Err(Error::InvalidArgument("too many actions".into()));
        }
        for a in &actions {
            validate_action(&schema, a)?;
        }
        let restriction = match goal_restriction {
            Some(list) => {
                for s in &list {
                    if s.0 >= schema.cardinality() {
                        return Err(Error::IndexOutOfRange {
                            index: s.0,
                            cardinality: schema.cardinality(),
                        });
                    }
                }
                Some(list.into_iter().collect::<BTreeSet<_>>())
            }
            None => None,
        };

        let goal: Vec<bool> = (0..schema.cardinality())
            .into_par_iter()
            .map(|i| {
                let s = StateIndex(i);
                let state = schema.decode(s).expect("index in range");
                model.classify(&state).is_favorable()
                    && restriction.as_ref().is_none_or(|r| r.contains(&s))
            })
            .collect();

        let min_cost = actions.iter().map(|a| a.cost).fold(f64::INFINITY, f64::min);

        let mut mdp = Self {
            schema,
            actions,
            model,
            horizon,
            goal_restriction: restriction,
            goal,
            min_cost: if min_cost.is_finite() { min_cost } else { 1.0 },
            dead_ends: 0,
        };
        mdp.dead_ends = (0..mdp.schema.cardinality())
            .into_par_iter()
            .filter(|&i| mdp.is_dead_end(StateIndex(i)))
            .count();
        if mdp.dead_ends > 0 {
            log::warn!(
                "{} non-goal states have no applicable action; they stall at cost {}",
                mdp.dead_ends,
                mdp.min_cost
            );
        }
        Ok(mdp)
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn actions(&self) -> &[ActionSpec] {
        &self.actions
    }

    pub fn model(&self) -> &Arc<dyn DecisionModel> {
        &self.model
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn with_horizon(mut self, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        self.horizon = horizon;
        Ok(self)
    }

    pub fn goal_restriction(&self) -> Option<&BTreeSet<StateIndex>> {
        self.goal_restriction.as_ref()
    }

    pub fn num_states(&self) -> usize {
        self.goal.len()
    }

    pub fn goal_count(&self) -> usize {
        self.goal.iter().filter(|&&g| g).count()
    }

    pub fn dead_end_count(&self) -> usize {
        self.dead_ends
    }

    pub fn min_action_cost(&self) -> f64 {
        self.min_cost
    }

    pub fn action_name(&self, a: ActionId) -> &str {
        match a {
            ActionId::NOOP => "noop",
            ActionId::STALL => "stall",
            ActionId(i) => &self.actions[i as usize].name,
        }
    }

    pub fn action_by_name(&self, name: &str) -> Option<ActionId> {
        self.actions
            .iter()
            .position(|a| a.name == name)
            .map(|i| ActionId(i as u16))
    }

    #[inline]
    pub fn is_goal(&self, s: StateIndex) -> bool {
        self.goal[s.as_usize()]
    }

    fn check_state(&self, s: StateIndex) -> Result<()> {
        if s.0 >= self.schema.cardinality() {
            return Err(Error::IndexOutOfRange {
                index: s.0,
                cardinality: self.schema.cardinality(),
            });
        }
        Ok(())
    }

    /// Success successor and probability of a declared action, or `None`
    /// when the primary effect cannot be realized in `s`.
    fn success_branch(&self, s: StateIndex, spec: &ActionSpec) -> Option<(StateIndex, f64)> {
        let f = spec.primary.feature;
        let levels = self.schema.feature(f).level_count() as u16;
        let current = self.schema.level_of(s, f);
        let target = spec.primary.target(current, levels)?;
        let p = spec.success.for_target(target)?;
        let mut next = self.schema.with_level(s, f, target);
        for side in &spec.side_effects {
            next = self.apply_saturating(next, side);
        }
        Some((next, p))
    }

    fn apply_saturating(&self, s: StateIndex, effect: &Effect) -> StateIndex {
        let levels = self.schema.feature(effect.feature).level_count() as u16;
        let current = self.schema.level_of(s, effect.feature);
        match effect.target(current, levels) {
            Some(t) => self.schema.with_level(s, effect.feature, t),
            None => s,
        }
    }

    fn is_dead_end(&self, s: StateIndex) -> bool {
        !self.is_goal(s)
            && self
                .actions
                .iter()
                .all(|spec| self.success_branch(s, spec).is_none())
    }

    /// Actions available in `s`, in ascending id order.
    pub fn applicable_actions(&self, s: StateIndex) -> SmallVec<[ActionId; 8]> {
        if self.is_goal(s) {
            return smallvec![ActionId::NOOP];
        }
        let list: SmallVec<[ActionId; 8]> = self
            .actions
            .iter()
            .enumerate()
            .filter(|(_, spec)| self.success_branch(s, spec).is_some())
            .map(|(i, _)| ActionId(i as u16))
            .collect();
        if list.is_empty() {
            smallvec![ActionId::STALL]
        } else {
            list
        }
    }

    /// Every applicable action of `s` together with its outcome distribution.
    pub fn choices(&self, s: StateIndex) -> SmallVec<[(ActionId, Outcomes); 8]> {
        if self.is_goal(s) {
            return smallvec![(ActionId::NOOP, self.self_loop(s, 0.0))];
        }
        let list: SmallVec<[(ActionId, Outcomes); 8]> = self
            .actions
            .iter()
            .enumerate()
            .filter_map(|(i, spec)| {
                self.declared_outcomes(s, spec)
                    .map(|o| (ActionId(i as u16), o))
            })
            .collect();
        if list.is_empty() {
            smallvec![(ActionId::STALL, self.self_loop(s, self.min_cost))]
        } else {
            list
        }
    }

    fn self_loop(&self, s: StateIndex, cost: f64) -> Outcomes {
        smallvec![TransitionOutcome {
            successor: s,
            probability: 1.0,
            cost,
        }]
    }

    fn declared_outcomes(&self, s: StateIndex, spec: &ActionSpec) -> Option<Outcomes> {
        let (success, p) = self.success_branch(s, spec)?;
        let mut out: Outcomes = smallvec![TransitionOutcome {
            successor: success,
            probability: p,
            cost: spec.cost,
        }];
        if p < 1.0 {
            let fail = match &spec.on_failure {
                Some(effect) => self.apply_saturating(s, effect),
                None => s,
            };
            out.push(TransitionOutcome {
                successor: fail,
                probability: 1.0 - p,
                cost: spec.cost,
            });
        }
        Some(out)
    }

    /// Outcome distribution of taking `a` in `s`.
    pub fn transitions(&self, s: StateIndex, a: ActionId) -> Result<Outcomes> {
        self.check_state(s)?;
        let inapplicable = || Error::InapplicableAction {
            action: a.to_string(),
            state: s.0,
        };
        let goal = self.is_goal(s);
        match a {
            ActionId::NOOP if goal => Ok(self.self_loop(s, 0.0)),
            ActionId::STALL if !goal && self.is_dead_end(s) => Ok(self.self_loop(s, self.min_cost)),
            ActionId::NOOP | ActionId::STALL => Err(inapplicable()),
            ActionId(i) => {
                if goal {
                    return Err(inapplicable());
                }
                let spec = self.actions.get(i as usize).ok_or_else(inapplicable)?;
                self.declared_outcomes(s, spec).ok_or_else(inapplicable)
            }
        }
    }
}

pub fn validate_action(schema: &FeatureSchema, a: &ActionSpec) -> Result<()> {
    let bad = |reason: String| Error::InvalidAction {
        action: a.name.clone(),
        reason,
    };
    if !(a.cost > 0.0 && a.cost.is_finite()) {
        return Err(bad(format!("cost must be positive, got {}", a.cost)));
    }
    let check_effect = |e: &Effect, role: &str| -> Result<()> {
        if e.feature >= schema.len() {
            return Err(bad(format!("{role} references feature #{}", e.feature)));
        }
        let spec = schema.feature(e.feature);
        if let EffectMode::SetTo(l) = e.mode {
            if l as usize >= spec.level_count() {
                return Err(bad(format!("{role} sets `{}` to level {l}", spec.name)));
            }
        }
        Ok(())
    };

    check_effect(&a.primary, "primary effect")?;
    let primary = schema.feature(a.primary.feature);
    if primary.mutability != Mutability::Actionable {
        return Err(bad(format!(
            "primary feature `{}` is not actionable",
            primary.name
        )));
    }
    for side in &a.side_effects {
        check_effect(side, "side effect")?;
        if matches!(side.mode, EffectMode::SetTo(_)) {
            return Err(bad("side effects must be increments or decrements".into()));
        }
        let f = schema.feature(side.feature);
        if f.mutability == Mutability::Immutable {
            return Err(bad(format!(
                "side effect touches immutable feature `{}`",
                f.name
            )));
        }
    }
    if let Some(fail) = &a.on_failure {
        check_effect(fail, "failure effect")?;
        let f = schema.feature(fail.feature);
        if f.mutability == Mutability::Immutable {
            return Err(bad(format!(
                "failure effect touches immutable feature `{}`",
                f.name
            )));
        }
    }
    let valid_p = |p: f64| p > 0.0 && p <= 1.0;
    match &a.success {
        SuccessProb::Fixed(p) if !valid_p(*p) => {
            return Err(bad(format!("success probability {p} outside (0, 1]")));
        }
        SuccessProb::PerTarget(map) => {
            if map.len() != primary.level_count() {
                return Err(bad("per-target probabilities must cover every level".into()));
            }
            if let Some(p) = map.iter().flatten().find(|p| !valid_p(**p)) {
                return Err(bad(format!("success probability {p} outside (0, 1]")));
            }
        }
        _ => {}
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Comparator, Condition, Rule, RuleModel};
    use crate::schema::{FeatureKind, FeatureSpec, State};

    fn toy() -> RecourseMdp {
        let schema = FeatureSchema::new(
            vec![
                FeatureSpec::new(
                    "edu",
                    FeatureKind::Ordinal,
                    &["hs", "ba", "ma"],
                    Mutability::Actionable,
                ),
                FeatureSpec::new(
                    "age",
                    FeatureKind::Ordinal,
                    &["young", "old"],
                    Mutability::MutableNonActionable,
                ),
                FeatureSpec::new(
                    "work",
                    FeatureKind::Nominal,
                    &["gov", "self"],
                    Mutability::Actionable,
                ),
                FeatureSpec::new(
                    "sex",
                    FeatureKind::Nominal,
                    &["f", "m"],
                    Mutability::Immutable,
                ),
            ],
            "ok",
        )
        .unwrap();
        let actions = vec![
            ActionSpec {
                name: "edu".into(),
                cost: 2.0,
                primary: Effect::new(0, EffectMode::Increment),
                success: SuccessProb::PerTarget(vec![None, Some(0.9), Some(1.0)]),
                side_effects: vec![Effect::new(1, EffectMode::Increment)],
                on_failure: None,
            },
            ActionSpec {
                name: "gov".into(),
                cost: 1.1,
                primary: Effect::new(2, EffectMode::SetTo(0)),
                success: SuccessProb::Fixed(0.7),
                side_effects: vec![],
                on_failure: None,
            },
        ];
        let model = RuleModel::new(vec![Rule::new(vec![Condition::new(0, Comparator::Ge, 2)])]);
        RecourseMdp::new(schema, actions, Arc::new(model), 4, None).unwrap()
    }

    fn idx(mdp: &RecourseMdp, levels: &[u16]) -> StateIndex {
        mdp.schema().encode(&State(levels.to_vec())).unwrap()
    }

    #[test]
    fn goal_states_only_offer_noop() {
        let mdp = toy();
        let g = idx(&mdp, &[2, 0, 1, 0]);
        assert!(mdp.is_goal(g));
        assert_eq!(mdp.applicable_actions(g).as_slice(), &[ActionId::NOOP]);
        let t = mdp.transitions(g, ActionId::NOOP).unwrap();
        assert_eq!(
            t.as_slice(),
            &[TransitionOutcome {
                successor: g,
                probability: 1.0,
                cost: 0.0
            }]
        );
        assert!(mdp.transitions(g, ActionId(0)).is_err());
    }

    #[test]
    fn set_to_current_level_is_not_applicable() {
        let mdp = toy();
        let s = idx(&mdp, &[0, 0, 0, 0]);
        assert_eq!(mdp.applicable_actions(s).as_slice(), &[ActionId(0)]);
        assert!(matches!(
            mdp.transitions(s, ActionId(1)),
            Err(Error::InapplicableAction { .. })
        ));
    }

    #[test]
    fn side_effect_on_success_branch_saturates() {
        let mdp = toy();
        let s = idx(&mdp, &[1, 1, 1, 1]);
        let t = mdp.transitions(s, ActionId(0)).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].successor, idx(&mdp, &[2, 1, 1, 1]));
        assert_eq!(t[0].probability, 1.0);
        assert_eq!(t[0].cost, 2.0);

        let s = idx(&mdp, &[0, 0, 1, 1]);
        let t = mdp.transitions(s, ActionId(0)).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].successor, idx(&mdp, &[1, 1, 1, 1]));
        assert!((t[0].probability - 0.9).abs() < 1e-15);
        assert_eq!(t[1].successor, s);
        assert_eq!(t[1].cost, 2.0);
    }

    #[test]
    fn dead_ends_stall_at_cheapest_cost() {
        let schema = FeatureSchema::new(
            vec![FeatureSpec::new(
                "x",
                FeatureKind::Ordinal,
                &["0", "1"],
                Mutability::Actionable,
            )],
            "ok",
        )
        .unwrap();
        let actions = vec![ActionSpec {
            name: "up".into(),
            cost: 0.5,
            primary: Effect::new(0, EffectMode::Increment),
            success: SuccessProb::Fixed(1.0),
            side_effects: vec![],
            on_failure: None,
        }];
        // Nothing is favorable, so the top level is a dead end.
        let mdp =
            RecourseMdp::new(schema, actions, Arc::new(RuleModel::default()), 2, None).unwrap();
        assert_eq!(mdp.dead_end_count(), 1);
        assert_eq!(
            mdp.applicable_actions(StateIndex(1)).as_slice(),
            &[ActionId::STALL]
        );
        let t = mdp.transitions(StateIndex(1), ActionId::STALL).unwrap();
        assert_eq!(t[0].cost, 0.5);
        assert!(mdp.transitions(StateIndex(0), ActionId::STALL).is_err());
    }

    #[test]
    fn goal_restriction_limits_goals() {
        let base = toy();
        let keep = idx(&base, &[2, 0, 0, 0]);
        let other = idx(&base, &[2, 1, 0, 0]);
        let mdp = RecourseMdp::new(
            base.schema().clone(),
            base.actions().to_vec(),
            base.model().clone(),
            4,
            Some(vec![keep]),
        )
        .unwrap();
        assert!(mdp.is_goal(keep));
        assert!(!mdp.is_goal(other));
        assert_eq!(mdp.goal_count(), 1);
    }

    #[test]
    fn invalid_actions_are_rejected() {
        let base = toy();
        let mut bad = base.actions()[1].clone();
        bad.primary = Effect::new(3, EffectMode::SetTo(0));
        let r = RecourseMdp::new(
            base.schema().clone(),
            vec![bad],
            base.model().clone(),
            4,
            None,
        );
        assert!(matches!(r, Err(Error::InvalidAction { .. })));

        let mut bad = base.actions()[1].clone();
        bad.success = SuccessProb::Fixed(0.0);
        let r = RecourseMdp::new(
            base.schema().clone(),
            vec![bad],
            base.model().clone(),
            4,
            None,
        );
        assert!(r.is_err());

        let mut bad = base.actions()[0].clone();
        bad.side_effects = vec![Effect::new(3, EffectMode::Increment)];
        let r = RecourseMdp::new(
            base.schema().clone(),
            vec![bad],
            base.model().clone(),
            4,
            None,
        );
        assert!(r.is_err());
    }
}
