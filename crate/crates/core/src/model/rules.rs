use serde::{Deserialize, Serialize};

use super::{DecisionModel, Outcome};
use crate::error::{Error, Result};
use crate::schema::{FeatureSchema, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparator {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparator {
    fn holds(self, lhs: u16, rhs: u16) -> bool {
        match self {
            Comparator::Eq => lhs == rhs,
            Comparator::Ne => lhs != rhs,
            Comparator::Lt => lhs < rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Gt => lhs > rhs,
            Comparator::Ge => lhs >= rhs,
        }
    }
}

/// `feature <op> level`, comparing level indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub feature: usize,
    pub op: Comparator,
    pub level: u16,
}

impl Condition {
    pub fn new(feature: usize, op: Comparator, level: u16) -> Self {
        Self { feature, op, level }
    }
}

/// Conjunction of conditions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub all: Vec<Condition>,
}

impl Rule {
    pub fn new(all: Vec<Condition>) -> Self {
        Self { all }
    }

    fn matches(&self, s: &State) -> bool {
        self.all.iter().all(|c| c.op.holds(s.0[c.feature], c.level))
    }
}

/// Favorable iff any rule matches. No rules means nothing is favorable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleModel {
    pub rules: Vec<Rule>,
}

impl RuleModel {
    pub fn new(rules: Vec<Rule>) -> Self {
        Self { rules }
    }

    pub fn validate_against(&self, schema: &FeatureSchema) -> Result<()> {
        for c in self.rules.iter().flat_map(|r| &r.all) {
            if c.feature >= schema.len() {
                return Err(Error::Model(format!(
                    "rule references feature #{} but schema has {}",
                    c.feature,
                    schema.len()
                )));
            }
            if c.level as usize >= schema.feature(c.feature).level_count() {
                return Err(Error::Model(format!(
                    "rule references level {} of `{}`",
                    c.level,
                    schema.feature(c.feature).name
                )));
            }
        }
        Ok(())
    }
}

impl DecisionModel for RuleModel {
    fn classify(&self, s: &State) -> Outcome {
        if self.rules.iter().any(|r| r.matches(s)) {
            Outcome::Favorable
        } else {
            Outcome::Unfavorable
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_rule_list_is_never_favorable() {
        let m = RuleModel::default();
        for a in 0..4 {
            assert_eq!(m.classify(&State(vec![a, 0])), Outcome::Unfavorable);
        }
    }

    #[test]
    fn direct_rule_match() {
        // Savings >= Rich (level 3)
        let m = RuleModel::new(vec![Rule::new(vec![Condition::new(0, Comparator::Ge, 3)])]);
        assert_eq!(m.classify(&State(vec![3])), Outcome::Favorable);
        assert_eq!(m.classify(&State(vec![2])), Outcome::Unfavorable);
    }

    #[test]
    fn comparators() {
        let cases = [
            (Comparator::Eq, [false, true, false]),
            (Comparator::Ne, [true, false, true]),
            (Comparator::Lt, [true, false, false]),
            (Comparator::Le, [true, true, false]),
            (Comparator::Gt, [false, false, true]),
            (Comparator::Ge, [false, true, true]),
        ];
        for (op, expected) in cases {
            for (lhs, want) in expected.iter().enumerate() {
                assert_eq!(op.holds(lhs as u16, 1), *want, "{op:?} {lhs}");
            }
        }
    }
}
