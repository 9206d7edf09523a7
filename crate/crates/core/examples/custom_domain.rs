//! Building a domain in code instead of a config file.
//!
//! A job seeker can take a course (cheap, unreliable, may be repeated) or a
//! bootcamp (expensive, reliable, skips a level). The lender approves once
//! skill reaches `advanced`.
//!
//! ```text
//! cargo run --example custom_domain
//! ```

use std::sync::Arc;

use recourse::mdp::{ActionSpec, Effect, EffectMode, RecourseMdp, SuccessProb};
use recourse::model::{Comparator, Condition, Rule, RuleModel};
use recourse::schema::{FeatureKind, FeatureSchema, FeatureSpec, Mutability, State};
use recourse::solver::{g_rsvi, policy_cost_distribution, SolverConfig};

fn main() -> recourse::Result<()> {
    let schema = FeatureSchema::new(
        vec![
            FeatureSpec::new(
                "skill",
                FeatureKind::Ordinal,
                &["none", "basic", "advanced"],
                Mutability::Actionable,
            ),
            FeatureSpec::new(
                "region",
                FeatureKind::Nominal,
                &["north", "south"],
                Mutability::Immutable,
            ),
        ],
        "approved",
    )?;
    let skill = schema.require_feature("skill")?;
    let actions = vec![
        ActionSpec {
            name: "course".into(),
            cost: 1.0,
            primary: Effect::new(skill, EffectMode::Increment),
            success: SuccessProb::Fixed(0.8),
            side_effects: Vec::new(),
            on_failure: None,
        },
        ActionSpec {
            name: "bootcamp".into(),
            cost: 2.6,
            primary: Effect::new(skill, EffectMode::SetTo(2)),
            success: SuccessProb::Fixed(0.98),
            side_effects: Vec::new(),
            on_failure: None,
        },
    ];
    let model = RuleModel::new(vec![Rule::new(vec![Condition::new(
        skill,
        Comparator::Ge,
        2,
    )])]);
    let mdp = RecourseMdp::new(schema, actions, Arc::new(model), 4, None)?;
    let s0 = mdp.schema().encode(&State(vec![0, 0]))?;

    for beta in [0.0, 0.5, 1.0] {
        let policy = g_rsvi(&mdp, &SolverConfig::new(beta, 4))?;
        let dist = policy_cost_distribution(&mdp, s0, 4, |h, s| policy.action(h, s))?;
        println!(
            "beta={beta}: start with {:<9} mean cost {:.3}  sd {:.3}  success {:.4}",
            mdp.action_name(policy.action(1, s0)),
            dist.mean(),
            dist.variance().sqrt(),
            dist.success
        );
    }
    Ok(())
}
