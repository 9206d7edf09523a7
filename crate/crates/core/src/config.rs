//! Experiment configuration files.
//!
//! A config is a TOML document (`.cfg`) holding the horizon, action table,
//! decision model reference and evaluation defaults of one experiment. The
//! schema is either inline or a path to a schema file; paths are relative to
//! the config file. The shipped configs are also embedded in the library and
//! available through [`ExperimentConfig::builtin`].
//!
//! ```toml
//! name = "example"
//! horizon = 8
//! schema = "../schemas/gcd.toml"
//! model = { kind = "file", path = "../models/gcd.json" }
//!
//! [[actions]]
//! name = "Incr-Savings"
//! cost = 1.2
//! feature = "Savings"
//! effect = "increment"
//! success = 0.95
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::{EvalOptions, DEFAULT_ALPHAS, DEFAULT_TRIALS};
use crate::mdp::{ActionSpec, Effect, EffectMode, RecourseMdp, SuccessProb};
use crate::model::{load_model, AnyModel};
use crate::model::{Comparator, Condition, Rule, RuleModel};
use crate::schema::{FeatureSchema, StateIndex};

const BUILTIN_CONFIGS: &[(&str, &str)] = &[
    (
        "synthetic_health",
        include_str!("../configs/synthetic_health.cfg"),
    ),
    ("loan_figure1", include_str!("../configs/loan_figure1.cfg")),
    ("aid", include_str!("../configs/aid.cfg")),
    ("aid_alt", include_str!("../configs/aid_alt.cfg")),
    ("gcd", include_str!("../configs/gcd.cfg")),
    ("gcd_alt", include_str!("../configs/gcd_alt.cfg")),
    ("hipd", include_str!("../configs/hipd.cfg")),
];

const BUILTIN_SCHEMAS: &[(&str, &str)] = &[
    ("aid.toml", include_str!("../schemas/aid.toml")),
    ("gcd.toml", include_str!("../schemas/gcd.toml")),
    ("hipd.toml", include_str!("../schemas/hipd.toml")),
];

/// Names accepted by [`ExperimentConfig::builtin`].
pub fn builtin_names() -> Vec<&'static str> {
    BUILTIN_CONFIGS.iter().map(|(n, _)| *n).collect()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum SchemaRef {
    Path(String),
    Inline(FeatureSchema),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum EffectRepr {
    Named(String),
    Set { set: String },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum SuccessRepr {
    Fixed(f64),
    PerTarget(BTreeMap<String, f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct EffectSpec {
    feature: String,
    effect: EffectRepr,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActionRepr {
    name: String,
    cost: f64,
    feature: String,
    effect: EffectRepr,
    success: SuccessRepr,
    #[serde(default)]
    side_effects: Vec<EffectSpec>,
    #[serde(default)]
    on_failure: Option<EffectSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConditionRepr {
    feature: String,
    op: Comparator,
    level: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleRepr {
    all: Vec<ConditionRepr>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ModelRepr {
    Rules { rules: Vec<RuleRepr> },
    File { path: String },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalRepr {
    trials: Option<usize>,
    alphas: Option<Vec<f64>>,
    seed: Option<u64>,
    betas: Option<Vec<f64>>,
    initial_state: Option<Vec<String>>,
    instances: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigRepr {
    name: String,
    horizon: usize,
    schema: SchemaRef,
    model: ModelRepr,
    actions: Vec<ActionRepr>,
    #[serde(default)]
    goal_restriction: Option<Vec<Vec<String>>>,
    #[serde(default)]
    eval: EvalRepr,
}

/// Evaluation defaults carried by a config; every field is overridable on
/// the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalDefaults {
    pub trials: usize,
    pub alphas: Vec<f64>,
    pub seed: u64,
    pub betas: Vec<f64>,
    pub initial_state: Option<StateIndex>,
    /// Resolved against the config directory.
    pub instances: Option<PathBuf>,
}

impl EvalDefaults {
    pub fn options(&self) -> EvalOptions {
        EvalOptions {
            n_trials: self.trials,
            alphas: self.alphas.clone(),
            seed: self.seed,
        }
    }
}

/// Where the decision model comes from before it is loaded.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    Inline(AnyModel),
    File(PathBuf),
}

/// A parsed config whose model has not been loaded yet.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    pub origin: String,
    pub schema: FeatureSchema,
    pub actions: Vec<ActionSpec>,
    pub horizon: usize,
    pub goal_restriction: Option<Vec<StateIndex>>,
    pub model: ModelSource,
    pub eval: EvalDefaults,
}

/// Everything needed to rebuild an MDP, including the model itself. Stored
/// inside policy files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub name: String,
    pub schema: FeatureSchema,
    pub actions: Vec<ActionSpec>,
    pub horizon: usize,
    pub goal_restriction: Option<Vec<StateIndex>>,
    pub model: AnyModel,
    pub eval: EvalDefaults,
}

fn effect_mode(schema: &FeatureSchema, feature: usize, repr: &EffectRepr) -> Result<EffectMode> {
    match repr {
        EffectRepr::Named(n) if n == "increment" => Ok(EffectMode::Increment),
        EffectRepr::Named(n) if n == "decrement" => Ok(EffectMode::Decrement),
        EffectRepr::Named(n) => Err(Error::InvalidArgument(format!(
            "unknown effect `{n}` (expected increment, decrement or {{ set = \"level\" }})"
        ))),
        EffectRepr::Set { set } => Ok(EffectMode::SetTo(schema.require_level(feature, set)?)),
    }
}

fn effect(schema: &FeatureSchema, spec: &EffectSpec) -> Result<Effect> {
    let f = schema.require_feature(&spec.feature)?;
    Ok(Effect::new(f, effect_mode(schema, f, &spec.effect)?))
}

fn action(schema: &FeatureSchema, repr: &ActionRepr) -> Result<ActionSpec> {
    let feature = schema.require_feature(&repr.feature)?;
    let mode = effect_mode(schema, feature, &repr.effect)?;
    let success = match &repr.success {
        SuccessRepr::Fixed(p) => SuccessProb::Fixed(*p),
        SuccessRepr::PerTarget(map) => {
            let mut per = vec![None; schema.feature(feature).level_count()];
            for (label, &p) in map {
                per[schema.require_level(feature, label)? as usize] = Some(p);
            }
            SuccessProb::PerTarget(per)
        }
    };
    Ok(ActionSpec {
        name: repr.name.clone(),
        cost: repr.cost,
        primary: Effect::new(feature, mode),
        success,
        side_effects: repr
            .side_effects
            .iter()
            .map(|e| effect(schema, e))
            .collect::<Result<_>>()?,
        on_failure: repr
            .on_failure
            .as_ref()
            .map(|e| effect(schema, e))
            .transpose()?,
    })
}

fn rule_model(schema: &FeatureSchema, rules: &[RuleRepr]) -> Result<RuleModel> {
    let rules = rules
        .iter()
        .map(|r| {
            let all = r
                .all
                .iter()
                .map(|c| {
                    let f = schema.require_feature(&c.feature)?;
                    Ok(Condition::new(f, c.op, schema.require_level(f, &c.level)?))
                })
                .collect::<Result<_>>()?;
            Ok(Rule::new(all))
        })
        .collect::<Result<_>>()?;
    Ok(RuleModel::new(rules))
}

enum Source<'a> {
    Dir(&'a Path),
    Builtin,
}

impl Source<'_> {
    fn path(&self, rel: &str) -> PathBuf {
        match self {
            Source::Dir(dir) => dir.join(rel),
            Source::Builtin => PathBuf::from(rel),
        }
    }

    fn read_schema(&self, rel: &str) -> Result<(String, String)> {
        match self {
            Source::Dir(dir) => {
                let p = dir.join(rel);
                let text = fs::read_to_string(&p)
                    .map_err(|e| Error::config(p.display(), format!("cannot read schema: {e}")))?;
                Ok((p.display().to_string(), text))
            }
            Source::Builtin => {
                let base = Path::new(rel)
                    .file_name()
                    .and_then(|n| n.to_str())
                    .unwrap_or(rel);
                BUILTIN_SCHEMAS
                    .iter()
                    .find(|(n, _)| *n == base)
                    .map(|(n, t)| (format!("builtin:{n}"), t.to_string()))
                    .ok_or_else(|| Error::config(rel, "no builtin schema with this name"))
            }
        }
    }
}

/// Parses a schema file (TOML with `target_label` and `[[features]]`).
pub fn parse_schema(text: &str, origin: &str) -> Result<FeatureSchema> {
    toml::from_str(text).map_err(|e| Error::config(origin, e))
}

pub fn load_schema(path: impl AsRef<Path>) -> Result<FeatureSchema> {
    let path = path.as_ref();
    parse_schema(&fs::read_to_string(path)?, &path.display().to_string())
}

/// Loads a schema referenced from another file: relative to `base_dir`, or
/// from the embedded copies (matched by file name) when `base_dir` is `None`.
pub(crate) fn resolve_schema_ref(rel: &str, base_dir: Option<&Path>) -> Result<FeatureSchema> {
    let source = match base_dir {
        Some(dir) => Source::Dir(dir),
        None => Source::Builtin,
    };
    let (origin, text) = source.read_schema(rel)?;
    parse_schema(&text, &origin)
}

/// Schema of a shipped dataset (`aid`, `gcd`, `hipd`).
pub fn builtin_schema(name: &str) -> Result<FeatureSchema> {
    let file = format!("{name}.toml");
    let (_, text) = Source::Builtin.read_schema(&file)?;
    parse_schema(&text, &format!("builtin:{file}"))
}

impl ExperimentConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config(path.display(), format!("cannot read: {e}")))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Self::parse_with(&text, &path.display().to_string(), Source::Dir(dir))
    }

    /// Parses config text; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, origin: &str, base_dir: &Path) -> Result<Self> {
        Self::parse_with(text, origin, Source::Dir(base_dir))
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let (_, text) = BUILTIN_CONFIGS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::UnknownDomain(name.to_string()))?;
        Self::parse_with(text, &format!("builtin:{name}"), Source::Builtin)
    }

    fn parse_with(text: &str, origin: &str, source: Source<'_>) -> Result<Self> {
        let repr: ConfigRepr = toml::from_str(text).map_err(|e| Error::config(origin, e))?;
        let wrap = |e: Error| Error::config(origin, e);
        let schema = match &repr.schema {
            SchemaRef::Inline(s) => s.clone(),
            SchemaRef::Path(rel) => {
                let (schema_origin, text) = source.read_schema(rel)?;
                parse_schema(&text, &schema_origin)?
            }
        };
        let actions = repr
            .actions
            .iter()
            .map(|a| {
                action(&schema, a)
                    .map_err(|e| Error::config(origin, format!("action `{}`: {e}", a.name)))
            })
            .collect::<Result<Vec<_>>>()?;
        let goal_restriction = repr
            .goal_restriction
            .as_ref()
            .map(|list| {
                list.iter()
                    .map(|labels| schema.encode(&schema.state_from_labels(labels)?))
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()
            .map_err(wrap)?;
        let model = match &repr.model {
            ModelRepr::Rules { rules } => {
                ModelSource::Inline(rule_model(&schema, rules).map_err(wrap)?.into())
            }
            ModelRepr::File { path } => ModelSource::File(source.path(path)),
        };
        let initial_state = repr
            .eval
            .initial_state
            .as_ref()
            .map(|labels| schema.encode(&schema.state_from_labels(labels)?))
            .transpose()
            .map_err(wrap)?;
        let eval = EvalDefaults {
            trials: repr.eval.trials.unwrap_or(DEFAULT_TRIALS),
            alphas: repr
                .eval
                .alphas
                .clone()
                .unwrap_or_else(|| DEFAULT_ALPHAS.to_vec()),
            seed: repr.eval.seed.unwrap_or(0),
            betas: repr.eval.betas.clone().unwrap_or_else(|| vec![0.0]),
            initial_state,
            instances: repr.eval.instances.as_deref().map(|p| source.path(p)),
        };
        if repr.horizon == 0 {
            return Err(Error::config(origin, "horizon must be at least 1"));
        }
        let config = Self {
            name: repr.name,
            origin: origin.to_string(),
            schema,
            actions,
            horizon: repr.horizon,
            goal_restriction,
            model,
            eval,
        };
        for a in &config.actions {
            crate::mdp::validate_action(&config.schema, a).map_err(wrap)?;
        }
        Ok(config)
    }

    /// Loads the model (or takes `model_override`) and freezes the config.
    pub fn resolve(&self, model_override: Option<AnyModel>) -> Result<ResolvedConfig> {
        let model = match (model_override, &self.model) {
            (Some(m), _) => {
                m.validate_against(&self.schema)?;
                m
            }
            (None, ModelSource::Inline(m)) => m.clone(),
            (None, ModelSource::File(path)) => {
                if !path.exists() {
                    return Err(Error::config(
                        &self.origin,
                        format!(
                            "model file {} not found; train one with `recourse train` or pass --model",
                            path.display()
                        ),
                    ));
                }
                load_model(path, Some(&self.schema))?
            }
        };
        Ok(ResolvedConfig {
            name: self.name.clone(),
            schema: self.schema.clone(),
            actions: self.actions.clone(),
            horizon: self.horizon,
            goal_restriction: self.goal_restriction.clone(),
            model,
            eval: self.eval.clone(),
        })
    }
}

impl ResolvedConfig {
    pub fn build_mdp(&self) -> Result<RecourseMdp> {
        self.build_mdp_with_horizon(self.horizon)
    }

    pub fn build_mdp_with_horizon(&self, horizon: usize) -> Result<RecourseMdp> {
        RecourseMdp::new(
            self.schema.clone(),
            self.actions.clone(),
            Arc::new(self.model.clone()),
            horizon,
            self.goal_restriction.clone(),
        )
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}
