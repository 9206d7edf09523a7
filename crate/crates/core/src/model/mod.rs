//! Black-box decision functions mapping a state to a binary outcome.
//!
//! Everything downstream (MDP construction, solvers, evaluation) talks to a
//! model only through [`DecisionModel::classify`].

mod ensemble;
mod rules;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{FeatureSchema, State};

pub use ensemble::{
    train_tree_ensemble, LabeledRow, TrainConfig, TrainReport, Tree, TreeEnsembleModel,
};
pub use rules::{Comparator, Condition, Rule, RuleModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Unfavorable,
    Favorable,
}

impl Outcome {
    pub fn is_favorable(self) -> bool {
        self == Outcome::Favorable
    }
}

/// A deterministic classifier over schema states.
pub trait DecisionModel: Send + Sync {
    fn classify(&self, s: &State) -> Outcome;
}

impl<M: DecisionModel + ?Sized> DecisionModel for Box<M> {
    fn classify(&self, s: &State) -> Outcome {
        (**self).classify(s)
    }
}

impl<M: DecisionModel + ?Sized> DecisionModel for std::sync::Arc<M> {
    fn classify(&self, s: &State) -> Outcome {
        (**self).classify(s)
    }
}

/// Any model that can be stored in a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnyModel {
    Rules(RuleModel),
    Ensemble(TreeEnsembleModel),
}

impl AnyModel {
    pub fn validate_against(&self, schema: &FeatureSchema) -> Result<()> {
        match self {
            AnyModel::Rules(m) => m.validate_against(schema),
            AnyModel::Ensemble(m) => m.validate_against(schema),
        }
    }
}

impl DecisionModel for AnyModel {
    fn classify(&self, s: &State) -> Outcome {
        match self {
            AnyModel::Rules(m) => m.classify(s),
            AnyModel::Ensemble(m) => m.classify(s),
        }
    }
}

impl From<RuleModel> for AnyModel {
    fn from(m: RuleModel) -> Self {
        AnyModel::Rules(m)
    }
}

impl From<TreeEnsembleModel> for AnyModel {
    fn from(m: TreeEnsembleModel) -> Self {
        AnyModel::Ensemble(m)
    }
}

pub const MODEL_FORMAT: &str = "recourse-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub schema_hash: String,
    pub model: AnyModel,
}

pub fn save_model(path: impl AsRef<Path>, schema: &FeatureSchema, model: &AnyModel) -> Result<()> {
    let file = ModelFile {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        schema_hash: schema.hash(),
        model: model.clone(),
    };
    fs::write(path, serde_json::to_vec_pretty(&file)?)?;
    Ok(())
}

/// Parses a model file. When `schema` is given the stored schema hash must
/// match and every referenced feature/level must exist.
pub fn parse_model(text: &str, schema: Option<&FeatureSchema>) -> Result<AnyModel> {
    #[derive(Deserialize)]
    struct Header {
        format: String,
        version: u32,
    }
    let header: Header =
        serde_json::from_str(text).map_err(|e| Error::malformed("model file", e))?;
    if header.format != MODEL_FORMAT {
        return Err(Error::malformed(
            "model file",
            format!("unexpected format tag `{}`", header.format),
        ));
    }
    if header.version != MODEL_VERSION {
        return Err(Error::Version {
            kind: "model file",
            found: header.version,
            expected: MODEL_VERSION,
        });
    }
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| Error::malformed("model file", e))?;
    if let Some(schema) = schema {
        if file.schema_hash != schema.hash() {
            return Err(Error::SchemaMismatch(
                "model was trained for a different schema".into(),
            ));
        }
        file.model.validate_against(schema)?;
    }
    Ok(file.model)
}

pub fn load_model(path: impl AsRef<Path>, schema: Option<&FeatureSchema>) -> Result<AnyModel> {
    parse_model(&fs::read_to_string(path)?, schema)
}
