//! Dataset ingestion, instance selection and instance files.

pub mod builtin;
pub mod descriptor;
pub mod surrogate;

use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Comparator, DecisionModel, LabeledRow, Outcome};
use crate::schema::{FeatureSchema, StateIndex};

pub use builtin::{builtin_domain, BuiltinDomain};
pub use descriptor::{bin_level, DatasetDescriptor, PreprocessReport};

/// One preprocessed row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    /// Row number in the source file (0-based, header excluded).
    pub id: usize,
    pub index: StateIndex,
    /// Ground-truth label from the data, when known.
    pub label: Option<Outcome>,
}

/// Training rows for the tree ensemble; unlabeled instances are skipped.
pub fn training_rows(schema: &FeatureSchema, instances: &[Instance]) -> Result<Vec<LabeledRow>> {
    instances
        .iter()
        .filter_map(|i| i.label.map(|l| (i.index, l)))
        .map(|(index, label)| {
            Ok(LabeledRow {
                state: schema.decode(index)?,
                label,
            })
        })
        .collect()
}

/// `feature <op> level` over level indices, written like `Gender=Female`,
/// `Age<<30` (feature `Age`, op `<`, level `<30`) or `Savings>=Moderate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureFilter {
    pub feature: usize,
    pub op: Comparator,
    pub level: u16,
}

impl FeatureFilter {
    pub fn parse(schema: &FeatureSchema, text: &str) -> Result<Self> {
        let split = text
            .find(['<', '>', '=', '!'])
            .ok_or_else(|| Error::InvalidArgument(format!("filter `{text}` has no comparator")))?;
        let (name, rest) = text.split_at(split);
        let ops = [
            ("<=", Comparator::Le),
            (">=", Comparator::Ge),
            ("!=", Comparator::Ne),
            ("==", Comparator::Eq),
            ("<", Comparator::Lt),
            (">", Comparator::Gt),
            ("=", Comparator::Eq),
        ];
        let (tok, op) = ops
            .iter()
            .find(|(tok, _)| rest.starts_with(tok))
            .copied()
            .expect("split on a comparator character");
        let feature = schema.require_feature(name.trim())?;
        let level = schema.require_level(feature, rest[tok.len()..].trim())?;
        Ok(Self { feature, op, level })
    }

    pub fn matches(&self, schema: &FeatureSchema, s: StateIndex) -> bool {
        let l = schema.level_of(s, self.feature);
        match self.op {
            Comparator::Eq => l == self.level,
            Comparator::Ne => l != self.level,
            Comparator::Lt => l < self.level,
            Comparator::Le => l <= self.level,
            Comparator::Gt => l > self.level,
            Comparator::Ge => l >= self.level,
        }
    }
}

/// Stable-order subset of the instances satisfying `predicate`.
pub fn select_instances<F>(instances: &[Instance], mut predicate: F) -> Vec<Instance>
where
    F: FnMut(&Instance) -> bool,
{
    let out: Vec<Instance> = instances.iter().filter(|i| predicate(i)).copied().collect();
    if out.is_empty() {
        log::warn!("instance selection matched nothing");
    }
    out
}

/// Instances the model classifies as unfavorable.
pub fn unfavorable_under<M: DecisionModel + ?Sized>(
    schema: &FeatureSchema,
    model: &M,
    instances: &[Instance],
) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    for i in instances {
        if !model.classify(&schema.decode(i.index)?).is_favorable() {
            out.push(*i);
        }
    }
    Ok(out)
}

/// Seeded sample of `n` instances without replacement, kept in input order.
/// Returns everything when `n >= len`.
pub fn sample_instances(instances: &[Instance], n: usize, seed: u64) -> Vec<Instance> {
    if n >= instances.len() {
        return instances.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, instances.len(), n).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| instances[i]).collect()
}

pub const INSTANCES_FORMAT: &str = "recourse-instances";
pub const INSTANCES_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceEntry {
    pub id: usize,
    pub index: StateIndex,
    pub levels: Vec<String>,
    #[serde(default)]
    pub label: Option<Outcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstancesFile {
    pub format: String,
    pub version: u32,
    pub schema_hash: String,
    pub features: Vec<String>,
    pub instances: Vec<InstanceEntry>,
}

impl InstancesFile {
    pub fn new(schema: &FeatureSchema, instances: &[Instance]) -> Result<Self> {
        let instances = instances
            .iter()
            .map(|i| {
                let s = schema.decode(i.index)?;
                Ok(InstanceEntry {
                    id: i.id,
                    index: i.index,
                    levels: schema.labels_of(&s).into_iter().map(String::from).collect(),
                    label: i.label,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            format: INSTANCES_FORMAT.into(),
            version: INSTANCES_VERSION,
            schema_hash: schema.hash(),
            features: schema.features().iter().map(|f| f.name.clone()).collect(),
            instances,
        })
    }

    /// Checks the file against `schema` and returns its instances.
    pub fn instances(&self, schema: &FeatureSchema) -> Result<Vec<Instance>> {
        if self.schema_hash != schema.hash() {
            return Err(Error::SchemaMismatch(
                "instances were produced for a different schema".into(),
            ));
        }
        self.instances
            .iter()
            .map(|e| {
                let index = schema.encode(&schema.state_from_labels(&e.levels)?)?;
                if index != e.index {
                    return Err(Error::malformed(
                        "instances file",
                        format!(
                            "instance {} has index {} but levels encode to {index}",
                            e.id, e.index
                        ),
                    ));
                }
                Ok(Instance {
                    id: e.id,
                    index,
                    label: e.label,
                })
            })
            .collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let file: Self =
            serde_json::from_str(&text).map_err(|e| Error::malformed("instances file", e))?;
        if file.format != INSTANCES_FORMAT {
            return Err(Error::malformed(
                "instances file",
                format!("unexpected format tag `{}`", file.format),
            ));
        }
        if file.version != INSTANCES_VERSION {
            return Err(Error::Version {
                kind: "instances file",
                found: file.version,
                expected: INSTANCES_VERSION,
            });
        }
        Ok(file)
    }
}
