//! Feature schemas and the factored discrete state space.
//!
//! A state is one level index per feature. States are packed into a
//! [`StateIndex`] with a mixed-radix code where the first feature of the
//! schema is the most significant digit; this ordering is part of the policy
//! and instance file formats and must not change.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    /// Unordered categories; any change counts as distance 1.
    Nominal,
    /// Ordered levels; the level index is the magnitude.
    Ordinal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutability {
    Immutable,
    Actionable,
    /// Can change only as a consequence of other actions (e.g. age).
    MutableNonActionable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    pub levels: Vec<String>,
    pub mutability: Mutability,
}

impl FeatureSpec {
    pub fn new(
        name: impl Into<String>,
        kind: FeatureKind,
        levels: &[&str],
        mutability: Mutability,
    ) -> Self {
        Self {
            name: name.into(),
            kind,
            levels: levels.iter().map(|l| l.to_string()).collect(),
            mutability,
        }
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn level_index(&self, label: &str) -> Option<u16> {
        self.levels
            .iter()
            .position(|l| l == label)
            .map(|i| i as u16)
    }

    fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::Schema("feature with empty name".into()));
        }
        if self.levels.len() < 2 {
            return Err(Error::Schema(format!(
                "feature `{}` needs at least two levels",
                self.name
            )));
        }
        if self.levels.len() > u16::MAX as usize {
            return Err(Error::Schema(format!(
                "feature `{}` has too many levels",
                self.name
            )));
        }
        let mut seen = HashSet::new();
        for level in &self.levels {
            if level.is_empty() {
                return Err(Error::Schema(format!(
                    "feature `{}` has an empty level label",
                    self.name
                )));
            }
            if !seen.insert(level.as_str()) {
                return Err(Error::Schema(format!(
                    "feature `{}` repeats level `{}`",
                    self.name, level
                )));
            }
        }
        Ok(())
    }
}

/// Flat index of a state in the mixed-radix encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateIndex(pub u64);

impl fmt::Display for StateIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl StateIndex {
    #[inline]
    pub fn as_usize(self) -> usize {
        self.0 as usize
    }
}

/// One level index per schema feature.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct State(pub Vec<u16>);

impl State {
    pub fn levels(&self) -> &[u16] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureDistance {
    /// Number of features that differ.
    pub sparsity: usize,
    /// Nominal mismatches plus absolute ordinal level differences.
    pub proximity: f64,
}

#[derive(Serialize, Deserialize)]
struct SchemaRepr {
    features: Vec<FeatureSpec>,
    target_label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SchemaRepr", into = "SchemaRepr")]
pub struct FeatureSchema {
    features: Vec<FeatureSpec>,
    target_label: String,
    strides: Vec<u64>,
    cardinality: u64,
}

impl TryFrom<SchemaRepr> for FeatureSchema {
    type Error = Error;

    fn try_from(repr: SchemaRepr) -> Result<Self> {
        FeatureSchema::new(repr.features, repr.target_label)
    }
}

impl From<FeatureSchema> for SchemaRepr {
    fn from(schema: FeatureSchema) -> Self {
        SchemaRepr {
            features: schema.features,
            target_label: schema.target_label,
        }
    }
}

impl FeatureSchema {
    pub fn new(features: Vec<FeatureSpec>, target_label: impl Into<String>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Schema("schema has no features".into()));
        }
        let mut names = HashSet::new();
        for f in &features {
            f.validate()?;
            if !names.insert(f.name.as_str()) {
                return Err(Error::Schema(format!("duplicate feature `{}`", f.name)));
            }
        }

        let mut strides = vec![0u64; features.len()];
        let mut acc: u64 = 1;
        for (i, f) in features.iter().enumerate().rev() {
            strides[i] = acc;
            acc = acc
                .checked_mul(f.level_count() as u64)
                .ok_or_else(|| Error::Schema("state-space cardinality overflows 64 bits".into()))?;
        }

        Ok(Self {
            features,
            target_label: target_label.into(),
            strides,
            cardinality: acc,
        })
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn feature(&self, i: usize) -> &FeatureSpec {
        &self.features[i]
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn target_label(&self) -> &str {
        &self.target_label
    }

    pub fn cardinality(&self) -> u64 {
        self.cardinality
    }

    pub fn stride(&self, feature: usize) -> u64 {
        self.strides[feature]
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    /// Resolves a feature name, failing with a schema error.
    pub fn require_feature(&self, name: &str) -> Result<usize> {
        self.feature_index(name)
            .ok_or_else(|| Error::Schema(format!("unknown feature `{name}`")))
    }

    /// Resolves a level label of a feature, failing with a schema error.
    pub fn require_level(&self, feature: usize, label: &str) -> Result<u16> {
        let spec = &self.features[feature];
        spec.level_index(label)
            .ok_or_else(|| Error::Schema(format!("feature `{}` has no level `{label}`", spec.name)))
    }

    pub fn validate(&self, s: &State) -> Result<()> {
        if s.0.len() != self.features.len() {
            return Err(Error::Schema(format!(
                "state has {} levels, schema has {} features",
                s.0.len(),
                self.features.len()
            )));
        }
        for (f, &level) in self.features.iter().zip(&s.0) {
            if level as usize >= f.level_count() {
                return Err(Error::Schema(format!(
                    "level {level} out of range for feature `{}` ({} levels)",
                    f.name,
                    f.level_count()
                )));
            }
        }
        Ok(())
    }

    pub fn encode(&self, s: &State) -> Result<StateIndex> {
        self.validate(s)?;
        Ok(StateIndex(
            s.0.iter()
                .zip(&self.strides)
                .map(|(&level, &stride)| level as u64 * stride)
                .sum(),
        ))
    }

    pub fn decode(&self, i: StateIndex) -> Result<State> {
        if i.0 >= self.cardinality {
            return Err(Error::IndexOutOfRange {
                index: i.0,
                cardinality: self.cardinality,
            });
        }
        Ok(State(
            (0..self.features.len())
                .map(|f| self.level_of(i, f))
                .collect(),
        ))
    }

    /// Level of one feature read straight off the packed index.
    #[inline]
    pub fn level_of(&self, i: StateIndex, feature: usize) -> u16 {
        ((i.0 / self.strides[feature]) % self.features[feature].level_count() as u64) as u16
    }

    /// Index of `i` with one feature moved to `level`.
    #[inline]
    pub fn with_level(&self, i: StateIndex, feature: usize, level: u16) -> StateIndex {
        let current = self.level_of(i, feature) as u64;
        let stride = self.strides[feature];
        StateIndex(i.0 - current * stride + level as u64 * stride)
    }

    pub fn state_from_labels<S: AsRef<str>>(&self, labels: &[S]) -> Result<State> {
        if labels.len() != self.features.len() {
            return Err(Error::Schema(format!(
                "expected {} level labels, got {}",
                self.features.len(),
                labels.len()
            )));
        }
        labels
            .iter()
            .enumerate()
            .map(|(f, label)| self.require_level(f, label.as_ref().trim()))
            .collect::<Result<Vec<_>>>()
            .map(State)
    }

    pub fn labels_of(&self, s: &State) -> Vec<&str> {
        self.features
            .iter()
            .zip(&s.0)
            .map(|(f, &l)| f.levels[l as usize].as_str())
            .collect()
    }

    pub fn feature_distance(&self, a: &State, b: &State) -> Result<FeatureDistance> {
        self.validate(a)
            .and_then(|_| self.validate(b))
            .map_err(|e| Error::SchemaMismatch(e.to_string()))?;
        let mut sparsity = 0;
        let mut proximity = 0.0;
        for (f, (&la, &lb)) in self.features.iter().zip(a.0.iter().zip(&b.0)) {
            if la == lb {
                continue;
            }
            sparsity += 1;
            proximity += match f.kind {
                FeatureKind::Nominal => 1.0,
                FeatureKind::Ordinal => (la as f64 - lb as f64).abs(),
            };
        }
        Ok(FeatureDistance {
            sparsity,
            proximity,
        })
    }

    /// Stable content hash used to tie policies, models and instance files
    /// to the schema they were produced for.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("schema serializes");
        hex::encode(Sha256::digest(&json))
    }
}
