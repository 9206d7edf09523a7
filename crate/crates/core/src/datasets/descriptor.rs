//! Dataset descriptors and CSV preprocessing.
//!
//! A descriptor maps CSV columns onto schema features, either through
//! numeric bin edges (half-open: a value `x` gets the level equal to the
//! number of edges `<= x`) or through a category table. Values without a
//! mapping must equal a level label. Rows with a missing value are dropped;
//! rows with an unknown category are rejected with a logged reason.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use super::Instance;
use crate::config::resolve_schema_ref;
use crate::error::{Error, Result};
use crate::model::Outcome;
use crate::schema::{FeatureSchema, State};

const BUILTIN_DESCRIPTORS: &[(&str, &str)] = &[
    ("adult", include_str!("../../descriptors/adult.toml")),
    (
        "german_credit",
        include_str!("../../descriptors/german_credit.toml"),
    ),
    (
        "insurance",
        include_str!("../../descriptors/insurance.toml"),
    ),
];

/// Names accepted by [`DatasetDescriptor::builtin`].
pub fn builtin_descriptor_names() -> Vec<&'static str> {
    BUILTIN_DESCRIPTORS.iter().map(|(n, _)| *n).collect()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum LabelRule {
    Categories {
        column: String,
        favorable: Vec<String>,
        unfavorable: Vec<String>,
    },
    Below {
        column: String,
        below: f64,
    },
}

impl LabelRule {
    fn column(&self) -> &str {
        match self {
            LabelRule::Categories { column, .. } | LabelRule::Below { column, .. } => column,
        }
    }

    fn apply(&self, raw: &str) -> std::result::Result<Outcome, String> {
        match self {
            LabelRule::Categories {
                favorable,
                unfavorable,
                ..
            } => {
                if favorable.iter().any(|f| f == raw) {
                    Ok(Outcome::Favorable)
                } else if unfavorable.iter().any(|u| u == raw) {
                    Ok(Outcome::Unfavorable)
                } else {
                    Err(format!("unknown label `{raw}`"))
                }
            }
            LabelRule::Below { below, .. } => {
                let x: f64 = raw
                    .parse()
                    .map_err(|_| format!("label value `{raw}` is not a number"))?;
                Ok(if x < *below {
                    Outcome::Favorable
                } else {
                    Outcome::Unfavorable
                })
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMapping {
    pub feature: String,
    pub column: String,
    /// Ascending numeric edges; level `i` covers `[edge[i-1], edge[i])`.
    #[serde(default)]
    pub bins: Option<Vec<f64>>,
    /// Raw category -> level label.
    #[serde(default)]
    pub map: Option<BTreeMap<String, String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct DescriptorRepr {
    name: String,
    schema: String,
    #[serde(default)]
    missing: Vec<String>,
    label: LabelRule,
    columns: Vec<ColumnMapping>,
}

#[derive(Debug, Clone)]
pub struct DatasetDescriptor {
    pub name: String,
    pub schema: FeatureSchema,
    pub missing: Vec<String>,
    pub label: LabelRule,
    /// One mapping per schema feature, in schema order.
    pub columns: Vec<ColumnMapping>,
}

/// Counts from one preprocessing run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PreprocessReport {
    pub rows_read: usize,
    pub rows_kept: usize,
    pub dropped_missing: usize,
    /// `(row, reason)` of rejected rows.
    pub rejected: Vec<(usize, String)>,
}

/// Bin index of `x`: the number of edges `<= x`.
pub fn bin_level(edges: &[f64], x: f64) -> usize {
    edges.partition_point(|&e| e <= x)
}

impl DatasetDescriptor {
    pub fn parse(text: &str, origin: &str, base_dir: Option<&Path>) -> Result<Self> {
        let repr: DescriptorRepr = toml::from_str(text).map_err(|e| Error::config(origin, e))?;
        let schema = resolve_schema_ref(&repr.schema, base_dir)?;
        let bad = |reason: String| Error::config(origin, reason);

        let mut columns: Vec<Option<ColumnMapping>> = vec![None; schema.len()];
        for m in repr.columns {
            let f = schema
                .require_feature(&m.feature)
                .map_err(|e| bad(e.to_string()))?;
            let spec = schema.feature(f);
            if columns[f].is_some() {
                return Err(bad(format!("feature `{}` is mapped twice", m.feature)));
            }
            match (&m.bins, &m.map) {
                (Some(_), Some(_)) => {
                    return Err(bad(format!(
                        "feature `{}` has both bins and map",
                        m.feature
                    )))
                }
                (Some(edges), None) => {
                    if edges.len() + 1 != spec.level_count()
                        || edges.windows(2).any(|w| w[0] >= w[1])
                        || edges.iter().any(|e| !e.is_finite())
                    {
                        return Err(bad(format!(
                            "feature `{}` needs {} strictly ascending bin edges",
                            m.feature,
                            spec.level_count() - 1
                        )));
                    }
                }
                (None, Some(map)) => {
                    for label in map.values() {
                        schema
                            .require_level(f, label)
                            .map_err(|e| bad(e.to_string()))?;
                    }
                }
                (None, None) => {}
            }
            columns[f] = Some(m);
        }
        let columns = columns
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                c.ok_or_else(|| {
                    bad(format!(
                        "feature `{}` has no column mapping",
                        schema.feature(i).name
                    ))
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            name: repr.name,
            schema,
            missing: repr.missing,
            label: repr.label,
            columns,
        })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config(path.display(), format!("cannot read: {e}")))?;
        Self::parse(
            &text,
            &path.display().to_string(),
            Some(path.parent().unwrap_or(Path::new("."))),
        )
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let (_, text) = BUILTIN_DESCRIPTORS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::UnknownDomain(name.to_string()))?;
        Self::parse(text, &format!("builtin:{name}"), None)
    }

    /// Columns the CSV must provide.
    pub fn required_columns(&self) -> Vec<&str> {
        let mut cols: Vec<&str> = self.columns.iter().map(|c| c.column.as_str()).collect();
        cols.push(self.label.column());
        cols
    }

    fn map_value(&self, feature: usize, raw: &str) -> std::result::Result<Option<u16>, String> {
        let m = &self.columns[feature];
        let spec = self.schema.feature(feature);
        if let Some(map) = &m.map {
            if let Some(label) = map.get(raw) {
                return Ok(spec.level_index(label));
            }
        }
        if self.missing.iter().any(|t| t == raw) {
            return Ok(None);
        }
        if let Some(edges) = &m.bins {
            let x: f64 = raw
                .parse()
                .map_err(|_| format!("{}: `{raw}` is not a number", m.column))?;
            if !x.is_finite() {
                return Err(format!("{}: `{raw}` is not finite", m.column));
            }
            return Ok(Some(bin_level(edges, x) as u16));
        }
        spec.level_index(raw)
            .map(Some)
            .ok_or_else(|| format!("{}: unmapped category `{raw}`", m.column))
    }

    /// Reads a CSV with a header row and produces one instance per usable
    /// row, in input order.
    pub fn preprocess<R: Read>(&self, reader: R) -> Result<(Vec<Instance>, PreprocessReport)> {
        let mut csv = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let headers = csv.headers()?.clone();
        let position = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Dataset(format!("CSV has no column `{name}`")))
        };
        let feature_cols: Vec<usize> = self
            .columns
            .iter()
            .map(|c| position(&c.column))
            .collect::<Result<_>>()?;
        let label_col = position(self.label.column())?;

        let mut report = PreprocessReport::default();
        let mut out = Vec::new();
        'rows: for (row, record) in csv.records().enumerate() {
            let record = record?;
            report.rows_read += 1;
            let field = |i: usize| record.get(i).map(str::trim).unwrap_or("");
            let mut levels = Vec::with_capacity(feature_cols.len());
            for (f, &col) in feature_cols.iter().enumerate() {
                match self.map_value(f, field(col)) {
                    Ok(Some(l)) => levels.push(l),
                    Ok(None) => {
                        report.dropped_missing += 1;
                        continue 'rows;
                    }
                    Err(reason) => {
                        log::warn!("row {row} rejected: {reason}");
                        report.rejected.push((row, reason));
                        continue 'rows;
                    }
                }
            }
            let raw_label = field(label_col);
            if self.missing.iter().any(|t| t == raw_label) {
                report.dropped_missing += 1;
                continue;
            }
            let label = match self.label.apply(raw_label) {
                Ok(l) => l,
                Err(reason) => {
                    log::warn!("row {row} rejected: {reason}");
                    report.rejected.push((row, reason));
                    continue;
                }
            };
            let state = State(levels);
            let index = self.schema.encode(&state)?;
            out.push(Instance {
                id: row,
                index,
                label: Some(label),
            });
        }
        report.rows_kept = out.len();
        Ok((out, report))
    }

    pub fn preprocess_path(
        &self,
        path: impl AsRef<Path>,
    ) -> Result<(Vec<Instance>, PreprocessReport)> {
        let path = path.as_ref();
        let file = fs::File::open(path)
            .map_err(|e| Error::Dataset(format!("cannot open {}: {e}", path.display())))?;
        self.preprocess(std::io::BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins_are_half_open() {
        let edges = [20.0, 25.0, 30.0, 40.0, 50.0];
        assert_eq!(bin_level(&edges, 19.99), 0);
        assert_eq!(bin_level(&edges, 20.0), 1);
        assert_eq!(bin_level(&edges, 23.0), 1);
        assert_eq!(bin_level(&edges, 50.0), 5);
        assert_eq!(bin_level(&edges, 1e9), 5);
        assert_eq!(bin_level(&edges, -1e9), 0);
    }

    #[test]
    fn builtin_descriptors_cover_their_schemas() {
        for name in builtin_descriptor_names() {
            let d = DatasetDescriptor::builtin(name).unwrap();
            assert_eq!(d.columns.len(), d.schema.len());
        }
    }

    #[test]
    fn adult_rows() {
        let d = DatasetDescriptor::builtin("adult").unwrap();
        let csv = "age,workclass,fnlwgt,education,educational-num,marital-status,occupation,relationship,race,gender,capital-gain,capital-loss,hours-per-week,native-country,income\n\
23,Private,1,Bachelors,13,Never-married,Sales,Own-child,White,Female,0,0,40,United-States,<=50K\n\
45,?,1,HS-grad,9,Divorced,Sales,Unmarried,Black,Male,0,0,50,United-States,>50K\n\
30,Private,1,Bachelors,13,Never-married,Astronaut,Own-child,White,Male,0,0,40,United-States,>50K\n";
        let (rows, report) = d.preprocess(csv.as_bytes()).unwrap();
        assert_eq!(report.rows_read, 3);
        assert_eq!(report.dropped_missing, 1);
        assert_eq!(report.rejected.len(), 1);
        assert_eq!(rows.len(), 1);
        let s = d.schema.decode(rows[0].index).unwrap();
        assert_eq!(
            d.schema.labels_of(&s),
            [
                "<25",
                "Bachelors",
                "Private",
                "Full-Time",
                "Sales",
                "Single",
                "White",
                "Female"
            ]
        );
        assert_eq!(rows[0].label, Some(Outcome::Unfavorable));
    }

    #[test]
    fn missing_column_is_a_dataset_error() {
        let d = DatasetDescriptor::builtin("insurance").unwrap();
        let err = d.preprocess("age,sex\n20,male\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Dataset(_)));
    }
}
