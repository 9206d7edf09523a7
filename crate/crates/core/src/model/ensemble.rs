//! A small random-forest style classifier over discrete level indices.
//!
//! Ordinal features split on `level <= t`, nominal features on `level == t`.
//! Trees are grown on bootstrap samples with a random feature subset tried at
//! every node and Gini impurity as the split criterion.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DecisionModel, Outcome};
use crate::error::{Error, Result};
use crate::schema::{FeatureKind, FeatureSchema, State};

const LEAF: i32 = -1;

/// One tree stored as parallel node arrays; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// Split feature, or -1 for a leaf.
    pub feature: Vec<i32>,
    pub level: Vec<u16>,
    pub left: Vec<u32>,
    pub right: Vec<u32>,
    /// Majority class at the node (only read at leaves).
    pub class: Vec<Outcome>,
}

impl Tree {
    fn push(&mut self, feature: i32, level: u16, class: Outcome) -> usize {
        self.feature.push(feature);
        self.level.push(level);
        self.left.push(0);
        self.right.push(0);
        self.class.push(class);
        self.feature.len() - 1
    }

    fn predict(&self, ordinal: &[bool], s: &State) -> Outcome {
        let mut node = 0usize;
        loop {
            let f = self.feature[node];
            if f == LEAF {
                return self.class[node];
            }
            let f = f as usize;
            let v = s.0[f];
            let goes_left = if ordinal[f] {
                v <= self.level[node]
            } else {
                v == self.level[node]
            };
            node = if goes_left {
                self.left[node]
            } else {
                self.right[node]
            } as usize;
        }
    }

    pub fn node_count(&self) -> usize {
        self.feature.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsembleModel {
    pub level_counts: Vec<u16>,
    pub ordinal: Vec<bool>,
    pub trees: Vec<Tree>,
    /// Favorable iff the favorable vote fraction is strictly above this.
    pub vote_threshold: f64,
}

impl TreeEnsembleModel {
    pub fn favorable_fraction(&self, s: &State) -> f64 {
        if self.trees.is_empty() {
            return 0.0;
        }
        let votes = self
            .trees
            .iter()
            .filter(|t| t.predict(&self.ordinal, s).is_favorable())
            .count();
        votes as f64 / self.trees.len() as f64
    }

    pub fn validate_against(&self, schema: &FeatureSchema) -> Result<()> {
        if self.level_counts.len() != schema.len() || self.ordinal.len() != schema.len() {
            return Err(Error::Model(
                "ensemble feature count differs from schema".into(),
            ));
        }
        for (i, f) in schema.features().iter().enumerate() {
            if self.level_counts[i] as usize != f.level_count()
                || self.ordinal[i] != (f.kind == FeatureKind::Ordinal)
            {
                return Err(Error::Model(format!(
                    "ensemble disagrees on feature `{}`",
                    f.name
                )));
            }
        }
        if !(0.0..1.0).contains(&self.vote_threshold) {
            return Err(Error::Model("vote threshold must be in [0, 1)".into()));
        }
        for tree in &self.trees {
            let n = tree.node_count();
            if n == 0
                || tree.level.len() != n
                || tree.left.len() != n
                || tree.right.len() != n
                || tree.class.len() != n
            {
                return Err(Error::Model("tree arrays have inconsistent lengths".into()));
            }
            for node in 0..n {
                let f = tree.feature[node];
                if f == LEAF {
                    continue;
                }
                if f < 0 || f as usize >= schema.len() {
                    return Err(Error::Model(format!("split on unknown feature #{f}")));
                }
                if tree.level[node] >= self.level_counts[f as usize] {
                    return Err(Error::Model("split level out of range".into()));
                }
                // Children are always created after their parent, which rules out cycles.
                for child in [tree.left[node], tree.right[node]] {
                    if child as usize <= node || child as usize >= n {
                        return Err(Error::Model("invalid child pointer".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

impl DecisionModel for TreeEnsembleModel {
    fn classify(&self, s: &State) -> Outcome {
        if self.favorable_fraction(s) > self.vote_threshold {
            Outcome::Favorable
        } else {
            Outcome::Unfavorable
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledRow {
    pub state: State,
    pub label: Outcome,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Fraction of features tried at each split.
    pub feature_subsample: f64,
    pub min_samples_split: usize,
    /// Fraction of rows held out to measure accuracy.
    pub holdout_fraction: f64,
    pub vote_threshold: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_trees: 50,
            max_depth: 8,
            feature_subsample: 0.6,
            min_samples_split: 4,
            holdout_fraction: 0.2,
            vote_threshold: 0.5,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_rows: usize,
    pub holdout_rows: usize,
    pub holdout_accuracy: Option<f64>,
}

pub fn train_tree_ensemble(
    schema: &FeatureSchema,
    rows: &[LabeledRow],
    config: &TrainConfig,
) -> Result<(TreeEnsembleModel, TrainReport)> {
    if config.n_trees == 0 {
        return Err(Error::InvalidArgument("n_trees must be positive".into()));
    }
    if !(0.0..1.0).contains(&config.holdout_fraction) {
        return Err(Error::InvalidArgument(
            "holdout_fraction must be in [0, 1)".into(),
        ));
    }
    if !(config.feature_subsample > 0.0 && config.feature_subsample <= 1.0) {
        return Err(Error::InvalidArgument(
            "feature_subsample must be in (0, 1]".into(),
        ));
    }
    for r in rows {
        schema.validate(&r.state)?;
    }
    let positives = rows.iter().filter(|r| r.label.is_favorable()).count();
    if positives == 0 || positives == rows.len() {
        return Err(Error::DegenerateData(
            "training data must contain both outcomes".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(&mut rng);
    let holdout_rows = ((rows.len() as f64) * config.holdout_fraction).floor() as usize;
    let (holdout, train) = order.split_at(holdout_rows);
    let train: Vec<&LabeledRow> = train.iter().map(|&i| &rows[i]).collect();
    if train.iter().all(|r| r.label == train[0].label) {
        return Err(Error::DegenerateData(
            "training split contains a single outcome".into(),
        ));
    }

    let ordinal: Vec<bool> = schema
        .features()
        .iter()
        .map(|f| f.kind == FeatureKind::Ordinal)
        .collect();
    let level_counts: Vec<u16> = schema
        .features()
        .iter()
        .map(|f| f.level_count() as u16)
        .collect();

    let n_candidates =
        ((schema.len() as f64 * config.feature_subsample).round() as usize).clamp(1, schema.len());
    let grower = Grower {
        rows: &train,
        ordinal: &ordinal,
        level_counts: &level_counts,
        max_depth: config.max_depth,
        min_samples_split: config.min_samples_split.max(2),
        n_candidates,
    };

    let trees = (0..config.n_trees)
        .map(|_| {
            let sample: Vec<usize> = (0..train.len())
                .map(|_| rng.random_range(0..train.len()))
                .collect();
            grower.grow(sample, &mut rng)
        })
        .collect();

    let model = TreeEnsembleModel {
        level_counts,
        ordinal,
        trees,
        vote_threshold: config.vote_threshold,
    };

    let holdout_accuracy = (!holdout.is_empty()).then(|| {
        let correct = holdout
            .iter()
            .filter(|&&i| model.classify(&rows[i].state) == rows[i].label)
            .count();
        correct as f64 / holdout.len() as f64
    });

    Ok((
        model,
        TrainReport {
            train_rows: train.len(),
            holdout_rows: holdout.len(),
            holdout_accuracy,
        },
    ))
}

struct Grower<'a> {
    rows: &'a [&'a LabeledRow],
    ordinal: &'a [bool],
    level_counts: &'a [u16],
    max_depth: usize,
    min_samples_split: usize,
    n_candidates: usize,
}

struct Split {
    feature: usize,
    level: u16,
    impurity: f64,
}

fn gini(pos: f64, total: f64) -> f64 {
    if total == 0.0 {
        return 0.0;
    }
    let p = pos / total;
    2.0 * p * (1.0 - p)
}

fn majority(pos: usize, total: usize) -> Outcome {
    // Ties resolve to the unfavorable class.
    if 2 * pos > total {
        Outcome::Favorable
    } else {
        Outcome::Unfavorable
    }
}

impl Grower<'_> {
    fn grow(&self, sample: Vec<usize>, rng: &mut ChaCha8Rng) -> Tree {
        let mut tree = Tree {
            feature: Vec::new(),
            level: Vec::new(),
            left: Vec::new(),
            right: Vec::new(),
            class: Vec::new(),
        };
        self.build(&mut tree, sample, 0, rng);
        tree
    }

    fn build(&self, tree: &mut Tree, idx: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let pos = idx
            .iter()
            .filter(|&&i| self.rows[i].label.is_favorable())
            .count();
        let class = majority(pos, idx.len());
        let pure = pos == 0 || pos == idx.len();
        if pure || depth >= self.max_depth || idx.len() < self.min_samples_split {
            return tree.push(LEAF, 0, class);
        }
        let Some(split) = self.best_split(&idx, pos, rng) else {
            return tree.push(LEAF, 0, class);
        };

        let node = tree.push(split.feature as i32, split.level, class);
        let (left, right): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| {
            let v = self.rows[i].state.0[split.feature];
            if self.ordinal[split.feature] {
                v <= split.level
            } else {
                v == split.level
            }
        });
        let l = self.build(tree, left, depth + 1, rng);
        let r = self.build(tree, right, depth + 1, rng);
        tree.left[node] = l as u32;
        tree.right[node] = r as u32;
        node
    }

    fn best_split(&self, idx: &[usize], pos: usize, rng: &mut ChaCha8Rng) -> Option<Split> {
        let n = idx.len() as f64;
        let parent = gini(pos as f64, n);
        let mut features: Vec<usize> = (0..self.ordinal.len()).collect();
        let (candidates, _) = features.partial_shuffle(rng, self.n_candidates);

        let mut best: Option<Split> = None;
        for &f in candidates.iter() {
            let levels = self.level_counts[f] as usize;
            let mut count = vec![0usize; levels];
            let mut count_pos = vec![0usize; levels];
            for &i in idx {
                let v = self.rows[i].state.0[f] as usize;
                count[v] += 1;
                if self.rows[i].label.is_favorable() {
                    count_pos[v] += 1;
                }
            }
            let mut left_n = 0usize;
            let mut left_pos = 0usize;
            for level in 0..levels.saturating_sub(usize::from(self.ordinal[f])) {
                let (ln, lp) = if self.ordinal[f] {
                    left_n += count[level];
                    left_pos += count_pos[level];
                    (left_n, left_pos)
                } else {
                    (count[level], count_pos[level])
                };
                let rn = idx.len() - ln;
                if ln == 0 || rn == 0 {
                    continue;
                }
                let rp = pos - lp;
                let impurity = (ln as f64 * gini(lp as f64, ln as f64)
                    + rn as f64 * gini(rp as f64, rn as f64))
                    / n;
                if impurity < parent - 1e-12 && best.as_ref().is_none_or(|b| impurity < b.impurity)
                {
                    best = Some(Split {
                        feature: f,
                        level: level as u16,
                        impurity,
                    });
                }
            }
        }
        best
    }
}
