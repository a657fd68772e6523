//! Data ingestion and the labeling pool.
//!
//! A [`Dataset`] holds fully numeric feature rows plus a binary sensitive
//! attribute and an integer label per row. CSV input is mapped through a
//! [`Schema`]: numeric columns parse directly, categorical columns expand
//! to one-hot indicators with the lexicographically smallest category
//! dropped as the reference, and the sensitive/label columns are encoded
//! binary with the lexicographically smaller raw value mapped to 0. The
//! sensitive column never enters the feature matrix.
//!
//! [`PoolState`] is the active-learning view of a training set: an
//! unlabeled pool `U`, a labeled set `L`, a frozen verification snapshot
//! `V` of the initial pool, and an [`Oracle`] that reveals true labels
//! while a budget lasts.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
}

/// Maps CSV columns onto feature/sensitive/label roles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Schema {
    pub features: Vec<FeatureSpec>,
    pub sensitive: String,
    pub label: String,
}

impl Schema {
    pub fn from_json_str(s: &str) -> Result<Schema> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Schema> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

/// One row: dense id, numeric features, binary sensitive attribute, label.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPoint {
    pub id: usize,
    pub features: Vec<f64>,
    pub sensitive: u8,
    pub label: usize,
}

/// A pool point as selection strategies see it: no label attached.
#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledPoint {
    pub id: usize,
    pub features: Vec<f64>,
    pub sensitive: u8,
}

/// A labeled training record, the unit classifiers train on.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRecord {
    pub features: Vec<f64>,
    pub sensitive: u8,
    pub label: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: f64,
    pub stddev: f64,
}

/// Standardization fitted on one dataset, applicable to another.
///
/// `kept` indexes the source columns that survived (population stddev
/// above 1e-12); constant columns are dropped and their names recorded.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Standardization {
    pub source_d: usize,
    pub kept: Vec<usize>,
    pub stats: Vec<ColumnStats>,
    pub dropped: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub points: Vec<DataPoint>,
    pub feature_names: Vec<String>,
    pub n_labels: usize,
    pub standardization: Option<Standardization>,
}

impl Dataset {
    /// Builds a dataset from raw points, assigning dense ids 0..n-1 and
    /// validating dimensions, finiteness, and label/sensitive ranges.
    pub fn from_points(
        mut points: Vec<DataPoint>,
        feature_names: Vec<String>,
        n_labels: usize,
    ) -> Result<Dataset> {
        if points.is_empty() {
            return Err(Error::Empty { what: "dataset" });
        }
        if n_labels < 2 {
            return Err(Error::invalid_param("n_labels", "need at least two classes"));
        }
        let d = feature_names.len();
        for (i, p) in points.iter_mut().enumerate() {
            p.id = i;
            if p.features.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: p.features.len(),
                });
            }
            if p.features.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    context: "dataset features",
                });
            }
            if p.sensitive > 1 {
                return Err(Error::invalid_param("sensitive", "must be 0 or 1"));
            }
            if p.label >= n_labels {
                return Err(Error::invalid_param(
                    "label",
                    format!("label {} out of range for {} classes", p.label, n_labels),
                ));
            }
        }
        Ok(Dataset {
            points,
            feature_names,
            n_labels,
            standardization: None,
        })
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn d(&self) -> usize {
        self.feature_names.len()
    }
}

/// Binary-encodes the (at most two) distinct raw values of a column:
/// lexicographically smaller value maps to 0.
fn binary_encoding(column: &str, values: &BTreeSet<String>) -> Result<Vec<String>> {
    if values.is_empty() || values.len() > 2 {
        return Err(Error::NotBinary {
            column: column.to_string(),
            count: values.len(),
        });
    }
    Ok(values.iter().cloned().collect())
}

/// Loads a CSV file through a schema.
///
/// Categorical features one-hot expand in schema order, each producing
/// `k - 1` indicator columns named `column=value` for every non-reference
/// category in lexicographic order.
pub fn load_csv(csv_path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let mut reader = csv::Reader::from_path(csv_path.as_ref()).map_err(|e| {
        Error::invalid_param("csv path", format!("{}: {e}", csv_path.as_ref().display()))
    })?;
    let headers = reader.headers()?.clone();
    let col_index = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownColumn {
                column: name.to_string(),
            })
    };

    let feature_cols: Vec<usize> = schema
        .features
        .iter()
        .map(|f| col_index(&f.name))
        .collect::<Result<_>>()?;
    let sensitive_col = col_index(&schema.sensitive)?;
    let label_col = col_index(&schema.label)?;

    let rows: Vec<csv::StringRecord> = reader.records().collect::<std::result::Result<_, _>>()?;
    if rows.is_empty() {
        return Err(Error::Empty { what: "csv file" });
    }

    // First pass: category inventories for categorical/sensitive/label columns.
    let mut categories: Vec<BTreeSet<String>> = vec![BTreeSet::new(); schema.features.len()];
    let mut sens_values = BTreeSet::new();
    let mut label_values = BTreeSet::new();
    for row in &rows {
        for (fi, spec) in schema.features.iter().enumerate() {
            if spec.kind == FeatureKind::Categorical {
                categories[fi].insert(row[feature_cols[fi]].to_string());
            }
        }
        sens_values.insert(row[sensitive_col].to_string());
        label_values.insert(row[label_col].to_string());
    }
    let sens_encoding = binary_encoding(&schema.sensitive, &sens_values)?;
    let label_encoding = binary_encoding(&schema.label, &label_values)?;

    // Expanded feature names: numeric columns as-is, categorical columns as
    // one indicator per non-reference category.
    let mut feature_names = Vec::new();
    for (fi, spec) in schema.features.iter().enumerate() {
        match spec.kind {
            FeatureKind::Numeric => feature_names.push(spec.name.clone()),
            FeatureKind::Categorical => {
                for cat in categories[fi].iter().skip(1) {
                    feature_names.push(format!("{}={}", spec.name, cat));
                }
            }
        }
    }
    if feature_names.is_empty() {
        return Err(Error::Empty {
            what: "feature set",
        });
    }

    let mut points = Vec::with_capacity(rows.len());
    for (ri, row) in rows.iter().enumerate() {
        let mut features = Vec::with_capacity(feature_names.len());
        for (fi, spec) in schema.features.iter().enumerate() {
            let raw = &row[feature_cols[fi]];
            match spec.kind {
                FeatureKind::Numeric => {
                    let v: f64 = raw.trim().parse().map_err(|_| Error::NonNumeric {
                        row: ri,
                        column: spec.name.clone(),
                        value: raw.to_string(),
                    })?;
                    if !v.is_finite() {
                        return Err(Error::NonFinite {
                            context: "csv feature value",
                        });
                    }
                    features.push(v);
                }
                FeatureKind::Categorical => {
                    for cat in categories[fi].iter().skip(1) {
                        features.push(if raw == cat { 1.0 } else { 0.0 });
                    }
                }
            }
        }
        let sensitive = sens_encoding.iter().position(|v| v == &row[sensitive_col]).unwrap() as u8;
        let label = label_encoding
            .iter()
            .position(|v| v == &row[label_col])
            .unwrap();
        points.push(DataPoint {
            id: ri,
            features,
            sensitive,
            label,
        });
    }
    Dataset::from_points(points, feature_names, 2)
}

const STDDEV_FLOOR: f64 = 1e-12;

/// Fits per-column population statistics and returns the transformed
/// dataset plus the fitted transform. Constant columns are dropped.
pub fn standardize(ds: &Dataset) -> Result<(Dataset, Standardization)> {
    let n = ds.n() as f64;
    let d = ds.d();
    let mut kept = Vec::new();
    let mut stats = Vec::new();
    let mut dropped = Vec::new();
    for j in 0..d {
        let mean = ds.points.iter().map(|p| p.features[j]).sum::<f64>() / n;
        let var = ds
            .points
            .iter()
            .map(|p| {
                let c = p.features[j] - mean;
                c * c
            })
            .sum::<f64>()
            / n;
        let stddev = var.sqrt();
        if stddev > STDDEV_FLOOR {
            kept.push(j);
            stats.push(ColumnStats { mean, stddev });
        } else {
            dropped.push(ds.feature_names[j].clone());
        }
    }
    if kept.is_empty() {
        return Err(Error::Empty {
            what: "feature set after dropping constant columns",
        });
    }
    if !dropped.is_empty() {
        log::warn!("dropping constant feature columns: {dropped:?}");
    }
    let stz = Standardization {
        source_d: d,
        kept,
        stats,
        dropped,
    };
    let out = apply_standardization(ds, &stz)?;
    Ok((out, stz))
}

/// Applies a previously fitted standardization, e.g. train statistics to a
/// held-out test set.
pub fn apply_standardization(ds: &Dataset, stz: &Standardization) -> Result<Dataset> {
    if ds.d() != stz.source_d {
        return Err(Error::DimensionMismatch {
            expected: stz.source_d,
            got: ds.d(),
        });
    }
    let points = ds
        .points
        .iter()
        .map(|p| DataPoint {
            id: p.id,
            features: stz
                .kept
                .iter()
                .zip(&stz.stats)
                .map(|(&j, s)| (p.features[j] - s.mean) / s.stddev)
                .collect(),
            sensitive: p.sensitive,
            label: p.label,
        })
        .collect();
    let feature_names = stz
        .kept
        .iter()
        .map(|&j| ds.feature_names[j].clone())
        .collect();
    let mut out = Dataset::from_points(points, feature_names, ds.n_labels)?;
    out.standardization = Some(stz.clone());
    Ok(out)
}

/// Seeded train/test split. The train side gets `ceil(n * train_frac)`
/// rows; both sides keep their original relative order and are renumbered
/// with dense ids.
pub fn split(ds: &Dataset, train_frac: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::invalid_param(
            "train_frac",
            format!("must lie strictly inside (0, 1), got {train_frac}"),
        ));
    }
    let n = ds.n();
    let n_train = (n as f64 * train_frac).ceil() as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::DegenerateSplit { n, train_frac });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut train_idx = order[..n_train].to_vec();
    let mut test_idx = order[n_train..].to_vec();
    train_idx.sort_unstable();
    test_idx.sort_unstable();

    let take = |idx: &[usize]| -> Result<Dataset> {
        let points = idx.iter().map(|&i| ds.points[i].clone()).collect();
        Dataset::from_points(points, ds.feature_names.clone(), ds.n_labels)
    };
    Ok((take(&train_idx)?, take(&test_idx)?))
}

/// Answers label queries from the hidden ground truth.
#[derive(Debug, Clone)]
pub struct Oracle {
    labels: Vec<usize>,
    calls_made: usize,
}

impl Oracle {
    fn reveal(&mut self, id: usize) -> usize {
        self.calls_made += 1;
        self.labels[id]
    }

    pub fn calls_made(&self) -> usize {
        self.calls_made
    }
}

/// The state of one active-learning run over a training set.
#[derive(Debug, Clone)]
pub struct PoolState {
    points: Vec<UnlabeledPoint>,
    unlabeled: BTreeSet<usize>,
    labeled: Vec<LabeledRecord>,
    verification: Vec<UnlabeledPoint>,
    budget_remaining: usize,
    oracle: Oracle,
}

impl PoolState {
    /// Builds the pool from a training set: the verification snapshot `V`
    /// freezes every training point, then `n_seed_labels` points drawn
    /// uniformly (seeded) move to the labeled set for free, i.e. without
    /// touching `budget` or the oracle call counter.
    pub fn new(train: &Dataset, n_seed_labels: usize, budget: usize, seed: u64) -> Result<PoolState> {
        let n = train.n();
        if n_seed_labels > n {
            return Err(Error::invalid_param(
                "n_seed_labels",
                format!("{n_seed_labels} seed labels requested from {n} points"),
            ));
        }
        let points: Vec<UnlabeledPoint> = train
            .points
            .iter()
            .map(|p| UnlabeledPoint {
                id: p.id,
                features: p.features.clone(),
                sensitive: p.sensitive,
            })
            .collect();
        let verification = points.clone();
        let oracle = Oracle {
            labels: train.points.iter().map(|p| p.label).collect(),
            calls_made: 0,
        };

        let mut ids: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ids.shuffle(&mut rng);
        let mut seed_ids: Vec<usize> = ids[..n_seed_labels].to_vec();
        seed_ids.sort_unstable();

        let mut unlabeled: BTreeSet<usize> = (0..n).collect();
        let mut labeled = Vec::with_capacity(n_seed_labels);
        for id in seed_ids {
            unlabeled.remove(&id);
            labeled.push(LabeledRecord {
                features: points[id].features.clone(),
                sensitive: points[id].sensitive,
                label: train.points[id].label,
            });
        }
        Ok(PoolState {
            points,
            unlabeled,
            labeled,
            verification,
            budget_remaining: budget,
            oracle,
        })
    }

    /// Purchases the label for `id`: removes it from `U`, appends it to
    /// `L`, and decrements the budget.
    pub fn label(&mut self, id: usize) -> Result<usize> {
        if self.budget_remaining == 0 {
            return Err(Error::BudgetExhausted);
        }
        if !self.unlabeled.remove(&id) {
            return Err(Error::NotUnlabeled { id });
        }
        self.budget_remaining -= 1;
        let y = self.oracle.reveal(id);
        self.labeled.push(LabeledRecord {
            features: self.points[id].features.clone(),
            sensitive: self.points[id].sensitive,
            label: y,
        });
        Ok(y)
    }

    pub fn unlabeled_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.unlabeled.iter().copied()
    }

    /// Unlabeled points in ascending id order.
    pub fn candidates(&self) -> Vec<&UnlabeledPoint> {
        self.unlabeled.iter().map(|&id| &self.points[id]).collect()
    }

    pub fn point(&self, id: usize) -> Option<&UnlabeledPoint> {
        self.points.get(id)
    }

    pub fn labeled(&self) -> &[LabeledRecord] {
        &self.labeled
    }

    pub fn verification(&self) -> &[UnlabeledPoint] {
        &self.verification
    }

    pub fn budget_remaining(&self) -> usize {
        self.budget_remaining
    }

    pub fn n_unlabeled(&self) -> usize {
        self.unlabeled.len()
    }

    pub fn oracle_calls(&self) -> usize {
        self.oracle.calls_made()
    }
}
