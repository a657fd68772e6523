//! Experiment harness: repeated-split benchmark runs of the labeling loop.
//!
//! One experiment fixes a dataset, a selection strategy, a disparity
//! measure, and a labeling budget, then repeats the loop over several
//! random train/test splits. Each split gets its own seed chain derived
//! from `base_seed + split_id`, so runs are reproducible record for
//! record regardless of thread count; with `record_timing` off the
//! emitted files are byte-identical across repeats.

pub mod synth;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{self, Dataset, PoolState, Schema, UnlabeledPoint};
use crate::error::{Error, Result};
use crate::fairness::{self, DisparityMeasure};
use crate::glm::{self, LinearClassifier, TrainConfig};
use crate::schedule::AlphaSchedule;
use crate::strategies::{self, fbc, SelectionScore};

use synth::BiasedParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Random,
    Entropy,
    Fal,
    Fbc,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Random,
        Strategy::Entropy,
        Strategy::Fal,
        Strategy::Fbc,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Entropy => "entropy",
            Strategy::Fal => "fal",
            Strategy::Fbc => "fbc",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Strategy> {
        Strategy::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownName {
                kind: "strategy",
                name: s.to_string(),
            })
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierConfig {
    #[serde(default = "default_reg_strength")]
    pub reg_strength: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_reg_strength() -> f64 {
    TrainConfig::default().reg_strength
}

fn default_max_iter() -> usize {
    TrainConfig::default().max_iter
}

fn default_tol() -> f64 {
    TrainConfig::default().tol
}

impl Default for ClassifierConfig {
    fn default() -> ClassifierConfig {
        ClassifierConfig {
            reg_strength: default_reg_strength(),
            max_iter: default_max_iter(),
            tol: default_tol(),
        }
    }
}

impl ClassifierConfig {
    pub fn to_train_config(&self) -> TrainConfig {
        TrainConfig {
            reg_strength: self.reg_strength,
            max_iter: self.max_iter,
            tol: self.tol,
        }
    }
}

/// Where the rows come from: a CSV file with a schema, or the built-in
/// biased generator. The generator's `data_seed` defaults to `base_seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetConfig {
    Csv {
        path: String,
        schema: String,
    },
    SyntheticBiased {
        n: usize,
        #[serde(default = "default_d_noise")]
        d_noise: usize,
        #[serde(default = "default_proxy_shift")]
        proxy_shift: f64,
        #[serde(default = "default_proxy_weight")]
        proxy_weight: f64,
        #[serde(default = "default_proxy_group_slope")]
        proxy_group_slope: f64,
        #[serde(default = "default_proxy_signal_mix")]
        proxy_signal_mix: f64,
        #[serde(default = "default_signal_weights")]
        signal_weights: Vec<f64>,
        #[serde(default = "default_intercept")]
        intercept: f64,
        #[serde(default)]
        data_seed: Option<u64>,
    },
}

fn default_d_noise() -> usize {
    BiasedParams::default().d_noise
}

fn default_proxy_shift() -> f64 {
    BiasedParams::default().proxy_shift
}

fn default_proxy_weight() -> f64 {
    BiasedParams::default().proxy_weight
}

fn default_proxy_group_slope() -> f64 {
    BiasedParams::default().proxy_group_slope
}

fn default_proxy_signal_mix() -> f64 {
    BiasedParams::default().proxy_signal_mix
}

fn default_signal_weights() -> Vec<f64> {
    BiasedParams::default().signal_weights
}

fn default_intercept() -> f64 {
    BiasedParams::default().intercept
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub strategy: Strategy,
    pub measure: DisparityMeasure,
    /// Oracle calls per split; the loop runs exactly this many rounds.
    pub budget: usize,
    pub n_splits: usize,
    pub base_seed: u64,
    #[serde(default = "default_train_frac")]
    pub train_frac: f64,
    /// Labels revealed for free before the loop starts.
    #[serde(default = "default_n_seed_labels")]
    pub n_seed_labels: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub alpha: AlphaSchedule,
    #[serde(default)]
    pub classifier: ClassifierConfig,
    /// For the retraining selector only: score a seeded random subset of
    /// at most this many candidates per round instead of all of them.
    #[serde(default)]
    pub candidate_subsample: Option<usize>,
    /// Keep only a seeded random subset of the loaded rows.
    #[serde(default)]
    pub row_subsample: Option<usize>,
    /// With this off, `wall_time_s` is written as 0.0 and repeated runs
    /// of the same config produce byte-identical outputs.
    #[serde(default = "default_true")]
    pub record_timing: bool,
    /// Weighting mode of the covariance selector: magnitudes of the
    /// per-feature weights (default) or their signed values.
    #[serde(default = "default_true")]
    pub fbc_use_abs: bool,
    /// Also keep per-candidate score breakdowns (fal/fbc only); meant
    /// for small diagnostic runs.
    #[serde(default)]
    pub dump_scores: bool,
}

fn default_train_frac() -> f64 {
    0.6
}

fn default_n_seed_labels() -> usize {
    6
}

fn default_threshold() -> f64 {
    0.5
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<ExperimentConfig> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
        ExperimentConfig::from_json_str(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::invalid_param("budget", "must be positive"));
        }
        if self.n_splits == 0 {
            return Err(Error::invalid_param("n_splits", "must be positive"));
        }
        if self.n_seed_labels == 0 {
            return Err(Error::invalid_param(
                "n_seed_labels",
                "the first model needs at least one label",
            ));
        }
        if !(self.threshold.is_finite() && self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::invalid_param(
                "threshold",
                format!("must lie in (0, 1), got {}", self.threshold),
            ));
        }
        if self.candidate_subsample == Some(0) {
            return Err(Error::invalid_param("candidate_subsample", "must be positive"));
        }
        if self.row_subsample == Some(0) {
            return Err(Error::invalid_param("row_subsample", "must be positive"));
        }
        self.alpha.validate()
    }
}

/// One output row: the model after a labeling round of one split.
/// Accuracy, precision, and recall come from that split's held-out test
/// set; disparity comes from the frozen pool snapshot the selector
/// optimizes over. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub split_id: usize,
    pub iteration: usize,
    pub strategy: Strategy,
    pub alpha: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub disparity: f64,
    pub measure: DisparityMeasure,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatPair {
    pub mean: f64,
    /// Sample standard deviation across splits; 0 for a single split.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationAggregate {
    pub iteration: usize,
    pub accuracy: StatPair,
    pub precision: StatPair,
    pub recall: StatPair,
    pub disparity: StatPair,
}

/// Per-round score breakdown kept when `dump_scores` is on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreDump {
    pub iteration: usize,
    pub alpha: f64,
    pub chosen: usize,
    pub scores: Vec<SelectionScore>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitRun {
    pub records: Vec<MetricsRecord>,
    pub scores: Vec<ScoreDump>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    /// All rows, ordered by split then iteration.
    pub records: Vec<MetricsRecord>,
    pub split_seeds: Vec<u64>,
    pub per_iteration: Vec<IterationAggregate>,
    /// Indexed by split; empty unless `dump_scores` was on.
    pub score_dumps: Vec<Vec<ScoreDump>>,
}

/// Loads or generates the configured rows, applying `row_subsample`.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    let ds = match &cfg.dataset {
        DatasetConfig::Csv { path, schema } => {
            dataset::load_csv(path, &Schema::from_json_file(schema)?)?
        }
        DatasetConfig::SyntheticBiased {
            n,
            d_noise,
            proxy_shift,
            proxy_weight,
            proxy_group_slope,
            proxy_signal_mix,
            signal_weights,
            intercept,
            data_seed,
        } => {
            let params = BiasedParams {
                n: *n,
                d_noise: *d_noise,
                proxy_shift: *proxy_shift,
                proxy_weight: *proxy_weight,
                proxy_group_slope: *proxy_group_slope,
                proxy_signal_mix: *proxy_signal_mix,
                signal_weights: signal_weights.clone(),
                intercept: *intercept,
            };
            synth::make_biased_dataset(&params, data_seed.unwrap_or(cfg.base_seed))?
        }
    };
    match cfg.row_subsample {
        Some(k) if k < ds.n() => {
            // dedicated stream: the kept rows depend only on base_seed
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.base_seed ^ ROW_SUBSAMPLE_TAG);
            let mut keep: Vec<usize> =
                rand::seq::index::sample(&mut rng, ds.n(), k).into_iter().collect();
            keep.sort_unstable();
            let points = keep.into_iter().map(|i| ds.points[i].clone()).collect();
            Dataset::from_points(points, ds.feature_names.clone(), ds.n_labels)
        }
        _ => Ok(ds),
    }
}

const ROW_SUBSAMPLE_TAG: u64 = 0x726f_7773;

/// Accuracy, precision, and recall of hard predictions on a labeled
/// dataset, with class 1 positive. Empty denominators yield 0.0.
pub fn test_metrics(
    clf: &LinearClassifier,
    test: &Dataset,
    threshold: f64,
) -> Result<(f64, f64, f64)> {
    if test.points.is_empty() {
        return Err(Error::Empty { what: "test set" });
    }
    let (mut correct, mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64, 0u64);
    for p in &test.points {
        let pred = clf.predict(&p.features, threshold)?;
        correct += u64::from(pred == p.label);
        tp += u64::from(pred == 1 && p.label == 1);
        fp += u64::from(pred == 1 && p.label != 1);
        fn_ += u64::from(pred != 1 && p.label == 1);
    }
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    Ok((
        correct as f64 / test.points.len() as f64,
        ratio(tp, tp + fp),
        ratio(tp, tp + fn_),
    ))
}

fn subsample_candidates<'a>(
    all: &[&'a UnlabeledPoint],
    m: Option<usize>,
    rng: &mut ChaCha8Rng,
) -> Vec<&'a UnlabeledPoint> {
    match m {
        Some(m) if m < all.len() => {
            let idx = rand::seq::index::sample(rng, all.len(), m);
            let mut kept: Vec<&UnlabeledPoint> = idx.iter().map(|i| all[i]).collect();
            kept.sort_by_key(|p| p.id);
            kept
        }
        _ => all.to_vec(),
    }
}

/// Runs one split of the experiment.
///
/// The split's seed chain is `base_seed + split_id`, expanded into four
/// independent streams (train/test split, pool seeding, candidate
/// subsampling, random selection). Each round selects with the model
/// trained at the end of the previous round, buys one label, retrains,
/// and records test metrics; the recorded `wall_time_s` covers selection
/// through retraining.
pub fn run_split(cfg: &ExperimentConfig, full: &Dataset, split_id: usize) -> Result<SplitRun> {
    let split_seed = cfg.base_seed.wrapping_add(split_id as u64);
    let mut master = ChaCha8Rng::seed_from_u64(split_seed);
    let inner_split_seed: u64 = master.random();
    let pool_seed: u64 = master.random();
    let subsample_seed: u64 = master.random();
    let random_sel_seed: u64 = master.random();

    let (train_raw, test_raw) = dataset::split(full, cfg.train_frac, inner_split_seed)?;
    let (train, stz) = dataset::standardize(&train_raw)?;
    let test = dataset::apply_standardization(&test_raw, &stz)?;

    if cfg.n_seed_labels + cfg.budget > train.n() {
        return Err(Error::invalid_param(
            "budget",
            format!(
                "{} seed labels plus budget {} exceed the training pool of {}",
                cfg.n_seed_labels,
                cfg.budget,
                train.n()
            ),
        ));
    }
    let mut pool = PoolState::new(&train, cfg.n_seed_labels, cfg.budget, pool_seed)?;

    let train_cfg = cfg.classifier.to_train_config();
    let mut clf = glm::train(pool.labeled(), &train_cfg)?;

    let mut agg = if cfg.strategy == Strategy::Fbc {
        Some(fbc::CovAggregates::from_records(pool.labeled())?)
    } else {
        None
    };
    let sens_cov = if cfg.strategy == Strategy::Fbc {
        Some(fbc::init_sensitive_cov(pool.verification())?)
    } else {
        None
    };

    let mut rng_random = ChaCha8Rng::seed_from_u64(random_sel_seed);
    let mut rng_subsample = ChaCha8Rng::seed_from_u64(subsample_seed);
    let mut records = Vec::with_capacity(cfg.budget);
    let mut score_dumps = Vec::new();

    for t in 0..cfg.budget {
        let alpha = match cfg.strategy {
            Strategy::Fal | Strategy::Fbc => cfg.alpha.alpha_at(t, cfg.budget)?,
            Strategy::Random | Strategy::Entropy => 1.0,
        };
        let started = Instant::now();
        let all = pool.candidates();
        let (chosen, selection) = match cfg.strategy {
            Strategy::Random => (strategies::select_random(&all, &mut rng_random)?, None),
            Strategy::Entropy => (strategies::select_entropy(&all, &clf)?, None),
            Strategy::Fal => {
                let cands =
                    subsample_candidates(&all, cfg.candidate_subsample, &mut rng_subsample);
                let sel = strategies::select_fal(
                    &cands,
                    pool.labeled(),
                    &clf,
                    pool.verification(),
                    cfg.measure,
                    cfg.threshold,
                    alpha,
                    &train_cfg,
                )?;
                (sel.chosen, Some(sel))
            }
            Strategy::Fbc => {
                let sel = fbc::select_fbc(
                    &all,
                    agg.as_ref().expect("fbc aggregates"),
                    &clf,
                    sens_cov.as_ref().expect("fbc sensitive covariances"),
                    alpha,
                    cfg.fbc_use_abs,
                )?;
                (sel.chosen, Some(sel))
            }
        };
        pool.label(chosen)?;
        if let Some(agg) = agg.as_mut() {
            let newest = pool.labeled().last().expect("a label was just added");
            agg.update(&newest.features, newest.label)?;
        }
        clf = glm::train(pool.labeled(), &train_cfg)?;
        let elapsed = started.elapsed().as_secs_f64();

        let (accuracy, precision, recall) = test_metrics(&clf, &test, cfg.threshold)?;
        // predictive quality is scored out of sample; the group gap is
        // scored on the frozen pool snapshot the selector optimizes over
        let disparity = fairness::evaluate(&clf, pool.verification(), cfg.measure, cfg.threshold)?;
        records.push(MetricsRecord {
            split_id,
            iteration: t,
            strategy: cfg.strategy,
            alpha,
            accuracy,
            precision,
            recall,
            disparity,
            measure: cfg.measure,
            wall_time_s: if cfg.record_timing { elapsed } else { 0.0 },
        });
        if cfg.dump_scores {
            if let Some(sel) = selection {
                score_dumps.push(ScoreDump {
                    iteration: t,
                    alpha,
                    chosen: sel.chosen,
                    scores: sel.scores,
                });
            }
        }
    }
    Ok(SplitRun { records, scores: score_dumps })
}

/// Runs every split (in parallel) and aggregates per-iteration stats.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let full = load_dataset(cfg)?;
    if full.n_labels != 2 {
        return Err(Error::invalid_param("dataset", "binary labels required"));
    }
    let runs = (0..cfg.n_splits)
        .into_par_iter()
        .map(|i| run_split(cfg, &full, i))
        .collect::<Result<Vec<_>>>()?;
    let mut records = Vec::with_capacity(cfg.n_splits * cfg.budget);
    let mut score_dumps = Vec::with_capacity(cfg.n_splits);
    for run in runs {
        records.extend(run.records);
        score_dumps.push(run.scores);
    }
    Ok(ExperimentResult {
        per_iteration: aggregate_by_iteration(&records),
        split_seeds: (0..cfg.n_splits)
            .map(|i| cfg.base_seed.wrapping_add(i as u64))
            .collect(),
        records,
        score_dumps,
    })
}

fn mean_std(xs: &[f64]) -> StatPair {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() < 2 {
        0.0
    } else {
        (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    StatPair { mean, std }
}

/// Groups records by iteration and reduces each metric across splits.
pub fn aggregate_by_iteration(records: &[MetricsRecord]) -> Vec<IterationAggregate> {
    let mut groups: BTreeMap<usize, Vec<&MetricsRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.iteration).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(iteration, rs)| {
            let col = |f: fn(&MetricsRecord) -> f64| {
                mean_std(&rs.iter().map(|r| f(r)).collect::<Vec<_>>())
            };
            IterationAggregate {
                iteration,
                accuracy: col(|r| r.accuracy),
                precision: col(|r| r.precision),
                recall: col(|r| r.recall),
                disparity: col(|r| r.disparity),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricsFormat {
    Csv,
    Json,
}

#[derive(Serialize)]
struct RecordsFile<'a> {
    records: &'a [MetricsRecord],
}

/// Writes records to one file; CSV columns follow the record fields.
pub fn emit_metrics(
    records: &[MetricsRecord],
    format: MetricsFormat,
    path: impl AsRef<Path>,
) -> Result<()> {
    match format {
        MetricsFormat::Csv => {
            let mut w = csv::Writer::from_path(path)?;
            for r in records {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        MetricsFormat::Json => {
            let body = serde_json::to_string_pretty(&RecordsFile { records })?;
            fs::write(path, body + "\n")?;
        }
    }
    Ok(())
}

pub fn read_metrics_csv(path: impl AsRef<Path>) -> Result<Vec<MetricsRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| Ok(row?)).collect()
}

/// Per-iteration means of two runs side by side; deltas are `a - b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub iteration: usize,
    pub accuracy_a: f64,
    pub accuracy_b: f64,
    pub accuracy_delta: f64,
    pub disparity_a: f64,
    pub disparity_b: f64,
    pub disparity_delta: f64,
}

fn per_iteration_means(records: &[MetricsRecord]) -> BTreeMap<usize, (f64, f64)> {
    let mut groups: BTreeMap<usize, Vec<&MetricsRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.iteration).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(t, rs)| {
            let n = rs.len() as f64;
            let acc = rs.iter().map(|r| r.accuracy).sum::<f64>() / n;
            let disp = rs.iter().map(|r| r.disparity).sum::<f64>() / n;
            (t, (acc, disp))
        })
        .collect()
}

/// Compares two record streams on the iterations they share.
pub fn compare(a: &[MetricsRecord], b: &[MetricsRecord]) -> Result<Vec<CompareRow>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty { what: "comparison input" });
    }
    let ma = per_iteration_means(a);
    let mb = per_iteration_means(b);
    Ok(ma
        .into_iter()
        .filter_map(|(t, (acc_a, disp_a))| {
            mb.get(&t).map(|&(acc_b, disp_b)| CompareRow {
                iteration: t,
                accuracy_a: acc_a,
                accuracy_b: acc_b,
                accuracy_delta: acc_a - acc_b,
                disparity_a: disp_a,
                disparity_b: disp_b,
                disparity_delta: disp_a - disp_b,
            })
        })
        .collect())
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    config: &'a ExperimentConfig,
    split_seeds: &'a [u64],
    per_iteration: &'a [IterationAggregate],
}

/// Writes the standard output layout: one `raw_split<i>.csv` per split,
/// optional `scores_split<i>.json` dumps, and a `summary.json` echoing
/// the config next to the per-iteration aggregates.
pub fn write_run_outputs(
    cfg: &ExperimentConfig,
    result: &ExperimentResult,
    out_dir: impl AsRef<Path>,
) -> Result<()> {
    let out = out_dir.as_ref();
    fs::create_dir_all(out)?;
    for split in 0..cfg.n_splits {
        let rows: Vec<MetricsRecord> = result
            .records
            .iter()
            .filter(|r| r.split_id == split)
            .cloned()
            .collect();
        emit_metrics(&rows, MetricsFormat::Csv, out.join(format!("raw_split{split}.csv")))?;
        if let Some(dumps) = result.score_dumps.get(split) {
            if !dumps.is_empty() {
                let body = serde_json::to_string_pretty(dumps)?;
                fs::write(out.join(format!("scores_split{split}.json")), body + "\n")?;
            }
        }
    }
    let body = serde_json::to_string_pretty(&SummaryFile {
        config: cfg,
        split_seeds: &result.split_seeds,
        per_iteration: &result.per_iteration,
    })?;
    fs::write(out.join("summary.json"), body + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::str::FromStr;

    fn base_config(strategy: Strategy, n: usize, budget: usize, n_splits: usize) -> ExperimentConfig {
        ExperimentConfig {
            dataset: DatasetConfig::SyntheticBiased {
                n,
                d_noise: default_d_noise(),
                proxy_shift: default_proxy_shift(),
                proxy_weight: default_proxy_weight(),
                proxy_group_slope: default_proxy_group_slope(),
                proxy_signal_mix: default_proxy_signal_mix(),
                signal_weights: default_signal_weights(),
                intercept: default_intercept(),
                data_seed: None,
            },
            strategy,
            measure: DisparityMeasure::MutualInfo,
            budget,
            n_splits,
            base_seed: 42,
            train_frac: default_train_frac(),
            n_seed_labels: default_n_seed_labels(),
            threshold: default_threshold(),
            alpha: AlphaSchedule::default(),
            classifier: ClassifierConfig::default(),
            candidate_subsample: None,
            row_subsample: None,
            record_timing: true,
            fbc_use_abs: true,
            dump_scores: false,
        }
    }

    #[test]
    fn minimal_config_json_fills_in_the_defaults() {
        let cfg = ExperimentConfig::from_json_str(
            r#"{
                "dataset": {"kind": "synthetic_biased", "n": 200},
                "strategy": "entropy",
                "measure": "mutual_info",
                "budget": 10,
                "n_splits": 2,
                "base_seed": 1
            }"#,
        )
        .unwrap();
        assert_eq!(cfg.train_frac, 0.6);
        assert_eq!(cfg.n_seed_labels, 6);
        assert_eq!(cfg.threshold, 0.5);
        assert_eq!(cfg.alpha, AlphaSchedule::default());
        assert_eq!(cfg.classifier, ClassifierConfig::default());
        assert!(cfg.record_timing);
        assert!(cfg.fbc_use_abs);
        assert!(!cfg.dump_scores);
        assert_eq!(cfg.candidate_subsample, None);
        match cfg.dataset {
            DatasetConfig::SyntheticBiased { n, d_noise, ref signal_weights, .. } => {
                assert_eq!(n, 200);
                assert_eq!(d_noise, 3);
                assert_eq!(signal_weights, &[1.0, 0.8]);
            }
            _ => panic!("wrong dataset kind"),
        }
    }

    #[test]
    fn unknown_config_fields_are_rejected() {
        let err = ExperimentConfig::from_json_str(
            r#"{
                "dataset": {"kind": "synthetic_biased", "n": 200},
                "strategy": "entropy",
                "measure": "mutual_info",
                "budget": 10,
                "n_splits": 2,
                "base_seed": 1,
                "bugdet": 99
            }"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("bugdet"));
    }

    #[test]
    fn config_validation_catches_bad_values() {
        let good = base_config(Strategy::Entropy, 100, 5, 1);
        good.validate().unwrap();
        let mut c = good.clone();
        c.budget = 0;
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.n_splits = 0;
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.n_seed_labels = 0;
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.threshold = 1.0;
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.candidate_subsample = Some(0);
        assert!(c.validate().is_err());
        let mut c = good;
        c.row_subsample = Some(0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(Strategy::from_str(s.name()).unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{s}\""));
        }
        assert!(Strategy::from_str("greedy").is_err());
    }

    #[test]
    fn test_metrics_hand_case() {
        // fixed rule: accept iff feature >= 0
        let clf = LinearClassifier { theta: vec![10.0], intercept: 0.0, trained_on: 0 };
        let mk = |x: f64, label: usize| crate::dataset::DataPoint {
            id: 0,
            features: vec![x],
            sensitive: 0,
            label,
        };
        let ds = Dataset::from_points(
            vec![mk(1.0, 1), mk(1.0, 0), mk(-1.0, 0), mk(-1.0, 1)],
            vec!["x".into()],
            2,
        )
        .unwrap();
        let (acc, prec, rec) = test_metrics(&clf, &ds, 0.5).unwrap();
        assert_eq!(acc, 0.5);
        assert_eq!(prec, 0.5); // tp 1, fp 1
        assert_eq!(rec, 0.5); // tp 1, fn 1
    }

    #[test]
    fn test_metrics_zero_denominators_report_zero() {
        let clf = LinearClassifier { theta: vec![0.0], intercept: -50.0, trained_on: 0 };
        let ds = Dataset::from_points(
            vec![crate::dataset::DataPoint { id: 0, features: vec![1.0], sensitive: 0, label: 0 }],
            vec!["x".into()],
            2,
        )
        .unwrap();
        // never predicts 1 and no positives exist: precision and recall 0
        let (acc, prec, rec) = test_metrics(&clf, &ds, 0.5).unwrap();
        assert_eq!((acc, prec, rec), (1.0, 0.0, 0.0));
    }

    #[test]
    fn row_subsample_keeps_the_requested_count() {
        let mut cfg = base_config(Strategy::Entropy, 300, 5, 1);
        cfg.row_subsample = Some(120);
        let ds = load_dataset(&cfg).unwrap();
        assert_eq!(ds.n(), 120);
        // ids are reassigned densely
        assert_eq!(ds.points.last().unwrap().id, 119);
        let again = load_dataset(&cfg).unwrap();
        assert_eq!(ds.points, again.points);
    }

    #[test]
    fn experiment_produces_ordered_complete_records() {
        let cfg = base_config(Strategy::Entropy, 120, 4, 2);
        let result = run_experiment(&cfg).unwrap();
        assert_eq!(result.records.len(), 8);
        assert_eq!(result.split_seeds, vec![42, 43]);
        for (i, r) in result.records.iter().enumerate() {
            assert_eq!(r.split_id, i / 4);
            assert_eq!(r.iteration, i % 4);
            assert_eq!(r.strategy, Strategy::Entropy);
            assert_eq!(r.alpha, 1.0);
            for v in [r.accuracy, r.precision, r.recall, r.disparity] {
                assert!((0.0..=1.0).contains(&v) || v.is_finite());
            }
        }
        assert_eq!(result.per_iteration.len(), 4);
    }

    #[test]
    fn repeat_runs_are_identical_without_timing() {
        let mut cfg = base_config(Strategy::Fal, 90, 3, 2);
        cfg.candidate_subsample = Some(8);
        cfg.record_timing = false;
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.per_iteration, b.per_iteration);
    }

    #[test]
    fn blended_run_follows_the_alpha_schedule() {
        let mut cfg = base_config(Strategy::Fal, 90, 4, 1);
        cfg.candidate_subsample = Some(6);
        let result = run_experiment(&cfg).unwrap();
        let alphas: Vec<f64> = result.records.iter().map(|r| r.alpha).collect();
        for w in alphas.windows(2) {
            assert!(w[1] <= w[0], "schedule must not increase: {alphas:?}");
        }
        assert!(alphas[0] <= 1.0 && *alphas.last().unwrap() >= 0.0);
    }

    #[test]
    fn covariance_strategy_runs_end_to_end() {
        let cfg = base_config(Strategy::Fbc, 120, 5, 1);
        let result = run_experiment(&cfg).unwrap();
        assert_eq!(result.records.len(), 5);
        assert!(result.records.iter().all(|r| r.strategy == Strategy::Fbc));
    }

    #[test]
    fn random_strategy_is_seed_stable() {
        let cfg = base_config(Strategy::Random, 100, 4, 1);
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        let strip =
            |r: &MetricsRecord| (r.accuracy, r.precision, r.recall, r.disparity);
        assert_eq!(
            a.records.iter().map(strip).collect::<Vec<_>>(),
            b.records.iter().map(strip).collect::<Vec<_>>()
        );
    }

    #[test]
    fn single_split_aggregates_have_zero_std() {
        let cfg = base_config(Strategy::Entropy, 100, 3, 1);
        let result = run_experiment(&cfg).unwrap();
        for agg in &result.per_iteration {
            assert_eq!(agg.accuracy.std, 0.0);
            assert_eq!(agg.disparity.std, 0.0);
        }
    }

    #[test]
    fn aggregates_reduce_across_splits() {
        let mk = |split_id: usize, iteration: usize, accuracy: f64| MetricsRecord {
            split_id,
            iteration,
            strategy: Strategy::Entropy,
            alpha: 1.0,
            accuracy,
            precision: 0.0,
            recall: 0.0,
            disparity: 0.1,
            measure: DisparityMeasure::MutualInfo,
            wall_time_s: 0.0,
        };
        let aggs = aggregate_by_iteration(&[mk(0, 0, 0.5), mk(1, 0, 0.7), mk(0, 1, 0.6)]);
        assert_eq!(aggs.len(), 2);
        assert!((aggs[0].accuracy.mean - 0.6).abs() < 1e-15);
        // sample std of {0.5, 0.7}
        assert!((aggs[0].accuracy.std - (2.0f64 * 0.01).sqrt()).abs() < 1e-12);
        assert_eq!(aggs[1].accuracy.std, 0.0);
    }

    #[test]
    fn csv_round_trip_preserves_records_exactly() {
        let cfg = base_config(Strategy::Entropy, 100, 3, 1);
        let result = run_experiment(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        emit_metrics(&result.records, MetricsFormat::Csv, &path).unwrap();
        let header = std::fs::read_to_string(&path).unwrap();
        assert!(header.starts_with(
            "split_id,iteration,strategy,alpha,accuracy,precision,recall,disparity,measure,wall_time_s"
        ));
        let back = read_metrics_csv(&path).unwrap();
        assert_eq!(result.records, back);
    }

    #[test]
    fn json_emission_wraps_records() {
        let cfg = base_config(Strategy::Entropy, 100, 2, 1);
        let result = run_experiment(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.json");
        emit_metrics(&result.records, MetricsFormat::Json, &path).unwrap();
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(v["records"].as_array().unwrap().len(), 2);
        assert_eq!(v["records"][0]["strategy"], "entropy");
    }

    #[test]
    fn run_outputs_land_in_the_expected_layout() {
        let mut cfg = base_config(Strategy::Fal, 90, 2, 2);
        cfg.candidate_subsample = Some(6);
        cfg.dump_scores = true;
        let result = run_experiment(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_run_outputs(&cfg, &result, dir.path()).unwrap();
        assert!(dir.path().join("raw_split0.csv").exists());
        assert!(dir.path().join("raw_split1.csv").exists());
        assert!(dir.path().join("scores_split0.json").exists());
        let summary: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
                .unwrap();
        assert_eq!(summary["config"]["strategy"], "fal");
        assert_eq!(summary["split_seeds"].as_array().unwrap().len(), 2);
        assert_eq!(summary["per_iteration"].as_array().unwrap().len(), 2);
        let rows = read_metrics_csv(dir.path().join("raw_split1.csv")).unwrap();
        assert!(rows.iter().all(|r| r.split_id == 1));
    }

    #[test]
    fn comparison_is_antisymmetric_in_its_deltas() {
        let a = run_experiment(&base_config(Strategy::Entropy, 100, 3, 2)).unwrap();
        let b = run_experiment(&base_config(Strategy::Random, 100, 3, 2)).unwrap();
        let ab = compare(&a.records, &b.records).unwrap();
        let ba = compare(&b.records, &a.records).unwrap();
        assert_eq!(ab.len(), 3);
        for (x, y) in ab.iter().zip(&ba) {
            assert_eq!(x.accuracy_delta, -y.accuracy_delta);
            assert_eq!(x.disparity_delta, -y.disparity_delta);
            assert_eq!(x.accuracy_a, y.accuracy_b);
        }
        assert!(compare(&a.records, &[]).is_err());
    }

    #[test]
    fn oversized_budget_is_rejected() {
        // 30 rows -> 18 train; 6 seeds + budget 14 > 18
        let cfg = base_config(Strategy::Entropy, 30, 14, 1);
        let err = run_experiment(&cfg).unwrap_err();
        assert!(err.to_string().contains("budget"));
    }
}
