//! Candidate selection strategies for the labeling loop.
//!
//! Every strategy looks at the current unlabeled candidates and names the
//! point to send to the oracle next. The fairness-aware selector blends
//! two per-candidate signals, prediction entropy and expected disparity
//! drop, after min-max normalizing each across the candidate set; the
//! blend weight `alpha` moves from pure uncertainty sampling (1.0) to
//! pure disparity reduction (0.0). Ties always go to the smallest id so
//! selection is insensitive to candidate order and thread count.

pub mod fbc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{LabeledRecord, UnlabeledPoint};
use crate::error::{Error, Result};
use crate::fairness::{self, DisparityMeasure};
use crate::glm::{self, LinearClassifier, TrainConfig};

/// Shannon entropy in nats of a discrete distribution.
pub fn entropy(probs: &[f64]) -> Result<f64> {
    if probs.is_empty() {
        return Err(Error::Empty {
            what: "probability vector",
        });
    }
    let mut sum = 0.0;
    for &p in probs {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::invalid_param(
                "probs",
                format!("entries must be finite and nonnegative, got {p}"),
            ));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::invalid_param(
            "probs",
            format!("entries must sum to 1, got {sum}"),
        ));
    }
    // 0 * ln 0 = 0 by convention
    Ok(probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum())
}

/// Rescales values onto [0, 1] by the candidate-set range; a degenerate
/// range (all values equal) maps everything to 0.
pub fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - lo) / (hi - lo)).collect()
}

/// Per-candidate breakdown of one fairness-aware selection round. The
/// entropy and fairness terms are the normalized values that entered the
/// blend.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionScore {
    pub candidate_id: usize,
    pub entropy_term: f64,
    pub fairness_term: f64,
    pub combined: f64,
}

/// Outcome of one selection round.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub chosen: usize,
    pub scores: Vec<SelectionScore>,
}

fn candidate_entropy(candidate: &UnlabeledPoint, clf: &LinearClassifier) -> Result<f64> {
    let p = clf.predict_proba(&candidate.features)?;
    entropy(&[1.0 - p, p])
}

/// Picks the candidate the model is most uncertain about.
pub fn select_entropy(candidates: &[&UnlabeledPoint], clf: &LinearClassifier) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::Empty { what: "candidates" });
    }
    let mut best: Option<(f64, usize)> = None;
    for c in candidates {
        let h = candidate_entropy(c, clf)?;
        let better = match best {
            None => true,
            Some((bh, bid)) => h > bh || (h == bh && c.id < bid),
        };
        if better {
            best = Some((h, c.id));
        }
    }
    Ok(best.expect("candidates is non-empty").1)
}

/// Picks a candidate uniformly at random.
pub fn select_random(candidates: &[&UnlabeledPoint], rng: &mut impl rand::Rng) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::Empty { what: "candidates" });
    }
    Ok(candidates[rng.random_range(0..candidates.len())].id)
}

/// Expected post-labeling disparity of one candidate: for each possible
/// label, retrain on the labeled pool plus the candidate carrying that
/// label, evaluate the disparity on the verification set, and weight by
/// the current model's probability of that label.
pub fn expected_fairness(
    candidate: &UnlabeledPoint,
    labeled: &[LabeledRecord],
    clf: &LinearClassifier,
    verification: &[UnlabeledPoint],
    measure: DisparityMeasure,
    threshold: f64,
    train_cfg: &TrainConfig,
) -> Result<f64> {
    let p1 = clf.predict_proba(&candidate.features)?;
    let weights = [1.0 - p1, p1];
    let mut expected = 0.0;
    let mut records = Vec::with_capacity(labeled.len() + 1);
    for (k, w) in weights.iter().enumerate() {
        records.clear();
        records.extend_from_slice(labeled);
        records.push(LabeledRecord {
            features: candidate.features.clone(),
            sensitive: candidate.sensitive,
            label: k,
        });
        let retrained = glm::train(&records, train_cfg)?;
        expected += fairness::evaluate(&retrained, verification, measure, threshold)? * w;
    }
    Ok(expected)
}

/// Normalizes both raw signals, blends them with weight `alpha` on the
/// entropy side, and picks the argmax (smallest id on ties).
fn combine_and_pick(
    candidates: &[&UnlabeledPoint],
    raw_entropy: &[f64],
    raw_fairness: &[f64],
    alpha: f64,
) -> Selection {
    let h_norm = min_max_normalize(raw_entropy);
    let f_norm = min_max_normalize(raw_fairness);
    let mut scores = Vec::with_capacity(candidates.len());
    let mut best: Option<(f64, usize)> = None;
    for (i, c) in candidates.iter().enumerate() {
        let combined = alpha * h_norm[i] + (1.0 - alpha) * f_norm[i];
        scores.push(SelectionScore {
            candidate_id: c.id,
            entropy_term: h_norm[i],
            fairness_term: f_norm[i],
            combined,
        });
        let better = match best {
            None => true,
            Some((bs, bid)) => combined > bs || (combined == bs && c.id < bid),
        };
        if better {
            best = Some((combined, c.id));
        }
    }
    Selection {
        chosen: best.expect("candidates is non-empty").1,
        scores,
    }
}

fn validate_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && (0.0..=1.0).contains(&alpha)) {
        return Err(Error::invalid_param(
            "alpha",
            format!("must lie in [0, 1], got {alpha}"),
        ));
    }
    Ok(())
}

/// Fairness-aware selection by exhaustive retraining.
///
/// Scores every candidate with the blend of normalized prediction entropy
/// and normalized expected disparity drop relative to the current model.
/// All probabilities come from `clf`, the model trained before this round;
/// retrained models are only used to evaluate hypothetical disparities.
/// At `alpha = 1.0` the retraining pass is skipped entirely: a zero
/// fairness weight cannot change the argmax.
pub fn select_fal(
    candidates: &[&UnlabeledPoint],
    labeled: &[LabeledRecord],
    clf: &LinearClassifier,
    verification: &[UnlabeledPoint],
    measure: DisparityMeasure,
    threshold: f64,
    alpha: f64,
    train_cfg: &TrainConfig,
) -> Result<Selection> {
    validate_alpha(alpha)?;
    if candidates.is_empty() {
        return Err(Error::Empty { what: "candidates" });
    }
    let raw_entropy = candidates
        .iter()
        .map(|c| candidate_entropy(c, clf))
        .collect::<Result<Vec<_>>>()?;
    let raw_fairness = if alpha == 1.0 {
        vec![0.0; candidates.len()]
    } else {
        let current = fairness::evaluate(clf, verification, measure, threshold)?;
        candidates
            .par_iter()
            .map(|c| {
                Ok(current
                    - expected_fairness(c, labeled, clf, verification, measure, threshold, train_cfg)?)
            })
            .collect::<Result<Vec<_>>>()?
    };
    Ok(combine_and_pick(candidates, &raw_entropy, &raw_fairness, alpha))
}
