//! L2-regularized logistic regression with a deterministic Newton solver.
//!
//! Training minimizes `sum_i logloss(y_i, sigmoid(theta.x_i + b)) +
//! (reg/2) * |theta|^2` with the intercept unpenalized. Newton steps use
//! the analytic Hessian with step halving whenever a full step would
//! increase the loss, so the loss is non-increasing across iterations.
//!
//! Determinism: records are summed in a canonical order (sorted by
//! features, then label, then sensitive), so training is a pure function
//! of the record multiset and the hyperparameters, bit-for-bit, whatever
//! order the records arrive in.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledRecord;
use crate::error::{Error, Result};

/// Predicted probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]`
/// before logarithms so saturated scores cannot produce infinities.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub reg_strength: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            reg_strength: 1.0,
            max_iter: 100,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    pub theta: Vec<f64>,
    pub intercept: f64,
    /// Number of records the model was fitted on.
    pub trained_on: usize,
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    theta: Vec<f64>,
    intercept: f64,
    d: usize,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

impl LinearClassifier {
    pub fn d(&self) -> usize {
        self.theta.len()
    }

    /// Raw linear score `theta . x + intercept`.
    pub fn linear_score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.theta.len() {
            return Err(Error::DimensionMismatch {
                expected: self.theta.len(),
                got: x.len(),
            });
        }
        let mut z = self.intercept;
        for (t, v) in self.theta.iter().zip(x) {
            z += t * v;
        }
        Ok(z)
    }

    /// `P(y = 1 | x)`, clamped away from 0 and 1.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        Ok(clamp_prob(sigmoid(self.linear_score(x)?)))
    }

    /// Hard label: 1 iff `predict_proba(x) >= threshold`.
    pub fn predict(&self, x: &[f64], threshold: f64) -> Result<usize> {
        Ok(usize::from(self.predict_proba(x)? >= threshold))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelJson {
            theta: self.theta.clone(),
            intercept: self.intercept,
            d: self.theta.len(),
        })
        .expect("model serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<LinearClassifier> {
        let m: ModelJson = serde_json::from_str(s)?;
        if m.d != m.theta.len() {
            return Err(Error::invalid_param(
                "d",
                format!("d = {} but theta has {} entries", m.d, m.theta.len()),
            ));
        }
        Ok(LinearClassifier {
            theta: m.theta,
            intercept: m.intercept,
            trained_on: 0,
        })
    }
}

fn validate_records(records: &[LabeledRecord]) -> Result<usize> {
    if records.is_empty() {
        return Err(Error::Empty {
            what: "training set",
        });
    }
    let d = records[0].features.len();
    if d == 0 {
        return Err(Error::Empty {
            what: "feature vector",
        });
    }
    for r in records {
        if r.features.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: r.features.len(),
            });
        }
        if r.features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "training features",
            });
        }
        if r.label > 1 {
            return Err(Error::invalid_param(
                "label",
                format!("binary trainer got label {}", r.label),
            ));
        }
    }
    Ok(d)
}

/// Canonical summation order: sort record indices by features, then label,
/// then sensitive. Makes every training sum independent of input order.
fn canonical_order(records: &[LabeledRecord]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..records.len()).collect();
    idx.sort_by(|&i, &j| {
        let (a, b) = (&records[i], &records[j]);
        a.features
            .iter()
            .zip(&b.features)
            .find_map(|(x, y)| {
                let o = x.partial_cmp(y).expect("validated finite");
                (o != std::cmp::Ordering::Equal).then_some(o)
            })
            .unwrap_or_else(|| (a.label, a.sensitive).cmp(&(b.label, b.sensitive)))
    });
    idx
}

/// Regularized training loss at `(theta, intercept)`.
pub fn regularized_loss(
    records: &[LabeledRecord],
    theta: &[f64],
    intercept: f64,
    reg_strength: f64,
) -> Result<f64> {
    let d = validate_records(records)?;
    if theta.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: theta.len(),
        });
    }
    let clf = LinearClassifier {
        theta: theta.to_vec(),
        intercept,
        trained_on: 0,
    };
    let mut loss = 0.0;
    for i in canonical_order(records) {
        let r = &records[i];
        let p = clamp_prob(sigmoid(clf.linear_score(&r.features)?));
        loss -= if r.label == 1 { p.ln() } else { (1.0 - p).ln() };
    }
    loss += 0.5 * reg_strength * theta.iter().map(|t| t * t).sum::<f64>();
    Ok(loss)
}

/// Analytic gradient of the regularized loss: `(d/dtheta, d/dintercept)`.
///
/// This is the gradient of the unclamped objective; the probability clamp
/// above only guards logarithms and is inactive for any score below ~27.6
/// in magnitude.
pub fn loss_gradient(
    records: &[LabeledRecord],
    theta: &[f64],
    intercept: f64,
    reg_strength: f64,
) -> Result<(Vec<f64>, f64)> {
    let d = validate_records(records)?;
    if theta.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: theta.len(),
        });
    }
    let clf = LinearClassifier {
        theta: theta.to_vec(),
        intercept,
        trained_on: 0,
    };
    let mut g = vec![0.0; d];
    let mut g0 = 0.0;
    for i in canonical_order(records) {
        let r = &records[i];
        let p = sigmoid(clf.linear_score(&r.features)?);
        let resid = p - r.label as f64;
        g0 += resid;
        for (gj, xj) in g.iter_mut().zip(&r.features) {
            *gj += resid * xj;
        }
    }
    for (gj, tj) in g.iter_mut().zip(theta) {
        *gj += reg_strength * tj;
    }
    Ok((g, g0))
}

/// Fits the classifier by Newton iteration from `theta = 0`.
///
/// Stops when the gradient 2-norm falls to `tol`, after `max_iter`
/// iterations, or when step halving cannot reduce the loss any further.
pub fn train(records: &[LabeledRecord], cfg: &TrainConfig) -> Result<LinearClassifier> {
    let d = validate_records(records)?;
    if !(cfg.reg_strength > 0.0) || !cfg.reg_strength.is_finite() {
        return Err(Error::invalid_param(
            "reg_strength",
            format!("must be positive and finite, got {}", cfg.reg_strength),
        ));
    }
    if cfg.max_iter == 0 {
        return Err(Error::invalid_param("max_iter", "must be at least 1"));
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::invalid_param("tol", "must be positive"));
    }

    let order = canonical_order(records);
    let lambda = cfg.reg_strength;
    // w = [intercept, theta...], length d + 1
    let mut w = DVector::<f64>::zeros(d + 1);
    let score = |w: &DVector<f64>, x: &[f64]| -> f64 {
        let mut z = w[0];
        for j in 0..d {
            z += w[j + 1] * x[j];
        }
        z
    };
    let loss_of = |w: &DVector<f64>| -> f64 {
        let mut loss = 0.0;
        for &i in &order {
            let r = &records[i];
            let p = clamp_prob(sigmoid(score(w, &r.features)));
            loss -= if r.label == 1 { p.ln() } else { (1.0 - p).ln() };
        }
        let mut sq = 0.0;
        for j in 1..=d {
            sq += w[j] * w[j];
        }
        loss + 0.5 * lambda * sq
    };

    let mut loss = loss_of(&w);
    for _ in 0..cfg.max_iter {
        let mut g = DVector::<f64>::zeros(d + 1);
        let mut h = DMatrix::<f64>::zeros(d + 1, d + 1);
        for &i in &order {
            let r = &records[i];
            let p = sigmoid(score(&w, &r.features));
            let resid = p - r.label as f64;
            // weight floor keeps the Hessian positive definite even when
            // every prediction saturates
            let wt = (p * (1.0 - p)).max(1e-10);
            g[0] += resid;
            h[(0, 0)] += wt;
            for j in 0..d {
                let xj = r.features[j];
                g[j + 1] += resid * xj;
                h[(0, j + 1)] += wt * xj;
                for l in j..d {
                    h[(j + 1, l + 1)] += wt * xj * r.features[l];
                }
            }
        }
        for j in 1..=d {
            g[j] += lambda * w[j];
            h[(j, j)] += lambda;
            // mirror the upper triangle, including the intercept row
            for l in 0..j {
                h[(j, l)] = h[(l, j)];
            }
        }

        if g.norm() <= cfg.tol {
            break;
        }
        let delta = Cholesky::new(h)
            .ok_or_else(|| Error::Training("Hessian is not positive definite".into()))?
            .solve(&g);

        // step halving: accept the first scale that does not increase loss
        let mut accepted = false;
        let mut scale = 1.0;
        for _ in 0..40 {
            let cand = &w - scale * &delta;
            let cand_loss = loss_of(&cand);
            if cand_loss <= loss {
                w = cand;
                loss = cand_loss;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break; // no descent direction left at this precision
        }
    }

    Ok(LinearClassifier {
        theta: (1..=d).map(|j| w[j]).collect(),
        intercept: w[0],
        trained_on: records.len(),
    })
}
