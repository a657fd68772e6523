//! Fast fairness-aware selection through running covariance aggregates.
//!
//! For a linear model the covariance between the sensitive attribute and
//! the prediction decomposes along features, so the effect of labeling a
//! candidate on each cov(x_i, y) can be read off a handful of running
//! sums instead of retraining. One selection round costs O(|candidates| * d)
//! arithmetic, independent of the labeled pool size.

use crate::dataset::{LabeledRecord, UnlabeledPoint};
use crate::error::{Error, Result};
use crate::glm::LinearClassifier;
use crate::strategies::{self, Selection};

/// The shared covariance expression: every covariance this module reports
/// flows through this exact sequence of operations, so an aggregate
/// updated with a point and a hypothetical evaluation of the same point
/// agree bit for bit.
#[inline]
fn cov_expr(gz: f64, gx: f64, gy: f64, nf: f64) -> f64 {
    gz / nf - (gx / nf) * (gy / nf)
}

/// Running sums over the labeled pool: the count, the label sum, and the
/// per-feature sums of `x_i` and `x_i * y`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovAggregates {
    n: u64,
    g_y: f64,
    g_x: Vec<f64>,
    g_z: Vec<f64>,
}

impl CovAggregates {
    pub fn from_records(records: &[LabeledRecord]) -> Result<CovAggregates> {
        let first = records.first().ok_or(Error::Empty { what: "records" })?;
        let mut agg = CovAggregates {
            n: 0,
            g_y: 0.0,
            g_x: vec![0.0; first.features.len()],
            g_z: vec![0.0; first.features.len()],
        };
        for r in records {
            agg.update(&r.features, r.label)?;
        }
        Ok(agg)
    }

    pub fn update(&mut self, features: &[f64], label: usize) -> Result<()> {
        if features.len() != self.g_x.len() {
            return Err(Error::DimensionMismatch {
                expected: self.g_x.len(),
                got: features.len(),
            });
        }
        if label > 1 {
            return Err(Error::invalid_param("label", "must be 0 or 1"));
        }
        let kf = label as f64;
        self.n += 1;
        self.g_y += kf;
        for (i, &x) in features.iter().enumerate() {
            self.g_x[i] += x;
            self.g_z[i] += x * kf;
        }
        Ok(())
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn d(&self) -> usize {
        self.g_x.len()
    }

    /// cov(x_i, y) over the aggregated pool.
    pub fn cov(&self, i: usize) -> f64 {
        let nf = self.n as f64;
        cov_expr(self.g_z[i], self.g_x[i], self.g_y, nf)
    }

    /// cov(x_i, y) as it would read after `update(x, k)`, without mutating.
    pub fn hypothetical_cov(&self, x: &[f64], i: usize, k: usize) -> f64 {
        let kf = k as f64;
        let nf = (self.n + 1) as f64;
        cov_expr(self.g_z[i] + x[i] * kf, self.g_x[i] + x[i], self.g_y + kf, nf)
    }
}

/// Covariance between the sensitive attribute and each feature, fixed at
/// pool creation and reused every round.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitiveCov {
    pub cov: Vec<f64>,
}

/// Computes cov(s, x_i) over a point set, typically the initial pool.
pub fn init_sensitive_cov(points: &[UnlabeledPoint]) -> Result<SensitiveCov> {
    let first = points.first().ok_or(Error::Empty { what: "points" })?;
    let d = first.features.len();
    let nf = points.len() as f64;
    let mut g_s = 0.0;
    let mut g_x = vec![0.0; d];
    let mut g_sx = vec![0.0; d];
    for p in points {
        if p.features.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.features.len(),
            });
        }
        let sf = p.sensitive as f64;
        g_s += sf;
        for (i, &x) in p.features.iter().enumerate() {
            g_x[i] += x;
            g_sx[i] += x * sf;
        }
    }
    Ok(SensitiveCov {
        cov: (0..d).map(|i| cov_expr(g_sx[i], g_x[i], g_s, nf)).collect(),
    })
}

/// Expected per-feature drop in |cov(x_i, y)| from labeling a candidate:
/// for each label the hypothetical covariance replaces the current one,
/// weighted by the current model's probability of that label.
pub fn expected_cov_improvement(
    agg: &CovAggregates,
    candidate: &UnlabeledPoint,
    clf: &LinearClassifier,
) -> Result<Vec<f64>> {
    if candidate.features.len() != agg.d() {
        return Err(Error::DimensionMismatch {
            expected: agg.d(),
            got: candidate.features.len(),
        });
    }
    let p1 = clf.predict_proba(&candidate.features)?;
    let weights = [1.0 - p1, p1];
    let mut improvement = vec![0.0; agg.d()];
    for (k, w) in weights.iter().enumerate() {
        for (i, slot) in improvement.iter_mut().enumerate() {
            let current = agg.cov(i).abs();
            let hypothetical = agg.hypothetical_cov(&candidate.features, i, k).abs();
            *slot += (current - hypothetical) * w;
        }
    }
    Ok(improvement)
}

/// Collapses per-feature improvements into one fairness signal, weighting
/// feature `i` by `theta_i * cov(s, x_i)`: features that carry sensitive
/// information into the prediction count more. With `use_abs` the weight
/// magnitude is used (any such feature is worth cleaning up); without it
/// the sign survives, crediting only reductions along features whose
/// contribution currently pushes the prediction toward the sensitive
/// attribute.
pub fn fbc_score(
    improvement: &[f64],
    theta: &[f64],
    sens_cov: &SensitiveCov,
    use_abs: bool,
) -> Result<f64> {
    if improvement.len() != theta.len() || theta.len() != sens_cov.cov.len() {
        return Err(Error::DimensionMismatch {
            expected: theta.len(),
            got: improvement.len(),
        });
    }
    let mut score = 0.0;
    for i in 0..theta.len() {
        let m = theta[i] * sens_cov.cov[i];
        let weight = if use_abs { m.abs() } else { m };
        score += weight * improvement[i];
    }
    Ok(score)
}

/// Fairness-aware selection over the covariance aggregates: the same
/// normalize-blend-argmax round as the retraining selector, with the
/// expected covariance drop standing in for the expected disparity drop.
pub fn select_fbc(
    candidates: &[&UnlabeledPoint],
    agg: &CovAggregates,
    clf: &LinearClassifier,
    sens_cov: &SensitiveCov,
    alpha: f64,
    use_abs: bool,
) -> Result<Selection> {
    strategies::validate_alpha(alpha)?;
    if candidates.is_empty() {
        return Err(Error::Empty { what: "candidates" });
    }
    let raw_entropy = candidates
        .iter()
        .map(|c| {
            let p = clf.predict_proba(&c.features)?;
            strategies::entropy(&[1.0 - p, p])
        })
        .collect::<Result<Vec<_>>>()?;
    let raw_fairness = if alpha == 1.0 {
        vec![0.0; candidates.len()]
    } else {
        candidates
            .iter()
            .map(|c| {
                fbc_score(
                    &expected_cov_improvement(agg, c, clf)?,
                    &clf.theta,
                    sens_cov,
                    use_abs,
                )
            })
            .collect::<Result<Vec<_>>>()?
    };
    Ok(strategies::combine_and_pick(
        candidates,
        &raw_entropy,
        &raw_fairness,
        alpha,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategies::select_entropy;

    fn rec(features: Vec<f64>, label: usize) -> LabeledRecord {
        LabeledRecord { features, sensitive: 0, label }
    }

    fn up(id: usize, features: Vec<f64>, sensitive: u8) -> UnlabeledPoint {
        UnlabeledPoint { id, features, sensitive }
    }

    #[test]
    fn covariance_of_a_two_point_pool() {
        let agg =
            CovAggregates::from_records(&[rec(vec![1.0], 1), rec(vec![-1.0], 0)]).unwrap();
        assert_eq!(agg.n(), 2);
        assert_eq!(agg.cov(0), 0.5);
    }

    #[test]
    fn aggregate_covariance_matches_the_mean_product_oracle() {
        let records = vec![
            rec(vec![1.0, 2.0], 1),
            rec(vec![-0.5, 0.3], 0),
            rec(vec![0.7, -1.2], 1),
            rec(vec![2.1, 0.4], 0),
            rec(vec![-1.3, 1.8], 1),
        ];
        let agg = CovAggregates::from_records(&records).unwrap();
        let n = records.len() as f64;
        for i in 0..2 {
            let mean_x: f64 = records.iter().map(|r| r.features[i]).sum::<f64>() / n;
            let mean_y: f64 = records.iter().map(|r| r.label as f64).sum::<f64>() / n;
            let mean_xy: f64 =
                records.iter().map(|r| r.features[i] * r.label as f64).sum::<f64>() / n;
            assert!((agg.cov(i) - (mean_xy - mean_x * mean_y)).abs() < 1e-12);
        }
    }

    #[test]
    fn hypothetical_covariance_is_bit_identical_to_update_then_read() {
        let records = vec![
            rec(vec![0.3, -1.7, 2.2], 1),
            rec(vec![1.1, 0.05, -0.4], 0),
            rec(vec![-2.0, 0.9, 0.6], 1),
        ];
        let agg = CovAggregates::from_records(&records).unwrap();
        let x = vec![0.123456789, -9.87, 3.5e-3];
        for k in [0usize, 1] {
            let mut updated = agg.clone();
            updated.update(&x, k).unwrap();
            for i in 0..3 {
                assert_eq!(
                    agg.hypothetical_cov(&x, i, k).to_bits(),
                    updated.cov(i).to_bits(),
                    "feature {i}, label {k}"
                );
            }
        }
    }

    #[test]
    fn zero_candidate_with_zero_label_dilutes_the_covariance() {
        let agg =
            CovAggregates::from_records(&[rec(vec![1.0], 1), rec(vec![-1.0], 0)]).unwrap();
        // gz stays 1, gx stays 0, gy stays 1, n becomes 3
        assert_eq!(agg.hypothetical_cov(&[0.0], 0, 0), 1.0 / 3.0);
    }

    #[test]
    fn balanced_pool_and_mean_candidate_give_exactly_zero_improvement() {
        let records = vec![
            rec(vec![1.0], 1),
            rec(vec![-1.0], 1),
            rec(vec![1.0], 0),
            rec(vec![-1.0], 0),
        ];
        let agg = CovAggregates::from_records(&records).unwrap();
        assert_eq!(agg.cov(0), 0.0);
        let clf = LinearClassifier { theta: vec![1.0], intercept: 0.0, trained_on: 4 };
        let improvement =
            expected_cov_improvement(&agg, &up(0, vec![0.0], 0), &clf).unwrap();
        assert_eq!(improvement, vec![0.0]);
    }

    #[test]
    fn sensitive_covariance_hand_case() {
        let points = vec![up(0, vec![1.0], 1), up(1, vec![0.0], 0)];
        let sc = init_sensitive_cov(&points).unwrap();
        assert_eq!(sc.cov, vec![0.25]);
    }

    #[test]
    fn sensitive_covariance_is_zero_when_groups_share_the_distribution() {
        let points = vec![
            up(0, vec![1.0], 0),
            up(1, vec![-1.0], 0),
            up(2, vec![1.0], 1),
            up(3, vec![-1.0], 1),
        ];
        let sc = init_sensitive_cov(&points).unwrap();
        assert_eq!(sc.cov, vec![0.0]);
    }

    #[test]
    fn score_weighting_respects_the_abs_flag() {
        let sens = SensitiveCov { cov: vec![-1.0] };
        let with_abs = fbc_score(&[0.2], &[1.0], &sens, true).unwrap();
        let signed = fbc_score(&[0.2], &[1.0], &sens, false).unwrap();
        assert!((with_abs - 0.2).abs() < 1e-15);
        assert!((signed + 0.2).abs() < 1e-15);
        assert!(fbc_score(&[0.2, 0.1], &[1.0], &sens, true).is_err());
    }

    #[test]
    fn fast_selection_at_alpha_one_reduces_to_entropy_selection() {
        let records = vec![rec(vec![1.0], 1), rec(vec![-1.0], 0), rec(vec![0.5], 1)];
        let agg = CovAggregates::from_records(&records).unwrap();
        let clf = LinearClassifier { theta: vec![1.3], intercept: -0.1, trained_on: 3 };
        let pool = vec![up(0, vec![2.0], 0), up(1, vec![0.05], 1), up(2, vec![-1.5], 0)];
        let candidates: Vec<&UnlabeledPoint> = pool.iter().collect();
        let sens = init_sensitive_cov(&pool).unwrap();
        let sel = select_fbc(&candidates, &agg, &clf, &sens, 1.0, true).unwrap();
        assert_eq!(sel.chosen, select_entropy(&candidates, &clf).unwrap());
    }

    #[test]
    fn abs_and_signed_weighting_can_prefer_different_candidates() {
        // pool covariance 0.5; labeling x = 0 shrinks it, labeling x = 6
        // inflates it. With a negative sensitive covariance the signed
        // weight flips which of those looks attractive.
        let agg =
            CovAggregates::from_records(&[rec(vec![1.0], 1), rec(vec![-1.0], 0)]).unwrap();
        // intercept pushes p(y=1) ~ 1 so the k = 1 branch dominates
        let clf = LinearClassifier { theta: vec![1.0], intercept: 30.0, trained_on: 2 };
        let sens = SensitiveCov { cov: vec![-1.0] };
        let pool = vec![up(0, vec![0.0], 0), up(1, vec![6.0], 1)];
        let candidates: Vec<&UnlabeledPoint> = pool.iter().collect();
        let abs_pick = select_fbc(&candidates, &agg, &clf, &sens, 0.0, true).unwrap();
        let signed_pick = select_fbc(&candidates, &agg, &clf, &sens, 0.0, false).unwrap();
        assert_eq!(abs_pick.chosen, 0);
        assert_eq!(signed_pick.chosen, 1);
    }

    #[test]
    fn aggregates_validate_inputs() {
        assert!(CovAggregates::from_records(&[]).is_err());
        let mut agg =
            CovAggregates::from_records(&[rec(vec![1.0, 2.0], 1)]).unwrap();
        assert!(agg.update(&[1.0], 0).is_err());
        assert!(agg.update(&[1.0, 2.0], 2).is_err());
        assert!(init_sensitive_cov(&[]).is_err());
        let clf = LinearClassifier { theta: vec![1.0, 0.0], intercept: 0.0, trained_on: 1 };
        assert!(expected_cov_improvement(&agg, &up(0, vec![1.0], 0), &clf).is_err());
    }
}
