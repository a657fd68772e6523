//! Group disparity measures over a 2x2 sensitive-by-prediction table.
//!
//! All six measures read the same [`JointTable`] of counts: cell `a` is
//! `(S=0, yhat=0)`, `b` is `(S=0, yhat=1)`, `c` is `(S=1, yhat=0)`, `d` is
//! `(S=1, yhat=1)`. Each measure is zero exactly when predictions are
//! independent of the sensitive attribute and grows with dependence, but
//! they are not interchangeable: see [`measure_disagreement_fixture`] for
//! a pair of classifiers that two of the measures rank in opposite order.

use serde::{Deserialize, Serialize};

use crate::dataset::UnlabeledPoint;
use crate::error::{Error, Result};
use crate::glm::LinearClassifier;

/// Counts of (sensitive, predicted label) pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JointTable {
    /// S = 0, yhat = 0
    pub a: u64,
    /// S = 0, yhat = 1
    pub b: u64,
    /// S = 1, yhat = 0
    pub c: u64,
    /// S = 1, yhat = 1
    pub d: u64,
}

impl JointTable {
    pub fn n(&self) -> u64 {
        self.a + self.b + self.c + self.d
    }
}

/// Builds the contingency table from parallel prediction/sensitive arrays.
pub fn contingency(predictions: &[usize], sensitive: &[u8]) -> Result<JointTable> {
    if predictions.is_empty() {
        return Err(Error::Empty { what: "predictions" });
    }
    if predictions.len() != sensitive.len() {
        return Err(Error::DimensionMismatch {
            expected: predictions.len(),
            got: sensitive.len(),
        });
    }
    let mut t = JointTable { a: 0, b: 0, c: 0, d: 0 };
    for (&yhat, &s) in predictions.iter().zip(sensitive) {
        if yhat > 1 {
            return Err(Error::invalid_param("prediction", "must be 0 or 1"));
        }
        match (s, yhat) {
            (0, 0) => t.a += 1,
            (0, 1) => t.b += 1,
            (1, 0) => t.c += 1,
            (1, 1) => t.d += 1,
            _ => return Err(Error::invalid_param("sensitive", "must be 0 or 1")),
        }
    }
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisparityMeasure {
    MutualInfo,
    Covariance,
    AbsDiffAcceptance,
    AbsDiffComposition,
    RatioAcceptance,
    RatioComposition,
}

impl DisparityMeasure {
    pub const ALL: [DisparityMeasure; 6] = [
        DisparityMeasure::MutualInfo,
        DisparityMeasure::Covariance,
        DisparityMeasure::AbsDiffAcceptance,
        DisparityMeasure::AbsDiffComposition,
        DisparityMeasure::RatioAcceptance,
        DisparityMeasure::RatioComposition,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            DisparityMeasure::MutualInfo => "mutual_info",
            DisparityMeasure::Covariance => "covariance",
            DisparityMeasure::AbsDiffAcceptance => "abs_diff_acceptance",
            DisparityMeasure::AbsDiffComposition => "abs_diff_composition",
            DisparityMeasure::RatioAcceptance => "ratio_acceptance",
            DisparityMeasure::RatioComposition => "ratio_composition",
        }
    }
}

impl std::str::FromStr for DisparityMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<DisparityMeasure> {
        DisparityMeasure::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownName {
                kind: "measure",
                name: s.to_string(),
            })
    }
}

impl std::fmt::Display for DisparityMeasure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Evaluates a measure on a table of counts.
pub fn disparity(table: &JointTable, measure: DisparityMeasure) -> Result<f64> {
    measure_on_masses(
        measure,
        table.a as f64,
        table.b as f64,
        table.c as f64,
        table.d as f64,
    )
}

/// Shared kernel over nonnegative cell masses; counts and probability
/// masses take the same path.
fn measure_on_masses(measure: DisparityMeasure, a: f64, b: f64, c: f64, d: f64) -> Result<f64> {
    let n = a + b + c + d;
    if n <= 0.0 {
        return Err(Error::Empty { what: "joint table" });
    }
    let s0 = a + b; // S = 0 mass
    let s1 = c + d; // S = 1 mass
    let y1 = b + d; // yhat = 1 mass
    match measure {
        DisparityMeasure::MutualInfo => {
            let y0 = a + c;
            let mut mi = 0.0;
            for (cell, s_m, y_m) in [(a, s0, y0), (b, s0, y1), (c, s1, y0), (d, s1, y1)] {
                // 0 * ln 0 = 0 by convention
                if cell > 0.0 {
                    let p = cell / n;
                    mi += p * (p / ((s_m / n) * (y_m / n))).ln();
                }
            }
            Ok(mi.max(0.0))
        }
        DisparityMeasure::Covariance => Ok((d / n - (s1 / n) * (y1 / n)).abs()),
        DisparityMeasure::AbsDiffAcceptance => {
            if s0 <= 0.0 || s1 <= 0.0 {
                return Err(Error::UndefinedMeasure {
                    measure: "abs_diff_acceptance",
                    reason: "a sensitive group is empty",
                });
            }
            Ok((b / s0 - d / s1).abs())
        }
        DisparityMeasure::AbsDiffComposition => {
            if y1 <= 0.0 {
                return Err(Error::UndefinedMeasure {
                    measure: "abs_diff_composition",
                    reason: "no positive predictions",
                });
            }
            Ok((d / y1 - s1 / n).abs())
        }
        DisparityMeasure::RatioAcceptance => {
            if s0 <= 0.0 || s1 <= 0.0 {
                return Err(Error::UndefinedMeasure {
                    measure: "ratio_acceptance",
                    reason: "a sensitive group is empty",
                });
            }
            let r0 = b / s0;
            let r1 = d / s1;
            if r0 <= 0.0 || r1 <= 0.0 {
                return Err(Error::UndefinedMeasure {
                    measure: "ratio_acceptance",
                    reason: "a group acceptance rate is zero",
                });
            }
            let r = r0 / r1;
            Ok(1.0 - r.min(1.0 / r))
        }
        DisparityMeasure::RatioComposition => {
            if y1 <= 0.0 {
                return Err(Error::UndefinedMeasure {
                    measure: "ratio_composition",
                    reason: "no positive predictions",
                });
            }
            if s1 <= 0.0 {
                return Err(Error::UndefinedMeasure {
                    measure: "ratio_composition",
                    reason: "the S = 1 group is empty",
                });
            }
            let u = d / y1;
            if u <= 0.0 {
                return Err(Error::UndefinedMeasure {
                    measure: "ratio_composition",
                    reason: "no positive predictions in the S = 1 group",
                });
            }
            let r = u / (s1 / n);
            Ok(1.0 - r.min(1.0 / r))
        }
    }
}

/// Disparity of a classifier's hard predictions over a point set.
pub fn evaluate(
    clf: &LinearClassifier,
    points: &[UnlabeledPoint],
    measure: DisparityMeasure,
    threshold: f64,
) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Empty {
            what: "evaluation set",
        });
    }
    let mut predictions = Vec::with_capacity(points.len());
    let mut sensitive = Vec::with_capacity(points.len());
    for p in points {
        predictions.push(clf.predict(&p.features, threshold)?);
        sensitive.push(p.sensitive);
    }
    disparity(&contingency(&predictions, &sensitive)?, measure)
}

/// The four fixture values: each measure evaluated on both classifiers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixtureValues {
    pub f1_c: f64,
    pub f1_c_prime: f64,
    pub f2_c: f64,
    pub f2_c_prime: f64,
}

/// Builds two joint tables over a population with `P(S=1) = p` on which
/// the acceptance-rate gap (F1 = abs_diff_acceptance) and the composition
/// gap (F2 = abs_diff_composition) rank the classifiers in opposite order.
///
/// Classifier C accepts generously: the S = 1 group at rate 4/5 and the
/// S = 0 group at rate 4/5 + 3eps/(4p). Classifier C' accepts selectively:
/// the S = 0 group at rate 1/2 and the S = 1 group at rate
/// (p + eps) / (2p), so its rate gap is exactly eps / (2p).
///
/// For any 2x2 table the two gaps are tied by
/// `composition_gap = p(1-p) * rate_gap / P(yhat=1)`, so C, despite the
/// 1.5x larger rate gap, has the smaller composition gap because it
/// accepts ~4/5 of the population instead of ~1/2. Hence F1 prefers C'
/// while F2 prefers C whenever `0.5 < p < 1` and `0 < eps <= 1/20`.
pub fn measure_disagreement_fixture(p: f64, eps: f64) -> Result<FixtureValues> {
    if !(p > 0.5 && p < 1.0) {
        return Err(Error::invalid_param(
            "p",
            format!("majority share must lie in (0.5, 1), got {p}"),
        ));
    }
    if !(eps > 0.0 && eps <= 0.05 && eps < 1.0 - p) {
        return Err(Error::invalid_param(
            "eps",
            format!("perturbation must lie in (0, min(0.05, 1 - p)), got {eps}"),
        ));
    }

    let s0 = 1.0 - p;
    // C: generous, rate gap 3eps/(4p) in favor of the S = 0 group
    let q = 0.8;
    let g = 0.75 * eps / p;
    let c_table = (s0 * (1.0 - (q + g)), s0 * (q + g), p * (1.0 - q), p * q);
    // C': selective, rate gap eps/(2p) in favor of the S = 1 group
    let cp_table = (s0 / 2.0, s0 / 2.0, (p - eps) / 2.0, (p + eps) / 2.0);

    let f1 = |t: (f64, f64, f64, f64)| {
        measure_on_masses(DisparityMeasure::AbsDiffAcceptance, t.0, t.1, t.2, t.3)
    };
    let f2 = |t: (f64, f64, f64, f64)| {
        measure_on_masses(DisparityMeasure::AbsDiffComposition, t.0, t.1, t.2, t.3)
    };
    Ok(FixtureValues {
        f1_c: f1(c_table)?,
        f1_c_prime: f1(cp_table)?,
        f2_c: f2(c_table)?,
        f2_c_prime: f2(cp_table)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::str::FromStr;

    fn t(a: u64, b: u64, c: u64, d: u64) -> JointTable {
        JointTable { a, b, c, d }
    }

    #[test]
    fn contingency_counts_cells() {
        let preds = vec![0, 1, 1, 0, 1];
        let sens = vec![0, 0, 1, 1, 1];
        let table = contingency(&preds, &sens).unwrap();
        assert_eq!(table, t(1, 1, 1, 2));
        assert_eq!(table.n(), 5);
    }

    #[test]
    fn contingency_rejects_bad_inputs() {
        assert!(contingency(&[], &[]).is_err());
        assert!(contingency(&[0, 1], &[0]).is_err());
        assert!(contingency(&[2], &[0]).is_err());
        assert!(contingency(&[0], &[3]).is_err());
    }

    #[test]
    fn perfectly_aligned_table_has_mutual_information_ln_2() {
        let mi = disparity(&t(1, 0, 0, 1), DisparityMeasure::MutualInfo).unwrap();
        assert!((mi - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn degenerate_prediction_column_has_zero_mutual_information() {
        // constant yhat = 0: independent of S by construction
        let mi = disparity(&t(3, 0, 5, 0), DisparityMeasure::MutualInfo).unwrap();
        assert_eq!(mi, 0.0);
    }

    #[test]
    fn mutual_information_matches_entropy_decomposition() {
        // independent oracle: I(S; Y) = H(S) + H(Y) - H(S, Y)
        let h = |ps: &[f64]| -> f64 {
            ps.iter()
                .filter(|&&p| p > 0.0)
                .map(|&p| -p * p.ln())
                .sum()
        };
        for table in [t(1, 0, 0, 1), t(5, 3, 2, 7), t(10, 10, 10, 10), t(1, 2, 3, 4)] {
            let n = table.n() as f64;
            let (a, b, c, d) = (
                table.a as f64 / n,
                table.b as f64 / n,
                table.c as f64 / n,
                table.d as f64 / n,
            );
            let oracle = h(&[a + b, c + d]) + h(&[a + c, b + d]) - h(&[a, b, c, d]);
            let mi = disparity(&table, DisparityMeasure::MutualInfo).unwrap();
            assert!((mi - oracle).abs() < 1e-12, "table {table:?}");
        }
    }

    #[test]
    fn covariance_measure_matches_the_closed_forms() {
        let cov = disparity(&t(1, 0, 0, 1), DisparityMeasure::Covariance).unwrap();
        assert!((cov - 0.25).abs() < 1e-15);
        // ad = bc implies zero
        let cov = disparity(&t(2, 3, 4, 6), DisparityMeasure::Covariance).unwrap();
        assert!(cov.abs() < 1e-15);
    }

    #[test]
    fn covariance_measure_equals_ad_minus_bc_over_n_squared() {
        for table in [t(5, 3, 2, 7), t(1, 2, 3, 4), t(12, 1, 7, 9), t(2, 9, 4, 1)] {
            let n = table.n() as f64;
            let oracle = ((table.a * table.d) as f64 - (table.b * table.c) as f64).abs() / (n * n);
            let got = disparity(&table, DisparityMeasure::Covariance).unwrap();
            assert!((got - oracle).abs() < 1e-12, "table {table:?}");
        }
    }

    #[test]
    fn acceptance_difference_cases() {
        assert_eq!(
            disparity(&t(1, 1, 1, 1), DisparityMeasure::AbsDiffAcceptance).unwrap(),
            0.0
        );
        let got = disparity(&t(5, 5, 8, 2), DisparityMeasure::AbsDiffAcceptance).unwrap();
        assert!((got - 0.3).abs() < 1e-12); // |5/10 - 2/10|
        assert!(matches!(
            disparity(&t(0, 0, 3, 2), DisparityMeasure::AbsDiffAcceptance),
            Err(Error::UndefinedMeasure { .. })
        ));
    }

    #[test]
    fn composition_difference_cases() {
        assert_eq!(
            disparity(&t(1, 1, 1, 1), DisparityMeasure::AbsDiffComposition).unwrap(),
            0.0
        );
        // P(S=1 | yhat=1) = 2/3, P(S=1) = 1/2
        let got = disparity(&t(2, 1, 1, 2), DisparityMeasure::AbsDiffComposition).unwrap();
        assert!((got - (2.0 / 3.0 - 0.5)).abs() < 1e-12);
        assert!(matches!(
            disparity(&t(3, 0, 2, 0), DisparityMeasure::AbsDiffComposition),
            Err(Error::UndefinedMeasure { .. })
        ));
    }

    #[test]
    fn ratio_measures_are_one_minus_min_ratio() {
        // rates 1/2 vs 1/4: r = 2, measure = 1 - 1/2
        let got = disparity(&t(1, 1, 3, 1), DisparityMeasure::RatioAcceptance).unwrap();
        assert!((got - 0.5).abs() < 1e-12);
        // swapping the ratio orientation changes nothing
        let got_sw = disparity(&t(3, 1, 1, 1), DisparityMeasure::RatioAcceptance).unwrap();
        assert!((got_sw - 0.5).abs() < 1e-12);
        assert!(matches!(
            disparity(&t(1, 0, 3, 1), DisparityMeasure::RatioAcceptance),
            Err(Error::UndefinedMeasure { .. })
        ));

        // P(S=1 | yhat=1) = 2/3 vs P(S=1) = 1/2: r = 4/3, measure = 1/4
        let got = disparity(&t(2, 1, 1, 2), DisparityMeasure::RatioComposition).unwrap();
        assert!((got - 0.25).abs() < 1e-12);
        assert!(matches!(
            disparity(&t(2, 1, 2, 0), DisparityMeasure::RatioComposition),
            Err(Error::UndefinedMeasure { .. })
        ));
    }

    #[test]
    fn measures_stay_in_range_on_random_tables() {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state % 20 + 1
        };
        for _ in 0..100 {
            let table = t(next(), next(), next(), next());
            for m in DisparityMeasure::ALL {
                let v = disparity(&table, m).unwrap();
                assert!(v >= 0.0, "{m} on {table:?}");
                assert!(v.is_finite());
                if matches!(
                    m,
                    DisparityMeasure::RatioAcceptance | DisparityMeasure::RatioComposition
                ) {
                    assert!(v <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn row_swap_leaves_symmetric_measures_unchanged() {
        // The acceptance-based and information measures cannot tell the
        // groups apart. Composition measures are anchored to S = 1:
        // abs_diff_composition survives relabeling because
        // |P(S=1|yhat=1) - P(S=1)| = |P(S=0|yhat=1) - P(S=0)|, but the
        // *ratio* form does not, so it is excluded here and covered below.
        let symmetric = [
            DisparityMeasure::MutualInfo,
            DisparityMeasure::Covariance,
            DisparityMeasure::AbsDiffAcceptance,
            DisparityMeasure::AbsDiffComposition,
            DisparityMeasure::RatioAcceptance,
        ];
        for table in [t(5, 3, 2, 7), t(1, 2, 3, 4), t(12, 1, 7, 9), t(4, 9, 2, 11)] {
            let swapped = t(table.c, table.d, table.a, table.b);
            for m in symmetric {
                let x = disparity(&table, m).unwrap();
                let y = disparity(&swapped, m).unwrap();
                assert!((x - y).abs() < 1e-12, "{m} on {table:?}");
            }
        }
    }

    #[test]
    fn ratio_composition_is_anchored_to_the_s1_group() {
        // P(S=1|yhat=1) = 0.6 vs P(S=1) = 0.5 gives 1 - 1/1.2;
        // after the row swap, 0.4 vs 0.5 gives 1 - 0.8.
        let table = t(30, 20, 20, 30);
        let swapped = t(20, 30, 30, 20);
        let x = disparity(&table, DisparityMeasure::RatioComposition).unwrap();
        let y = disparity(&swapped, DisparityMeasure::RatioComposition).unwrap();
        assert!((x - (1.0 - 1.0 / 1.2)).abs() < 1e-12);
        assert!((y - 0.2).abs() < 1e-12);
    }

    #[test]
    fn fixture_values_at_p_075() {
        let v = measure_disagreement_fixture(0.75, 0.01).unwrap();
        assert!((v.f1_c - 0.01).abs() < 1e-12); // 3 eps / (4 p)
        assert!((v.f1_c_prime - 0.006666666666666667).abs() < 1e-12); // eps / (2 p)
        assert!((v.f2_c - 0.002336448598130841).abs() < 1e-12); // 1/428
        assert!((v.f2_c_prime - 0.0024752475247524752).abs() < 1e-12); // 1/404
    }

    #[test]
    fn fixture_exhibits_the_preference_flip() {
        for p in [0.6, 0.75, 0.9] {
            let v = measure_disagreement_fixture(p, 0.01).unwrap();
            assert!(v.f1_c_prime < v.f1_c, "F1 must prefer C' at p = {p}");
            assert!(v.f2_c < v.f2_c_prime, "F2 must prefer C at p = {p}");
        }
    }

    #[test]
    fn fixture_vanishes_as_eps_shrinks() {
        let v = measure_disagreement_fixture(0.75, 1e-9).unwrap();
        for x in [v.f1_c, v.f1_c_prime, v.f2_c, v.f2_c_prime] {
            assert!(x.abs() < 1e-8);
        }
    }

    #[test]
    fn fixture_rejects_out_of_domain_parameters() {
        assert!(measure_disagreement_fixture(0.5, 0.01).is_err());
        assert!(measure_disagreement_fixture(1.0, 0.01).is_err());
        assert!(measure_disagreement_fixture(0.75, 0.0).is_err());
        assert!(measure_disagreement_fixture(0.75, 0.3).is_err());
        assert!(measure_disagreement_fixture(0.96, 0.045).is_err()); // eps >= 1 - p
    }

    #[test]
    fn measure_names_round_trip() {
        for m in DisparityMeasure::ALL {
            assert_eq!(DisparityMeasure::from_str(m.name()).unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.name()));
        }
        assert!(DisparityMeasure::from_str("parity").is_err());
    }

    #[test]
    fn evaluate_runs_a_classifier_over_points() {
        let clf = LinearClassifier {
            theta: vec![1.0],
            intercept: 0.0,
            trained_on: 0,
        };
        // scores: +1 -> accept, -1 -> reject for each group
        let points = vec![
            UnlabeledPoint { id: 0, features: vec![1.0], sensitive: 0 },
            UnlabeledPoint { id: 1, features: vec![-1.0], sensitive: 0 },
            UnlabeledPoint { id: 2, features: vec![1.0], sensitive: 1 },
            UnlabeledPoint { id: 3, features: vec![-1.0], sensitive: 1 },
        ];
        let v = evaluate(&clf, &points, DisparityMeasure::AbsDiffAcceptance, 0.5).unwrap();
        assert_eq!(v, 0.0);
        let v = evaluate(&clf, &points, DisparityMeasure::MutualInfo, 0.5).unwrap();
        assert!(v.abs() < 1e-12);
    }
}
