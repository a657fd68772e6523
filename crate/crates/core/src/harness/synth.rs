//! Synthetic dataset generators.
//!
//! Two families: a planar two-group scenario where the true decision
//! boundary treats both groups identically but a slightly rotated
//! boundary does not, and a biased tabular generator whose first feature
//! is a noisy proxy for the sensitive attribute.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{DataPoint, Dataset};
use crate::error::{Error, Result};
use crate::glm::LinearClassifier;

/// Principal variances of the Gaussian group: along the label boundary
/// direction (1,-1)/sqrt(2) and across it along (1,1)/sqrt(2). The group
/// hugs the boundary, so any rotation of the decision rule sweeps a lot
/// of its mass to one side.
const VAR_ALONG_BOUNDARY: f64 = 0.08;
const VAR_ACROSS_BOUNDARY: f64 = 0.005;

/// Two planar groups labeled by the same rule `x1 + x2 >= 1`.
///
/// Group `red` (sensitive = 1) is uniform on the unit square; group
/// `blue` (sensitive = 0) is Gaussian, centered on the boundary at
/// (0.5, 0.5) and elongated along it. Both groups have acceptance rate
/// exactly 1/2 under the true rule. Under [`scenario_tilted_rule`],
/// rotated 35 degrees around the pivot (1, 0), the blue acceptance rate
/// jumps to about 0.93 while red moves far less.
pub fn make_synthetic_scenario(n_per_group: usize, seed: u64) -> Result<Dataset> {
    if n_per_group == 0 {
        return Err(Error::invalid_param("n_per_group", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // covariance from the principal axes: diag (a + b)/2, off-diag (b - a)/2
    let s = (VAR_ALONG_BOUNDARY + VAR_ACROSS_BOUNDARY) / 2.0;
    let r = (VAR_ACROSS_BOUNDARY - VAR_ALONG_BOUNDARY) / 2.0;
    // lower Cholesky factor of [[s, r], [r, s]]
    let l11 = s.sqrt();
    let l21 = r / l11;
    let l22 = (s - r * r / s).sqrt();

    let mut points = Vec::with_capacity(2 * n_per_group);
    let push = |x1: f64, x2: f64, sensitive: u8, points: &mut Vec<DataPoint>| {
        points.push(DataPoint {
            id: 0,
            features: vec![x1, x2],
            sensitive,
            label: usize::from(x1 + x2 >= 1.0),
        });
    };
    for _ in 0..n_per_group {
        // blue: Gaussian around the boundary midpoint
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        push(0.5 + l11 * z1, 0.5 + l21 * z1 + l22 * z2, 0, &mut points);
        // red: uniform on the unit square
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        push(u1, u2, 1, &mut points);
    }
    Dataset::from_points(points, vec!["x1".into(), "x2".into()], 2)
}

/// The labeling rule of the scenario, `x1 + x2 >= 1`, as a classifier.
pub fn scenario_true_rule() -> LinearClassifier {
    LinearClassifier {
        theta: vec![1.0, 1.0],
        intercept: -1.0,
        trained_on: 0,
    }
}

/// The scenario boundary rotated 35 degrees around the pivot (1, 0):
/// accepts where `sin(35) * x1 + cos(35) * x2 >= sin(35)`.
pub fn scenario_tilted_rule() -> LinearClassifier {
    let (sin, cos) = 35.0f64.to_radians().sin_cos();
    LinearClassifier {
        theta: vec![sin, cos],
        intercept: -sin,
        trained_on: 0,
    }
}

/// Parameters of the biased tabular generator.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasedParams {
    pub n: usize,
    /// Count of pure-noise features appended after the informative ones.
    pub d_noise: usize,
    /// Mean shift of the proxy feature between the sensitive groups.
    pub proxy_shift: f64,
    /// Weight of the proxy feature in the label logit, applied to both
    /// groups alike.
    pub proxy_weight: f64,
    /// Extra weight of the proxy in the logit for rows with `s = 1`
    /// only. A linear model cannot represent the interaction, so its
    /// fitted proxy slope is a compromise set by the group composition
    /// of whatever sample it was trained on.
    pub proxy_group_slope: f64,
    /// How much of the signal logit leaks into the proxy feature. Nonzero
    /// values make the proxy informative but redundant: a model can trade
    /// it for the signals without losing accuracy.
    pub proxy_signal_mix: f64,
    /// Weights of the group-independent signal features.
    pub signal_weights: Vec<f64>,
    pub intercept: f64,
}

impl Default for BiasedParams {
    fn default() -> BiasedParams {
        BiasedParams {
            n: 1000,
            d_noise: 3,
            proxy_shift: 2.0,
            proxy_weight: 2.5,
            proxy_group_slope: 0.0,
            proxy_signal_mix: 0.0,
            signal_weights: vec![1.0, 0.8],
            intercept: -0.2,
        }
    }
}

/// Tabular data with a group-confounded proxy feature.
///
/// Per row: `proxy = shift * (2s - 1) + mix * signal_logit + noise`, and
/// the label logit is
/// `intercept + signal_logit + (weight + group_slope * s) * proxy`.
/// The defaults load the logit on the proxy directly, so the labels
/// inherit a large group gap through it and any accurate model carries
/// that gap into its predictions — fairness-aware labeling can shrink
/// the gap but pays in accuracy at the margin. Two optional variants
/// change the mechanism: `proxy_group_slope` makes the proxy predictive
/// for group `s = 1` only (a validity gap no single linear coefficient
/// can represent, so the fit depends on the group composition of the
/// training sample), and `proxy_signal_mix` leaks the signal logit into
/// the proxy, making it informative but redundant.
pub fn make_biased_dataset(params: &BiasedParams, seed: u64) -> Result<Dataset> {
    if params.n == 0 {
        return Err(Error::invalid_param("n", "must be positive"));
    }
    for (name, v) in [
        ("proxy_shift", params.proxy_shift),
        ("proxy_weight", params.proxy_weight),
        ("proxy_group_slope", params.proxy_group_slope),
        ("proxy_signal_mix", params.proxy_signal_mix),
        ("intercept", params.intercept),
    ] {
        if !v.is_finite() {
            return Err(Error::invalid_param(name, "must be finite"));
        }
    }
    if params.signal_weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::invalid_param("signal_weights", "must be finite"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 1 + params.signal_weights.len() + params.d_noise;
    let mut points = Vec::with_capacity(params.n);
    for _ in 0..params.n {
        let s = rng.random_range(0..2u8);
        let proxy_eps: f64 = rng.sample(StandardNormal);
        let mut signals = Vec::with_capacity(params.signal_weights.len());
        let mut signal_logit = 0.0;
        for w in &params.signal_weights {
            let x: f64 = rng.sample(StandardNormal);
            signal_logit += w * x;
            signals.push(x);
        }
        let proxy = params.proxy_shift * (2.0 * s as f64 - 1.0)
            + params.proxy_signal_mix * signal_logit
            + proxy_eps;
        let mut features = Vec::with_capacity(d);
        features.push(proxy);
        features.extend_from_slice(&signals);
        for _ in 0..params.d_noise {
            features.push(rng.sample(StandardNormal));
        }
        let proxy_slope = params.proxy_weight + params.proxy_group_slope * s as f64;
        let logit = params.intercept + proxy_slope * proxy + signal_logit;
        let p = 1.0 / (1.0 + (-logit).exp());
        let label = usize::from(rng.random::<f64>() < p);
        points.push(DataPoint { id: 0, features, sensitive: s, label });
    }

    let mut names = vec!["proxy".to_string()];
    names.extend((0..params.signal_weights.len()).map(|j| format!("signal_{j}")));
    names.extend((0..params.d_noise).map(|j| format!("noise_{j}")));
    Dataset::from_points(points, names, 2)
}
