//! Mixing-weight schedules for the selection objective.
//!
//! The combined selection score weighs an informativeness term by `alpha`
//! and a fairness term by `1 - alpha`. A fixed schedule keeps `alpha`
//! constant; the linear decay walks it down in plateaus so early iterations
//! chase accuracy and late iterations chase fairness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaSchedule {
    Fixed { value: f64 },
    LinearDecay { hi: f64, lo: f64, steps: usize },
}

impl Default for AlphaSchedule {
    /// Eleven plateaus from 1 down to 0: 1.0, 0.9, ..., 0.1, 0.0.
    fn default() -> Self {
        AlphaSchedule::LinearDecay {
            hi: 1.0,
            lo: 0.0,
            steps: 11,
        }
    }
}

impl AlphaSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            AlphaSchedule::Fixed { value } => {
                if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                    return Err(Error::invalid_param(
                        "alpha.value",
                        format!("must lie in [0, 1], got {value}"),
                    ));
                }
            }
            AlphaSchedule::LinearDecay { hi, lo, steps } => {
                if steps == 0 {
                    return Err(Error::invalid_param("alpha.steps", "must be at least 1"));
                }
                if !hi.is_finite() || !lo.is_finite() || hi < lo {
                    return Err(Error::invalid_param(
                        "alpha.hi/lo",
                        format!("need lo <= hi, got lo = {lo}, hi = {hi}"),
                    ));
                }
                if lo < 0.0 || hi > 1.0 {
                    return Err(Error::invalid_param(
                        "alpha.hi/lo",
                        format!("[lo, hi] must sit inside [0, 1], got [{lo}, {hi}]"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Mixing weight for iteration `t` of a `budget`-iteration run.
    ///
    /// For the linear decay the budget is carved into `steps` plateaus of
    /// width `budget / steps` (integer division, clamped to at least 1);
    /// any remainder extends the final plateau. The plateau values are
    /// anchored at `lo` so the last one reaches it exactly:
    /// `lo + (hi - lo) * (steps - 1 - k) / (steps - 1)` for plateau `k`.
    pub fn alpha_at(&self, t: usize, budget: usize) -> Result<f64> {
        self.validate()?;
        if budget == 0 {
            return Err(Error::invalid_param("budget", "must be at least 1"));
        }
        if t >= budget {
            return Err(Error::invalid_param(
                "t",
                format!("iteration {t} out of range for budget {budget}"),
            ));
        }
        match *self {
            AlphaSchedule::Fixed { value } => Ok(value),
            AlphaSchedule::LinearDecay { hi, lo, steps } => {
                if steps == 1 {
                    return Ok(hi);
                }
                let plateau = (budget / steps).max(1);
                let k = (t / plateau).min(steps - 1);
                // endpoints are exact by contract; the interpolation can
                // round away from them by an ulp otherwise
                if k == 0 {
                    Ok(hi)
                } else if k == steps - 1 {
                    Ok(lo)
                } else {
                    Ok(lo + (hi - lo) * ((steps - 1 - k) as f64) / ((steps - 1) as f64))
                }
            }
        }
    }
}
