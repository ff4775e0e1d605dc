//! Least-squares order estimation on a log-log scale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Errors below this are treated as reference noise and left out of fits.
pub const ERROR_FLOOR: f64 = 1e-13;
pub const MIN_FIT_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    /// Empirical order.
    pub slope: f64,
    /// Natural log of the error constant.
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
    /// Points dropped for lying under [`ERROR_FLOOR`] or being non-finite.
    pub points_excluded: usize,
}

/// Fits `ln err = slope · ln τ + intercept`.
pub fn fit_order(taus: &[f64], errors: &[f64]) -> Result<OrderFit> {
    if taus.len() != errors.len() {
        return Err(Error::Shape { expected: taus.len(), found: errors.len() });
    }
    let points: Vec<(f64, f64)> = taus
        .iter()
        .zip(errors)
        .filter(|(t, e)| **t > 0.0 && t.is_finite() && e.is_finite() && **e >= ERROR_FLOOR)
        .map(|(t, e)| (t.ln(), e.ln()))
        .collect();
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData { usable: points.len(), required: MIN_FIT_POINTS });
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("all step sizes coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(OrderFit {
        slope,
        intercept,
        r_squared,
        points_used: points.len(),
        points_excluded: taus.len() - points.len(),
    })
}

/// `max / median` of `err(τ) / τ^order`; bounded ratios certify an
/// upper bound of that order without claiming its sharpness.
pub fn ratio_spread(taus: &[f64], errors: &[f64], order: f64) -> Option<f64> {
    let mut ratios: Vec<f64> = taus
        .iter()
        .zip(errors)
        .filter(|(_, e)| e.is_finite())
        .map(|(t, e)| e / t.powf(order))
        .collect();
    if ratios.is_empty() {
        return None;
    }
    ratios.sort_by(f64::total_cmp);
    let k = ratios.len();
    let median = if k % 2 == 1 { ratios[k / 2] } else { 0.5 * (ratios[k / 2 - 1] + ratios[k / 2]) };
    (median > 0.0).then(|| ratios[k - 1] / median)
}

/// Largest `τ` from which every consecutive local slope down the ladder stays
/// within `window` of `slope`. Input must be ordered by decreasing `τ`.
pub fn asymptotic_tau(taus: &[f64], errors: &[f64], slope: f64, window: f64) -> Option<f64> {
    let mut best = None;
    for i in (0..taus.len().saturating_sub(1)).rev() {
        let (e0, e1) = (errors[i], errors[i + 1]);
        if !(e0 >= ERROR_FLOOR && e1 >= ERROR_FLOOR) {
            break;
        }
        let local = (e0 / e1).ln() / (taus[i] / taus[i + 1]).ln();
        if (local - slope).abs() > window {
            break;
        }
        best = Some(taus[i]);
    }
    best
}
