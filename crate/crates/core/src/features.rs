//! The four-feature description of a decomposed series.
//!
//! * trend strength `F1 = max(0, 1 - Var(r) / Var(t + r))`
//! * seasonal strength `F2 = max(0, 1 - Var(r) / Var(s + r))`
//! * trend linearity `F3 = max(0, 1 - Var(delta) / Var(t))`
//! * trend slope `F4 = beta1`
//!
//! where `t_i = beta0 + beta1 * i + delta_i` is the least-squares line through
//! the trend with `i = 1..T`, and `Var` uses the `T - 1` denominator.

use serde::{Deserialize, Serialize};

use crate::decomposition::Decomposition;
use crate::error::{Error, Result};
use crate::stats;

/// Least-squares line through a trend component, indexed from 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendFit {
    pub beta0: f64,
    pub beta1: f64,
    pub deviations: Vec<f64>,
}

impl TrendFit {
    /// Value of the fitted line at 1-based index `i`.
    pub fn line_at(&self, i: usize) -> f64 {
        self.beta0 + self.beta1 * i as f64
    }
}

pub fn fit_trend_line(trend: &[f64]) -> Result<TrendFit> {
    let n = trend.len();
    if n < 2 {
        return Err(Error::Validation(format!(
            "trend line needs at least 2 points, got {n}"
        )));
    }
    let x_mean = (n as f64 + 1.0) / 2.0;
    let t_mean = stats::mean(trend);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (k, t) in trend.iter().enumerate() {
        let dx = (k + 1) as f64 - x_mean;
        sxy += dx * (t - t_mean);
        sxx += dx * dx;
    }
    let beta1 = sxy / sxx;
    let beta0 = t_mean - beta1 * x_mean;
    let deviations = trend
        .iter()
        .enumerate()
        .map(|(k, t)| t - (beta0 + beta1 * (k + 1) as f64))
        .collect();
    Ok(TrendFit {
        beta0,
        beta1,
        deviations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub trend_strength: f64,
    pub seasonal_strength: f64,
    pub trend_linearity: f64,
    pub trend_slope: f64,
}

impl FeatureVector {
    pub const NAMES: [&'static str; 4] = ["F1", "F2", "F3", "F4"];

    pub fn to_array(self) -> [f64; 4] {
        [
            self.trend_strength,
            self.seasonal_strength,
            self.trend_linearity,
            self.trend_slope,
        ]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self {
            trend_strength: a[0],
            seasonal_strength: a[1],
            trend_linearity: a[2],
            trend_slope: a[3],
        }
    }
}

/// Which strength ratios had a zero denominator and were set to 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Degenerate {
    pub trend_strength: bool,
    pub seasonal_strength: bool,
    pub trend_linearity: bool,
}

impl Degenerate {
    pub fn any(&self) -> bool {
        self.trend_strength || self.seasonal_strength || self.trend_linearity
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureReport {
    pub features: FeatureVector,
    pub degenerate: Degenerate,
    pub beta0: f64,
}

/// Variance treated as zero relative to the magnitude of the values.
fn is_flat(var: f64, values: &[f64]) -> bool {
    let scale = 1e-10 * stats::max_abs(values);
    var <= scale * scale
}

/// `max(0, 1 - num / var(denominator))`, or `None` when the denominator is flat.
fn strength(num: f64, denominator: &[f64]) -> Option<f64> {
    let var = stats::variance(denominator);
    if is_flat(var, denominator) {
        None
    } else {
        Some((1.0 - num / var).max(0.0))
    }
}

pub fn feature_report(d: &Decomposition) -> FeatureReport {
    let t = &d.trend;
    let s = &d.seasonal;
    let r = &d.remainder;
    let var_r = stats::variance(r);

    let t_plus_r: Vec<f64> = t.iter().zip(r).map(|(a, b)| a + b).collect();
    let s_plus_r: Vec<f64> = s.iter().zip(r).map(|(a, b)| a + b).collect();
    let f1 = strength(var_r, &t_plus_r);
    let f2 = strength(var_r, &s_plus_r);

    let (f3, f4, beta0) = match fit_trend_line(t) {
        Ok(fit) => (strength(stats::variance(&fit.deviations), t), fit.beta1, fit.beta0),
        Err(_) => (None, 0.0, t.first().copied().unwrap_or(0.0)),
    };

    FeatureReport {
        features: FeatureVector {
            trend_strength: f1.unwrap_or(0.0),
            seasonal_strength: f2.unwrap_or(0.0),
            trend_linearity: f3.unwrap_or(0.0),
            trend_slope: f4,
        },
        degenerate: Degenerate {
            trend_strength: f1.is_none(),
            seasonal_strength: f2.is_none(),
            trend_linearity: f3.is_none(),
        },
        beta0,
    }
}

pub fn compute_features(d: &Decomposition) -> FeatureVector {
    feature_report(d).features
}
