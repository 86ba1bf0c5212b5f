//! Seasonal-trend decomposition using loess (STL).
//!
//! The inner loop alternates cycle-subseries smoothing, a low-pass filter
//! that strips any trend leaking into the seasonal estimate, and a loess fit
//! of the deseasonalized series. An optional outer loop adds bisquare
//! robustness weights. The remainder is always the exact residual.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;
use crate::stats;

/// Additive split `x = trend + seasonal + remainder`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub trend: Vec<f64>,
    pub seasonal: Vec<f64>,
    pub remainder: Vec<f64>,
    pub seasonal_period: usize,
}

impl Decomposition {
    /// Build from trend and seasonal estimates; the remainder is the residual.
    pub fn from_components(x: &[f64], trend: Vec<f64>, seasonal: Vec<f64>, seasonal_period: usize) -> Result<Self> {
        if trend.len() != x.len() || seasonal.len() != x.len() {
            return Err(Error::Validation(format!(
                "component lengths ({}, {}) differ from series length {}",
                trend.len(),
                seasonal.len(),
                x.len()
            )));
        }
        let remainder = x
            .iter()
            .zip(&trend)
            .zip(&seasonal)
            .map(|((&x, &t), &s)| exact_residual(x, t, s))
            .collect();
        Ok(Self {
            trend,
            seasonal,
            remainder,
            seasonal_period,
        })
    }

    /// Build from explicit components, e.g. hand-made or edited ones.
    pub fn new(trend: Vec<f64>, seasonal: Vec<f64>, remainder: Vec<f64>, seasonal_period: usize) -> Result<Self> {
        if trend.len() != seasonal.len() || trend.len() != remainder.len() {
            return Err(Error::Validation("component lengths differ".into()));
        }
        Ok(Self {
            trend,
            seasonal,
            remainder,
            seasonal_period,
        })
    }

    pub fn len(&self) -> usize {
        self.trend.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trend.is_empty()
    }

    /// `(trend + seasonal) + remainder`, in that evaluation order.
    pub fn reconstruct(&self) -> Vec<f64> {
        self.trend
            .iter()
            .zip(&self.seasonal)
            .zip(&self.remainder)
            .map(|((t, s), r)| (t + s) + r)
            .collect()
    }
}

/// Remainder `r` with `(t + s) + r == x` in floating point whenever such an
/// `r` is within a few ulps of `x - (t + s)`. Otherwise the closest of the
/// candidates, which is off by at most one ulp of the larger term.
pub(crate) fn exact_residual(x: f64, t: f64, s: f64) -> f64 {
    let base = t + s;
    let r = x - base;
    let (mut best, mut best_err) = (r, (base + r - x).abs());
    let (mut up, mut down) = (r, r);
    for _ in 0..4 {
        if best_err == 0.0 {
            break;
        }
        up = up.next_up();
        down = down.next_down();
        for c in [up, down] {
            let err = (base + c - x).abs();
            if err < best_err {
                best = c;
                best_err = err;
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeasonalWindow {
    /// Cycle-subseries means: the seasonal pattern is identical in every cycle.
    Periodic,
    /// Loess window (odd, at least 3) used to smooth each cycle-subseries.
    Window(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SeasonalWindowRepr {
    Window(usize),
    Named(String),
}

impl Serialize for SeasonalWindow {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SeasonalWindow::Periodic => SeasonalWindowRepr::Named("periodic".into()),
            SeasonalWindow::Window(w) => SeasonalWindowRepr::Window(*w),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SeasonalWindow {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        match SeasonalWindowRepr::deserialize(deserializer)? {
            SeasonalWindowRepr::Window(w) => Ok(SeasonalWindow::Window(w)),
            SeasonalWindowRepr::Named(s) if s == "periodic" => Ok(SeasonalWindow::Periodic),
            SeasonalWindowRepr::Named(s) => Err(serde::de::Error::custom(format!(
                "seasonal_window must be an odd integer or \"periodic\", got \"{s}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StlConfig {
    pub seasonal_window: SeasonalWindow,
    /// Derived from the period and seasonal window when `None`.
    pub trend_window: Option<usize>,
    pub inner_iterations: usize,
    pub robust_iterations: usize,
}

impl Default for StlConfig {
    fn default() -> Self {
        Self {
            seasonal_window: SeasonalWindow::Periodic,
            trend_window: None,
            inner_iterations: 2,
            robust_iterations: 0,
        }
    }
}

fn check_window(name: &str, w: usize) -> Result<()> {
    if w < 3 || w % 2 == 0 {
        return Err(Error::Config(format!("{name} must be odd and at least 3, got {w}")));
    }
    Ok(())
}

fn smallest_odd_at_least(x: f64) -> usize {
    let mut n = x.ceil().max(3.0) as usize;
    if n % 2 == 0 {
        n += 1;
    }
    n
}

impl StlConfig {
    pub fn validate(&self) -> Result<()> {
        if let SeasonalWindow::Window(w) = self.seasonal_window {
            check_window("seasonal_window", w)?;
        }
        if let Some(w) = self.trend_window {
            check_window("trend_window", w)?;
        }
        if self.inner_iterations == 0 {
            return Err(Error::Config("inner_iterations must be positive".into()));
        }
        Ok(())
    }

    /// Smallest odd integer >= 1.5 sp / (1 - 1.5 / seasonal_window), or
    /// >= 1.5 sp for the periodic case.
    pub fn effective_trend_window(&self, seasonal_period: usize) -> usize {
        if let Some(w) = self.trend_window {
            return w;
        }
        let sp = seasonal_period as f64;
        match self.seasonal_window {
            SeasonalWindow::Window(ns) if ns > 1 => {
                let denom = 1.0 - 1.5 / ns as f64;
                if denom > 0.0 {
                    smallest_odd_at_least(1.5 * sp / denom)
                } else {
                    smallest_odd_at_least(1.5 * sp)
                }
            }
            _ => smallest_odd_at_least(1.5 * sp),
        }
    }
}

/// Tricube-weighted local regression evaluated at position `xs` (in index
/// units, possibly outside `0..n`). Returns `None` when every weight vanishes.
fn loess_at(y: &[f64], robustness: Option<&[f64]>, xs: f64, window: usize, degree: u8, scratch: &mut Vec<f64>) -> Option<f64> {
    let n = y.len();
    if n == 0 {
        return None;
    }
    let (left, right, h) = if window >= n {
        let left = 0usize;
        let right = n - 1;
        let h = (xs - left as f64).max(right as f64 - xs) + ((window - n) / 2) as f64;
        (left, right, h)
    } else {
        let half = (window - 1) / 2;
        let center = xs.round().clamp(0.0, (n - 1) as f64) as usize;
        let left = center.saturating_sub(half).min(n - window);
        let right = left + window - 1;
        let h = (xs - left as f64).max(right as f64 - xs);
        (left, right, h)
    };

    scratch.clear();
    let upper = 0.999 * h;
    let lower = 0.001 * h;
    let mut total = 0.0;
    for j in left..=right {
        let r = (j as f64 - xs).abs();
        let mut w = if r <= upper {
            if r <= lower {
                1.0
            } else {
                let u = r / h;
                let v = 1.0 - u * u * u;
                v * v * v
            }
        } else {
            0.0
        };
        if let Some(rw) = robustness {
            w *= rw[j];
        }
        total += w;
        scratch.push(w);
    }
    if total <= 0.0 {
        return None;
    }
    scratch.iter_mut().for_each(|w| *w /= total);

    if degree == 1 && h > 0.0 {
        let a: f64 = scratch
            .iter()
            .enumerate()
            .map(|(k, w)| w * (left + k) as f64)
            .sum();
        let c: f64 = scratch
            .iter()
            .enumerate()
            .map(|(k, w)| {
                let d = (left + k) as f64 - a;
                w * d * d
            })
            .sum();
        if c.sqrt() > 0.001 * (n - 1) as f64 {
            let b = (xs - a) / c;
            for (k, w) in scratch.iter_mut().enumerate() {
                *w *= b * ((left + k) as f64 - a) + 1.0;
            }
        }
    }
    Some(scratch.iter().zip(&y[left..=right]).map(|(w, v)| w * v).sum())
}

fn loess_weighted(y: &[f64], robustness: Option<&[f64]>, window: usize, degree: u8) -> Vec<f64> {
    let mut scratch = Vec::with_capacity(window.min(y.len()));
    (0..y.len())
        .map(|i| loess_at(y, robustness, i as f64, window, degree, &mut scratch).unwrap_or(y[i]))
        .collect()
}

/// Loess smoother with tricube weights evaluated at every index.
///
/// Neighbourhoods are truncated at the ends of the sequence; when the window
/// exceeds the sequence length the bandwidth is widened instead.
pub fn loess_smooth(y: &[f64], window: usize, degree: u8) -> Result<Vec<f64>> {
    check_window("loess window", window)?;
    if degree > 1 {
        return Err(Error::Config(format!("loess degree must be 0 or 1, got {degree}")));
    }
    Ok(loess_weighted(y, None, window, degree))
}

fn moving_average(y: &[f64], len: usize) -> Vec<f64> {
    if y.len() < len {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(y.len() - len + 1);
    let mut sum: f64 = y[..len].iter().sum();
    out.push(sum / len as f64);
    for i in len..y.len() {
        sum += y[i] - y[i - len];
        out.push(sum / len as f64);
    }
    out
}

/// Smooth every cycle-subseries and extend it one cycle at each end.
/// Output has length `n + 2 * period`.
fn cycle_subseries(detrended: &[f64], robustness: &[f64], period: usize, window: SeasonalWindow) -> Vec<f64> {
    let n = detrended.len();
    let mut out = vec![0.0; n + 2 * period];
    let mut scratch = Vec::new();
    for k in 0..period {
        let idx: Vec<usize> = (k..n).step_by(period).collect();
        let sub: Vec<f64> = idx.iter().map(|&i| detrended[i]).collect();
        let sub_w: Vec<f64> = idx.iter().map(|&i| robustness[i]).collect();
        let len = sub.len();
        match window {
            SeasonalWindow::Periodic => {
                let wsum: f64 = sub_w.iter().sum();
                let m = if wsum > 0.0 {
                    sub.iter().zip(&sub_w).map(|(v, w)| v * w).sum::<f64>() / wsum
                } else {
                    stats::mean(&sub)
                };
                for j in 0..len + 2 {
                    out[k + j * period] = m;
                }
            }
            SeasonalWindow::Window(ns) => {
                let fallback = stats::mean(&sub);
                for j in 0..len + 2 {
                    let xs = j as f64 - 1.0;
                    let v = loess_at(&sub, Some(&sub_w), xs, ns, 1, &mut scratch).unwrap_or_else(|| {
                        if (1..=len).contains(&j) {
                            sub[j - 1]
                        } else {
                            fallback
                        }
                    });
                    out[k + j * period] = v;
                }
            }
        }
    }
    out
}

fn low_pass(cycle: &[f64], period: usize, window: usize) -> Vec<f64> {
    let a = moving_average(cycle, period);
    let b = moving_average(&a, period);
    let c = moving_average(&b, 3);
    loess_weighted(&c, None, window, 1)
}

fn robustness_weights(residual: &[f64]) -> Vec<f64> {
    let abs: Vec<f64> = residual.iter().map(|r| r.abs()).collect();
    let h = 6.0 * stats::median(&abs);
    if h <= 0.0 {
        return vec![1.0; residual.len()];
    }
    abs.iter()
        .map(|&r| {
            let u = r / h;
            if u <= 0.001 {
                1.0
            } else if u <= 0.999 {
                let v = 1.0 - u * u;
                v * v
            } else {
                0.0
            }
        })
        .collect()
}

/// STL of raw values with a given seasonal period.
pub fn stl_values(y: &[f64], period: usize, cfg: &StlConfig) -> Result<Decomposition> {
    cfg.validate()?;
    if period < 2 {
        return Err(Error::Config(format!("seasonal period must be at least 2, got {period}")));
    }
    let n = y.len();
    if n < 3 * period {
        return Err(Error::InsufficientLength {
            len: n,
            needed: 3 * period,
        });
    }
    let trend_window = cfg.effective_trend_window(period);
    let lowpass_window = smallest_odd_at_least(period as f64);

    // Subseries means cannot absorb a trend the way a degree-1 subseries fit
    // does, so periodic mode starts from a smooth of the raw series instead
    // of zero; otherwise two inner passes leave a large sawtooth behind.
    let mut trend = match cfg.seasonal_window {
        SeasonalWindow::Periodic => loess_weighted(y, None, smallest_odd_at_least(2.0 * period as f64), 1),
        SeasonalWindow::Window(_) => vec![0.0; n],
    };
    let mut seasonal = vec![0.0; n];
    let mut robustness = vec![1.0; n];
    for outer in 0..=cfg.robust_iterations {
        let rw = (outer > 0).then_some(robustness.as_slice());
        for _ in 0..cfg.inner_iterations {
            let detrended: Vec<f64> = y.iter().zip(&trend).map(|(v, t)| v - t).collect();
            let cycle = cycle_subseries(&detrended, &robustness, period, cfg.seasonal_window);
            let low = low_pass(&cycle, period, lowpass_window);
            for i in 0..n {
                seasonal[i] = cycle[period + i] - low[i];
            }
            let deseasonalized: Vec<f64> = y.iter().zip(&seasonal).map(|(v, s)| v - s).collect();
            trend = loess_weighted(&deseasonalized, rw, trend_window, 1);
        }
        if outer < cfg.robust_iterations {
            let residual: Vec<f64> = (0..n).map(|i| y[i] - trend[i] - seasonal[i]).collect();
            robustness = robustness_weights(&residual);
        }
    }
    Decomposition::from_components(y, trend, seasonal, period)
}

/// STL of a series using its own seasonal period.
pub fn stl_decompose(x: &TimeSeries, cfg: &StlConfig) -> Result<Decomposition> {
    stl_values(x.values(), x.seasonal_period(), cfg)
}
