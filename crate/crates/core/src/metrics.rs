//! Forecast error metrics and dataset-level summaries.
//!
//! MASE scales absolute errors by the in-sample mean absolute error of the
//! seasonal-naive forecast with the dataset's seasonal period. Aggregates
//! are averaged over the horizon per series first, then summarized across
//! series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecasting::ForecastModel;
use crate::series::TimeSeries;
use crate::stats;

/// Describes how aggregates are formed; copied into evaluation outputs.
pub const AGGREGATION_NOTE: &str =
    "per-series errors are averaged over the horizon first, then mean/median/std are taken across series";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Mase,
    Mae,
    Smape,
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mase" => Ok(Metric::Mase),
            "mae" => Ok(Metric::Mae),
            "smape" => Ok(Metric::Smape),
            other => Err(Error::Validation(format!("unknown metric '{other}'"))),
        }
    }
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Mase => "mase",
            Metric::Mae => "mae",
            Metric::Smape => "smape",
        }
    }

    /// Score a forecast; `insample` and `sp` only matter for MASE.
    pub fn score(self, actual: &[f64], forecast: &[f64], insample: &[f64], sp: usize) -> Result<HorizonErrors> {
        match self {
            Metric::Mase => mase(actual, forecast, insample, sp),
            Metric::Mae => mae(actual, forecast),
            Metric::Smape => smape(actual, forecast),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonErrors {
    pub per_horizon: Vec<f64>,
    pub aggregate: f64,
}

impl HorizonErrors {
    pub fn from_per_horizon(per_horizon: Vec<f64>) -> Self {
        let aggregate = stats::mean(&per_horizon);
        Self {
            per_horizon,
            aggregate,
        }
    }
}

fn check_lengths(actual: &[f64], forecast: &[f64]) -> Result<()> {
    if actual.len() != forecast.len() {
        return Err(Error::Validation(format!(
            "actual has {} values but forecast has {}",
            actual.len(),
            forecast.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::Validation("cannot score an empty forecast".into()));
    }
    Ok(())
}

/// Mean absolute error of the in-sample seasonal-naive forecast.
pub fn seasonal_naive_scale(insample: &[f64], sp: usize) -> Result<f64> {
    if sp == 0 || insample.len() <= sp {
        return Err(Error::Validation(format!(
            "in-sample length {} must exceed the seasonal period {sp}",
            insample.len()
        )));
    }
    let diffs: Vec<f64> = insample.windows(sp + 1).map(|w| (w[sp] - w[0]).abs()).collect();
    Ok(stats::mean(&diffs))
}

pub fn mase(actual: &[f64], forecast: &[f64], insample: &[f64], sp: usize) -> Result<HorizonErrors> {
    check_lengths(actual, forecast)?;
    let scale = seasonal_naive_scale(insample, sp)?;
    if scale < 1e-12 {
        return Err(Error::ScaleFree);
    }
    Ok(HorizonErrors::from_per_horizon(
        actual
            .iter()
            .zip(forecast)
            .map(|(a, f)| (a - f).abs() / scale)
            .collect(),
    ))
}

pub fn mae(actual: &[f64], forecast: &[f64]) -> Result<HorizonErrors> {
    check_lengths(actual, forecast)?;
    Ok(HorizonErrors::from_per_horizon(
        actual.iter().zip(forecast).map(|(a, f)| (a - f).abs()).collect(),
    ))
}

/// Symmetric MAPE in percent, `200 |a - f| / (|a| + |f|)`; `0/0` counts as 0.
pub fn smape(actual: &[f64], forecast: &[f64]) -> Result<HorizonErrors> {
    check_lengths(actual, forecast)?;
    Ok(HorizonErrors::from_per_horizon(
        actual
            .iter()
            .zip(forecast)
            .map(|(a, f)| {
                let denom = a.abs() + f.abs();
                if denom == 0.0 {
                    0.0
                } else {
                    200.0 * (a - f).abs() / denom
                }
            })
            .collect(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation of the per-series aggregates (0 for one series).
    pub std: f64,
    /// Per-horizon 25th percentile across series.
    pub band_low: Vec<f64>,
    /// Per-horizon 75th percentile across series.
    pub band_high: Vec<f64>,
    /// Per-horizon mean across series.
    pub mean_curve: Vec<f64>,
}

pub fn summarize(errors: &[HorizonErrors]) -> Result<ErrorSummary> {
    if errors.is_empty() {
        return Err(Error::Validation("cannot summarize an empty list of errors".into()));
    }
    let horizon = errors[0].per_horizon.len();
    if errors.iter().any(|e| e.per_horizon.len() != horizon) {
        return Err(Error::Validation("horizon lengths differ across series".into()));
    }
    let aggregates: Vec<f64> = errors.iter().map(|e| e.aggregate).collect();
    let mut band_low = Vec::with_capacity(horizon);
    let mut band_high = Vec::with_capacity(horizon);
    let mut mean_curve = Vec::with_capacity(horizon);
    let mut column = Vec::with_capacity(errors.len());
    for h in 0..horizon {
        column.clear();
        column.extend(errors.iter().map(|e| e.per_horizon[h]));
        column.sort_by(f64::total_cmp);
        band_low.push(stats::percentile_sorted(&column, 25.0));
        band_high.push(stats::percentile_sorted(&column, 75.0));
        mean_curve.push(stats::mean(&column));
    }
    Ok(ErrorSummary {
        count: errors.len(),
        mean: stats::mean(&aggregates),
        median: stats::median(&aggregates),
        std: stats::std_dev(&aggregates),
        band_low,
        band_high,
        mean_curve,
    })
}

/// Errors of one forecast window of a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesErrors {
    pub id: String,
    pub forecast: Vec<f64>,
    pub errors: HorizonErrors,
}

/// Forecast the final horizon of `series` from the context right before it
/// and score it; everything before the horizon is the in-sample part.
pub fn evaluate_series(model: &dyn ForecastModel, series: &TimeSeries, metric: Metric) -> Result<SeriesErrors> {
    let (c, h) = (model.context_length(), model.horizon());
    let v = series.values();
    if v.len() < c + h {
        return Err(Error::Validation(format!(
            "series '{}' has {} observations, needs context {c} + horizon {h}",
            series.id(),
            v.len()
        )));
    }
    let split = v.len() - h;
    let forecast = model.forecast(&v[split - c..split])?;
    let errors = metric.score(&v[split..], &forecast, &v[..split], series.seasonal_period())?;
    Ok(SeriesErrors {
        id: series.id().to_string(),
        forecast,
        errors,
    })
}

pub fn evaluate_model(model: &dyn ForecastModel, series: &[TimeSeries], metric: Metric) -> Result<Vec<SeriesErrors>> {
    series.iter().map(|s| evaluate_series(model, s, metric)).collect()
}
