//! Interpretable, interval-scoped edits of a decomposed series.
//!
//! A pipeline decomposes the series once, fits one global line to the trend,
//! edits the components step by step and reassembles
//! `x~ = (t~ + s~) + r~`. Trend and seasonal steps edit their own component;
//! level translation and noise edit the remainder channel. Steps with
//! identity parameters leave their component untouched bit for bit.

use std::ops::Range;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::decomposition::{stl_decompose, Decomposition, StlConfig};
use crate::error::{Error, Result};
use crate::features::{feature_report, fit_trend_line, FeatureReport, TrendFit};
use crate::series::TimeSeries;
use crate::stats;

/// Inclusive, 1-based index range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "[usize; 2]", into = "[usize; 2]")]
pub struct Interval {
    pub start: usize,
    pub end: usize,
}

impl TryFrom<[usize; 2]> for Interval {
    type Error = String;

    fn try_from([start, end]: [usize; 2]) -> std::result::Result<Self, String> {
        if start < 1 || start > end {
            return Err(format!("interval [{start}, {end}] must satisfy 1 <= start <= end"));
        }
        Ok(Self { start, end })
    }
}

impl From<Interval> for [usize; 2] {
    fn from(i: Interval) -> Self {
        [i.start, i.end]
    }
}

impl Interval {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn whole(len: usize) -> Self {
        Self { start: 1, end: len }
    }

    pub fn check(&self, len: usize) -> Result<()> {
        if self.start < 1 || self.start > self.end || self.end > len {
            return Err(Error::Validation(format!(
                "interval [{}, {}] is outside [1, {len}]",
                self.start, self.end
            )));
        }
        Ok(())
    }

    /// Zero-based slice range.
    pub fn range(&self) -> Range<usize> {
        self.start - 1..self.end
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TransformKind {
    /// `t~_i = beta0 + f * (beta1 * i + delta_i / h) + m * beta0 * i`
    Trend { f: f64, h: f64, m: f64 },
    /// `s~_i = k * s_i`
    Seasonal { k: f64 },
    /// Adds `c` to every value.
    Translate { c: f64 },
    /// Gaussian noise with std `sigma_rel * std(x)` on a fraction `p` of indices.
    Noise { p: f64, sigma_rel: f64, seed: u64 },
}

impl TransformKind {
    pub fn name(&self) -> &'static str {
        match self {
            TransformKind::Trend { .. } => "trend",
            TransformKind::Seasonal { .. } => "seasonal",
            TransformKind::Translate { .. } => "translate",
            TransformKind::Noise { .. } => "noise",
        }
    }

    pub fn is_identity(&self) -> bool {
        match *self {
            TransformKind::Trend { f, h, m } => f == 1.0 && h == 1.0 && m == 0.0,
            TransformKind::Seasonal { k } => k == 1.0,
            TransformKind::Translate { c } => c == 0.0,
            TransformKind::Noise { p, sigma_rel, .. } => p == 0.0 || sigma_rel == 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{name} must be finite")))
            }
        };
        match *self {
            TransformKind::Trend { f, h, m } => {
                finite("f", f)?;
                finite("h", h)?;
                finite("m", m)?;
                if h == 0.0 {
                    return Err(Error::Parameter("h must be non-zero".into()));
                }
            }
            TransformKind::Seasonal { k } => finite("k", k)?,
            TransformKind::Translate { c } => finite("c", c)?,
            TransformKind::Noise { p, sigma_rel, .. } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::Parameter(format!("noise fraction p must be in [0, 1], got {p}")));
                }
                if !(sigma_rel >= 0.0 && sigma_rel.is_finite()) {
                    return Err(Error::Parameter(format!(
                        "noise scale sigma_rel must be non-negative, got {sigma_rel}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One transformation applied to an interval; `None` means the whole series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformStep {
    pub kind: TransformKind,
    pub interval: Option<Interval>,
}

impl TransformStep {
    pub fn new(kind: TransformKind, interval: Option<Interval>) -> Self {
        Self { kind, interval }
    }

    pub fn whole(kind: TransformKind) -> Self {
        Self { kind, interval: None }
    }

    pub fn on(kind: TransformKind, start: usize, end: usize) -> Self {
        Self {
            kind,
            interval: Some(Interval::new(start, end)),
        }
    }

    pub fn resolve(&self, len: usize) -> Result<Interval> {
        let interval = self.interval.unwrap_or(Interval::whole(len));
        interval.check(len)?;
        Ok(interval)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TrendParams {
    f: f64,
    h: f64,
    m: f64,
}

impl Default for TrendParams {
    fn default() -> Self {
        Self { f: 1.0, h: 1.0, m: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SeasonalParams {
    k: f64,
}

impl Default for SeasonalParams {
    fn default() -> Self {
        Self { k: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TranslateParams {
    c: f64,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct NoiseParams {
    p: f64,
    sigma_rel: f64,
}

/// Wire form: `{"kind", "params", "interval": [start, end], "seed"?}`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StepRepr {
    kind: String,
    #[serde(default)]
    params: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    interval: Option<Interval>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

fn params<T: serde::de::DeserializeOwned + Default>(v: serde_json::Value) -> Result<T> {
    if v.is_null() {
        return Ok(T::default());
    }
    serde_json::from_value(v).map_err(|e| Error::Parameter(e.to_string()))
}

impl TryFrom<StepRepr> for TransformStep {
    type Error = Error;

    fn try_from(repr: StepRepr) -> Result<Self> {
        let kind = match repr.kind.as_str() {
            "trend" => {
                let p: TrendParams = params(repr.params)?;
                TransformKind::Trend { f: p.f, h: p.h, m: p.m }
            }
            "seasonal" => {
                let p: SeasonalParams = params(repr.params)?;
                TransformKind::Seasonal { k: p.k }
            }
            "translate" => {
                let p: TranslateParams = params(repr.params)?;
                TransformKind::Translate { c: p.c }
            }
            "noise" => {
                let p: NoiseParams = params(repr.params)?;
                TransformKind::Noise {
                    p: p.p,
                    sigma_rel: p.sigma_rel,
                    seed: repr.seed.unwrap_or(0),
                }
            }
            other => return Err(Error::Parameter(format!("unknown transform kind '{other}'"))),
        };
        kind.validate()?;
        Ok(TransformStep {
            kind,
            interval: repr.interval,
        })
    }
}

impl From<&TransformStep> for StepRepr {
    fn from(step: &TransformStep) -> Self {
        let (params, seed) = match step.kind {
            TransformKind::Trend { f, h, m } => (serde_json::json!({"f": f, "h": h, "m": m}), None),
            TransformKind::Seasonal { k } => (serde_json::json!({"k": k}), None),
            TransformKind::Translate { c } => (serde_json::json!({"c": c}), None),
            TransformKind::Noise { p, sigma_rel, seed } => {
                (serde_json::json!({"p": p, "sigma_rel": sigma_rel}), Some(seed))
            }
        };
        StepRepr {
            kind: step.kind.name().to_string(),
            params,
            interval: step.interval,
            seed,
        }
    }
}

impl Serialize for TransformStep {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        StepRepr::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TransformStep {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = StepRepr::deserialize(deserializer)?;
        TransformStep::try_from(repr).map_err(serde::de::Error::custom)
    }
}

/// Parse a pipeline (a JSON array of steps); errors name the offending step.
pub fn parse_pipeline(value: serde_json::Value) -> Result<Vec<TransformStep>> {
    let serde_json::Value::Array(items) = value else {
        return Err(Error::Validation("pipeline must be a JSON array of steps".into()));
    };
    items
        .into_iter()
        .enumerate()
        .map(|(step, item)| {
            let repr: StepRepr = serde_json::from_value(item).map_err(|e| Error::Step {
                step,
                message: e.to_string(),
            })?;
            TransformStep::try_from(repr).map_err(|e| Error::Step {
                step,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn parse_pipeline_str(json: &str) -> Result<Vec<TransformStep>> {
    parse_pipeline(serde_json::from_str(json)?)
}

/// Scalar form of the trend transformation at 1-based index `i`.
pub fn transformed_trend_value(beta0: f64, beta1: f64, delta: f64, i: usize, f: f64, h: f64, m: f64) -> f64 {
    let i = i as f64;
    beta0 + f * (beta1 * i + delta / h) + m * beta0 * i
}

/// Rewrite the trend on `interval` using the global line `fit`.
pub fn transform_trend(trend: &[f64], fit: &TrendFit, interval: Interval, f: f64, h: f64, m: f64) -> Result<Vec<f64>> {
    TransformKind::Trend { f, h, m }.validate()?;
    interval.check(trend.len())?;
    if fit.deviations.len() != trend.len() {
        return Err(Error::Validation("trend fit does not match the trend length".into()));
    }
    let mut out = trend.to_vec();
    if f == 1.0 && h == 1.0 && m == 0.0 {
        return Ok(out);
    }
    for k in interval.range() {
        out[k] = transformed_trend_value(fit.beta0, fit.beta1, fit.deviations[k], k + 1, f, h, m);
    }
    Ok(out)
}

pub fn transform_seasonal(seasonal: &[f64], interval: Interval, k: f64) -> Result<Vec<f64>> {
    interval.check(seasonal.len())?;
    let mut out = seasonal.to_vec();
    if k != 1.0 {
        out[interval.range()].iter_mut().for_each(|s| *s *= k);
    }
    Ok(out)
}

pub fn translate_level(values: &[f64], interval: Interval, c: f64) -> Result<Vec<f64>> {
    interval.check(values.len())?;
    let mut out = values.to_vec();
    if c != 0.0 {
        out[interval.range()].iter_mut().for_each(|v| *v += c);
    }
    Ok(out)
}

/// Adds noise in place with an absolute standard deviation `sigma`.
fn perturb(target: &mut [f64], interval: Interval, p: f64, sigma: f64, seed: u64) {
    if p == 0.0 || sigma == 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = interval.range().collect();
    idx.shuffle(&mut rng);
    let count = (p * idx.len() as f64).floor() as usize;
    for &k in &idx[..count] {
        let z: f64 = StandardNormal.sample(&mut rng);
        target[k] += sigma * z;
    }
}

/// Gaussian noise on `floor(p * |interval|)` seeded-random indices, with
/// standard deviation `sigma_rel` times the sample std of `values`.
pub fn add_noise(values: &[f64], interval: Interval, p: f64, sigma_rel: f64, seed: u64) -> Result<Vec<f64>> {
    TransformKind::Noise { p, sigma_rel, seed }.validate()?;
    interval.check(values.len())?;
    let mut out = values.to_vec();
    perturb(&mut out, interval, p, sigma_rel * stats::std_dev(values), seed);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransformedSeries {
    pub original: TimeSeries,
    pub transformed_values: Vec<f64>,
    pub components: Decomposition,
    pub warnings: Vec<String>,
}

impl TransformedSeries {
    /// The generated series, carrying the original's id and metadata.
    pub fn to_series(&self) -> Result<TimeSeries> {
        self.original.with_values(self.transformed_values.clone())
    }

    /// Features of the generated series, from a fresh decomposition of it.
    pub fn features(&self, stl: &StlConfig) -> Result<FeatureReport> {
        let d = stl_decompose(&self.to_series()?, stl)?;
        Ok(feature_report(&d))
    }
}

pub fn apply_pipeline(x: &TimeSeries, steps: &[TransformStep], stl: &StlConfig) -> Result<TransformedSeries> {
    let n = x.len();
    let intervals = steps
        .iter()
        .enumerate()
        .map(|(step, s)| {
            s.kind
                .validate()
                .and_then(|_| s.resolve(n))
                .map_err(|e| Error::Step {
                    step,
                    message: e.to_string(),
                })
        })
        .collect::<Result<Vec<_>>>()?;

    let d = stl_decompose(x, stl)?;
    let fit = fit_trend_line(&d.trend)?;
    let series_std = stats::std_dev(x.values());
    let mut trend = d.trend.clone();
    let mut seasonal = d.seasonal.clone();
    let mut remainder = d.remainder.clone();
    let mut warnings = Vec::new();

    for (step, (s, interval)) in steps.iter().zip(intervals).enumerate() {
        if s.kind.is_identity() {
            continue;
        }
        match s.kind {
            TransformKind::Trend { f, h, m } => {
                if m != 0.0 && fit.beta0.abs() < 1e-9 * series_std {
                    warnings.push(format!(
                        "step {step}: trend intercept is ~0, slope parameter m has no effect"
                    ));
                }
                for k in interval.range() {
                    trend[k] = transformed_trend_value(fit.beta0, fit.beta1, fit.deviations[k], k + 1, f, h, m);
                }
            }
            TransformKind::Seasonal { k } => {
                seasonal[interval.range()].iter_mut().for_each(|v| *v *= k);
            }
            TransformKind::Translate { c } => {
                remainder[interval.range()].iter_mut().for_each(|v| *v += c);
            }
            TransformKind::Noise { p, sigma_rel, seed } => {
                perturb(&mut remainder, interval, p, sigma_rel * series_std, seed);
            }
        }
    }

    // Adding only the component edits keeps untouched indices bit-identical
    // to the input, which re-summing the three components cannot guarantee.
    let transformed_values: Vec<f64> = (0..n)
        .map(|i| {
            let delta = (trend[i] - d.trend[i]) + (seasonal[i] - d.seasonal[i]) + (remainder[i] - d.remainder[i]);
            x.values()[i] + delta
        })
        .collect();
    let components = Decomposition::from_components(&transformed_values, trend, seasonal, d.seasonal_period)?;
    Ok(TransformedSeries {
        original: x.clone(),
        transformed_values,
        components,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seasonal_series(n: usize) -> TimeSeries {
        let values = (1..=n)
            .map(|i| {
                let i = i as f64;
                20.0 + 0.05 * i + 3.0 * (2.0 * std::f64::consts::PI * i / 24.0).sin() + 0.3 * (i * 1.3).cos()
            })
            .collect();
        TimeSeries::from_values("fixture", values, 24).unwrap()
    }

    #[test]
    fn scalar_trend_formula() {
        assert_eq!(transformed_trend_value(10.0, 0.5, 2.0, 4, 2.0, 2.0, 0.1), 20.0);
    }

    #[test]
    fn identity_trend_parameters() {
        let trend: Vec<f64> = (0..10).map(|i| (i as f64 * 0.7).sin() + i as f64).collect();
        let fit = fit_trend_line(&trend).unwrap();
        let out = transform_trend(&trend, &fit, Interval::whole(10), 1.0, 1.0, 0.0).unwrap();
        assert_eq!(out, trend);
    }

    #[test]
    fn zero_h_rejected() {
        let trend = vec![1.0, 2.0, 3.0];
        let fit = fit_trend_line(&trend).unwrap();
        let err = transform_trend(&trend, &fit, Interval::whole(3), 1.0, 0.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::Parameter(_)));
    }

    #[test]
    fn seasonal_scaling_is_local() {
        let s: Vec<f64> = (0..96).map(|i| (i as f64).sin()).collect();
        assert_eq!(transform_seasonal(&s, Interval::whole(96), 1.0).unwrap(), s);
        let out = transform_seasonal(&s, Interval::new(1, 24), 2.0).unwrap();
        assert_eq!(&out[24..], &s[24..]);
        assert_eq!(out[3], 2.0 * s[3]);
    }

    #[test]
    fn translation_creates_exact_jump() {
        let v = vec![1.0; 96];
        assert_eq!(translate_level(&v, Interval::whole(96), 0.0).unwrap(), v);
        let out = translate_level(&v, Interval::new(49, 96), 5.0).unwrap();
        assert_eq!(out[48] - out[47], 5.0);
        assert_eq!(&out[..48], &v[..48]);
    }

    #[test]
    fn noise_identities_and_determinism() {
        let v: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).cos()).collect();
        let all = Interval::whole(50);
        assert_eq!(add_noise(&v, all, 0.0, 1.0, 1).unwrap(), v);
        assert_eq!(add_noise(&v, all, 1.0, 0.0, 1).unwrap(), v);
        let a = add_noise(&v, all, 1.0, 0.5, 9).unwrap();
        let b = add_noise(&v, all, 1.0, 0.5, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().zip(&v).all(|(x, y)| x != y));
    }

    #[test]
    fn noise_touches_floor_fraction_inside_interval() {
        let v = vec![0.0; 40];
        let mut w = v.clone();
        w[0] = 1.0; // non-zero std
        let out = add_noise(&w, Interval::new(11, 30), 0.25, 1.0, 3).unwrap();
        let changed: Vec<usize> = (0..40).filter(|&i| out[i] != w[i]).collect();
        assert_eq!(changed.len(), 5);
        assert!(changed.iter().all(|&i| (10..30).contains(&i)));
    }

    #[test]
    fn bad_noise_params() {
        let v = vec![1.0, 2.0];
        assert!(add_noise(&v, Interval::whole(2), 1.5, 0.1, 0).is_err());
        assert!(add_noise(&v, Interval::whole(2), 0.5, -0.1, 0).is_err());
    }

    #[test]
    fn empty_pipeline_is_identity() {
        let x = seasonal_series(96);
        let out = apply_pipeline(&x, &[], &StlConfig::default()).unwrap();
        assert_eq!(out.transformed_values, x.values());
    }

    #[test]
    fn pipeline_matches_direct_trend_transform() {
        let x = seasonal_series(96);
        let stl = StlConfig::default();
        let step = TransformStep::on(TransformKind::Trend { f: 2.0, h: 1.0, m: 0.0 }, 1, 96);
        let out = apply_pipeline(&x, &[step], &stl).unwrap();

        let d = stl_decompose(&x, &stl).unwrap();
        let fit = fit_trend_line(&d.trend).unwrap();
        let t = transform_trend(&d.trend, &fit, Interval::whole(96), 2.0, 1.0, 0.0).unwrap();
        for i in 0..96 {
            let direct = (t[i] + d.seasonal[i]) + d.remainder[i];
            assert!((out.transformed_values[i] - direct).abs() <= 1e-12 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn out_of_bounds_interval_names_step() {
        let x = seasonal_series(96);
        let steps = [
            TransformStep::whole(TransformKind::Seasonal { k: 2.0 }),
            TransformStep::on(TransformKind::Translate { c: 1.0 }, 90, 97),
        ];
        match apply_pipeline(&x, &steps, &StlConfig::default()).unwrap_err() {
            Error::Step { step, .. } => assert_eq!(step, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pipeline_json_schema() {
        let steps = parse_pipeline_str(
            r#"[
                {"kind":"trend","params":{"f":2,"h":1,"m":0.1},"interval":[1,48]},
                {"kind":"seasonal","params":{"k":0.5}},
                {"kind":"translate","params":{"c":5},"interval":[49,96]},
                {"kind":"noise","params":{"p":0.5,"sigma_rel":0.1},"interval":[1,96],"seed":7}
            ]"#,
        )
        .unwrap();
        assert_eq!(steps.len(), 4);
        assert_eq!(steps[0].kind, TransformKind::Trend { f: 2.0, h: 1.0, m: 0.1 });
        assert_eq!(steps[1].interval, None);
        assert_eq!(steps[3].kind, TransformKind::Noise { p: 0.5, sigma_rel: 0.1, seed: 7 });

        let json = serde_json::to_value(&steps).unwrap();
        assert_eq!(parse_pipeline(json).unwrap(), steps);
    }

    #[test]
    fn pipeline_json_errors_name_step() {
        let err = parse_pipeline_str(r#"[{"kind":"seasonal"},{"kind":"warp"}]"#).unwrap_err();
        assert!(matches!(err, Error::Step { step: 1, .. }), "{err}");
        let err = parse_pipeline_str(r#"[{"kind":"trend","params":{"h":0}}]"#).unwrap_err();
        assert!(matches!(err, Error::Step { step: 0, .. }), "{err}");
        let err = parse_pipeline_str(r#"[{"kind":"seasonal","params":{"q":1}}]"#).unwrap_err();
        assert!(matches!(err, Error::Step { step: 0, .. }), "{err}");
    }

    #[test]
    fn slope_warning_for_zero_intercept() {
        // trend through the origin at i = 0 gives beta0 = 0
        let values: Vec<f64> = (1..=96)
            .map(|i| {
                let i = i as f64;
                0.5 * i + 2.0 * (2.0 * std::f64::consts::PI * i / 24.0).sin()
            })
            .collect();
        let x = TimeSeries::from_values("z", values, 24).unwrap();
        let d = stl_decompose(&x, &StlConfig::default()).unwrap();
        let fit = fit_trend_line(&d.trend).unwrap();
        let shifted: Vec<f64> = x.values().iter().map(|v| v - fit.beta0).collect();
        let x = x.with_values(shifted).unwrap();
        let step = TransformStep::whole(TransformKind::Trend { f: 1.0, h: 1.0, m: 0.2 });
        let out = apply_pipeline(&x, &[step], &StlConfig::default()).unwrap();
        assert_eq!(out.warnings.len(), 1, "{:?}", out.warnings);
    }
}
