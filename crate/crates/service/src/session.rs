//! Workbench session: one dataset, its instance space and a forecasting model.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tsprobe_core::features::Degenerate;
use tsprobe_core::metrics::evaluate_series;
use tsprobe_core::transforms::parse_pipeline;
use tsprobe_core::{
    apply_pipeline, feature_report, fit_pca, load_jsonl, stl_decompose, Dataset, Decomposition, FeatureReport, FeatureVector, FitOptions, ForecastModel, HorizonErrors, InstanceSpace, Metric, ModelCheckpoint,
    SeasonalNaive, Split, StlConfig, TimeSeries,
};

use crate::error::{ApiError, ApiResult};

/// Files a session is built from; mirrors the `serve` command line.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadRequest {
    pub dataset: PathBuf,
    #[serde(default)]
    pub model: Option<PathBuf>,
    #[serde(default)]
    pub space: Option<PathBuf>,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_context")]
    pub context_length: usize,
    #[serde(default = "default_sp")]
    pub seasonal_period: usize,
}

fn default_horizon() -> usize {
    24
}

fn default_context() -> usize {
    168
}

fn default_sp() -> usize {
    24
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub c0: f64,
    pub c1: f64,
}

impl From<(f64, f64)> for Point {
    fn from((c0, c1): (f64, f64)) -> Self {
        Self { c0, c1 }
    }
}

/// Forecast of the final horizon and its score; `error` explains a missing score.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastPayload {
    pub context_start: usize,
    pub forecast_start: usize,
    pub values: Vec<f64>,
    pub errors: Option<HorizonErrors>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeaturesPayload {
    pub id: String,
    pub split: Split,
    pub features: FeatureVector,
    pub degenerate: Degenerate,
    pub point: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesPayload {
    pub id: String,
    pub split: Split,
    pub start: String,
    pub freq: String,
    pub seasonal_period: usize,
    pub values: Vec<f64>,
    pub components: Decomposition,
    pub features: FeatureVector,
    pub degenerate: Degenerate,
    pub point: Point,
    pub forecast: Option<ForecastPayload>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransformPayload {
    pub id: String,
    pub split: Split,
    pub steps: usize,
    pub original: Vec<f64>,
    pub transformed: Vec<f64>,
    pub components: Decomposition,
    pub features: FeatureVector,
    pub degenerate: Degenerate,
    pub original_point: Point,
    pub point: Point,
    pub forecast: Option<ForecastPayload>,
    pub warnings: Vec<String>,
}

pub struct Session {
    pub dataset: Dataset,
    pub space: InstanceSpace,
    pub model: Arc<dyn ForecastModel>,
    pub stl: StlConfig,
    pub metric: Metric,
    features: HashMap<(Split, String), FeatureReport>,
    selected: Option<(Split, String)>,
    /// Last posted pipeline and the payload it produced.
    cache: Option<(Value, Arc<TransformPayload>)>,
}

impl Session {
    /// Build a session, fitting the instance space when none is given and
    /// falling back to seasonal naive when no model is given.
    pub fn new(dataset: Dataset, model: Option<Arc<dyn ForecastModel>>, space: Option<InstanceSpace>) -> ApiResult<Self> {
        let stl = StlConfig::default();
        let mut features = HashMap::new();
        let mut tagged = Vec::new();
        for (split, s) in dataset.iter_tagged() {
            let report = feature_report(&stl_decompose(s, &stl)?);
            tagged.push((s.id().to_string(), split, report.features));
            features.insert((split, s.id().to_string()), report);
        }
        let space = match space {
            Some(s) => s,
            None => fit_pca(&tagged, &FitOptions::default())?,
        };
        let model = match model {
            Some(m) => m,
            None => Arc::new(SeasonalNaive {
                context_length: dataset.context_length(),
                horizon: dataset.forecast_horizon(),
                seasonal_period: dataset.test().first().map_or(24, |s| s.seasonal_period()),
            }),
        };
        if model.horizon() != dataset.forecast_horizon() {
            return Err(ApiError::bad_request(format!(
                "model horizon {} differs from dataset horizon {}",
                model.horizon(),
                dataset.forecast_horizon()
            )));
        }
        Ok(Self {
            dataset,
            space,
            model,
            stl,
            metric: Metric::Mase,
            features,
            selected: None,
            cache: None,
        })
    }

    pub fn load(req: &LoadRequest) -> ApiResult<Self> {
        let dataset = load_jsonl(&req.dataset, req.horizon, req.context_length, req.seasonal_period)?;
        let model = match &req.model {
            Some(p) => Some(Arc::from(ModelCheckpoint::load(p)?.into_model()?)),
            None => None,
        };
        let space = match &req.space {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| ApiError::not_found(format!("{}: {e}", p.display())))?;
                Some(serde_json::from_str(&text).map_err(|e| ApiError::bad_request(e.to_string()))?)
            }
            None => None,
        };
        Self::new(dataset, model, space)
    }

    /// Resolve an id, preferring `split` when given, else train before test.
    pub fn find(&self, id: &str, split: Option<Split>) -> ApiResult<(Split, &TimeSeries)> {
        let order: &[Split] = match split {
            Some(Split::Train) => &[Split::Train],
            Some(Split::Test) => &[Split::Test],
            None => &[Split::Train, Split::Test],
        };
        order
            .iter()
            .find_map(|&sp| self.dataset.find(sp, id).map(|s| (sp, s)))
            .ok_or_else(|| ApiError::not_found(format!("no series with id '{id}'")))
    }

    fn report(&self, split: Split, id: &str) -> &FeatureReport {
        &self.features[&(split, id.to_string())]
    }

    fn point_of(&self, split: Split, id: &str) -> Point {
        match self.space.point(split, id) {
            Some(p) => Point {
                c0: p.component0,
                c1: p.component1,
            },
            // subsampled away from the stored points: project directly
            None => self.space.project(&self.report(split, id).features).into(),
        }
    }

    pub fn features_payload(&self, id: &str, split: Option<Split>) -> ApiResult<FeaturesPayload> {
        let (split, s) = self.find(id, split)?;
        let report = self.report(split, s.id());
        Ok(FeaturesPayload {
            id: s.id().to_string(),
            split,
            features: report.features,
            degenerate: report.degenerate,
            point: self.point_of(split, s.id()),
        })
    }

    pub fn series_payload(&self, id: &str, split: Option<Split>) -> ApiResult<SeriesPayload> {
        let (split, s) = self.find(id, split)?;
        let report = self.report(split, s.id());
        Ok(SeriesPayload {
            id: s.id().to_string(),
            split,
            start: s.start().to_string(),
            freq: s.freq().to_string(),
            seasonal_period: s.seasonal_period(),
            values: s.values().to_vec(),
            components: stl_decompose(s, &self.stl)?,
            features: report.features,
            degenerate: report.degenerate,
            point: self.point_of(split, s.id()),
            forecast: self.forecast(s),
        })
    }

    fn forecast(&self, s: &TimeSeries) -> Option<ForecastPayload> {
        let (c, h) = (self.model.context_length(), self.model.horizon());
        if s.len() < c + h {
            return None;
        }
        let forecast_start = s.len() - h;
        let (values, errors, error) = match evaluate_series(self.model.as_ref(), s, self.metric) {
            Ok(e) => (e.forecast, Some(e.errors), None),
            Err(err) => {
                // still show the forecast when only the score is undefined
                let ctx = &s.values()[forecast_start - c..forecast_start];
                match self.model.forecast(ctx) {
                    Ok(f) => (f, None, Some(err.to_string())),
                    Err(e) => (Vec::new(), None, Some(e.to_string())),
                }
            }
        };
        Some(ForecastPayload {
            context_start: forecast_start - c,
            forecast_start,
            values,
            errors,
            error,
        })
    }

    pub fn selected(&self) -> Option<(Split, &str)> {
        self.selected.as_ref().map(|(sp, id)| (*sp, id.as_str()))
    }

    pub fn select(&mut self, id: &str, split: Option<Split>) -> ApiResult<SeriesPayload> {
        let payload = self.series_payload(id, split)?;
        self.selected = Some((payload.split, payload.id.clone()));
        self.cache = None;
        Ok(payload)
    }

    pub fn cached_transform(&self, pipeline: &Value) -> Option<Arc<TransformPayload>> {
        self.cache
            .as_ref()
            .filter(|(p, _)| p == pipeline)
            .map(|(_, payload)| Arc::clone(payload))
    }

    /// Apply a pipeline to the selected series without touching the session.
    pub fn compute_transform(&self, pipeline: &Value) -> ApiResult<TransformPayload> {
        let (split, id) = self
            .selected()
            .ok_or_else(|| ApiError::conflict("no series selected"))?;
        let steps = parse_pipeline(pipeline.clone())?;
        let s = self.dataset.find(split, id).expect("selected series exists");
        let out = apply_pipeline(s, &steps, &self.stl)?;
        let transformed = out.to_series()?;
        let report = feature_report(&stl_decompose(&transformed, &self.stl)?);
        Ok(TransformPayload {
            id: id.to_string(),
            split,
            steps: steps.len(),
            original: s.values().to_vec(),
            transformed: out.transformed_values.clone(),
            components: out.components,
            features: report.features,
            degenerate: report.degenerate,
            original_point: self.point_of(split, id),
            point: self.space.project(&report.features).into(),
            forecast: self.forecast(&transformed),
            warnings: out.warnings,
        })
    }

    pub fn store_transform(&mut self, pipeline: Value, payload: Arc<TransformPayload>) {
        let still_selected = self.selected() == Some((payload.split, payload.id.as_str()));
        if still_selected {
            self.cache = Some((pipeline, payload));
        }
    }

    /// Test-split errors of the session model, skipping scale-free series.
    pub fn error_summary(&self, metric: Metric) -> ApiResult<Value> {
        let mut errors = Vec::new();
        let mut skipped = Vec::new();
        for s in self.dataset.test() {
            match evaluate_series(self.model.as_ref(), s, metric) {
                Ok(e) => errors.push(e.errors),
                Err(e) => skipped.push(serde_json::json!({ "id": s.id(), "reason": e.to_string() })),
            }
        }
        let summary = tsprobe_core::summarize(&errors)?;
        Ok(serde_json::json!({
            "metric": metric,
            "model": self.model.name(),
            "aggregation": tsprobe_core::metrics::AGGREGATION_NOTE,
            "summary": summary,
            "skipped": skipped,
        }))
    }
}
