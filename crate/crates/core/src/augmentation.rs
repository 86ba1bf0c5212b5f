//! Level-jump augmentation and the three-regime retraining experiment.
//!
//! The experiment finds test series in an instance-space region that the
//! training data does not cover, generates training data with multiplicative
//! level jumps, retrains, and compares error summaries for models trained on
//! the original, the generated, and the combined training sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decomposition::{stl_decompose, StlConfig};
use crate::error::{Error, Result};
use crate::features::{compute_features, FeatureVector};
use crate::forecasting::{train_dense_on, DenseNetConfig, DenseNetModel, ForecastModel, SeasonalNaive};
use crate::instance_space::{fit_pca, FitOptions, InstanceSpace};
use crate::metrics::{evaluate_model, summarize, ErrorSummary, Metric, AGGREGATION_NOTE};
use crate::series::{Dataset, Split, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JumpAugmentConfig {
    /// Smallest zero-based index the jump may start at.
    pub split_low: usize,
    pub split_high: usize,
    pub factor_low: f64,
    pub factor_high: f64,
    pub seed: u64,
}

impl Default for JumpAugmentConfig {
    fn default() -> Self {
        Self {
            split_low: 72,
            split_high: 144,
            factor_low: 2.0,
            factor_high: 5.0,
            seed: 0,
        }
    }
}

impl JumpAugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.split_low > self.split_high {
            return Err(Error::Config(format!(
                "split_low ({}) exceeds split_high ({})",
                self.split_low, self.split_high
            )));
        }
        if !(self.factor_low > 0.0 && self.factor_low <= self.factor_high && self.factor_high.is_finite()) {
            return Err(Error::Config(format!(
                "factors must satisfy 0 < factor_low <= factor_high, got [{}, {}]",
                self.factor_low, self.factor_high
            )));
        }
        Ok(())
    }

    /// Draw one `(split, factor)` pair.
    pub fn draw(&self, rng: &mut impl Rng) -> (usize, f64) {
        let split = rng.random_range(self.split_low..=self.split_high);
        let factor = self.factor_low + (self.factor_high - self.factor_low) * rng.random::<f64>();
        (split, factor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpDraw {
    pub id: String,
    pub split: usize,
    pub factor: f64,
}

/// Multiply each training series from a random index to its end by a random
/// factor. Test series are untouched; augmented ids get a `-aug` suffix.
pub fn jump_augment(ds: &Dataset, cfg: &JumpAugmentConfig) -> Result<Dataset> {
    jump_augment_with_draws(ds, cfg).map(|(ds, _)| ds)
}

pub fn jump_augment_with_draws(ds: &Dataset, cfg: &JumpAugmentConfig) -> Result<(Dataset, Vec<JumpDraw>)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut train = Vec::with_capacity(ds.train().len());
    let mut draws = Vec::with_capacity(ds.train().len());
    for s in ds.train() {
        if s.len() < cfg.split_high {
            return Err(Error::Validation(format!(
                "series '{}' has {} observations, shorter than split_high {}",
                s.id(),
                s.len(),
                cfg.split_high
            )));
        }
        let (split, factor) = cfg.draw(&mut rng);
        let mut values = s.values().to_vec();
        let start = split.min(values.len());
        values[start..].iter_mut().for_each(|v| *v *= factor);
        let id = format!("{}-aug", s.id());
        train.push(s.with_values(values)?.with_id(id.clone()));
        draws.push(JumpDraw { id, split, factor });
    }
    Ok((ds.with_train(train)?, draws))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Greater,
    Less,
}

/// Half-plane of the instance space along one component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSelector {
    pub axis: usize,
    pub threshold: f64,
    pub direction: Direction,
}

impl RegionSelector {
    pub fn validate(&self) -> Result<()> {
        if self.axis > 1 {
            return Err(Error::Config(format!("selector axis must be 0 or 1, got {}", self.axis)));
        }
        Ok(())
    }

    pub fn contains(&self, point: (f64, f64)) -> bool {
        let v = if self.axis == 0 { point.0 } else { point.1 };
        match self.direction {
            Direction::Greater => v > self.threshold,
            Direction::Less => v < self.threshold,
        }
    }
}

pub fn select_region(space: &InstanceSpace, sel: &RegionSelector, split: Split) -> Vec<String> {
    space
        .points_in(split)
        .filter(|p| sel.contains((p.component0, p.component1)))
        .map(|p| p.id.clone())
        .collect()
}

/// Features of every series in the dataset, train first.
pub fn dataset_features(ds: &Dataset, stl: &StlConfig) -> Result<Vec<(String, Split, FeatureVector)>> {
    ds.iter_tagged()
        .map(|(split, s)| {
            let d = stl_decompose(s, stl)?;
            Ok((s.id().to_string(), split, compute_features(&d)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub train_data: String,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    pub count: usize,
}

impl ReportRow {
    fn new(label: &str, s: &ErrorSummary) -> Self {
        Self {
            train_data: label.to_string(),
            mean: s.mean,
            median: s.median,
            std: s.std,
            count: s.count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub train_data: String,
    pub training_series: usize,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_validation_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub metric: Metric,
    pub aggregation: String,
    pub selector: RegionSelector,
    pub augment: JumpAugmentConfig,
    pub region_ids: Vec<String>,
    /// Rows `Original`, `Transformed`, `Orig+Trans` on the selected test series.
    pub region: Vec<ReportRow>,
    /// Same rows on the full test split.
    pub full_test: Vec<ReportRow>,
    /// Seasonal-naive reference on the selected series and the full test split.
    pub baseline_region: ReportRow,
    pub baseline_full_test: ReportRow,
    /// Share of augmented training series whose projection lands in the region.
    pub augmented_in_region: f64,
    pub models: Vec<ModelSummary>,
}

pub const ROW_LABELS: [&str; 3] = ["Original", "Transformed", "Orig+Trans"];

impl ExperimentReport {
    pub fn region_row(&self, label: &str) -> Option<&ReportRow> {
        self.region.iter().find(|r| r.train_data == label)
    }

    pub fn full_row(&self, label: &str) -> Option<&ReportRow> {
        self.full_test.iter().find(|r| r.train_data == label)
    }

    /// Plain-text table of the region rows.
    pub fn table(&self) -> String {
        let mut out = format!("{:<12} {:>10} {:>10} {:>10}\n", "Train data", "Mean", "Median", "Std");
        for r in &self.region {
            out.push_str(&format!(
                "{:<12} {:>10.3} {:>10.3} {:>10.3}\n",
                r.train_data, r.mean, r.median, r.std
            ));
        }
        out
    }
}

/// Options beyond the selector and configs; defaults suit the electricity-style setup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentOptions {
    pub stl: StlConfig,
    pub fit: FitOptions,
    pub metric: Metric,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            stl: StlConfig::default(),
            fit: FitOptions::default(),
            metric: Metric::Mase,
        }
    }
}

fn model_summary(label: &str, series: usize, m: &DenseNetModel) -> ModelSummary {
    ModelSummary {
        train_data: label.to_string(),
        training_series: series,
        epochs_run: m.report.history.len(),
        best_epoch: m.report.best_epoch,
        best_validation_loss: m.report.best_validation_loss,
    }
}

fn summary_for(model: &dyn ForecastModel, series: &[TimeSeries], metric: Metric) -> Result<ErrorSummary> {
    let errors: Vec<_> = evaluate_model(model, series, metric)?
        .into_iter()
        .map(|e| e.errors)
        .collect();
    summarize(&errors)
}

pub fn run_experiment(
    ds: &Dataset,
    sel: &RegionSelector,
    cfg: &JumpAugmentConfig,
    net: &DenseNetConfig,
) -> Result<ExperimentReport> {
    run_experiment_with(ds, sel, cfg, net, &ExperimentOptions::default())
}

pub fn run_experiment_with(
    ds: &Dataset,
    sel: &RegionSelector,
    cfg: &JumpAugmentConfig,
    net: &DenseNetConfig,
    opts: &ExperimentOptions,
) -> Result<ExperimentReport> {
    sel.validate()?;
    cfg.validate()?;
    net.validate()?;
    if net.input != ds.context_length() || net.output != ds.forecast_horizon() {
        return Err(Error::Config(format!(
            "network is {}->{} but the dataset uses context {} and horizon {}",
            net.input,
            net.output,
            ds.context_length(),
            ds.forecast_horizon()
        )));
    }

    let features = dataset_features(ds, &opts.stl)?;
    let space = fit_pca(&features, &opts.fit)?;
    let region_ids: Vec<String> = features
        .iter()
        .filter(|(_, split, fv)| *split == Split::Test && sel.contains(space.project(fv)))
        .map(|(id, _, _)| id.clone())
        .collect();
    if region_ids.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let region: Vec<TimeSeries> = ds
        .test()
        .iter()
        .filter(|s| region_ids.iter().any(|id| id == s.id()))
        .cloned()
        .collect();

    let augmented = jump_augment(ds, cfg)?;
    let mut in_region = 0usize;
    for s in augmented.train() {
        let fv = compute_features(&stl_decompose(s, &opts.stl)?);
        if sel.contains(space.project(&fv)) {
            in_region += 1;
        }
    }
    let augmented_in_region = in_region as f64 / augmented.train().len().max(1) as f64;

    let original_train = ds.train().to_vec();
    let transformed_train = augmented.train().to_vec();
    let combined_train: Vec<TimeSeries> = original_train.iter().chain(&transformed_train).cloned().collect();
    let sets = [&original_train, &transformed_train, &combined_train];

    let models: Vec<DenseNetModel> = std::thread::scope(|scope| {
        let handles: Vec<_> = sets
            .iter()
            .map(|set| scope.spawn(move || train_dense_on(set, net)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training thread panicked"))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut region_rows = Vec::with_capacity(3);
    let mut full_rows = Vec::with_capacity(3);
    let mut summaries = Vec::with_capacity(3);
    for ((label, model), set) in ROW_LABELS.iter().zip(&models).zip(sets) {
        region_rows.push(ReportRow::new(label, &summary_for(model, &region, opts.metric)?));
        full_rows.push(ReportRow::new(label, &summary_for(model, ds.test(), opts.metric)?));
        summaries.push(model_summary(label, set.len(), model));
    }

    let naive = SeasonalNaive {
        context_length: ds.context_length(),
        horizon: ds.forecast_horizon(),
        seasonal_period: ds.test()[0].seasonal_period(),
    };
    let baseline_region = ReportRow::new("SeasonalNaive", &summary_for(&naive, &region, opts.metric)?);
    let baseline_full_test = ReportRow::new("SeasonalNaive", &summary_for(&naive, ds.test(), opts.metric)?);

    Ok(ExperimentReport {
        metric: opts.metric,
        aggregation: AGGREGATION_NOTE.to_string(),
        selector: *sel,
        augment: *cfg,
        region_ids,
        region: region_rows,
        full_test: full_rows,
        baseline_region,
        baseline_full_test,
        augmented_in_region,
        models: summaries,
    })
}
