//! Interpretable generation of in- and out-of-distribution time series.
//!
//! Series are split into trend, seasonal and remainder components with STL,
//! described by four features (trend strength, seasonal strength, trend
//! linearity, trend slope), placed in a two-dimensional PCA instance space,
//! and transformed by editing their components. The [`forecasting`],
//! [`metrics`] and [`augmentation`] modules use these pieces to probe and
//! improve forecasting-model robustness.

pub mod augmentation;
pub mod decomposition;
pub mod error;
pub mod features;
pub mod forecasting;
pub mod instance_space;
pub mod metrics;
pub mod series;
pub mod stats;
pub mod transforms;

pub use augmentation::{
    jump_augment, run_experiment, select_region, Direction, ExperimentReport, JumpAugmentConfig,
    RegionSelector,
};
pub use decomposition::{loess_smooth, stl_decompose, Decomposition, SeasonalWindow, StlConfig};
pub use error::{Error, Result};
pub use features::{compute_features, feature_report, fit_trend_line, FeatureReport, FeatureVector, TrendFit};
pub use forecasting::{
    seasonal_naive, train_dense, DenseNetConfig, DenseNetModel, ForecastModel, ModelCheckpoint,
    SeasonalNaive,
};
pub use instance_space::{fit_pca, histogram, FitOptions, HistogramAxis, InstanceSpace, ProjectedPoint};
pub use metrics::{mase, summarize, ErrorSummary, HorizonErrors, Metric};
pub use series::{load_jsonl, synthesize, synthesize_dataset, write_jsonl, Dataset, Split, SynthConfig, TimeSeries};
pub use transforms::{apply_pipeline, Interval, TransformKind, TransformStep, TransformedSeries};
