//! Forecasting models: a common interface, a seasonal-naive baseline and a
//! dense feed-forward network trained on randomly sampled windows.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{Dataset, TimeSeries};

/// Anything that maps a fixed-length context to a fixed-length forecast.
pub trait ForecastModel: Send + Sync {
    fn name(&self) -> &str;
    fn context_length(&self) -> usize;
    fn horizon(&self) -> usize;
    fn forecast(&self, context: &[f64]) -> Result<Vec<f64>>;
}

fn check_context(model: &dyn ForecastModel, context: &[f64]) -> Result<()> {
    if context.len() != model.context_length() {
        return Err(Error::Validation(format!(
            "{} expects a context of {} values, got {}",
            model.name(),
            model.context_length(),
            context.len()
        )));
    }
    Ok(())
}

/// Repeat the last observed cycle: `forecast[h] = context[n - sp + (h mod sp)]`.
pub fn seasonal_naive(context: &[f64], sp: usize, horizon: usize) -> Result<Vec<f64>> {
    if sp == 0 || context.len() < sp {
        return Err(Error::Validation(format!(
            "seasonal naive needs at least {sp} context values, got {}",
            context.len()
        )));
    }
    let last_cycle = &context[context.len() - sp..];
    Ok((0..horizon).map(|h| last_cycle[h % sp]).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeasonalNaive {
    pub context_length: usize,
    pub horizon: usize,
    pub seasonal_period: usize,
}

impl ForecastModel for SeasonalNaive {
    fn name(&self) -> &str {
        "seasonal_naive"
    }

    fn context_length(&self) -> usize {
        self.context_length
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn forecast(&self, context: &[f64]) -> Result<Vec<f64>> {
        check_context(self, context)?;
        seasonal_naive(context, self.seasonal_period, self.horizon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scaler {
    /// Per-window standardization by the context mean and standard deviation.
    Standard,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenseNetConfig {
    /// Context length.
    pub input: usize,
    pub hidden: Vec<usize>,
    /// Forecast horizon.
    pub output: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub batches_per_epoch: usize,
    pub early_stopping_patience: usize,
    /// Non-overlapping horizon-length windows reserved per series for validation.
    pub validation_windows: usize,
    pub seed: u64,
    pub scaler: Scaler,
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    /// Global gradient-norm clip; `None` disables clipping.
    pub grad_clip: Option<f64>,
}

impl Default for DenseNetConfig {
    fn default() -> Self {
        Self {
            input: 168,
            hidden: vec![100, 100],
            output: 24,
            batch_size: 512,
            epochs: 100,
            batches_per_epoch: 50,
            early_stopping_patience: 10,
            validation_windows: 7,
            seed: 0,
            scaler: Scaler::Standard,
            optimizer: Optimizer::Adam,
            learning_rate: 1e-3,
            grad_clip: Some(10.0),
        }
    }
}

impl DenseNetConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("input", self.input),
            ("output", self.output),
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
            ("batches_per_epoch", self.batches_per_epoch),
            ("early_stopping_patience", self.early_stopping_patience),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden layer sizes must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0) {
                return Err(Error::Config("grad_clip must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.input)
            .chain(self.hidden.iter().copied())
            .chain(std::iter::once(self.output))
            .collect()
    }
}

/// Fully connected layer computing `x . weights + bias` for row-major batches.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// Shape `(inputs, outputs)`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Multi-layer perceptron with ReLU on every hidden layer and a linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub bias: Vec<Array1<f64>>,
}

impl Gradients {
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.bias) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    fn norm(&self) -> f64 {
        self.weights
            .iter()
            .map(|w| w.iter().map(|v| v * v).sum::<f64>())
            .chain(self.bias.iter().map(|b| b.iter().map(|v| v * v).sum::<f64>()))
            .sum::<f64>()
            .sqrt()
    }

    fn scale(&mut self, factor: f64) {
        self.weights.iter_mut().for_each(|w| *w *= factor);
        self.bias.iter_mut().for_each(|b| *b *= factor);
    }
}

impl Mlp {
    /// He-uniform weights, zero biases.
    pub fn new(sizes: &[usize], rng: &mut impl Rng) -> Self {
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / fan_in as f64).sqrt();
                let weights = Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-limit..limit));
                Layer {
                    weights,
                    bias: Array1::zeros(fan_out),
                }
            })
            .collect();
        Self { layers }
    }

    pub fn input_size(&self) -> usize {
        self.layers.first().map_or(0, |l| l.weights.nrows())
    }

    pub fn output_size(&self) -> usize {
        self.layers.last().map_or(0, |l| l.weights.ncols())
    }

    /// Activations of every layer, input first, output last.
    fn activations(&self, x: ArrayView2<f64>) -> Vec<Array2<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_owned());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = acts[i].dot(&layer.weights);
            z += &layer.bias;
            if i < last {
                z.mapv_inplace(|v| v.max(0.0));
            }
            acts.push(z);
        }
        acts
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Array2<f64> {
        self.activations(x).pop().expect("network has at least one layer")
    }

    /// Forward pass plus parameter gradients of `sum(upstream * output)`,
    /// where `upstream` is computed from the output by `dloss`.
    pub fn backward<F>(&self, x: ArrayView2<f64>, dloss: F) -> (Array2<f64>, Gradients)
    where
        F: FnOnce(&Array2<f64>) -> Array2<f64>,
    {
        let acts = self.activations(x);
        let output = acts.last().unwrap().clone();
        let mut delta = dloss(&output);
        let n = self.layers.len();
        let mut gw = vec![Array2::zeros((0, 0)); n];
        let mut gb = vec![Array1::zeros(0); n];
        for i in (0..n).rev() {
            gw[i] = acts[i].t().dot(&delta);
            gb[i] = delta.sum_axis(Axis(0));
            if i > 0 {
                let mut prev = delta.dot(&self.layers[i].weights.t());
                prev.zip_mut_with(&acts[i], |d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = prev;
            }
        }
        (output, Gradients { weights: gw, bias: gb })
    }

    /// Mean absolute error against `target` and its gradient.
    pub fn mae_loss_and_grad(&self, x: ArrayView2<f64>, target: ArrayView2<f64>) -> (f64, Gradients) {
        let count = target.len() as f64;
        let mut loss = 0.0;
        let (_, grads) = self.backward(x, |out| {
            let mut d = out - &target;
            loss = d.iter().map(|v| v.abs()).sum::<f64>() / count;
            d.mapv_inplace(|v| v.signum() * f64::from(v != 0.0) / count);
            d
        });
        (loss, grads)
    }

    pub fn mae_loss(&self, x: ArrayView2<f64>, target: ArrayView2<f64>) -> f64 {
        let out = self.predict(x);
        (&out - &target).iter().map(|v| v.abs()).sum::<f64>() / target.len() as f64
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Parameters in the same order as [`Gradients::flatten`].
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            out.extend(l.weights.iter());
            out.extend(l.bias.iter());
        }
        out
    }

    pub fn set_parameters(&mut self, params: &[f64]) {
        let mut it = params.iter();
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|w| *w = *it.next().expect("parameter count"));
            l.bias.iter_mut().for_each(|b| *b = *it.next().expect("parameter count"));
        }
    }
}

struct Adam {
    m: Gradients,
    v: Gradients,
    step: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(net: &Mlp) -> Self {
        let zeros = Gradients {
            weights: net.layers.iter().map(|l| Array2::zeros(l.weights.raw_dim())).collect(),
            bias: net.layers.iter().map(|l| Array1::zeros(l.bias.raw_dim())).collect(),
        };
        Self {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    fn update(&mut self, net: &mut Mlp, g: &Gradients, lr: f64) {
        self.step += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.step);
        let c2 = 1.0 - Self::BETA2.powi(self.step);
        for (i, layer) in net.layers.iter_mut().enumerate() {
            adam_step(&mut layer.weights, &mut self.m.weights[i], &mut self.v.weights[i], &g.weights[i], lr, c1, c2);
            adam_step(&mut layer.bias, &mut self.m.bias[i], &mut self.v.bias[i], &g.bias[i], lr, c1, c2);
        }
    }
}

fn adam_step<D: ndarray::Dimension>(
    param: &mut ndarray::Array<f64, D>,
    m: &mut ndarray::Array<f64, D>,
    v: &mut ndarray::Array<f64, D>,
    g: &ndarray::Array<f64, D>,
    lr: f64,
    c1: f64,
    c2: f64,
) {
    ndarray::Zip::from(param).and(m).and(v).and(g).for_each(|p, m, v, &g| {
        *m = Adam::BETA1 * *m + (1.0 - Adam::BETA1) * g;
        *v = Adam::BETA2 * *v + (1.0 - Adam::BETA2) * g * g;
        *p -= lr * (*m / c1) / ((*v / c2).sqrt() + Adam::EPS);
    });
}

fn sgd_step(net: &mut Mlp, g: &Gradients, lr: f64) {
    for (i, layer) in net.layers.iter_mut().enumerate() {
        layer.weights.scaled_add(-lr, &g.weights[i]);
        layer.bias.scaled_add(-lr, &g.bias[i]);
    }
}

/// Location and scale used to standardize one window.
fn window_scale(scaler: Scaler, context: &[f64]) -> (f64, f64) {
    match scaler {
        Scaler::None => (0.0, 1.0),
        Scaler::Standard => {
            let n = context.len() as f64;
            let mean = context.iter().sum::<f64>() / n;
            let var = context.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let std = var.sqrt();
            (mean, if std < 1e-12 { 1.0 } else { std })
        }
    }
}

/// `(series index, offset)` pairs; the window is `values[offset..offset + C + H]`.
#[derive(Debug, Clone, Default)]
struct Windows {
    pairs: Vec<(usize, usize)>,
}

/// Training offsets and validation windows for every series long enough
/// to hold at least one full window.
fn split_windows(series: &[TimeSeries], cfg: &DenseNetConfig) -> (Vec<(usize, usize)>, Windows) {
    let span = cfg.input + cfg.output;
    let mut train_ranges = Vec::new();
    let mut validation = Windows::default();
    for (k, s) in series.iter().enumerate() {
        let n = s.len();
        if n < span {
            continue;
        }
        let spare = n - span;
        let reserved = cfg.validation_windows.min(spare / cfg.output);
        for j in 0..reserved {
            validation.pairs.push((k, n - span - j * cfg.output));
        }
        // last admissible training offset: its target ends where validation targets begin
        train_ranges.push((k, spare - reserved * cfg.output + 1));
    }
    (train_ranges, validation)
}

struct Sampler {
    ranges: Vec<(usize, usize)>,
    cumulative: Vec<usize>,
}

impl Sampler {
    fn new(ranges: Vec<(usize, usize)>) -> Self {
        let mut total = 0;
        let cumulative = ranges
            .iter()
            .map(|(_, count)| {
                total += count;
                total
            })
            .collect();
        Self { ranges, cumulative }
    }

    fn total(&self) -> usize {
        self.cumulative.last().copied().unwrap_or(0)
    }

    fn sample(&self, rng: &mut impl Rng) -> (usize, usize) {
        let u = rng.random_range(0..self.total());
        let slot = self.cumulative.partition_point(|&c| c <= u);
        let before = if slot == 0 { 0 } else { self.cumulative[slot - 1] };
        (self.ranges[slot].0, u - before)
    }
}

fn fill_batch(series: &[TimeSeries], pairs: &[(usize, usize)], cfg: &DenseNetConfig) -> (Array2<f64>, Array2<f64>) {
    let mut x = Array2::zeros((pairs.len(), cfg.input));
    let mut y = Array2::zeros((pairs.len(), cfg.output));
    for (row, &(k, offset)) in pairs.iter().enumerate() {
        let v = series[k].values();
        let context = &v[offset..offset + cfg.input];
        let target = &v[offset + cfg.input..offset + cfg.input + cfg.output];
        let (loc, scale) = window_scale(cfg.scaler, context);
        for (j, c) in context.iter().enumerate() {
            x[[row, j]] = (c - loc) / scale;
        }
        for (j, t) in target.iter().enumerate() {
            y[[row, j]] = (t - loc) / scale;
        }
    }
    (x, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
    pub best_validation_loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_validation_loss: f64,
    pub stopped_early: bool,
    pub training_windows: usize,
    pub validation_windows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNetModel {
    pub config: DenseNetConfig,
    pub net: Mlp,
    pub report: TrainReport,
}

impl ForecastModel for DenseNetModel {
    fn name(&self) -> &str {
        "dense"
    }

    fn context_length(&self) -> usize {
        self.config.input
    }

    fn horizon(&self) -> usize {
        self.config.output
    }

    fn forecast(&self, context: &[f64]) -> Result<Vec<f64>> {
        check_context(self, context)?;
        let (loc, scale) = window_scale(self.config.scaler, context);
        let x = Array2::from_shape_fn((1, context.len()), |(_, j)| (context[j] - loc) / scale);
        let out = self.net.predict(x.view());
        let forecast: Vec<f64> = out.iter().map(|v| v * scale + loc).collect();
        if forecast.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("dense network produced a non-finite forecast".into()));
        }
        Ok(forecast)
    }
}

/// Train on the training split of a dataset whose context and horizon match
/// the network's input and output sizes.
pub fn train_dense(dataset: &Dataset, cfg: &DenseNetConfig) -> Result<DenseNetModel> {
    if cfg.input != dataset.context_length() || cfg.output != dataset.forecast_horizon() {
        return Err(Error::Config(format!(
            "network is {}->{} but the dataset uses context {} and horizon {}",
            cfg.input,
            cfg.output,
            dataset.context_length(),
            dataset.forecast_horizon()
        )));
    }
    train_dense_on(dataset.train(), cfg)
}

/// Train on arbitrary series; those shorter than `input + output` are skipped.
pub fn train_dense_on(series: &[TimeSeries], cfg: &DenseNetConfig) -> Result<DenseNetModel> {
    cfg.validate()?;
    let (train_ranges, validation) = split_windows(series, cfg);
    let sampler = Sampler::new(train_ranges);
    if sampler.total() == 0 {
        return Err(Error::Validation(format!(
            "no series holds a full window of {} observations",
            cfg.input + cfg.output
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = Mlp::new(&cfg.layer_sizes(), &mut rng);
    let mut adam = Adam::new(&net);
    let validation_batch = (!validation.pairs.is_empty()).then(|| fill_batch(series, &validation.pairs, cfg));

    let mut report = TrainReport {
        best_validation_loss: f64::INFINITY,
        training_windows: sampler.total(),
        validation_windows: validation.pairs.len(),
        ..Default::default()
    };
    let mut best_net = net.clone();
    let mut since_best = 0;
    let mut pairs = Vec::with_capacity(cfg.batch_size);

    for epoch in 0..cfg.epochs {
        let mut epoch_loss = 0.0;
        for _ in 0..cfg.batches_per_epoch {
            pairs.clear();
            pairs.extend((0..cfg.batch_size).map(|_| sampler.sample(&mut rng)));
            let (x, y) = fill_batch(series, &pairs, cfg);
            let (loss, mut grads) = net.mae_loss_and_grad(x.view(), y.view());
            epoch_loss += loss;
            if let Some(clip) = cfg.grad_clip {
                let norm = grads.norm();
                if norm > clip {
                    grads.scale(clip / norm);
                }
            }
            match cfg.optimizer {
                Optimizer::Adam => adam.update(&mut net, &grads, cfg.learning_rate),
                Optimizer::Sgd => sgd_step(&mut net, &grads, cfg.learning_rate),
            }
        }
        let train_loss = epoch_loss / cfg.batches_per_epoch as f64;
        let validation_loss = match &validation_batch {
            Some((x, y)) => net.mae_loss(x.view(), y.view()),
            None => train_loss,
        };
        if validation_loss < report.best_validation_loss {
            report.best_validation_loss = validation_loss;
            report.best_epoch = epoch;
            best_net = net.clone();
            since_best = 0;
        } else {
            since_best += 1;
        }
        report.history.push(EpochStats {
            epoch,
            train_loss,
            validation_loss,
            best_validation_loss: report.best_validation_loss,
        });
        log::debug!("epoch {epoch}: train {train_loss:.5} validation {validation_loss:.5}");
        if since_best >= cfg.early_stopping_patience {
            report.stopped_early = epoch + 1 < cfg.epochs;
            break;
        }
    }

    Ok(DenseNetModel {
        config: cfg.clone(),
        net: best_net,
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerCheckpoint {
    /// `[inputs, outputs]`.
    pub shape: [usize; 2],
    /// Row-major, `shape[0]` rows of `shape[1]` values.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Serialized model, tagged by `"kind"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelCheckpoint {
    Dense {
        context_length: usize,
        horizon: usize,
        config: DenseNetConfig,
        layers: Vec<LayerCheckpoint>,
        #[serde(default)]
        report: TrainReport,
    },
    SeasonalNaive(SeasonalNaive),
}

impl From<&DenseNetModel> for ModelCheckpoint {
    fn from(m: &DenseNetModel) -> Self {
        ModelCheckpoint::Dense {
            context_length: m.config.input,
            horizon: m.config.output,
            config: m.config.clone(),
            layers: m
                .net
                .layers
                .iter()
                .map(|l| LayerCheckpoint {
                    shape: [l.weights.nrows(), l.weights.ncols()],
                    weights: l.weights.iter().copied().collect(),
                    bias: l.bias.to_vec(),
                })
                .collect(),
            report: m.report.clone(),
        }
    }
}

impl ModelCheckpoint {
    pub fn into_model(self) -> Result<Box<dyn ForecastModel>> {
        match self {
            ModelCheckpoint::SeasonalNaive(m) => Ok(Box::new(m)),
            dense => Ok(Box::new(dense.into_dense()?)),
        }
    }

    pub fn into_dense(self) -> Result<DenseNetModel> {
        let ModelCheckpoint::Dense {
            context_length,
            horizon,
            config,
            layers,
            report,
        } = self
        else {
            return Err(Error::Validation("checkpoint is not a dense network".into()));
        };
        let mut prev = context_length;
        let mut built = Vec::with_capacity(layers.len());
        for (i, l) in layers.into_iter().enumerate() {
            let [rows, cols] = l.shape;
            if rows != prev || l.bias.len() != cols {
                return Err(Error::Validation(format!("layer {i} has inconsistent shape {rows}x{cols}")));
            }
            let weights = Array2::from_shape_vec((rows, cols), l.weights)
                .map_err(|e| Error::Validation(format!("layer {i}: {e}")))?;
            built.push(Layer {
                weights,
                bias: Array1::from_vec(l.bias),
            });
            prev = cols;
        }
        if built.is_empty() || prev != horizon {
            return Err(Error::Validation("checkpoint layers do not produce the horizon".into()));
        }
        Ok(DenseNetModel {
            config,
            net: Mlp { layers: built },
            report,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string(self)?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn naive_repeats_exact_cycle() {
        let context: Vec<f64> = (0..72).map(|i| ((i % 24) as f64).powi(2)).collect();
        let f = seasonal_naive(&context, 24, 24).unwrap();
        assert_eq!(f, context[48..]);
    }

    #[test]
    fn naive_with_unit_period_repeats_last() {
        assert_eq!(seasonal_naive(&[1.0, 2.0, 7.0], 1, 3).unwrap(), vec![7.0; 3]);
    }

    #[test]
    fn naive_index_arithmetic() {
        let context: Vec<f64> = (1..=48).map(f64::from).collect();
        assert_eq!(seasonal_naive(&context, 24, 2).unwrap(), vec![25.0, 26.0]);
    }

    #[test]
    fn naive_needs_a_full_cycle() {
        assert!(seasonal_naive(&[1.0; 10], 24, 1).is_err());
    }

    #[test]
    fn naive_model_checks_context_length() {
        let m = SeasonalNaive {
            context_length: 48,
            horizon: 24,
            seasonal_period: 24,
        };
        assert!(m.forecast(&[0.0; 47]).is_err());
        assert_eq!(m.forecast(&[1.0; 48]).unwrap().len(), 24);
    }

    #[test]
    fn window_split_reserves_validation_tail() {
        let cfg = DenseNetConfig {
            input: 10,
            output: 5,
            validation_windows: 2,
            ..Default::default()
        };
        let s = TimeSeries::from_values("a", vec![0.0; 40], 2).unwrap();
        let (train, val) = split_windows(std::slice::from_ref(&s), &cfg);
        // targets of validation windows: [35, 40) and [30, 35)
        assert_eq!(val.pairs, vec![(0, 25), (0, 20)]);
        // last training target ends at 30
        assert_eq!(train, vec![(0, 16)]);
    }

    #[test]
    fn sampler_covers_ranges() {
        let s = Sampler::new(vec![(0, 2), (3, 1)]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..200 {
            seen.insert(s.sample(&mut rng));
        }
        assert_eq!(seen.into_iter().collect::<Vec<_>>(), vec![(0, 0), (0, 1), (3, 0)]);
    }

    #[test]
    fn zero_context_gives_finite_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = DenseNetConfig::default();
        let model = DenseNetModel {
            net: Mlp::new(&cfg.layer_sizes(), &mut rng),
            config: cfg,
            report: TrainReport::default(),
        };
        let f = model.forecast(&[0.0; 168]).unwrap();
        assert_eq!(f.len(), 24);
        assert!(f.iter().all(|v| v.is_finite()));
        assert!(model.forecast(&[0.0; 100]).is_err());
    }

    #[test]
    fn invalid_configs() {
        let bad = DenseNetConfig {
            hidden: vec![10, 0],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = DenseNetConfig {
            learning_rate: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn no_windows_is_an_error() {
        let s = TimeSeries::from_values("a", vec![1.0; 30], 2).unwrap();
        assert!(train_dense_on(&[s], &DenseNetConfig::default()).is_err());
    }
}
