//! Time series, datasets, JSON Lines I/O and synthetic dataset generation.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SEASONAL_PERIOD: usize = 24;
pub const DEFAULT_START: &str = "2020-01-01T00:00:00";
pub const DEFAULT_FREQ: &str = "1H";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::Validation(format!("unknown split '{other}'"))),
        }
    }
}

/// A univariate, regularly sampled series.
///
/// The timestamp and frequency are carried as opaque metadata; every
/// computation in this crate works on observation indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    id: String,
    start: String,
    freq: String,
    values: Vec<f64>,
    seasonal_period: usize,
}

impl TimeSeries {
    pub fn new(
        id: impl Into<String>,
        start: impl Into<String>,
        freq: impl Into<String>,
        values: Vec<f64>,
        seasonal_period: usize,
    ) -> Result<Self> {
        let id = id.into();
        if values.is_empty() {
            return Err(Error::Validation(format!("series '{id}' has no observations")));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "series '{id}' has a non-finite value at index {pos}"
            )));
        }
        if seasonal_period < 2 {
            return Err(Error::Validation(format!(
                "series '{id}': seasonal period must be at least 2, got {seasonal_period}"
            )));
        }
        Ok(Self {
            id,
            start: start.into(),
            freq: freq.into(),
            values,
            seasonal_period,
        })
    }

    /// Series with default hourly metadata, mostly for tests and examples.
    pub fn from_values(id: impl Into<String>, values: Vec<f64>, seasonal_period: usize) -> Result<Self> {
        Self::new(id, DEFAULT_START, DEFAULT_FREQ, values, seasonal_period)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn start(&self) -> &str {
        &self.start
    }

    pub fn freq(&self) -> &str {
        &self.freq
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn seasonal_period(&self) -> usize {
        self.seasonal_period
    }

    /// Same metadata, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(
            self.id.clone(),
            self.start.clone(),
            self.freq.clone(),
            values,
            self.seasonal_period,
        )
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    pub name: String,
    train: Vec<TimeSeries>,
    test: Vec<TimeSeries>,
    forecast_horizon: usize,
    context_length: usize,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        train: Vec<TimeSeries>,
        test: Vec<TimeSeries>,
        forecast_horizon: usize,
        context_length: usize,
    ) -> Result<Self> {
        if forecast_horizon == 0 || context_length == 0 {
            return Err(Error::Validation(
                "forecast horizon and context length must be positive".into(),
            ));
        }
        for (split, series) in [(Split::Train, &train), (Split::Test, &test)] {
            let mut seen = HashSet::new();
            for s in series {
                if !seen.insert(s.id()) {
                    return Err(Error::Validation(format!(
                        "duplicate id '{}' in {split} split",
                        s.id()
                    )));
                }
            }
        }
        if let Some(s) = test.iter().find(|s| s.len() <= forecast_horizon) {
            return Err(Error::Validation(format!(
                "test series '{}' has {} observations, must exceed the horizon {forecast_horizon}",
                s.id(),
                s.len()
            )));
        }
        Ok(Self {
            name: name.into(),
            train,
            test,
            forecast_horizon,
            context_length,
        })
    }

    pub fn train(&self) -> &[TimeSeries] {
        &self.train
    }

    pub fn test(&self) -> &[TimeSeries] {
        &self.test
    }

    pub fn split(&self, split: Split) -> &[TimeSeries] {
        match split {
            Split::Train => &self.train,
            Split::Test => &self.test,
        }
    }

    pub fn forecast_horizon(&self) -> usize {
        self.forecast_horizon
    }

    pub fn context_length(&self) -> usize {
        self.context_length
    }

    /// Every series tagged with its split, train first.
    pub fn iter_tagged(&self) -> impl Iterator<Item = (Split, &TimeSeries)> {
        self.train
            .iter()
            .map(|s| (Split::Train, s))
            .chain(self.test.iter().map(|s| (Split::Test, s)))
    }

    pub fn find(&self, split: Split, id: &str) -> Option<&TimeSeries> {
        self.split(split).iter().find(|s| s.id() == id)
    }

    /// Same dataset with a different training split.
    pub fn with_train(&self, train: Vec<TimeSeries>) -> Result<Self> {
        Self::new(
            self.name.clone(),
            train,
            self.test.clone(),
            self.forecast_horizon,
            self.context_length,
        )
    }
}

#[derive(Debug, Deserialize)]
struct JsonlRecord {
    id: String,
    #[serde(default)]
    start: Option<String>,
    #[serde(default)]
    freq: Option<String>,
    target: Vec<Option<f64>>,
    #[serde(default)]
    split: Option<Split>,
}

#[derive(Serialize)]
struct JsonlRecordOut<'a> {
    id: &'a str,
    start: &'a str,
    freq: &'a str,
    target: &'a [f64],
    split: Split,
}

fn open_reader(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let inner: Box<dyn Read> = if is_gzip(path) {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    Ok(Box::new(BufReader::new(inner)))
}

fn is_gzip(path: &Path) -> bool {
    path.extension().is_some_and(|ext| ext == "gz")
}

/// Read a dataset from JSON Lines, one series per line.
///
/// Each line is `{"id", "start", "freq", "target"}` with an optional
/// `"split"` of `"train"` (the default) or `"test"`. Files ending in `.gz`
/// are decompressed on the fly. Line order is preserved within each split.
pub fn load_jsonl(
    path: impl AsRef<Path>,
    horizon: usize,
    context: usize,
    seasonal_period: usize,
) -> Result<Dataset> {
    let path = path.as_ref();
    let reader = open_reader(path)?;
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: JsonlRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let mut values = Vec::with_capacity(record.target.len());
        for (i, v) in record.target.iter().enumerate() {
            match v {
                Some(x) if x.is_finite() => values.push(*x),
                _ => {
                    return Err(Error::Validation(format!(
                        "series '{}': target[{i}] is missing or non-finite",
                        record.id
                    )))
                }
            }
        }
        let series = TimeSeries::new(
            record.id,
            record.start.unwrap_or_else(|| DEFAULT_START.to_string()),
            record.freq.unwrap_or_else(|| DEFAULT_FREQ.to_string()),
            values,
            seasonal_period,
        )?;
        match record.split.unwrap_or(Split::Train) {
            Split::Train => train.push(series),
            Split::Test => test.push(series),
        }
    }
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    Dataset::new(name, train, test, horizon, context)
}

/// Write a dataset as JSON Lines (gzip when the path ends in `.gz`).
pub fn write_jsonl(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    if is_gzip(path) {
        let mut enc = GzEncoder::new(BufWriter::new(file), Compression::default());
        write_records(dataset, &mut enc).map_err(|e| Error::io(path, e))?;
        enc.finish().map_err(|e| Error::io(path, e))?;
    } else {
        let mut w = BufWriter::new(file);
        write_records(dataset, &mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Serialize every series as one JSON line into `out`.
pub fn write_records<W: Write>(dataset: &Dataset, out: &mut W) -> std::io::Result<()> {
    for (split, s) in dataset.iter_tagged() {
        let rec = JsonlRecordOut {
            id: s.id(),
            start: s.start(),
            freq: s.freq(),
            target: s.values(),
            split,
        };
        serde_json::to_writer(&mut *out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Parameters of the synthetic generator
/// `x_i = a + b*i + c*sin(2*pi*i/sp) + e_i`, `i = 1..T`, `e_i ~ N(0, sigma)`.
///
/// Per-series `(a, b, c, sigma)` are drawn uniformly from the given ranges;
/// a degenerate range `(v, v)` pins the parameter. Optionally the last
/// `jump_test` test series receive a multiplicative level jump from a random
/// index to the end, which is how the robustness experiments plant an
/// out-of-distribution region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_series: usize,
    pub length: usize,
    pub seasonal_period: usize,
    pub seed: u64,
    pub horizon: usize,
    pub context_length: usize,
    pub n_test: usize,
    pub test_length: usize,
    pub level: (f64, f64),
    pub slope: (f64, f64),
    pub amplitude: (f64, f64),
    pub noise: (f64, f64),
    pub jump_test: usize,
    /// Zero-based index range the jump may start at.
    pub jump_split: (usize, usize),
    pub jump_factor: (f64, f64),
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self::new(10, 96, DEFAULT_SEASONAL_PERIOD, 0)
    }
}

impl SynthConfig {
    pub fn new(n_series: usize, length: usize, seasonal_period: usize, seed: u64) -> Self {
        let horizon = seasonal_period;
        let context_length = (7 * seasonal_period).min(length.saturating_sub(horizon)).max(1);
        Self {
            n_series,
            length,
            seasonal_period,
            seed,
            horizon,
            context_length,
            n_test: n_series,
            test_length: length,
            level: (20.0, 60.0),
            slope: (-0.02, 0.02),
            amplitude: (2.0, 10.0),
            noise: (0.5, 2.0),
            jump_test: 0,
            jump_split: (72, 144),
            jump_factor: (2.0, 5.0),
        }
    }
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn generate(rng: &mut ChaCha8Rng, cfg: &SynthConfig, length: usize) -> Result<Vec<f64>> {
    let a = draw(rng, cfg.level);
    let b = draw(rng, cfg.slope);
    let c = draw(rng, cfg.amplitude);
    let sigma = draw(rng, cfg.noise).max(0.0);
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()))?;
    let sp = cfg.seasonal_period as f64;
    Ok((1..=length)
        .map(|i| {
            let i = i as f64;
            a + b * i + c * (2.0 * std::f64::consts::PI * i / sp).sin() + noise.sample(rng)
        })
        .collect())
}

/// Generate a synthetic dataset with default parameter ranges.
pub fn synthesize_dataset(n_series: usize, length: usize, seasonal_period: usize, seed: u64) -> Result<Dataset> {
    synthesize(&SynthConfig::new(n_series, length, seasonal_period, seed))
}

/// Generate a synthetic dataset; a pure function of `cfg`.
pub fn synthesize(cfg: &SynthConfig) -> Result<Dataset> {
    let sp = cfg.seasonal_period;
    if sp < 2 {
        return Err(Error::Validation(format!("seasonal period must be at least 2, got {sp}")));
    }
    for len in [cfg.length, cfg.test_length] {
        if len < 3 * sp {
            return Err(Error::Validation(format!(
                "series length {len} is shorter than three seasonal periods ({})",
                3 * sp
            )));
        }
    }
    if cfg.jump_test > cfg.n_test {
        return Err(Error::Validation(format!(
            "jump_test ({}) exceeds n_test ({})",
            cfg.jump_test, cfg.n_test
        )));
    }
    if cfg.jump_test > 0 && cfg.jump_split.1 >= cfg.test_length {
        return Err(Error::Validation(format!(
            "jump split range ends at {} but test series have {} observations",
            cfg.jump_split.1, cfg.test_length
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut train = Vec::with_capacity(cfg.n_series);
    for k in 0..cfg.n_series {
        let values = generate(&mut rng, cfg, cfg.length)?;
        train.push(TimeSeries::from_values(format!("s{k:04}"), values, sp)?);
    }
    let mut test = Vec::with_capacity(cfg.n_test);
    let first_jump = cfg.n_test - cfg.jump_test;
    for k in 0..cfg.n_test {
        let mut values = generate(&mut rng, cfg, cfg.test_length)?;
        let id = if k >= first_jump {
            let split = rng.random_range(cfg.jump_split.0..=cfg.jump_split.1);
            let factor = draw(&mut rng, cfg.jump_factor);
            values[split..].iter_mut().for_each(|v| *v *= factor);
            format!("jump{k:04}")
        } else {
            format!("t{k:04}")
        };
        test.push(TimeSeries::from_values(id, values, sp)?);
    }
    Dataset::new(
        format!("synthetic-{}", cfg.seed),
        train,
        test,
        cfg.horizon,
        cfg.context_length,
    )
}
