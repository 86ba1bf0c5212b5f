use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tsprobe_core::augmentation::dataset_features;
use tsprobe_core::metrics::{evaluate_series, AGGREGATION_NOTE};
use tsprobe_core::series::write_records;
use tsprobe_core::transforms::parse_pipeline;
use tsprobe_core::{
    apply_pipeline, fit_pca, load_jsonl, run_experiment, stl_decompose, summarize, synthesize, train_dense, write_jsonl,
    Dataset, DenseNetConfig, FeatureVector, FitOptions, ForecastModel, InstanceSpace, JumpAugmentConfig, Metric,
    ModelCheckpoint, RegionSelector, SeasonalNaive, Split, StlConfig, SynthConfig, TransformKind, TransformStep,
};
use tsprobe_service::{AppState, Session};

#[derive(Debug, Parser)]
#[command(name = "tsprobe", version, about = "Decompose, describe, transform and forecast time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset of trend + sine + noise series.
    Synth(SynthArgs),
    /// STL-decompose one series.
    Decompose(DecomposeArgs),
    /// Write F1..F4 of every series as CSV.
    Features(FeaturesArgs),
    /// Fit the two-dimensional instance space from a features CSV.
    Pca(PcaArgs),
    /// Apply a transformation pipeline to every series.
    Transform(TransformArgs),
    /// Train a forecasting model on the training split.
    Train(TrainArgs),
    /// Score a model on the test split.
    Evaluate(EvaluateArgs),
    /// Run the jump-augmentation experiment and print its table.
    Experiment(ExperimentArgs),
    /// Serve the workbench API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Length of the training series.
    #[arg(long = "T", default_value_t = 96)]
    length: usize,
    #[arg(long, default_value_t = 24)]
    sp: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of test series; defaults to `--n`.
    #[arg(long)]
    n_test: Option<usize>,
    /// Length of the test series; defaults to `--T`.
    #[arg(long)]
    test_length: Option<usize>,
    /// How many of the last test series receive a level jump.
    #[arg(long, default_value_t = 0)]
    jump_test: usize,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    context: Option<usize>,
    /// Output path; `.gz` compresses. Standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Dataset in JSON Lines.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 24)]
    sp: usize,
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    id: String,
    #[arg(long)]
    split: Option<Split>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FeaturesArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PcaArgs {
    /// CSV with columns id,split,F1,F2,F3,F4.
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Fit standardization and basis on training rows only.
    #[arg(long)]
    train_only: bool,
    /// Keep at most this many points (seeded subsample).
    #[arg(long)]
    max_points: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct TransformArgs {
    #[command(flatten)]
    input: InputArgs,
    /// JSON list of steps.
    #[arg(long)]
    pipeline: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Only transform this series.
    #[arg(long)]
    id: Option<String>,
    /// Mixed into every noise step's seed, per series.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelKind {
    Dense,
    SeasonalNaive,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Network configuration JSON; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModelKind::Dense)]
    kind: ModelKind,
    #[arg(long, default_value_t = 24)]
    sp: usize,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value = "mase")]
    metric: Metric,
    #[arg(long, default_value_t = 24)]
    sp: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Region selector as inline JSON or a path to a JSON file.
    #[arg(long)]
    selector: String,
    #[arg(long)]
    augment: Option<PathBuf>,
    #[arg(long)]
    net: Option<PathBuf>,
    #[arg(long, default_value_t = 24)]
    sp: usize,
    /// Overrides the augmentation and network seeds.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    space: Option<PathBuf>,
    /// Falls back to TSPROBE_PORT, then 8080.
    #[arg(long)]
    port: Option<u16>,
    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    #[arg(long, default_value_t = 24)]
    sp: usize,
    /// Used only without a model, which otherwise fixes both.
    #[arg(long, default_value_t = 24)]
    horizon: usize,
    #[arg(long, default_value_t = 168)]
    context: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct FeatureRow {
    id: String,
    split: Split,
    #[serde(rename = "F1")]
    f1: f64,
    #[serde(rename = "F2")]
    f2: f64,
    #[serde(rename = "F3")]
    f3: f64,
    #[serde(rename = "F4")]
    f4: f64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", render(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

/// The error chain on one line, skipping causes a parent already printed.
fn render(e: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if msg.ends_with(&text) {
            continue;
        }
        if !msg.is_empty() {
            msg.push_str(": ");
        }
        msg.push_str(&text);
    }
    msg
}

/// 2 when the filesystem failed, 1 for everything else.
fn exit_code(e: &anyhow::Error) -> u8 {
    let io = e.chain().any(|c| {
        c.downcast_ref::<io::Error>().is_some()
            || c.downcast_ref::<tsprobe_core::Error>().is_some_and(|e| e.is_io())
            || c.downcast_ref::<csv::Error>().is_some_and(|e| e.is_io_error())
    });
    if io {
        2
    } else {
        1
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth(a) => synth(a),
        Command::Decompose(a) => decompose(a),
        Command::Features(a) => features(a),
        Command::Pca(a) => pca(a),
        Command::Transform(a) => transform(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Experiment(a) => experiment(a),
        Command::Serve(a) => serve(a),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Write to `out`, or standard output when no path is given.
fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            Ok(stdout.flush()?)
        }
    }
}

fn emit_json(out: Option<&Path>, value: &impl Serialize) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    emit(out, &bytes)
}

/// Load for verbs that never forecast; horizon and context are placeholders.
fn load_plain(input: &InputArgs) -> Result<Dataset> {
    Ok(load_jsonl(&input.input, 1, 1, input.sp)?)
}

fn synth(a: SynthArgs) -> Result<()> {
    let mut cfg = SynthConfig::new(a.n, a.length, a.sp, a.seed);
    cfg.n_test = a.n_test.unwrap_or(a.n);
    cfg.test_length = a.test_length.unwrap_or(a.length);
    cfg.jump_test = a.jump_test;
    if let Some(h) = a.horizon {
        cfg.horizon = h;
    }
    if let Some(c) = a.context {
        cfg.context_length = c;
    }
    let ds = synthesize(&cfg)?;
    match &a.out {
        Some(p) => write_jsonl(&ds, p)?,
        None => {
            let mut buf = Vec::new();
            write_records(&ds, &mut buf)?;
            emit(None, &buf)?;
        }
    }
    Ok(())
}

fn decompose(a: DecomposeArgs) -> Result<()> {
    let ds = load_plain(&a.input)?;
    let splits = match a.split {
        Some(s) => vec![s],
        None => vec![Split::Train, Split::Test],
    };
    let Some((split, s)) = splits.iter().find_map(|&sp| ds.find(sp, &a.id).map(|s| (sp, s))) else {
        bail!("no series with id '{}' in {}", a.id, a.input.input.display());
    };
    let d = stl_decompose(s, &StlConfig::default())?;
    emit_json(
        a.out.as_deref(),
        &json!({
            "id": s.id(),
            "split": split,
            "seasonal_period": d.seasonal_period,
            "trend": d.trend,
            "seasonal": d.seasonal,
            "remainder": d.remainder,
        }),
    )
}

fn features(a: FeaturesArgs) -> Result<()> {
    let ds = load_plain(&a.input)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for (id, split, fv) in dataset_features(&ds, &StlConfig::default())? {
        let [f1, f2, f3, f4] = fv.to_array();
        w.serialize(FeatureRow { id, split, f1, f2, f3, f4 })?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{}", e.error()))?;
    emit(a.out.as_deref(), &bytes)
}

fn pca(a: PcaArgs) -> Result<()> {
    let mut r = csv::Reader::from_path(&a.features).with_context(|| format!("reading {}", a.features.display()))?;
    let mut rows = Vec::new();
    for (line, row) in r.deserialize::<FeatureRow>().enumerate() {
        let row = row.with_context(|| format!("{}: row {}", a.features.display(), line + 1))?;
        rows.push((row.id, row.split, FeatureVector::from_array([row.f1, row.f2, row.f3, row.f4])));
    }
    let mut opts = FitOptions {
        train_only: a.train_only,
        seed: a.seed,
        ..FitOptions::default()
    };
    if a.max_points.is_some() {
        opts.max_points = a.max_points;
    }
    let space = fit_pca(&rows, &opts)?;
    emit_json(Some(&a.out), &space)
}

/// Per-series noise seed so series do not share one noise draw.
fn series_seed(step_seed: u64, run_seed: u64, index: usize) -> u64 {
    step_seed
        .wrapping_add(run_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index as u64)
}

fn transform(a: TransformArgs) -> Result<()> {
    let ds = load_plain(&a.input)?;
    let steps = parse_pipeline(read_json(&a.pipeline)?)?;
    let stl = StlConfig::default();
    let (mut train, mut test) = (Vec::new(), Vec::new());
    let mut index = 0;
    for (split, s) in ds.iter_tagged() {
        if a.id.as_deref().is_some_and(|id| id != s.id()) {
            continue;
        }
        let seeded: Vec<TransformStep> = steps
            .iter()
            .map(|st| match st.kind {
                TransformKind::Noise { p, sigma_rel, seed } => TransformStep::new(
                    TransformKind::Noise {
                        p,
                        sigma_rel,
                        seed: series_seed(seed, a.seed, index),
                    },
                    st.interval,
                ),
                _ => *st,
            })
            .collect();
        index += 1;
        let out = apply_pipeline(s, &seeded, &stl).with_context(|| format!("series '{}'", s.id()))?;
        for w in &out.warnings {
            log::warn!("series '{}': {w}", s.id());
        }
        match split {
            Split::Train => train.push(out.to_series()?),
            Split::Test => test.push(out.to_series()?),
        }
    }
    if let Some(id) = &a.id {
        if index == 0 {
            bail!("no series with id '{id}' in {}", a.input.input.display());
        }
    }
    let generated = Dataset::new(ds.name.clone(), train, test, 1, 1)?;
    write_jsonl(&generated, &a.out)?;
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let mut cfg: DenseNetConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => DenseNetConfig::default(),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let checkpoint = match a.kind {
        ModelKind::SeasonalNaive => ModelCheckpoint::SeasonalNaive(SeasonalNaive {
            context_length: cfg.input,
            horizon: cfg.output,
            seasonal_period: a.sp,
        }),
        ModelKind::Dense => {
            let ds = load_jsonl(&a.dataset, cfg.output, cfg.input, a.sp)?;
            let model = train_dense(&ds, &cfg)?;
            let r = &model.report;
            eprintln!(
                "trained on {} windows: {} epochs, best epoch {} (validation loss {:.4})",
                r.training_windows,
                r.history.len(),
                r.best_epoch,
                r.best_validation_loss
            );
            ModelCheckpoint::from(&model)
        }
    };
    checkpoint.save(&a.out)?;
    Ok(())
}

fn load_model(path: &Path) -> Result<Box<dyn ForecastModel>> {
    Ok(ModelCheckpoint::load(path)?.into_model()?)
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let ds = load_jsonl(&a.dataset, model.horizon(), model.context_length(), a.sp)?;
    let mut scored = Vec::new();
    let mut skipped = Vec::new();
    for s in ds.test() {
        match evaluate_series(model.as_ref(), s, a.metric) {
            Ok(e) => scored.push(e),
            Err(tsprobe_core::Error::ScaleFree) => skipped.push(json!({ "id": s.id(), "reason": "scale-free" })),
            Err(e) => return Err(e).with_context(|| format!("series '{}'", s.id())),
        }
    }
    let errors: Vec<_> = scored.iter().map(|e| e.errors.clone()).collect();
    let summary = summarize(&errors)?;
    eprintln!(
        "{} over {} series: mean {:.4}, median {:.4}, std {:.4}",
        a.metric.name(),
        summary.count,
        summary.mean,
        summary.median,
        summary.std
    );
    emit_json(
        a.out.as_deref(),
        &json!({
            "model": model.name(),
            "metric": a.metric,
            "aggregation": AGGREGATION_NOTE,
            "summary": summary,
            "series": scored,
            "skipped": skipped,
        }),
    )
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let selector: RegionSelector = if a.selector.trim_start().starts_with('{') {
        serde_json::from_str(&a.selector).context("parsing --selector")?
    } else {
        read_json(Path::new(&a.selector))?
    };
    let mut augment: JumpAugmentConfig = match &a.augment {
        Some(p) => read_json(p)?,
        None => JumpAugmentConfig::default(),
    };
    let mut net: DenseNetConfig = match &a.net {
        Some(p) => read_json(p)?,
        None => DenseNetConfig::default(),
    };
    if let Some(seed) = a.seed {
        augment.seed = seed;
        net.seed = seed;
    }
    let ds = load_jsonl(&a.dataset, net.output, net.input, a.sp)?;
    let report = run_experiment(&ds, &selector, &augment, &net)?;
    print!("{}", report.table());
    eprintln!(
        "{} test series in the region; {:.0}% of augmented series land in it",
        report.region_ids.len(),
        100.0 * report.augmented_in_region
    );
    if let Some(out) = &a.out {
        emit_json(Some(out), &report)?;
    }
    Ok(())
}

fn serve(a: ServeArgs) -> Result<()> {
    let model: Option<Arc<dyn ForecastModel>> = match &a.model {
        Some(p) => Some(Arc::from(load_model(p)?)),
        None => None,
    };
    let (horizon, context) = match &model {
        Some(m) => (m.horizon(), m.context_length()),
        None => (a.horizon, a.context),
    };
    let ds = load_jsonl(&a.dataset, horizon, context, a.sp)?;
    let space: Option<InstanceSpace> = match &a.space {
        Some(p) => Some(read_json(p)?),
        None => None,
    };
    let session = Session::new(ds, model, space).map_err(|e| anyhow::anyhow!(e.message))?;
    let port = match a.port {
        Some(p) => p,
        None => tsprobe_service::port_from_env().map_err(anyhow::Error::msg)?,
    };
    let addr = SocketAddr::new(a.host, port);
    eprintln!("serving on http://{addr}");
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(tsprobe_service::serve(AppState::new(Some(session)), addr))
        .with_context(|| format!("serving on {addr}"))
}
