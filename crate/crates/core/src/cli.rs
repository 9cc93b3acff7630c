//! The `stofnet` command line tool.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::baselines::{baseline_by_tag, BASELINE_TAGS};
use crate::dataset::{generate_synthetic, load_dataset, save_dataset, split_train_val, Dataset, LabeledFrame, SyntheticConfig};
use crate::detection::{
    detect_multi, detect_single, network_scores, select_threshold_gmeans, threshold_candidates, Detector,
    InferenceMode, NetworkDetector, DEFAULT_NMS_WINDOW, THRESHOLD_GRID,
};
use crate::evaluation::{benchmark, FrameDetection};
use crate::model::{load_model, save_model, ModelConfig, Network};
use crate::training::{save_history, train_with_progress, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "stofnet", version, about = "Sub-sample echo localization with a super-resolution network")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic pulse-echo dataset.
    Generate(GenerateArgs),
    /// Train a network on a dataset.
    Train(TrainArgs),
    /// Run a model or baseline over a dataset and write detections.
    Infer(InferArgs),
    /// Evaluate models and baselines on a labeled dataset.
    Bench(BenchArgs),
    /// Write CSV series of one frame for external plotting.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub frames: usize,
    /// Samples per frame; must be divisible by 4.
    #[arg(long, default_value_t = 1024)]
    pub length: usize,
    #[arg(long, default_value_t = 1)]
    pub echoes_min: usize,
    #[arg(long, default_value_t = 3)]
    pub echoes_max: usize,
    /// Signal-to-noise ratio in dB ("inf" for no noise).
    #[arg(long, default_value_t = 30.0)]
    pub snr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write into a non-empty output directory.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Output model directory.
    #[arg(long, default_value = "model")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 80)]
    pub epochs: usize,
    #[arg(long, default_value_t = 4)]
    pub batch: usize,
    /// Start learning rate, annealed to 0 over the epochs.
    #[arg(long, default_value_t = 5e-4)]
    pub lr: f64,
    /// Weight of the L1 term of the loss.
    #[arg(long, default_value_t = 1e-2)]
    pub lambda1: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Feature channels.
    #[arg(long, default_value_t = 64)]
    pub features: usize,
    /// Upsampling factor; defaults to the dataset's.
    #[arg(long)]
    pub upsample: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// One detection per frame at the score maximum.
    Single,
    /// Threshold and non-maximum suppression.
    Multi,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    /// Model directory, or a baseline tag (gradient, threshold, xcorr).
    #[arg(long)]
    pub model: String,
    /// Dataset directory.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Single)]
    pub mode: Mode,
    /// Score threshold for multi mode: a number, or "auto" for G-means
    /// selection on --val-data. Defaults to the threshold stored with the
    /// model.
    #[arg(long)]
    pub threshold: Option<String>,
    /// Labeled dataset used to select the threshold.
    #[arg(long)]
    pub val_data: Option<PathBuf>,
    /// Suppression radius in upsampled samples.
    #[arg(long, default_value_t = DEFAULT_NMS_WINDOW)]
    pub window: usize,
    /// Output JSON file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated model directories and baseline tags.
    #[arg(long, value_delimiter = ',', required = true)]
    pub models: Vec<String>,
    /// Labeled dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Matching tolerance in samples.
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Detection mode of network models.
    #[arg(long, value_enum, default_value_t = Mode::Multi)]
    pub mode: Mode,
    /// Report file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write all detections as JSON.
    #[arg(long)]
    pub detections: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Detections JSON written by `infer`.
    #[arg(long)]
    pub detections: Option<PathBuf>,
    /// Model directory whose scores are emitted.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub frame: usize,
    /// Output directory for the CSV files.
    #[arg(long)]
    pub out: PathBuf,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

/// Parses `args` (program name first) and runs the command; returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Train(a) => train(a),
        Command::Infer(a) => infer(a),
        Command::Bench(a) => bench(a),
        Command::Plot(a) => plot(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

const CONTRACTION: usize = 4;

fn generate(a: GenerateArgs) -> CliResult {
    if a.length == 0 || a.length % CONTRACTION != 0 {
        return Err(CliError::Usage(format!(
            "--length {} is not a positive multiple of {CONTRACTION}",
            a.length
        )));
    }
    if a.frames == 0 {
        return Err(CliError::Usage("--frames must be >= 1".into()));
    }
    if a.out.is_dir() && fs::read_dir(&a.out)?.next().is_some() && !a.force {
        return Err(CliError::Runtime(format!(
            "{} exists and is not empty (use --force to overwrite)",
            a.out.display()
        )));
    }
    let config = SyntheticConfig {
        n_frames: a.frames,
        frame_length: a.length,
        echoes_min: a.echoes_min,
        echoes_max: a.echoes_max,
        snr_db: a.snr,
        seed: a.seed,
        length_multiple: CONTRACTION,
        ..Default::default()
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let frames = generate_synthetic(&config)?;
    let manifest = save_dataset(&a.out, &frames, ModelConfig::default().upsample, Some(a.seed), Some(&config))?;
    let echoes: usize = frames.iter().map(|f| f.truth().len()).sum();
    println!(
        "wrote {}: {} frames of {} samples, {} echoes, seed {}",
        a.out.display(),
        manifest.n_frames,
        manifest.frame_length,
        echoes,
        a.seed
    );
    Ok(())
}

fn train(a: TrainArgs) -> CliResult {
    let ds = load_dataset(&a.data)?;
    let config = ModelConfig {
        features: a.features,
        upsample: a.upsample.unwrap_or(ds.manifest.upsample.max(1)),
        in_channels: ds.manifest.channels,
        ..Default::default()
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let train_config = TrainConfig {
        batch_size: a.batch,
        lr_start: a.lr,
        max_epochs: a.epochs,
        lambda1: a.lambda1,
        seed: a.seed,
        ..Default::default()
    };
    train_config.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let (train_set, val_set) = split_train_val(&ds.frames);
    println!(
        "training on {} frames, validating on {} ({} parameters)",
        train_set.len(),
        val_set.len(),
        crate::model::parameter_count(&config)
    );
    let net = Network::new(config, crate::seed::derive(a.seed, 0))?;
    let outcome = train_with_progress(net, train_set, val_set, &train_config, |r| {
        let val = r.val_loss.map_or("-".to_string(), |v| format!("{v:.4}"));
        println!("epoch {:>3}  lr {:.3e}  train {:.4}  val {val}", r.epoch, r.lr, r.train_loss);
    })?;

    let threshold = select_threshold(&outcome.network, val_set, DEFAULT_NMS_WINDOW);
    fs::create_dir_all(&a.out)?;
    save_model(&a.out, &outcome.network, threshold)?;
    save_history(&a.out.join("history.json"), &outcome.history)?;
    match threshold {
        Some(t) => println!("detection threshold {t:.6}"),
        None => println!("no detection threshold stored (validation split has no labels)"),
    }
    println!("model written to {}", a.out.display());
    Ok(())
}

/// G-means threshold on labeled validation frames, `None` when they hold
/// no labels.
fn select_threshold(net: &Network<f32>, val: &[LabeledFrame], window: usize) -> Option<f64> {
    let scores: Vec<Vec<f64>> = val
        .iter()
        .map(|lf| network_scores(net, lf.frame()))
        .collect::<crate::Result<_>>()
        .ok()?;
    let truth: Vec<Vec<f64>> = val.iter().map(|lf| lf.truth().to_vec()).collect();
    let grid = threshold_candidates(&scores, &truth, window, THRESHOLD_GRID);
    let r = net.config().upsample;
    match select_threshold_gmeans(&scores, &truth, r, 1.0, window, &grid) {
        Ok(s) => Some(s.threshold),
        Err(e) => {
            log::warn!("threshold selection skipped: {e}");
            None
        }
    }
}

/// A `--model` value: a baseline tag or a model directory.
enum ModelRef {
    Baseline(Box<dyn Detector>),
    Network {
        name: String,
        net: Network<f32>,
        threshold: Option<f64>,
    },
}

fn resolve_model(entry: &str, data: &Dataset) -> CliResult<ModelRef> {
    if let Some(b) = baseline_by_tag(entry, data.manifest.generator.as_ref()) {
        return Ok(ModelRef::Baseline(b));
    }
    let path = Path::new(entry);
    if !path.join("model.json").is_file() {
        return Err(CliError::Usage(format!(
            "unknown model {entry:?}: not a model directory; known baseline tags: {}",
            BASELINE_TAGS.join(", ")
        )));
    }
    let (net, file) = load_model(path)?;
    let name = path
        .file_name()
        .map_or_else(|| "stofnet".to_string(), |n| n.to_string_lossy().into_owned());
    if net.config().in_channels != data.manifest.channels {
        log::warn!(
            "{name}: model expects {} channels, dataset has {}",
            net.config().in_channels,
            data.manifest.channels
        );
    }
    Ok(ModelRef::Network {
        name,
        net,
        threshold: file.detection_threshold,
    })
}

fn infer(a: InferArgs) -> CliResult {
    let data = load_dataset(&a.input)?;
    let detections: Vec<FrameDetection> = match resolve_model(&a.model, &data)? {
        ModelRef::Baseline(b) => run_detector(b.as_ref(), &data.frames)?,
        ModelRef::Network { net, threshold, .. } => {
            let r = net.config().upsample;
            let threshold = match a.mode {
                Mode::Single => None,
                Mode::Multi => Some(resolve_threshold(&a, &net, threshold)?),
            };
            let mut out = Vec::new();
            for (i, lf) in data.frames.iter().enumerate() {
                let scores = network_scores(&net, lf.frame())?;
                let found = match threshold {
                    None => vec![detect_single(&scores, r)?.detection],
                    Some(t) => detect_multi(&scores, r, t, a.window),
                };
                out.extend(found.into_iter().map(|d| FrameDetection {
                    frame_index: i,
                    position: d.position,
                    confidence: d.confidence,
                }));
            }
            out
        }
    };
    let json = serde_json::to_string_pretty(&detections)?;
    write_output(a.out.as_deref(), &json)?;
    Ok(())
}

fn resolve_threshold(a: &InferArgs, net: &Network<f32>, stored: Option<f64>) -> CliResult<f64> {
    let from_val = |why: &str| -> CliResult<f64> {
        let path = a.val_data.as_ref().ok_or_else(|| {
            CliError::Usage(format!("multi mode needs a threshold: {why} and no --val-data was given"))
        })?;
        let val = load_dataset(path)?;
        select_threshold(net, &val.frames, a.window)
            .ok_or_else(|| CliError::Runtime("validation data holds no labels".into()))
    };
    match a.threshold.as_deref() {
        Some("auto") => from_val("--threshold auto selects on validation data"),
        Some(v) => v
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("--threshold {v:?} is neither a number nor \"auto\""))),
        None => match stored {
            Some(t) => Ok(t),
            None => from_val("the model stores no threshold"),
        },
    }
}

fn run_detector(d: &dyn Detector, frames: &[LabeledFrame]) -> CliResult<Vec<FrameDetection>> {
    let mut out = Vec::new();
    for (i, lf) in frames.iter().enumerate() {
        out.extend(d.detect(lf.frame())?.into_iter().map(|d| FrameDetection {
            frame_index: i,
            position: d.position,
            confidence: d.confidence,
        }));
    }
    Ok(out)
}

/// Detections of one model, as written by `bench --detections`.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelDetections {
    pub model: String,
    pub detections: Vec<FrameDetection>,
}

fn bench(a: BenchArgs) -> CliResult {
    let data = load_dataset(&a.data)?;
    if !(a.tau > 0.0) {
        return Err(CliError::Usage("--tau must be positive".into()));
    }
    let mut detectors: Vec<Box<dyn Detector>> = Vec::new();
    for entry in &a.models {
        detectors.push(match resolve_model(entry, &data)? {
            ModelRef::Baseline(b) => b,
            ModelRef::Network { name, net, threshold } => {
                let mode = match (a.mode, threshold) {
                    (Mode::Single, _) => InferenceMode::Single,
                    (Mode::Multi, Some(t)) => InferenceMode::Multi {
                        threshold: t,
                        window: DEFAULT_NMS_WINDOW,
                    },
                    (Mode::Multi, None) => {
                        return Err(CliError::Usage(format!(
                            "{entry} stores no detection threshold; use --mode single"
                        )))
                    }
                };
                Box::new(NetworkDetector::new(name, net, mode))
            }
        });
    }
    let refs: Vec<&dyn Detector> = detectors.iter().map(|d| d.as_ref()).collect();
    let outcome = benchmark(&refs, &data.frames, a.tau);
    let text = match a.format {
        Format::Json => outcome.report.to_json()?,
        Format::Csv => outcome.report.to_csv(),
    };
    write_output(a.out.as_deref(), &text)?;
    if let Some(path) = &a.detections {
        let all: Vec<ModelDetections> = outcome
            .detections
            .into_iter()
            .map(|(model, detections)| ModelDetections { model, detections })
            .collect();
        fs::write(path, serde_json::to_string_pretty(&all)?)?;
    }
    Ok(())
}

fn plot(a: PlotArgs) -> CliResult {
    let data = load_dataset(&a.data)?;
    let n = data.frames.len();
    let lf = data.frames.get(a.frame).ok_or_else(|| {
        CliError::Usage(format!("--frame {} out of range (dataset has {n} frames)", a.frame))
    })?;
    fs::create_dir_all(&a.out)?;

    let frame = lf.frame();
    let mut signal = String::from("sample");
    for c in 0..frame.channels() {
        signal.push_str(&format!(",ch{c}"));
    }
    signal.push('\n');
    for i in 0..frame.len() {
        signal.push_str(&i.to_string());
        for c in 0..frame.channels() {
            signal.push_str(&format!(",{}", frame.samples()[[c, i]]));
        }
        signal.push('\n');
    }
    fs::write(a.out.join("signal.csv"), signal)?;

    let mut truth = String::from("position\n");
    for p in lf.truth() {
        truth.push_str(&format!("{p}\n"));
    }
    fs::write(a.out.join("truth.csv"), truth)?;

    if let Some(path) = &a.model {
        let (net, _) = load_model(path)?;
        let r = net.config().upsample as f64;
        let scores = network_scores(&net, frame)?;
        let mut out = String::from("index,position,score\n");
        for (i, s) in scores.iter().enumerate() {
            out.push_str(&format!("{i},{},{s}\n", i as f64 / r));
        }
        fs::write(a.out.join("scores.csv"), out)?;
    }

    if let Some(path) = &a.detections {
        let dets: Vec<FrameDetection> = serde_json::from_str(&fs::read_to_string(path)?)?;
        let mut out = String::from("position,confidence\n");
        for d in dets.iter().filter(|d| d.frame_index == a.frame) {
            out.push_str(&format!("{},{}\n", d.position, d.confidence));
        }
        fs::write(a.out.join("detections.csv"), out)?;
    }
    println!("wrote plot series for frame {} to {}", a.frame, a.out.display());
    Ok(())
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                out.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}
