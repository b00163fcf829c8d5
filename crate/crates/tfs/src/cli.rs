//! The `tfs` command line: gen / train / classify / eval / audit.
//!
//! Exit codes: 0 success, 1 usage errors (bad flags or argument values),
//! 2 data errors (unreadable or malformed input files), 3 runtime failures
//! (training divergence, write failures). Data goes to `--out` or stdout;
//! diagnostics go to stderr. Every seeded command is deterministic: same
//! flags, same input, same bytes out.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dispatch::{parse_predictions, recognize, PredictionRecord};
use crate::eval::{audit_summary, confusion, read_audit_csv, ClassRate};
use crate::landmark::{canonicalize, AxisConvention, Frame};
use crate::mlp::{train, Encoding, MlpModel, OptimizerKind, TrainConfig, TrainError};
use crate::rules::KeypointMap;
use crate::stream::{parse_frames, read_labels, write_frames, write_labels};
use crate::synth::{generate_class_dataset, PoseParams, SynthError};

#[derive(Parser)]
#[command(
    name = "tfs",
    version,
    about = "Thai Finger Spelling recognition from 21-point hand-landmark streams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labelled dataset (frames.jsonl + labels.csv).
    Gen(GenArgs),
    /// Train the single-hand classifier on labelled frames.
    Train(TrainArgs),
    /// Classify frames, one prediction line per input frame.
    Classify(ClassifyArgs),
    /// Score a prediction stream against reference labels.
    Eval(EvalArgs),
    /// Summarize a detector audit CSV by group.
    Audit(AuditArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EncodingArg {
    Absolute,
    Relative,
}

impl From<EncodingArg> for Encoding {
    fn from(e: EncodingArg) -> Self {
        match e {
            EncodingArg::Absolute => Encoding::Absolute,
            EncodingArg::Relative => Encoding::Relative,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum YAxisArg {
    Up,
    Down,
}

impl From<YAxisArg> for AxisConvention {
    fn from(y: YAxisArg) -> Self {
        match y {
            YAxisArg::Up => AxisConvention::y_up(),
            YAxisArg::Down => AxisConvention::y_down(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OptimizerArg {
    Adam,
    Sgd,
}

impl From<OptimizerArg> for OptimizerKind {
    fn from(o: OptimizerArg) -> Self {
        match o {
            OptimizerArg::Adam => OptimizerKind::Adam,
            OptimizerArg::Sgd => OptimizerKind::Sgd,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    /// Number of classes (2..=30).
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..=30))]
    classes: u64,
    /// Samples per class.
    #[arg(long = "per-class", value_parser = clap::value_parser!(u64).range(1..))]
    per_class: u64,
    /// Landmark jitter standard deviation.
    #[arg(long, default_value_t = 0.005)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; receives frames.jsonl and labels.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Frame stream (JSONL); every frame must hold exactly one hand.
    #[arg(long = "in")]
    input: PathBuf,
    /// frame_id,label CSV covering every input frame.
    #[arg(long)]
    labels: PathBuf,
    /// Where to write the trained model (JSON).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = EncodingArg::Relative)]
    encoding: EncodingArg,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = OptimizerArg::Adam)]
    optimizer: OptimizerArg,
    /// Direction of increasing y in the input coordinates.
    #[arg(long = "y-axis", value_enum, default_value_t = YAxisArg::Up)]
    y_axis: YAxisArg,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Frame stream (JSONL) to classify.
    #[arg(long = "in")]
    input: PathBuf,
    /// Trained model file.
    #[arg(long)]
    model: PathBuf,
    /// Keypoint map JSON for the two-hand route; built-in map when absent.
    #[arg(long)]
    map: Option<PathBuf>,
    /// Predictions file (JSONL); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Direction of increasing y in the input coordinates.
    #[arg(long = "y-axis", value_enum, default_value_t = YAxisArg::Up)]
    y_axis: YAxisArg,
}

#[derive(Args)]
struct EvalArgs {
    /// Prediction stream (JSONL) from `tfs classify`.
    #[arg(long = "in")]
    input: PathBuf,
    /// frame_id,label CSV with the reference label for every prediction.
    #[arg(long)]
    labels: PathBuf,
    /// Report directory; receives confusion.csv, per_class.csv and
    /// summary.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    /// Audit CSV (group,hand_detect_ok,keypoints_ok,handedness_ok).
    #[arg(long = "in")]
    input: PathBuf,
    /// Summary JSON file.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure with its process exit code.
enum CliError {
    /// Exit 1: argument values outside the supported domain.
    Usage(String),
    /// Exit 2: missing or malformed input data.
    Data(String),
    /// Exit 3: failures while doing the work.
    Runtime(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Runtime(m) => m,
        }
    }
}

/// Runs the CLI against the process arguments. Returns the exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

/// Runs the CLI against explicit arguments (first element is the program
/// name). Returns the exit code without touching the process.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Train(args) => cmd_train(args),
        Command::Classify(args) => cmd_classify(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Audit(args) => cmd_audit(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn open_input(path: &Path) -> Result<BufReader<fs::File>, CliError> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))
}

fn create_output(path: &Path) -> Result<BufWriter<fs::File>, CliError> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", path.display())))
}

fn write_failed(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("writing {} failed: {e}", path.display()))
}

fn read_frames_file(path: &Path, y_axis: YAxisArg) -> Result<Vec<Frame>, CliError> {
    let frames = parse_frames(open_input(path)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let convention = AxisConvention::from(y_axis);
    Ok(frames.iter().map(|f| canonicalize(f, convention)).collect())
}

/// Reads a label CSV into a frame_id -> label map, rejecting duplicates.
fn read_label_map(path: &Path) -> Result<HashMap<String, String>, CliError> {
    let labels = read_labels(open_input(path)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut map = HashMap::with_capacity(labels.len());
    for (frame_id, label) in labels {
        if map.insert(frame_id.clone(), label).is_some() {
            return Err(CliError::Data(format!(
                "{}: duplicate label for frame {frame_id:?}",
                path.display()
            )));
        }
    }
    Ok(map)
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let params = PoseParams {
        noise_sigma: args.noise,
        seed: args.seed,
        ..PoseParams::default()
    };
    let data = generate_class_dataset(args.classes as usize, args.per_class as usize, &params)
        .map_err(|SynthError::InvalidParams(msg)| CliError::Usage(msg))?;
    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", args.out.display())))?;

    let mut frames = Vec::with_capacity(data.len());
    let mut labels = Vec::with_capacity(data.len());
    for (i, (hand, label)) in data.into_iter().enumerate() {
        let frame_id = format!("{label}-{i:05}");
        labels.push((frame_id.clone(), label));
        frames.push(Frame::new(frame_id, vec![hand]).expect("one hand fits in a frame"));
    }

    let frames_path = args.out.join("frames.jsonl");
    let mut w = create_output(&frames_path)?;
    write_frames(&mut w, &frames).map_err(|e| write_failed(&frames_path, e))?;
    w.flush().map_err(|e| write_failed(&frames_path, e))?;

    let labels_path = args.out.join("labels.csv");
    let w = create_output(&labels_path)?;
    write_labels(w, &labels).map_err(|e| write_failed(&labels_path, e))?;

    println!(
        "wrote {} frames ({} classes x {}) to {}",
        frames.len(),
        args.classes,
        args.per_class,
        args.out.display()
    );
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let frames = read_frames_file(&args.input, args.y_axis)?;
    let label_map = read_label_map(&args.labels)?;

    let mut data = Vec::with_capacity(frames.len());
    for frame in &frames {
        if frame.hand_count() != 1 {
            return Err(CliError::Data(format!(
                "frame {:?} has {} hands; training expects exactly one",
                frame.frame_id(),
                frame.hand_count()
            )));
        }
        let label = label_map.get(frame.frame_id()).ok_or_else(|| {
            CliError::Data(format!("no label for frame {:?}", frame.frame_id()))
        })?;
        data.push((frame.hands()[0].clone(), label.clone()));
    }

    let config = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch,
        learning_rate: args.lr,
        seed: args.seed,
        optimizer: args.optimizer.into(),
        ..TrainConfig::default()
    };
    let (model, history) = train(&data, &config, args.encoding.into()).map_err(|e| match e {
        TrainError::InvalidConfig(msg) => CliError::Usage(msg),
        TrainError::InsufficientData(msg) => CliError::Data(msg),
        e @ TrainError::NonFiniteLoss { .. } => CliError::Runtime(e.to_string()),
    })?;

    for stats in &history {
        eprintln!(
            "epoch {:>4}/{}  loss {:.6}  accuracy {:.4}",
            stats.epoch, args.epochs, stats.loss, stats.accuracy
        );
    }
    let last = history.last().expect("at least one epoch ran");
    println!("final train accuracy {:.4}", last.accuracy);

    fs::write(&args.out, model.to_bytes()).map_err(|e| write_failed(&args.out, e))?;
    eprintln!("model written to {}", args.out.display());
    Ok(())
}

fn load_model(path: &Path) -> Result<MlpModel, CliError> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    MlpModel::from_bytes(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn load_map(path: Option<&Path>) -> Result<KeypointMap, CliError> {
    match path {
        None => Ok(KeypointMap::default_map()),
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
            KeypointMap::from_json(&text)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
        }
    }
}

fn cmd_classify(args: ClassifyArgs) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let map = load_map(args.map.as_deref())?;
    let frames = read_frames_file(&args.input, args.y_axis)?;

    let mut out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(create_output(path)?),
        None => Box::new(std::io::stdout().lock()),
    };
    for frame in &frames {
        let record = PredictionRecord::new(frame.frame_id(), recognize(frame, &model, &map));
        writeln!(out, "{}", record.to_json()).map_err(|e| {
            let target = args.out.as_deref().unwrap_or(Path::new("stdout"));
            write_failed(target, e)
        })?;
    }
    out.flush()
        .map_err(|e| write_failed(args.out.as_deref().unwrap_or(Path::new("stdout")), e))?;
    eprintln!("classified {} frames", frames.len());
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let predictions = parse_predictions(open_input(&args.input)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.input.display())))?;
    if predictions.is_empty() {
        return Err(CliError::Data("no predictions to score".into()));
    }
    let truth = read_label_map(&args.labels)?;

    let mut pairs = Vec::with_capacity(predictions.len());
    for rec in &predictions {
        let t = truth.get(&rec.frame_id).ok_or_else(|| {
            CliError::Data(format!("no reference label for frame {:?}", rec.frame_id))
        })?;
        pairs.push((t.clone(), rec.prediction.label.clone()));
    }

    // The declared label set covers everything seen on either side.
    let mut label_set: Vec<String> = pairs
        .iter()
        .flat_map(|(t, p)| std::iter::once(t.clone()).chain(p.clone()))
        .collect();
    label_set.sort();
    label_set.dedup();

    let cm = confusion(&label_set, &pairs).map_err(|e| CliError::Data(e.to_string()))?;
    let accuracy = cm.accuracy().expect("at least one pair was scored");
    let correct = (accuracy * cm.total() as f64).round() as u64;
    println!("accuracy {:.4} ({correct}/{})", accuracy, cm.total());

    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        let confusion_path = dir.join("confusion.csv");
        fs::write(&confusion_path, cm.to_csv()).map_err(|e| write_failed(&confusion_path, e))?;

        let per_class = cm.tp_rate_per_class();
        let per_class_path = dir.join("per_class.csv");
        let mut text = String::from("label,support,tp_rate\n");
        for rate in &per_class {
            let shown = rate
                .tp_rate
                .map(|r| format!("{r:.6}"))
                .unwrap_or_default();
            text.push_str(&format!("{},{},{shown}\n", rate.label, rate.support));
        }
        fs::write(&per_class_path, text).map_err(|e| write_failed(&per_class_path, e))?;

        #[derive(serde::Serialize)]
        struct SummaryFile<'a> {
            accuracy: f64,
            total: u64,
            labels: &'a [String],
            per_class: &'a [ClassRate],
        }
        let summary_path = dir.join("summary.json");
        let summary = serde_json::to_vec_pretty(&SummaryFile {
            accuracy,
            total: cm.total(),
            labels: cm.labels(),
            per_class: &per_class,
        })
        .expect("summary serialization is total");
        fs::write(&summary_path, summary).map_err(|e| write_failed(&summary_path, e))?;
        eprintln!("report written to {}", dir.display());
    }
    Ok(())
}

fn cmd_audit(args: AuditArgs) -> Result<(), CliError> {
    let records = read_audit_csv(open_input(&args.input)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.input.display())))?;
    let summary = audit_summary(&records);
    for s in &summary {
        let handedness = s
            .handedness_accuracy
            .map(|a| format!("{a:.3}"))
            .unwrap_or_else(|| "n/a".to_owned());
        println!(
            "{}  total={}  full_detect={}  hand_fail={}  keypoint_fail={}  handedness_acc={handedness}",
            s.group, s.total, s.full_detect, s.hand_failures, s.keypoint_failures
        );
    }
    if let Some(path) = &args.out {
        let json = serde_json::to_vec_pretty(&summary).expect("summary serialization is total");
        fs::write(path, json).map_err(|e| write_failed(path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> i32 {
        run_from(std::iter::once("tfs").chain(args.iter().copied()))
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(run(&["--help"]), 0);
        assert_eq!(run(&["gen", "--help"]), 0);
    }

    #[test]
    fn bad_flags_exit_one() {
        assert_eq!(run(&["frobnicate"]), 1);
        assert_eq!(run(&["gen", "--classes"]), 1);
        // Out-of-range argument values are usage errors too.
        assert_eq!(run(&["gen", "--classes", "40", "--per-class", "1", "--out", "/tmp/x"]), 1);
    }

    #[test]
    fn missing_input_exits_two() {
        assert_eq!(
            run(&[
                "classify",
                "--in",
                "/nonexistent/frames.jsonl",
                "--model",
                "/nonexistent/model.json"
            ]),
            2
        );
        assert_eq!(run(&["audit", "--in", "/nonexistent/audit.csv"]), 2);
    }
}
