//! Command-line pipelines over the library: scene generation, transduction,
//! representation building, detection, evaluation, and partition sweeps.
//!
//! Exit codes are a stable scripting contract: 0 success, 1 partial failure,
//! 2 invalid input or usage.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::dataset::{partition_for, read_labels_file, FrameLabels};
use crate::detector::{detect, read_predictions_file, DetectorParams, PredictionRecord};
use crate::error::{Error, Result};
use crate::eval::{coco_metrics, Aggregate, EvalFrame, MetricId, ScoreReport};
use crate::io::{
    read_events_file, read_frames_file, read_histogram_file, write_events_file,
    write_frames_file, write_histogram_file,
};
use crate::pipeline::{
    load_scene_set, load_scene_set_from_manifest, run_sweep, write_long_csv, write_score_csv,
    write_summary, PipelineOptions, RepOptions, SceneData,
};
use crate::representation::windows_for_sequence;
use crate::scene::{generate_sequence, SceneSpec};
use crate::sensor::{config_by_id, transduce_sequence, SensorConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARTIAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "evsense",
    version,
    about = "Event-camera simulation, representations, and detection evaluation"
)]
pub struct Cli {
    /// Deterministic seed for seeded operations.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads for sweeps; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,

    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Defaults file: the run_config.json echoed by a previous run.
    /// Explicit flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub run_config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a scene spec into a FRM1 file plus a labels document.
    GenScene(GenSceneArgs),
    /// Transduce a FRM1 file into an EVT1 event stream.
    Simulate(SimulateArgs),
    /// Build stacked histograms (SHR1 files) from events and labels.
    Represent(RepresentArgs),
    /// Run the blob detector over a directory of SHR1 files.
    Detect(DetectArgs),
    /// Evaluate a predictions document against ground-truth labels.
    Eval(EvalArgs),
    /// Run the full per-config pipeline over a partition.
    Sweep(SweepArgs),
    /// Recompute reports from a sweep directory's stored predictions.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenSceneArgs {
    /// Scene spec (JSON).
    #[arg(long)]
    pub spec: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Input FRM1 file.
    #[arg(long)]
    pub frames: PathBuf,
    /// Registered configuration id (e.g. base, e1..e13).
    #[arg(long, conflicts_with_all = ["th_p", "th_n", "tr_ms", "fov_deg"])]
    pub config: Option<String>,
    /// Positive contrast threshold (explicit tuple).
    #[arg(long)]
    pub th_p: Option<f64>,
    /// Negative contrast threshold (explicit tuple).
    #[arg(long)]
    pub th_n: Option<f64>,
    /// Refractory period in milliseconds (explicit tuple).
    #[arg(long)]
    pub tr_ms: Option<f64>,
    /// Field of view in degrees (explicit tuple).
    #[arg(long)]
    pub fov_deg: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RepresentArgs {
    /// Input EVT1 file.
    #[arg(long)]
    pub events: PathBuf,
    /// Labels document the windows align to.
    #[arg(long)]
    pub labels: PathBuf,
    /// Window length in milliseconds.
    #[arg(long, default_value_t = 50.0)]
    pub window_ms: f64,
    /// Temporal bins per window.
    #[arg(long, default_value_t = 10)]
    pub bins: u32,
    /// Saturation ceiling per cell.
    #[arg(long, default_value_t = 255)]
    pub clip: u8,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Directory of SHR1 files, one per labeled frame.
    #[arg(long)]
    pub histograms: PathBuf,
    /// Sequence id written into the predictions document.
    #[arg(long, default_value = "scene")]
    pub sequence_id: String,
    #[command(flatten)]
    pub detector: DetectorFlags,
}

#[derive(Debug, Args)]
pub struct DetectorFlags {
    /// Minimum summed count for a foreground pixel.
    #[arg(long, default_value_t = 2)]
    pub density_threshold: u32,
    /// Minimum component area in pixels.
    #[arg(long, default_value_t = 25)]
    pub min_area: u32,
    /// Dilation radius applied before component labeling.
    #[arg(long, default_value_t = 2)]
    pub dilation_radius: u32,
}

impl DetectorFlags {
    fn params(&self) -> DetectorParams {
        DetectorParams {
            density_threshold: self.density_threshold,
            min_area: self.min_area,
            dilation_radius: self.dilation_radius,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predictions document (JSON lines).
    #[arg(long)]
    pub predictions: PathBuf,
    /// Ground-truth labels document (JSON lines).
    #[arg(long)]
    pub labels: PathBuf,
    /// Row label in the emitted report.
    #[arg(long, default_value = "custom")]
    pub config_id: String,
    /// Keep boxes the side/diagonal ground-truth filter would drop.
    #[arg(long)]
    pub keep_small: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Directory of scene subdirectories (frames.frm1 + labels.jsonl each).
    #[arg(long, conflicts_with = "manifest")]
    pub scenes: Option<PathBuf>,
    /// Dataset manifest naming frames/labels per sequence.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Partition to sweep: train, test1, test2, test3, or test4.
    #[arg(long)]
    pub partition: String,
    /// Window length in milliseconds.
    #[arg(long, default_value_t = 50.0)]
    pub window_ms: f64,
    /// Temporal bins per window.
    #[arg(long, default_value_t = 10)]
    pub bins: u32,
    /// Saturation ceiling per cell.
    #[arg(long, default_value_t = 255)]
    pub clip: u8,
    #[command(flatten)]
    pub detector: DetectorFlags,
    /// Keep boxes the side/diagonal ground-truth filter would drop.
    #[arg(long)]
    pub keep_small: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Output directory of a previous sweep.
    #[arg(long)]
    pub sweep_dir: PathBuf,
}

/// Fully resolved run configuration, echoed into the output directory.
///
/// `flags` mirrors the command line (kebab-case keys), so the file can be
/// fed back through `--run-config` to reproduce the run.
#[derive(Debug, Serialize)]
struct RunEcho<'a> {
    command: &'a str,
    seed: u64,
    workers: usize,
    out: &'a Path,
    flags: serde_json::Value,
    detail: serde_json::Value,
}

fn echo_run_config(
    common: &CommonOpts,
    command: &str,
    flags: serde_json::Value,
    detail: serde_json::Value,
) -> Result<()> {
    let echo = RunEcho {
        command,
        seed: common.seed,
        workers: common.workers,
        out: &common.out,
        flags,
        detail,
    };
    let mut w = BufWriter::new(File::create(common.out.join("run_config.json"))?);
    serde_json::to_writer_pretty(&mut w, &echo)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

struct CommonOpts {
    seed: u64,
    workers: usize,
    out: PathBuf,
}

/// Global options that take a value and may precede the subcommand.
const PRE_SUBCOMMAND_VALUE_FLAGS: [&str; 4] = ["--seed", "--workers", "--out", "--run-config"];

/// Flag groups that are alternatives of each other: if the command line sets
/// any member, none of the file's members are applied.
const EXCLUSIVE_GROUPS: [&[&str]; 2] = [
    &["--config", "--th-p", "--th-n", "--tr-ms", "--fov-deg"],
    &["--scenes", "--manifest"],
];

/// Applies a previous run's echoed configuration as defaults: every option
/// it records is appended unless the command line already sets it (or a
/// conflicting alternative).
fn merge_run_config_defaults(args: Vec<std::ffi::OsString>) -> Result<Vec<std::ffi::OsString>> {
    let mut file: Option<PathBuf> = None;
    let mut subcommand: Option<String> = None;
    let mut i = 1;
    while i < args.len() {
        let token = args[i].to_string_lossy().into_owned();
        if let Some(rest) = token.strip_prefix("--run-config=") {
            file = Some(PathBuf::from(rest));
            i += 1;
        } else if token == "--run-config" {
            if i + 1 < args.len() {
                file = Some(PathBuf::from(args[i + 1].clone()));
            }
            i += 2;
        } else if token.starts_with("--") {
            let consumes_value = subcommand.is_none()
                && !token.contains('=')
                && PRE_SUBCOMMAND_VALUE_FLAGS.contains(&token.as_str());
            i += if consumes_value { 2 } else { 1 };
        } else {
            if subcommand.is_none() {
                subcommand = Some(token);
            }
            i += 1;
        }
    }
    let Some(file) = file else { return Ok(args) };
    let Some(subcommand) = subcommand else {
        return Err(Error::InvalidParameter(
            "--run-config requires the subcommand on the command line".into(),
        ));
    };

    let echo: serde_json::Value = serde_json::from_reader(File::open(&file)?)?;
    let recorded = echo["command"].as_str().unwrap_or("");
    if recorded != subcommand {
        return Err(Error::InvalidParameter(format!(
            "run config records command `{recorded}` but `{subcommand}` was invoked"
        )));
    }

    let user_has = |flag: &str| {
        let assigned = format!("{flag}=");
        args.iter().any(|a| {
            let s = a.to_string_lossy();
            s == flag || s.starts_with(&assigned)
        })
    };
    let group_blocked = |flag: &str| {
        EXCLUSIVE_GROUPS
            .iter()
            .any(|group| group.contains(&flag) && group.iter().any(|member| user_has(member)))
    };

    let mut additions: Vec<std::ffi::OsString> = Vec::new();
    {
        let mut apply = |flag: &str, value: &serde_json::Value| {
            if user_has(flag) || group_blocked(flag) {
                return;
            }
            match value {
                serde_json::Value::Bool(true) => additions.push(flag.into()),
                serde_json::Value::Bool(false) | serde_json::Value::Null => {}
                serde_json::Value::String(s) => {
                    additions.push(flag.into());
                    additions.push(s.into());
                }
                other => {
                    additions.push(flag.into());
                    additions.push(other.to_string().into());
                }
            }
        };
        apply("--seed", &echo["seed"]);
        apply("--workers", &echo["workers"]);
        apply("--out", &echo["out"]);
        if let Some(flags) = echo["flags"].as_object() {
            for (key, value) in flags {
                apply(&format!("--{key}"), value);
            }
        }
    }
    let mut merged = args;
    merged.extend(additions);
    Ok(merged)
}

/// Parses arguments and runs the selected command, returning the process
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let raw: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let merged = match merge_run_config_defaults(raw) {
        Ok(merged) => merged,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(merged) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are success paths.
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn require_out(out: Option<PathBuf>) -> Result<PathBuf> {
    let out = out.ok_or_else(|| Error::InvalidParameter("--out is required".into()))?;
    fs::create_dir_all(&out)?;
    Ok(out)
}

fn execute(cli: Cli) -> Result<i32> {
    let common = CommonOpts {
        seed: cli.seed,
        workers: cli.workers,
        out: require_out(cli.out)?,
    };
    match cli.command {
        Command::GenScene(args) => cmd_gen_scene(&common, &args),
        Command::Simulate(args) => cmd_simulate(&common, &args),
        Command::Represent(args) => cmd_represent(&common, &args),
        Command::Detect(args) => cmd_detect(&common, &args),
        Command::Eval(args) => cmd_eval(&common, &args),
        Command::Sweep(args) => cmd_sweep(&common, &args),
        Command::Report(args) => cmd_report(&common, &args),
    }
}

fn cmd_gen_scene(common: &CommonOpts, args: &GenSceneArgs) -> Result<i32> {
    let spec: SceneSpec = serde_json::from_reader(File::open(&args.spec)?)?;
    let (frames, labels) = generate_sequence(&spec)?;
    write_frames_file(&frames, &common.out.join("frames.frm1"))?;
    crate::dataset::write_labels_file(&labels, &common.out.join("labels.jsonl"))?;
    echo_run_config(
        common,
        "gen-scene",
        serde_json::json!({ "spec": args.spec }),
        serde_json::json!({ "scene_spec": spec }),
    )?;
    println!(
        "wrote {} frames ({}x{}) and {} label records to {}",
        frames.frames.len(),
        frames.width,
        frames.height,
        labels.len(),
        common.out.display()
    );
    Ok(EXIT_OK)
}

fn resolve_config(args: &SimulateArgs) -> Result<SensorConfig> {
    if let Some(id) = &args.config {
        return Ok(config_by_id(id)?.clone());
    }
    match (args.th_p, args.th_n, args.tr_ms, args.fov_deg) {
        (Some(th_p), Some(th_n), Some(tr_ms), Some(fov_deg)) => {
            SensorConfig::new("custom", th_p, th_n, tr_ms, fov_deg)
        }
        _ => Err(Error::InvalidParameter(
            "pass --config ID or all of --th-p, --th-n, --tr-ms, --fov-deg".into(),
        )),
    }
}

fn cmd_simulate(common: &CommonOpts, args: &SimulateArgs) -> Result<i32> {
    let config = resolve_config(args)?;
    let frames = read_frames_file(&args.frames)?;
    let events = transduce_sequence(&frames, &config)?;
    let out_path = common.out.join("events.evt1");
    write_events_file(&events, frames.width, frames.height, &out_path)?;
    let flags = if args.config.is_some() {
        serde_json::json!({ "frames": args.frames, "config": config.id })
    } else {
        serde_json::json!({
            "frames": args.frames,
            "th-p": config.th_p,
            "th-n": config.th_n,
            "tr-ms": config.refractory_ms,
            "fov-deg": config.fov_deg,
        })
    };
    echo_run_config(common, "simulate", flags, serde_json::json!({ "config": config }))?;

    let span_ns = frames.frames.last().unwrap().t_ns - frames.frames[0].t_ns;
    let rate = if span_ns > 0 {
        events.len() as f64 / (span_ns as f64 / 1e9)
    } else {
        0.0
    };
    println!(
        "config={} events={} rate={:.1} ev/s -> {}",
        config.id,
        events.len(),
        rate,
        out_path.display()
    );
    Ok(EXIT_OK)
}

fn cmd_represent(common: &CommonOpts, args: &RepresentArgs) -> Result<i32> {
    let (width, height, events) = read_events_file(&args.events)?;
    let labels = read_labels_file(&args.labels)?;
    let rep = RepOptions {
        window_len_ns: (args.window_ms * 1e6).round() as u64,
        n_bins: args.bins,
        clip: args.clip,
    };
    let spec = rep.spec_for(width, height);
    let label_ts: Vec<u64> = labels.iter().map(|l| l.t_ns).collect();
    let (histograms, plan) = windows_for_sequence(&events, &label_ts, &spec)?;

    let shr_dir = common.out.join("shr");
    fs::create_dir_all(&shr_dir)?;
    for (i, h) in histograms.iter().enumerate() {
        write_histogram_file(h, &shr_dir.join(format!("{i:05}.shr1")))?;
    }
    echo_run_config(
        common,
        "represent",
        serde_json::json!({
            "events": args.events,
            "labels": args.labels,
            "window-ms": args.window_ms,
            "bins": args.bins,
            "clip": args.clip,
        }),
        serde_json::json!({
            "representation": rep,
            "overlapping_windows": plan.overlapping,
        }),
    )?;
    println!("wrote {} histograms to {}", histograms.len(), shr_dir.display());
    Ok(EXIT_OK)
}

fn sorted_shr_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|entry| entry.ok())
        .map(|entry| entry.path())
        .filter(|p| p.extension().map(|e| e == "shr1").unwrap_or(false))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::InsufficientInput(format!(
            "no .shr1 files under {}",
            dir.display()
        )));
    }
    Ok(files)
}

fn cmd_detect(common: &CommonOpts, args: &DetectArgs) -> Result<i32> {
    let params = args.detector.params();
    let files = sorted_shr_files(&args.histograms)?;
    let mut records = Vec::with_capacity(files.len());
    let mut total = 0usize;
    for (i, path) in files.iter().enumerate() {
        let h = read_histogram_file(path)?;
        let detections = detect(&h, &params)?;
        total += detections.len();
        records.push(PredictionRecord {
            sequence_id: args.sequence_id.clone(),
            frame_index: i as u64,
            boxes: detections.iter().map(Into::into).collect(),
        });
    }
    let out_path = common.out.join("predictions.jsonl");
    crate::detector::write_predictions_file(&records, &out_path)?;
    echo_run_config(
        common,
        "detect",
        serde_json::json!({
            "histograms": args.histograms,
            "sequence-id": args.sequence_id,
            "density-threshold": params.density_threshold,
            "min-area": params.min_area,
            "dilation-radius": params.dilation_radius,
        }),
        serde_json::json!({ "frames": records.len() }),
    )?;
    println!(
        "{} detections over {} frames -> {}",
        total,
        records.len(),
        out_path.display()
    );
    Ok(EXIT_OK)
}

/// Builds evaluation frames by aligning prediction records with labels on
/// frame index; frames without a record count as empty predictions.
fn align_predictions(records: &[PredictionRecord], labels: &[FrameLabels], keep_small: bool) -> Vec<EvalFrame> {
    let by_frame: BTreeMap<u64, &PredictionRecord> =
        records.iter().map(|r| (r.frame_index, r)).collect();
    labels
        .iter()
        .map(|l| {
            let detections = by_frame
                .get(&l.frame_index)
                .map(|r| r.boxes.iter().map(Into::into).collect())
                .unwrap_or_default();
            let ground_truth = if keep_small {
                l.boxes.clone()
            } else {
                crate::dataset::filter_boxes(&l.boxes)
            };
            EvalFrame { detections, ground_truth }
        })
        .collect()
}

fn single_config_report(config_id: &str, test_set: &str, frames: &[EvalFrame]) -> ScoreReport {
    let metrics = coco_metrics(frames);
    let mut aggregates = BTreeMap::new();
    for metric in MetricId::ALL {
        if let Some(v) = metrics.get(metric) {
            aggregates.insert(
                metric,
                Aggregate { mean: v, std_population: 0.0, std_sample: 0.0, count: 1 },
            );
        }
    }
    ScoreReport {
        test_set: test_set.to_string(),
        per_config: vec![(config_id.to_string(), metrics)],
        aggregates,
    }
}

fn cmd_eval(common: &CommonOpts, args: &EvalArgs) -> Result<i32> {
    let records = read_predictions_file(&args.predictions)?;
    let labels = read_labels_file(&args.labels)?;
    let frames = align_predictions(&records, &labels, args.keep_small);
    let report = single_config_report(&args.config_id, "custom", &frames);

    let mut csv = BufWriter::new(File::create(common.out.join("report.csv"))?);
    write_score_csv(&report, &mut csv)?;
    csv.flush()?;
    let mut summary = Vec::new();
    write_summary(&report, &mut summary)?;
    fs::write(common.out.join("summary.txt"), &summary)?;
    echo_run_config(
        common,
        "eval",
        serde_json::json!({
            "predictions": args.predictions,
            "labels": args.labels,
            "config-id": args.config_id,
            "keep-small": args.keep_small,
        }),
        serde_json::json!({ "frames": frames.len() }),
    )?;
    print!("{}", String::from_utf8_lossy(&summary));
    Ok(EXIT_OK)
}

fn sweep_options(args: &SweepArgs) -> PipelineOptions {
    PipelineOptions {
        rep: RepOptions {
            window_len_ns: (args.window_ms * 1e6).round() as u64,
            n_bins: args.bins,
            clip: args.clip,
        },
        detector: args.detector.params(),
        filter_ground_truth: !args.keep_small,
    }
}

fn load_sweep_scenes(args: &SweepArgs) -> Result<(Vec<SceneData>, PathBuf)> {
    match (&args.scenes, &args.manifest) {
        (Some(dir), None) => Ok((load_scene_set(dir)?, dir.clone())),
        (None, Some(path)) => Ok((load_scene_set_from_manifest(path)?, path.clone())),
        _ => Err(Error::InvalidParameter(
            "pass exactly one of --scenes or --manifest".into(),
        )),
    }
}

fn write_sweep_reports(
    out: &Path,
    output: &crate::pipeline::SweepOutput,
) -> Result<()> {
    let mut csv = BufWriter::new(File::create(out.join("report.csv"))?);
    write_score_csv(&output.report, &mut csv)?;
    csv.flush()?;
    let mut long = BufWriter::new(File::create(out.join("report_long.csv"))?);
    write_long_csv(&output.runs, &mut long)?;
    long.flush()?;
    let mut summary = Vec::new();
    write_summary(&output.report, &mut summary)?;
    fs::write(out.join("summary.txt"), &summary)?;
    print!("{}", String::from_utf8_lossy(&summary));
    Ok(())
}

fn cmd_sweep(common: &CommonOpts, args: &SweepArgs) -> Result<i32> {
    let partition = partition_for(&args.partition)?;
    let (scenes, source) = load_sweep_scenes(args)?;
    let options = sweep_options(args);
    let mut flags = serde_json::json!({
        "partition": partition.name,
        "window-ms": args.window_ms,
        "bins": args.bins,
        "clip": args.clip,
        "density-threshold": args.detector.density_threshold,
        "min-area": args.detector.min_area,
        "dilation-radius": args.detector.dilation_radius,
        "keep-small": args.keep_small,
    });
    let source_key = if args.scenes.is_some() { "scenes" } else { "manifest" };
    flags[source_key] = serde_json::json!(source);
    echo_run_config(
        common,
        "sweep",
        flags,
        serde_json::json!({
            "source": fs::canonicalize(&source).unwrap_or(source.clone()),
            "options": options,
            "sequence_count": scenes.len(),
        }),
    )?;

    let output = run_sweep(&scenes, &partition, &options, Some(&common.out), common.workers)?;
    write_sweep_reports(&common.out, &output)?;

    for run in &output.runs {
        println!("config {:>5}: {} events", run.config.id, run.event_count);
    }
    if !output.failures.is_empty() {
        eprintln!("per-config status:");
        for run in &output.runs {
            eprintln!("  {:>5}  ok", run.config.id);
        }
        for (id, err) in &output.failures {
            eprintln!("  {id:>5}  FAILED: {err}");
        }
        return Ok(EXIT_PARTIAL);
    }
    Ok(EXIT_OK)
}

fn cmd_report(common: &CommonOpts, args: &ReportArgs) -> Result<i32> {
    let echo_path = args.sweep_dir.join("run_config.json");
    let echo: serde_json::Value = serde_json::from_reader(File::open(&echo_path)?)?;
    let partition_name = echo["flags"]["partition"]
        .as_str()
        .ok_or_else(|| Error::Malformed("run_config.json lacks a partition".into()))?;
    let source = echo["detail"]["source"]
        .as_str()
        .ok_or_else(|| Error::Malformed("run_config.json lacks a source".into()))?;
    let keep_small = echo["flags"]["keep-small"].as_bool().unwrap_or(false);

    let partition = partition_for(partition_name)?;
    let source_path = PathBuf::from(source);
    let scenes = if source_path.is_dir() {
        load_scene_set(&source_path)?
    } else {
        load_scene_set_from_manifest(&source_path)?
    };

    let mut per_config = BTreeMap::new();
    for id in &partition.config_ids {
        let mut frames = Vec::new();
        for scene in &scenes {
            let pred_path = args
                .sweep_dir
                .join(id)
                .join(&scene.sequence_id)
                .join("predictions.jsonl");
            let records = read_predictions_file(&pred_path)?;
            frames.extend(align_predictions(&records, &scene.labels, keep_small));
        }
        per_config.insert((*id).to_string(), coco_metrics(&frames));
    }
    let report = crate::eval::score_partition(&partition, &per_config)?;

    let mut csv = BufWriter::new(File::create(common.out.join("report.csv"))?);
    write_score_csv(&report, &mut csv)?;
    csv.flush()?;
    let mut summary = Vec::new();
    write_summary(&report, &mut summary)?;
    fs::write(common.out.join("summary.txt"), &summary)?;
    echo_run_config(
        common,
        "report",
        serde_json::json!({ "sweep-dir": args.sweep_dir }),
        serde_json::json!({ "partition": partition_name }),
    )?;
    print!("{}", String::from_utf8_lossy(&summary));
    Ok(EXIT_OK)
}

// Keep the sweep's per-scene artifact layout reachable from the library so
// external detectors can overwrite predictions in place and re-report.
pub use crate::pipeline::SweepOutput;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_tuple_must_be_complete() {
        let args = SimulateArgs {
            frames: "x.frm1".into(),
            config: None,
            th_p: Some(0.3),
            th_n: Some(0.9),
            tr_ms: None,
            fov_deg: Some(130.0),
        };
        assert!(resolve_config(&args).is_err());
    }

    #[test]
    fn explicit_tuple_matches_registered_config() {
        let args = SimulateArgs {
            frames: "x.frm1".into(),
            config: None,
            th_p: Some(0.3),
            th_n: Some(0.9),
            tr_ms: Some(15.0),
            fov_deg: Some(130.0),
        };
        let custom = resolve_config(&args).unwrap();
        let e13 = config_by_id("e13").unwrap();
        assert!(custom.params_equal(e13));
    }

    #[test]
    fn unknown_partition_is_a_usage_error() {
        let code = run([
            "evsense", "sweep", "--scenes", "/nonexistent", "--partition", "test9", "--out",
            "/tmp/evsense-cli-test-out",
        ]);
        assert_eq!(code, EXIT_USAGE);
    }
}
