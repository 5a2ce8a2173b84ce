//! End-to-end orchestration: transduce, represent, detect, and evaluate
//! scenes under one configuration or a whole partition, with deterministic
//! on-disk artifacts and report emission.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::dataset::{
    filter_boxes, read_labels_file, DatasetManifest, FrameLabels, Partition,
};
use crate::detector::{detect, Detection, DetectorParams, PredictionRecord, ScoredBox};
use crate::error::{Error, Result};
use crate::eval::{coco_metrics, score_partition, EvalFrame, MetricId, MetricValues, ScoreReport};
use crate::events::{Event, FrameSequence};
use crate::io::{read_frames_file, write_events_file, write_frames_file, write_histogram_file};
use crate::representation::{windows_for_sequence, RepresentationSpec, StackedHistogram};
use crate::sensor::{transduce_sequence, SensorConfig};

/// Representation settings independent of scene geometry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RepOptions {
    pub window_len_ns: u64,
    pub n_bins: u32,
    pub clip: u8,
}

impl Default for RepOptions {
    fn default() -> Self {
        RepOptions {
            window_len_ns: crate::representation::DEFAULT_WINDOW_LEN_NS,
            n_bins: crate::representation::DEFAULT_N_BINS,
            clip: u8::MAX,
        }
    }
}

impl RepOptions {
    pub fn spec_for(&self, width: u16, height: u16) -> RepresentationSpec {
        RepresentationSpec::new(width, height)
            .with_window_len_ns(self.window_len_ns)
            .with_n_bins(self.n_bins)
            .with_clip(self.clip)
    }
}

/// Full pipeline settings.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PipelineOptions {
    pub rep: RepOptions,
    pub detector: DetectorParams,
    /// Apply the side/diagonal ground-truth box filter before evaluation.
    pub filter_ground_truth: bool,
}

impl PipelineOptions {
    pub fn standard() -> Self {
        PipelineOptions {
            rep: RepOptions::default(),
            detector: DetectorParams::default(),
            filter_ground_truth: true,
        }
    }
}

/// One input scene: frames plus per-frame ground truth.
#[derive(Clone, Debug)]
pub struct SceneData {
    pub sequence_id: String,
    pub frames: FrameSequence,
    pub labels: Vec<FrameLabels>,
}

/// Artifacts of one scene under one configuration.
#[derive(Clone, Debug)]
pub struct SceneRun {
    pub sequence_id: String,
    pub events: Vec<Event>,
    pub histograms: Vec<StackedHistogram>,
    /// Detections per labeled frame, aligned with `histograms`.
    pub detections: Vec<Vec<Detection>>,
}

/// Transduces, represents, and detects one scene under one configuration.
pub fn process_scene(
    scene: &SceneData,
    config: &SensorConfig,
    options: &PipelineOptions,
) -> Result<SceneRun> {
    let events = transduce_sequence(&scene.frames, config)?;
    let spec = options.rep.spec_for(scene.frames.width, scene.frames.height);
    let label_ts: Vec<u64> = scene.labels.iter().map(|l| l.t_ns).collect();
    let (histograms, _plan) = windows_for_sequence(&events, &label_ts, &spec)?;
    let detections = histograms
        .iter()
        .map(|h| detect(h, &options.detector))
        .collect::<Result<Vec<_>>>()?;
    Ok(SceneRun {
        sequence_id: scene.sequence_id.clone(),
        events,
        histograms,
        detections,
    })
}

/// Converts one scene run into prediction records.
pub fn prediction_records(run: &SceneRun, labels: &[FrameLabels]) -> Vec<PredictionRecord> {
    run.detections
        .iter()
        .zip(labels)
        .map(|(dets, l)| PredictionRecord {
            sequence_id: run.sequence_id.clone(),
            frame_index: l.frame_index,
            boxes: dets.iter().map(ScoredBox::from).collect(),
        })
        .collect()
}

/// Pairs detections with (optionally filtered) ground truth for evaluation.
pub fn eval_frames(
    runs: &[(SceneRun, &SceneData)],
    filter_ground_truth: bool,
) -> Vec<EvalFrame> {
    let mut frames = Vec::new();
    for (run, scene) in runs {
        for (dets, labels) in run.detections.iter().zip(&scene.labels) {
            let ground_truth = if filter_ground_truth {
                filter_boxes(&labels.boxes)
            } else {
                labels.boxes.clone()
            };
            frames.push(EvalFrame {
                detections: dets.clone(),
                ground_truth,
            });
        }
    }
    frames
}

/// Result of one configuration's pipeline pass.
#[derive(Clone, Debug)]
pub struct ConfigRun {
    pub config: SensorConfig,
    pub metrics: MetricValues,
    pub event_count: u64,
}

/// A full sweep over one partition.
#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub runs: Vec<ConfigRun>,
    pub report: ScoreReport,
    /// Configurations that failed, with their error text.
    pub failures: Vec<(String, String)>,
}

fn run_one_config(
    scenes: &[SceneData],
    config: &SensorConfig,
    options: &PipelineOptions,
    out_dir: Option<&Path>,
) -> Result<ConfigRun> {
    let mut runs = Vec::with_capacity(scenes.len());
    for scene in scenes {
        let run = process_scene(scene, config, options)?;
        if let Some(root) = out_dir {
            let scene_dir = root.join(&config.id).join(&scene.sequence_id);
            fs::create_dir_all(&scene_dir)?;
            write_events_file(
                &run.events,
                scene.frames.width,
                scene.frames.height,
                &scene_dir.join("events.evt1"),
            )?;
            let shr_dir = scene_dir.join("shr");
            fs::create_dir_all(&shr_dir)?;
            for (i, h) in run.histograms.iter().enumerate() {
                write_histogram_file(h, &shr_dir.join(format!("{i:05}.shr1")))?;
            }
            crate::detector::write_predictions_file(
                &prediction_records(&run, &scene.labels),
                &scene_dir.join("predictions.jsonl"),
            )?;
        }
        runs.push((run, scene));
    }

    let event_count = runs.iter().map(|(r, _)| r.events.len() as u64).sum();
    let frames = eval_frames(&runs, options.filter_ground_truth);
    let metrics = coco_metrics(&frames);
    Ok(ConfigRun {
        config: config.clone(),
        metrics,
        event_count,
    })
}

/// Runs transduce -> represent -> detect -> evaluate for every configuration
/// of a partition.
///
/// Deterministic for fixed inputs; per-config pipelines are pure, so metric
/// outputs do not depend on the worker count. `workers == 0` uses all cores.
pub fn run_sweep(
    scenes: &[SceneData],
    partition: &Partition,
    options: &PipelineOptions,
    out_dir: Option<&Path>,
    workers: usize,
) -> Result<SweepOutput> {
    if scenes.is_empty() {
        return Err(Error::InsufficientInput("sweep needs at least one scene".into()));
    }
    let configs: Vec<&'static SensorConfig> = partition
        .config_ids
        .iter()
        .map(|id| crate::sensor::config_by_id(id))
        .collect::<Result<_>>()?;

    let results: Vec<(String, Result<ConfigRun>)> = if workers == 1 {
        configs
            .iter()
            .map(|cfg| (cfg.id.clone(), run_one_config(scenes, cfg, options, out_dir)))
            .collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
        pool.install(|| {
            configs
                .par_iter()
                .map(|cfg| (cfg.id.clone(), run_one_config(scenes, cfg, options, out_dir)))
                .collect()
        })
    };

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    let mut per_config = BTreeMap::new();
    for (id, result) in results {
        match result {
            Ok(run) => {
                per_config.insert(id, run.metrics);
                runs.push(run);
            }
            Err(e) => failures.push((id, e.to_string())),
        }
    }

    if !failures.is_empty() {
        // Aggregate only over the configs that survived so the caller can
        // still report a partial table.
        let surviving = Partition {
            name: partition.name,
            config_ids: partition
                .config_ids
                .iter()
                .filter(|id| per_config.contains_key(**id))
                .copied()
                .collect(),
        };
        let report = score_partition(&surviving, &per_config)?;
        return Ok(SweepOutput { runs, report, failures });
    }

    let report = score_partition(partition, &per_config)?;
    Ok(SweepOutput { runs, report, failures: Vec::new() })
}

/// Writes the score table as CSV: per-config rows then one mean row.
pub fn write_score_csv<W: Write>(report: &ScoreReport, mut sink: W) -> Result<()> {
    writeln!(sink, "test_set,config_id,metric,value")?;
    for (config_id, values) in &report.per_config {
        for metric in MetricId::ALL {
            if let Some(v) = values.get(metric) {
                writeln!(sink, "{},{},{},{:.6}", report.test_set, config_id, metric.as_str(), v)?;
            }
        }
    }
    for metric in MetricId::ALL {
        if let Some(agg) = report.aggregates.get(&metric) {
            writeln!(sink, "{},mean,{},{:.6}", report.test_set, metric.as_str(), agg.mean)?;
        }
    }
    Ok(())
}

/// Writes the plot-ready long-format table: config, parameter values, metric, value.
pub fn write_long_csv<W: Write>(runs: &[ConfigRun], mut sink: W) -> Result<()> {
    writeln!(sink, "config_id,th_p,th_n,tr_ms,fov_deg,metric,value")?;
    for run in runs {
        let c = &run.config;
        for metric in MetricId::ALL {
            if let Some(v) = run.metrics.get(metric) {
                writeln!(
                    sink,
                    "{},{},{},{},{},{},{:.6}",
                    c.id, c.th_p, c.th_n, c.refractory_ms, c.fov_deg, metric.as_str(), v
                )?;
            }
        }
    }
    Ok(())
}

/// Writes the human-readable summary table.
pub fn write_summary<W: Write>(report: &ScoreReport, mut sink: W) -> Result<()> {
    writeln!(sink, "test set: {}", report.test_set)?;
    write!(sink, "{:>10}", "config")?;
    for metric in MetricId::ALL {
        write!(sink, "{:>10}", metric.as_str())?;
    }
    writeln!(sink)?;
    for (config_id, values) in &report.per_config {
        write!(sink, "{config_id:>10}")?;
        for metric in MetricId::ALL {
            match values.get(metric) {
                Some(v) => write!(sink, "{:>10.4}", v)?,
                None => write!(sink, "{:>10}", "-")?,
            }
        }
        writeln!(sink)?;
    }
    write!(sink, "{:>10}", "mean")?;
    for metric in MetricId::ALL {
        match report.aggregates.get(&metric) {
            Some(agg) => write!(sink, "{:>10.4}", agg.mean)?,
            None => write!(sink, "{:>10}", "-")?,
        }
    }
    writeln!(sink)?;
    write!(sink, "{:>10}", "± std")?;
    for metric in MetricId::ALL {
        match report.aggregates.get(&metric) {
            Some(agg) => write!(sink, "{:>10.4}", agg.std_sample)?,
            None => write!(sink, "{:>10}", "-")?,
        }
    }
    writeln!(sink)?;
    Ok(())
}

/// Writes frames and labels of one scene into a directory.
pub fn save_scene_dir(scene: &SceneData, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_frames_file(&scene.frames, &dir.join("frames.frm1"))?;
    crate::dataset::write_labels_file(&scene.labels, &dir.join("labels.jsonl"))?;
    Ok(())
}

/// Loads one scene from a directory holding `frames.frm1` and `labels.jsonl`.
pub fn load_scene_dir(dir: &Path) -> Result<SceneData> {
    let sequence_id = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scene".to_string());
    let frames = read_frames_file(&dir.join("frames.frm1"))?;
    let labels = read_labels_file(&dir.join("labels.jsonl"))?;
    Ok(SceneData { sequence_id, frames, labels })
}

/// Loads every scene subdirectory under `root`, sorted by name.
pub fn load_scene_set(root: &Path) -> Result<Vec<SceneData>> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)?
        .filter_map(|entry| entry.ok())
        .map(|entry| entry.path())
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::InsufficientInput(format!(
            "no scene subdirectories under {}",
            root.display()
        )));
    }
    dirs.iter().map(|d| load_scene_dir(d)).collect()
}

/// Loads the frames+labels pairs referenced by a dataset manifest.
///
/// The manifest's per-sequence `config_id` describes how a sequence was
/// recorded; a sweep re-transduces the frames under each partition
/// configuration regardless.
pub fn load_scene_set_from_manifest(path: &Path) -> Result<Vec<SceneData>> {
    let manifest = DatasetManifest::load(path, false)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    manifest
        .sequences
        .iter()
        .map(|entry| {
            let frames = read_frames_file(&base.join(&entry.frames))?;
            let labels = read_labels_file(&base.join(&entry.labels))?;
            Ok(SceneData {
                sequence_id: entry.sequence_id.clone(),
                frames,
                labels,
            })
        })
        .collect()
}
