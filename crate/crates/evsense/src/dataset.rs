//! Ground-truth label management: box filtering, town splits, configuration
//! partitions, and the dataset manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensor::config_by_id;

/// Minimum side length a ground-truth box must reach to be kept.
pub const MIN_BOX_SIDE: f64 = 20.0;
/// Minimum diagonal length a ground-truth box must reach to be kept.
pub const MIN_BOX_DIAGONAL: f64 = 60.0;

/// Axis-aligned box with top-left origin, in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    #[serde(default)]
    pub class_id: u32,
    #[serde(default)]
    pub track_id: u32,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        BBox { x, y, w, h, class_id: 0, track_id: 0 }
    }

    #[inline]
    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    #[inline]
    pub fn diagonal(&self) -> f64 {
        (self.w * self.w + self.h * self.h).sqrt()
    }

    #[inline]
    pub fn min_side(&self) -> f64 {
        self.w.min(self.h)
    }

    /// Side of the square with the same area; used for size banding.
    #[inline]
    pub fn effective_side(&self) -> f64 {
        self.area().sqrt()
    }
}

/// Drops boxes with a side below 20 px or a diagonal below 60 px. Order is
/// preserved; the filter is idempotent.
pub fn filter_boxes(boxes: &[BBox]) -> Vec<BBox> {
    boxes
        .iter()
        .filter(|b| b.min_side() >= MIN_BOX_SIDE && b.diagonal() >= MIN_BOX_DIAGONAL)
        .copied()
        .collect()
}

/// Ground-truth boxes for one labeled frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameLabels {
    pub frame_index: u64,
    pub t_ns: u64,
    pub boxes: Vec<BBox>,
}

/// Writes labels as newline-delimited JSON records, one per frame.
pub fn write_labels<W: Write>(labels: &[FrameLabels], mut sink: W) -> Result<()> {
    for record in labels {
        serde_json::to_writer(&mut sink, record)?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a newline-delimited labels document.
pub fn read_labels<R: std::io::Read>(source: R) -> Result<Vec<FrameLabels>> {
    let reader = BufReader::new(source);
    let mut labels = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: FrameLabels = serde_json::from_str(&line)
            .map_err(|e| Error::Malformed(format!("labels line {}: {e}", lineno + 1)))?;
        labels.push(record);
    }
    Ok(labels)
}

pub fn read_labels_file(path: &Path) -> Result<Vec<FrameLabels>> {
    read_labels(File::open(path)?)
}

pub fn write_labels_file(labels: &[FrameLabels], path: &Path) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path)?);
    write_labels(labels, &mut writer)?;
    writer.flush()?;
    Ok(())
}

/// Dataset role of a town.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Deterministic seeded 70-15-15 town split.
///
/// Counts are `round(0.70 n)` / `round(0.15 n)` / remainder with a floor of
/// one town per split; 13 towns come out as (9, 2, 2).
pub fn split_towns(town_ids: &[String], seed: u64) -> Result<BTreeMap<String, Split>> {
    let n = town_ids.len();
    if n < 3 {
        return Err(Error::InsufficientInput(format!(
            "town split needs at least 3 towns, got {n}"
        )));
    }
    let unique: BTreeSet<&String> = town_ids.iter().collect();
    if unique.len() != n {
        return Err(Error::InvalidParameter("duplicate town ids".into()));
    }

    let mut n_train = (0.70 * n as f64).round() as usize;
    // Floor of one town per split; test gets the remainder, stealing from
    // train when rounding left it empty.
    let n_val = ((0.15 * n as f64).round() as usize).max(1);
    while n - n_train - n_val < 1 {
        n_train -= 1;
    }
    let n_test = n - n_train - n_val;
    debug_assert!(n_train >= 1 && n_val >= 1 && n_test >= 1);

    let mut shuffled: Vec<String> = town_ids.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);

    let mut assignment = BTreeMap::new();
    for (i, town) in shuffled.into_iter().enumerate() {
        let split = if i < n_train {
            Split::Train
        } else if i < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
        assignment.insert(town, split);
    }
    Ok(assignment)
}

/// One recorded sequence: identity plus relative paths to its artifacts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceEntry {
    pub sequence_id: String,
    pub town_id: String,
    pub config_id: String,
    pub frames: PathBuf,
    pub events: PathBuf,
    pub labels: PathBuf,
}

/// The dataset manifest: sequences and the town split table.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub sequences: Vec<SequenceEntry>,
    pub splits: BTreeMap<String, Split>,
}

impl DatasetManifest {
    /// Validates referential integrity. Paths (relative to `base_dir`) are
    /// checked for existence only when `check_paths` is set.
    pub fn validate(&self, base_dir: &Path, check_paths: bool) -> Result<()> {
        let mut seen = BTreeSet::new();
        for entry in &self.sequences {
            if !seen.insert(&entry.sequence_id) {
                return Err(Error::DuplicateSequence(entry.sequence_id.clone()));
            }
            config_by_id(&entry.config_id)?;
            if check_paths {
                for rel in [&entry.frames, &entry.events, &entry.labels] {
                    let p = base_dir.join(rel);
                    if !p.exists() {
                        return Err(Error::MissingPath(p));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut writer = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut writer, self)?;
        writer.write_all(b"\n")?;
        writer.flush()?;
        Ok(())
    }

    pub fn load(path: &Path, check_paths: bool) -> Result<Self> {
        let manifest: DatasetManifest = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        manifest.validate(base, check_paths)?;
        Ok(manifest)
    }
}

/// Valid partition names.
pub const PARTITION_NAMES: [&str; 5] = ["train", "test1", "test2", "test3", "test4"];

/// A named set of sensor configurations.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    pub name: &'static str,
    pub config_ids: Vec<&'static str>,
}

/// Fixed partition memberships.
///
/// `train` holds the baseline plus the lower and upper bound of each varied
/// setting; `test1` reuses it under a different town split; `test2` differs
/// from training by exactly one setting per config; `test3` recombines seen
/// parameter values; `test4` uses entirely unseen values.
pub fn partition_for(name: &str) -> Result<Partition> {
    let (canonical, ids): (&'static str, &[&'static str]) = match name {
        "train" => ("train", &["base", "e1", "e3", "e4", "e6", "e7", "e9"]),
        "test1" => ("test1", &["base", "e1", "e3", "e4", "e6", "e7", "e9"]),
        "test2" => ("test2", &["e2", "e5", "e8"]),
        "test3" => ("test3", &["e10", "e11"]),
        "test4" => ("test4", &["e12", "e13"]),
        _ => {
            return Err(Error::UnknownPartition {
                name: name.to_string(),
                valid: "train, test1, test2, test3, test4",
            })
        }
    };
    Ok(Partition {
        name: canonical,
        config_ids: ids.to_vec(),
    })
}
