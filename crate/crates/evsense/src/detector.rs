//! Event-density blob detector over stacked histograms.
//!
//! A deliberately simple, training-free detector: sum the tensor over all
//! channels, binarize, dilate, and box the connected components. It exists so
//! the full pipeline runs end to end and degrades with event sparsity the
//! way a learned detector would; real detectors plug in through the
//! predictions document instead.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::BBox;
use crate::error::{Error, Result};
use crate::representation::StackedHistogram;

/// A scored predicted box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Detection {
    pub bbox: BBox,
    /// Confidence in [0, 1].
    pub score: f64,
}

/// Blob-detector knobs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    /// Minimum summed count for a pixel to be foreground, >= 1.
    pub density_threshold: u32,
    /// Minimum component area in pixels, >= 1.
    pub min_area: u32,
    /// Chebyshev radius of the binary dilation applied before labeling.
    pub dilation_radius: u32,
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams {
            density_threshold: 2,
            min_area: 25,
            dilation_radius: 2,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        if self.density_threshold < 1 {
            return Err(Error::InvalidParameter("density_threshold must be >= 1".into()));
        }
        if self.min_area < 1 {
            return Err(Error::InvalidParameter("min_area must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-pixel sum over all channels, in wide counters.
pub fn density_map(h: &StackedHistogram) -> Vec<u32> {
    let width = h.spec.width as usize;
    let height = h.spec.height as usize;
    let plane = width * height;
    let mut map = vec![0u32; plane];
    for chunk in h.data().chunks_exact(plane) {
        for (cell, &v) in map.iter_mut().zip(chunk) {
            *cell += u32::from(v);
        }
    }
    map
}

fn dilate(mask: &[bool], width: usize, height: usize, radius: usize) -> Vec<bool> {
    if radius == 0 {
        return mask.to_vec();
    }
    // Separable Chebyshev dilation: horizontal pass, then vertical.
    let mut horiz = vec![false; mask.len()];
    for y in 0..height {
        let row = y * width;
        for x in 0..width {
            if mask[row + x] {
                let lo = x.saturating_sub(radius);
                let hi = (x + radius + 1).min(width);
                for out in &mut horiz[row + lo..row + hi] {
                    *out = true;
                }
            }
        }
    }
    let mut out = vec![false; mask.len()];
    for y in 0..height {
        for x in 0..width {
            if horiz[y * width + x] {
                let lo = y.saturating_sub(radius);
                let hi = (y + radius + 1).min(height);
                for yy in lo..hi {
                    out[yy * width + x] = true;
                }
            }
        }
    }
    out
}

/// Detects blobs in one histogram.
///
/// The density map is binarized at `density_threshold`, dilated by
/// `dilation_radius`, and 8-connected components below `min_area` are
/// dropped. Each remaining component becomes a tight box scored by
/// `min(1, mean component density / (2 * density_threshold))`. Output is
/// sorted by descending score, ties broken by box origin `(y, x)`.
pub fn detect(h: &StackedHistogram, params: &DetectorParams) -> Result<Vec<Detection>> {
    params.validate()?;
    let width = h.spec.width as usize;
    let height = h.spec.height as usize;
    let density = density_map(h);
    let mask: Vec<bool> = density.iter().map(|&d| d >= params.density_threshold).collect();
    let dilated = dilate(&mask, width, height, params.dilation_radius as usize);

    let mut visited = vec![false; dilated.len()];
    let mut stack = Vec::new();
    let mut detections = Vec::new();

    for start in 0..dilated.len() {
        if !dilated[start] || visited[start] {
            continue;
        }
        visited[start] = true;
        stack.push(start);
        let mut area = 0u64;
        let mut density_sum = 0u64;
        let (mut min_x, mut max_x) = (usize::MAX, 0usize);
        let (mut min_y, mut max_y) = (usize::MAX, 0usize);

        while let Some(cell) = stack.pop() {
            let (x, y) = (cell % width, cell / width);
            area += 1;
            density_sum += u64::from(density[cell]);
            min_x = min_x.min(x);
            max_x = max_x.max(x);
            min_y = min_y.min(y);
            max_y = max_y.max(y);

            let y_lo = y.saturating_sub(1);
            let y_hi = (y + 2).min(height);
            let x_lo = x.saturating_sub(1);
            let x_hi = (x + 2).min(width);
            for ny in y_lo..y_hi {
                for nx in x_lo..x_hi {
                    let n = ny * width + nx;
                    if dilated[n] && !visited[n] {
                        visited[n] = true;
                        stack.push(n);
                    }
                }
            }
        }

        if area < u64::from(params.min_area) {
            continue;
        }
        let mean_density = density_sum as f64 / area as f64;
        let score = (mean_density / (2.0 * f64::from(params.density_threshold))).min(1.0);
        detections.push(Detection {
            bbox: BBox::new(
                min_x as f64,
                min_y as f64,
                (max_x - min_x + 1) as f64,
                (max_y - min_y + 1) as f64,
            ),
            score,
        });
    }

    detections.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.bbox.y.total_cmp(&b.bbox.y))
            .then(a.bbox.x.total_cmp(&b.bbox.x))
    });
    Ok(detections)
}

/// One frame of predictions in the interchange document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub sequence_id: String,
    pub frame_index: u64,
    pub boxes: Vec<ScoredBox>,
}

/// Box payload of the predictions document.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub score: f64,
}

impl From<&Detection> for ScoredBox {
    fn from(d: &Detection) -> Self {
        ScoredBox { x: d.bbox.x, y: d.bbox.y, w: d.bbox.w, h: d.bbox.h, score: d.score }
    }
}

impl From<&ScoredBox> for Detection {
    fn from(b: &ScoredBox) -> Self {
        Detection { bbox: BBox::new(b.x, b.y, b.w, b.h), score: b.score }
    }
}

/// Writes newline-delimited prediction records.
pub fn write_predictions<W: Write>(records: &[PredictionRecord], mut sink: W) -> Result<()> {
    for record in records {
        serde_json::to_writer(&mut sink, record)?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a newline-delimited predictions document.
pub fn read_predictions<R: std::io::Read>(source: R) -> Result<Vec<PredictionRecord>> {
    let reader = BufReader::new(source);
    let mut records = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PredictionRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Malformed(format!("predictions line {}: {e}", lineno + 1)))?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_predictions_file(records: &[PredictionRecord], path: &Path) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path)?);
    write_predictions(records, &mut writer)?;
    writer.flush()?;
    Ok(())
}

pub fn read_predictions_file(path: &Path) -> Result<Vec<PredictionRecord>> {
    read_predictions(File::open(path)?)
}
