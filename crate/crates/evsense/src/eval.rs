//! Detection metrics: IoU, greedy score-order matching, 101-point
//! interpolated average precision, the metric set
//! {AP, AP50, AP75, AP_L, AP_M}, and per-test-set aggregation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{BBox, Partition};
use crate::detector::Detection;
use crate::error::{Error, Result};

/// IoU thresholds averaged by the headline AP metric: 0.50 to 0.95, step 0.05.
pub const IOU_THRESHOLDS: [f64; 10] =
    [0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95];

/// Number of recall points of the interpolated precision average.
const RECALL_POINTS: usize = 101;

/// Intersection over union of two boxes; 0 when disjoint.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let ix = (a.x + a.w).min(b.x + b.w) - a.x.max(b.x);
    let iy = (a.y + a.h).min(b.y + b.h) - a.y.max(b.y);
    if ix <= 0.0 || iy <= 0.0 {
        return 0.0;
    }
    let inter = ix * iy;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Outcome of matching one frame's predictions against its ground truth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchResult {
    /// Matched ground-truth index per prediction, in the given order.
    pub pred_to_gt: Vec<Option<usize>>,
    /// Matched prediction index per ground-truth box.
    pub gt_to_pred: Vec<Option<usize>>,
}

impl MatchResult {
    pub fn true_positives(&self) -> usize {
        self.pred_to_gt.iter().filter(|m| m.is_some()).count()
    }

    pub fn false_positives(&self) -> usize {
        self.pred_to_gt.len() - self.true_positives()
    }

    pub fn false_negatives(&self) -> usize {
        self.gt_to_pred.iter().filter(|m| m.is_none()).count()
    }
}

/// Greedy one-to-one matching in score order.
///
/// `preds` must already be sorted by descending score. Each prediction takes
/// the unmatched ground-truth box of highest IoU when that IoU reaches
/// `iou_thr`; IoU ties go to the lower ground-truth index.
pub fn match_greedy(preds: &[Detection], gts: &[BBox], iou_thr: f64) -> MatchResult {
    debug_assert!(preds.windows(2).all(|w| w[0].score >= w[1].score));
    let flags = match_with_ignore(preds, gts, &vec![false; gts.len()], iou_thr);
    MatchResult { pred_to_gt: flags.pred_to_gt, gt_to_pred: flags.gt_to_pred }
}

struct IgnoreAwareMatch {
    pred_to_gt: Vec<Option<usize>>,
    gt_to_pred: Vec<Option<usize>>,
    /// Per prediction: matched an ignored ground-truth box.
    pred_hit_ignored: Vec<bool>,
}

/// Score-order matching that prefers non-ignored ground truth; ignored boxes
/// are matched only when no qualifying non-ignored box remains.
fn match_with_ignore(
    preds: &[Detection],
    gts: &[BBox],
    gt_ignore: &[bool],
    iou_thr: f64,
) -> IgnoreAwareMatch {
    let mut pred_to_gt = vec![None; preds.len()];
    let mut gt_to_pred = vec![None; gts.len()];
    let mut pred_hit_ignored = vec![false; preds.len()];

    for (pi, pred) in preds.iter().enumerate() {
        let mut best: Option<(usize, f64, bool)> = None; // (gt, iou, ignored)
        for (gi, gt) in gts.iter().enumerate() {
            if gt_to_pred[gi].is_some() {
                continue;
            }
            let overlap = iou(&pred.bbox, gt);
            if overlap < iou_thr {
                continue;
            }
            let candidate_ignored = gt_ignore[gi];
            match best {
                None => best = Some((gi, overlap, candidate_ignored)),
                Some((_, best_iou, best_ignored)) => {
                    // Any non-ignored candidate beats every ignored one;
                    // within a class, strictly higher IoU wins (first index
                    // keeps ties).
                    let better = if best_ignored && !candidate_ignored {
                        true
                    } else if !best_ignored && candidate_ignored {
                        false
                    } else {
                        overlap > best_iou
                    };
                    if better {
                        best = Some((gi, overlap, candidate_ignored));
                    }
                }
            }
        }
        if let Some((gi, _, ignored)) = best {
            pred_to_gt[pi] = Some(gi);
            gt_to_pred[gi] = Some(pi);
            pred_hit_ignored[pi] = ignored;
        }
    }
    IgnoreAwareMatch { pred_to_gt, gt_to_pred, pred_hit_ignored }
}

/// Disposition of one prediction after matching.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PredFlag {
    TruePositive,
    FalsePositive,
    /// Outside the evaluated size band; contributes nothing.
    Ignored,
}

/// One prediction's score and disposition, pooled over the dataset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoredFlag {
    pub score: f64,
    pub flag: PredFlag,
}

/// 101-point interpolated average precision.
///
/// Flags are pooled over the dataset and sorted by descending score here.
/// With no ground truth to recall the metric is undefined (`None`, excluded
/// from aggregation) unless scoreable predictions exist, which can only be
/// false positives and score 0.
pub fn average_precision(flags: &[ScoredFlag], gt_count: usize) -> Option<f64> {
    let mut ordered: Vec<&ScoredFlag> =
        flags.iter().filter(|f| f.flag != PredFlag::Ignored).collect();
    if gt_count == 0 {
        return if ordered.is_empty() { None } else { Some(0.0) };
    }
    ordered.sort_by(|a, b| b.score.total_cmp(&a.score));

    // Cumulative precision/recall points in score order.
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut curve: Vec<(f64, f64)> = Vec::with_capacity(ordered.len()); // (recall, precision)
    for entry in &ordered {
        match entry.flag {
            PredFlag::TruePositive => tp += 1,
            PredFlag::FalsePositive => fp += 1,
            PredFlag::Ignored => unreachable!(),
        }
        curve.push((tp as f64 / gt_count as f64, tp as f64 / (tp + fp) as f64));
    }

    // Precision envelope: max precision to the right.
    let mut envelope = curve.clone();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i].1 = envelope[i].1.max(envelope[i + 1].1);
    }

    let mut total = 0.0;
    let mut cursor = 0;
    for step in 0..RECALL_POINTS {
        let recall = step as f64 / (RECALL_POINTS - 1) as f64;
        while cursor < envelope.len() && envelope[cursor].0 < recall {
            cursor += 1;
        }
        if cursor < envelope.len() {
            total += envelope[cursor].1;
        }
    }
    Some(total / RECALL_POINTS as f64)
}

/// The metric set; iteration order is the reporting order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetricId {
    Ap,
    Ap50,
    Ap75,
    ApL,
    ApM,
}

impl MetricId {
    pub const ALL: [MetricId; 5] =
        [MetricId::Ap, MetricId::Ap50, MetricId::Ap75, MetricId::ApL, MetricId::ApM];

    pub fn as_str(&self) -> &'static str {
        match self {
            MetricId::Ap => "AP",
            MetricId::Ap50 => "AP50",
            MetricId::Ap75 => "AP75",
            MetricId::ApL => "AP_L",
            MetricId::ApM => "AP_M",
        }
    }
}

/// Metric values in [0, 1]; `None` marks an undefined metric (no ground
/// truth in the band), excluded from aggregation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricValues {
    pub ap: Option<f64>,
    pub ap50: Option<f64>,
    pub ap75: Option<f64>,
    pub ap_l: Option<f64>,
    pub ap_m: Option<f64>,
}

impl MetricValues {
    pub fn get(&self, id: MetricId) -> Option<f64> {
        match id {
            MetricId::Ap => self.ap,
            MetricId::Ap50 => self.ap50,
            MetricId::Ap75 => self.ap75,
            MetricId::ApL => self.ap_l,
            MetricId::ApM => self.ap_m,
        }
    }
}

/// Object-size band an evaluation is restricted to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SizeBand {
    All,
    /// Effective side in (32, 96).
    Medium,
    /// Effective side above 96.
    Large,
}

impl SizeBand {
    fn contains(&self, b: &BBox) -> bool {
        let side = b.effective_side();
        match self {
            SizeBand::All => true,
            SizeBand::Medium => side > 32.0 && side < 96.0,
            SizeBand::Large => side > 96.0,
        }
    }
}

/// One frame's predictions and ground truth.
#[derive(Clone, Debug, Default)]
pub struct EvalFrame {
    pub detections: Vec<Detection>,
    pub ground_truth: Vec<BBox>,
}

fn band_flags(
    frames: &[EvalFrame],
    iou_thr: f64,
    band: SizeBand,
) -> (Vec<ScoredFlag>, usize) {
    let mut flags = Vec::new();
    let mut gt_count = 0usize;
    for frame in frames {
        let mut preds = frame.detections.clone();
        preds.sort_by(|a, b| b.score.total_cmp(&a.score));
        let gt_ignore: Vec<bool> =
            frame.ground_truth.iter().map(|g| !band.contains(g)).collect();
        gt_count += gt_ignore.iter().filter(|&&ig| !ig).count();

        let matched = match_with_ignore(&preds, &frame.ground_truth, &gt_ignore, iou_thr);
        for (pi, pred) in preds.iter().enumerate() {
            let flag = match matched.pred_to_gt[pi] {
                Some(_) if matched.pred_hit_ignored[pi] => PredFlag::Ignored,
                Some(_) => PredFlag::TruePositive,
                // Unmatched predictions outside the band are not penalized.
                None if !band.contains(&pred.bbox) => PredFlag::Ignored,
                None => PredFlag::FalsePositive,
            };
            flags.push(ScoredFlag { score: pred.score, flag });
        }
    }
    (flags, gt_count)
}

fn banded_ap(frames: &[EvalFrame], band: SizeBand) -> Option<f64> {
    let mut total = 0.0;
    for &thr in &IOU_THRESHOLDS {
        let (flags, gt_count) = band_flags(frames, thr, band);
        total += average_precision(&flags, gt_count)?;
    }
    Some(total / IOU_THRESHOLDS.len() as f64)
}

/// Computes the metric set over a collection of frames.
///
/// Matching is per frame; the precision-recall curve pools all frames'
/// predictions in global score order.
pub fn coco_metrics(frames: &[EvalFrame]) -> MetricValues {
    let single = |thr: f64| {
        let (flags, gt_count) = band_flags(frames, thr, SizeBand::All);
        average_precision(&flags, gt_count)
    };
    MetricValues {
        ap: banded_ap(frames, SizeBand::All),
        ap50: single(0.50),
        ap75: single(0.75),
        ap_l: banded_ap(frames, SizeBand::Large),
        ap_m: banded_ap(frames, SizeBand::Medium),
    }
}

/// Metric set for a single prediction/ground-truth pair.
pub fn coco_metrics_single(preds: &[Detection], gts: &[BBox]) -> MetricValues {
    coco_metrics(&[EvalFrame { detections: preds.to_vec(), ground_truth: gts.to_vec() }])
}

/// Mean and spread of one metric over a partition's configurations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    /// Population standard deviation (divisor n).
    pub std_population: f64,
    /// Sample standard deviation (divisor n - 1); 0 for a single value.
    pub std_sample: f64,
    /// Number of configurations with a defined value.
    pub count: usize,
}

/// Per-test-set score table: per-config metric values plus per-metric means.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub test_set: String,
    /// Rows in partition order.
    pub per_config: Vec<(String, MetricValues)>,
    /// Undefined per-config values are excluded from the aggregates.
    pub aggregates: BTreeMap<MetricId, Aggregate>,
}

/// Aggregates per-config metrics over a partition.
///
/// Every configuration of the partition must be present; per-metric means
/// are arithmetic means of the defined values.
pub fn score_partition(
    partition: &Partition,
    per_config: &BTreeMap<String, MetricValues>,
) -> Result<ScoreReport> {
    let mut rows = Vec::with_capacity(partition.config_ids.len());
    for id in &partition.config_ids {
        let values = per_config
            .get(*id)
            .ok_or_else(|| Error::MissingConfig((*id).to_string()))?;
        rows.push(((*id).to_string(), *values));
    }

    let mut aggregates = BTreeMap::new();
    for metric in MetricId::ALL {
        let values: Vec<f64> = rows.iter().filter_map(|(_, v)| v.get(metric)).collect();
        if values.is_empty() {
            continue;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        let std_population = (ss / n).sqrt();
        let std_sample = if values.len() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
        aggregates.insert(
            metric,
            Aggregate { mean, std_population, std_sample, count: values.len() },
        );
    }

    Ok(ScoreReport {
        test_set: partition.name.to_string(),
        per_config: rows,
        aggregates,
    })
}
