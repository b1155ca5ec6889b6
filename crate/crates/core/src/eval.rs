//! Detection metrics: IoU, recall-vs-IoU curves, CorLoc, and AP/mAP.
//!
//! Box areas use the inclusive integer convention fixed project-wide:
//! a box spanning `x0..=x1` covers `x1 - x0 + 1` cells, so the IoU of
//! `(0,0,1,1)` and `(1,1,2,2)` is 1/7.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::proposals::BBox;

/// AP interpolation variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    /// Area under the precision envelope over all recall points.
    AllPoint,
    /// Classic 11-point average at recalls 0.0, 0.1, ..., 1.0.
    Voc07,
}

impl Interpolation {
    pub fn as_str(self) -> &'static str {
        match self {
            Interpolation::AllPoint => "all_point",
            Interpolation::Voc07 => "voc07",
        }
    }
}

/// Ground-truth box with its class.
#[derive(Debug, Clone, PartialEq)]
pub struct GtObject {
    pub bbox: BBox,
    pub class_id: u32,
}

/// Per-image ground truth; images with no objects still get an entry.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruthSet {
    pub images: BTreeMap<u64, Vec<GtObject>>,
}

/// A scored detection attributed to an image.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredBox {
    pub image: u64,
    pub bbox: BBox,
    pub score: f64,
}

/// Aggregated localization metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub recall_at_iou: Vec<(f64, f64)>,
    pub cor_loc: f64,
    pub ap_per_class: BTreeMap<u32, f64>,
    pub mean_ap: f64,
    pub mean_proposals_per_image: f64,
    /// Classes that had detections but no ground truth (AP forced to 0).
    pub zero_gt_classes: Vec<u32>,
    pub interpolation: Interpolation,
}

/// Intersection-over-union with inclusive integer areas.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let ix0 = a.x0.max(b.x0);
    let iy0 = a.y0.max(b.y0);
    let ix1 = a.x1.min(b.x1);
    let iy1 = a.y1.min(b.y1);
    if ix1 < ix0 || iy1 < iy0 {
        return 0.0;
    }
    let inter = ((ix1 - ix0 + 1) * (iy1 - iy0 + 1)) as f64;
    let union = (a.area() + b.area()) as f64 - inter;
    inter / union
}

/// Fraction of ground-truth boxes covered by at least one proposal at each
/// IoU threshold. Coverage, not assignment: one proposal may match several
/// ground-truth boxes. Returns an empty curve when there is no ground truth.
pub fn recall_curve(
    proposals: &BTreeMap<u64, Vec<BBox>>,
    ground_truth: &BTreeMap<u64, Vec<BBox>>,
    thresholds: &[f64],
) -> Vec<(f64, f64)> {
    let mut best_ious = Vec::new();
    for (image, boxes) in ground_truth {
        let candidates = proposals.get(image).map(Vec::as_slice).unwrap_or(&[]);
        for gt in boxes {
            let best = candidates
                .iter()
                .map(|p| iou(p, gt))
                .fold(0.0f64, f64::max);
            best_ious.push(best);
        }
    }
    if best_ious.is_empty() {
        return Vec::new();
    }
    let total = best_ious.len() as f64;
    thresholds
        .iter()
        .map(|&tau| {
            let hit = best_ious.iter().filter(|&&b| b >= tau).count() as f64;
            (tau, hit / total)
        })
        .collect()
}

/// Fraction of positive (image, class) pairs whose candidate box reaches
/// IoU >= 0.5 with some ground-truth box of that class. A missing
/// candidate counts as a miss.
pub fn cor_loc(candidates: &BTreeMap<(u64, u32), BBox>, ground_truth: &GroundTruthSet) -> f64 {
    let mut positives = 0usize;
    let mut hits = 0usize;
    for (&image, objects) in &ground_truth.images {
        let mut classes: Vec<u32> = objects.iter().map(|o| o.class_id).collect();
        classes.sort_unstable();
        classes.dedup();
        for class in classes {
            positives += 1;
            if let Some(candidate) = candidates.get(&(image, class)) {
                let hit = objects
                    .iter()
                    .filter(|o| o.class_id == class)
                    .any(|o| iou(candidate, &o.bbox) >= 0.5);
                if hit {
                    hits += 1;
                }
            }
        }
    }
    if positives == 0 {
        0.0
    } else {
        hits as f64 / positives as f64
    }
}

/// Average precision for one class.
///
/// Detections are visited in descending score order (stable for ties); a
/// detection is a true positive when its best-IoU unmatched ground-truth
/// box in the same image reaches the threshold, otherwise a false positive
/// (duplicates on an already matched box included).
pub fn average_precision(
    detections: &[ScoredBox],
    ground_truth: &BTreeMap<u64, Vec<BBox>>,
    iou_threshold: f64,
    interpolation: Interpolation,
) -> f64 {
    let total_gt: usize = ground_truth.values().map(Vec::len).sum();
    if total_gt == 0 {
        return 0.0;
    }

    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| detections[b].score.total_cmp(&detections[a].score));

    let mut matched: BTreeMap<u64, Vec<bool>> = ground_truth
        .iter()
        .map(|(&img, boxes)| (img, alloc::vec![false; boxes.len()]))
        .collect();

    let mut true_positives = 0usize;
    let mut false_positives = 0usize;
    // (recall, precision) after each detection.
    let mut points: Vec<(f64, f64)> = Vec::with_capacity(detections.len());
    for idx in order {
        let det = &detections[idx];
        let mut best: Option<(usize, f64)> = None;
        if let Some(boxes) = ground_truth.get(&det.image) {
            let flags = &matched[&det.image];
            for (gi, gt) in boxes.iter().enumerate() {
                if flags[gi] {
                    continue;
                }
                let overlap = iou(&det.bbox, gt);
                if best.map_or(true, |(_, b)| overlap > b) {
                    best = Some((gi, overlap));
                }
            }
        }
        match best {
            Some((gi, overlap)) if overlap >= iou_threshold => {
                matched.get_mut(&det.image).unwrap()[gi] = true;
                true_positives += 1;
            }
            _ => false_positives += 1,
        }
        let recall = true_positives as f64 / total_gt as f64;
        let precision =
            true_positives as f64 / (true_positives + false_positives) as f64;
        points.push((recall, precision));
    }

    match interpolation {
        Interpolation::AllPoint => {
            // Precision envelope: max precision at recall >= r.
            let mut envelope = points.clone();
            let mut running = 0.0f64;
            for p in envelope.iter_mut().rev() {
                running = running.max(p.1);
                p.1 = running;
            }
            let mut ap = 0.0;
            let mut prev_recall = 0.0;
            for (recall, precision) in envelope {
                if recall > prev_recall {
                    ap += (recall - prev_recall) * precision;
                    prev_recall = recall;
                }
            }
            ap
        }
        Interpolation::Voc07 => {
            let mut sum = 0.0;
            for step in 0..=10 {
                let r = step as f64 / 10.0;
                let p = points
                    .iter()
                    .filter(|(recall, _)| *recall >= r)
                    .map(|(_, precision)| *precision)
                    .fold(0.0f64, f64::max);
                sum += p;
            }
            sum / 11.0
        }
    }
}

/// Computes the full report: recall curve over class-agnostic proposals,
/// CorLoc from the top detection per (image, class), and AP per class.
pub fn evaluate(
    proposals: &BTreeMap<u64, Vec<BBox>>,
    detections_per_class: &BTreeMap<u32, Vec<ScoredBox>>,
    ground_truth: &GroundTruthSet,
    recall_thresholds: &[f64],
    iou_threshold: f64,
    interpolation: Interpolation,
) -> EvalReport {
    let all_gt: BTreeMap<u64, Vec<BBox>> = ground_truth
        .images
        .iter()
        .map(|(&img, objs)| (img, objs.iter().map(|o| o.bbox.clone()).collect()))
        .collect();
    let recall_at_iou = recall_curve(proposals, &all_gt, recall_thresholds);

    let mut candidates: BTreeMap<(u64, u32), BBox> = BTreeMap::new();
    for (&class, dets) in detections_per_class {
        let mut top: BTreeMap<u64, &ScoredBox> = BTreeMap::new();
        for det in dets {
            let replace = top
                .get(&det.image)
                .map_or(true, |cur| det.score > cur.score);
            if replace {
                top.insert(det.image, det);
            }
        }
        for (img, det) in top {
            candidates.insert((img, class), det.bbox.clone());
        }
    }
    let cor_loc_value = cor_loc(&candidates, ground_truth);

    let mut classes: Vec<u32> = ground_truth
        .images
        .values()
        .flatten()
        .map(|o| o.class_id)
        .chain(detections_per_class.keys().copied())
        .collect();
    classes.sort_unstable();
    classes.dedup();

    let mut ap_per_class = BTreeMap::new();
    let mut zero_gt_classes = Vec::new();
    for &class in &classes {
        let gt_class: BTreeMap<u64, Vec<BBox>> = ground_truth
            .images
            .iter()
            .map(|(&img, objs)| {
                (
                    img,
                    objs.iter()
                        .filter(|o| o.class_id == class)
                        .map(|o| o.bbox.clone())
                        .collect::<Vec<_>>(),
                )
            })
            .filter(|(_, boxes): &(u64, Vec<BBox>)| !boxes.is_empty())
            .collect();
        let empty = Vec::new();
        let dets = detections_per_class.get(&class).unwrap_or(&empty);
        if gt_class.is_empty() {
            zero_gt_classes.push(class);
            ap_per_class.insert(class, 0.0);
        } else {
            ap_per_class.insert(
                class,
                average_precision(dets, &gt_class, iou_threshold, interpolation),
            );
        }
    }
    let mean_ap = if ap_per_class.is_empty() {
        0.0
    } else {
        ap_per_class.values().sum::<f64>() / ap_per_class.len() as f64
    };

    let image_count = ground_truth.images.len();
    let proposal_count: usize = proposals.values().map(Vec::len).sum();
    let mean_proposals_per_image = if image_count == 0 {
        0.0
    } else {
        proposal_count as f64 / image_count as f64
    };

    EvalReport {
        recall_at_iou,
        cor_loc: cor_loc_value,
        ap_per_class,
        mean_ap,
        mean_proposals_per_image,
        zero_gt_classes,
        interpolation,
    }
}
