//! Critical points and box proposal geometry.
//!
//! Decoded object runs map back to 2D critical points through the scan
//! order's inverse index map. Around each point, boxes of five aspect
//! ratios grow outward in 2-cell steps of the short side until they would
//! cross the grid border. Coordinates are inclusive integer cells:
//! `x` is the column axis, `y` the row axis.

use alloc::vec::Vec;
use core::fmt;

use crate::cctc::Alignment;
use crate::eval;
use crate::grid::ScanOrder;
use crate::math;
use crate::net::FrameLogProbs;

/// Aspect ratios as (width, height) multiples.
pub const ASPECT_RATIOS: [(u32, u32); 5] = [(1, 1), (2, 1), (1, 2), (1, 3), (3, 1)];

/// Short side of the first proposal box, in cells.
pub const BASE_SHORT_SIDE: usize = 2;

/// Cells added to the short side at every growth step.
pub const GROWTH_STEP: usize = 2;

/// Critical points closer than this Chebyshev distance merge into one.
pub const MERGE_RADIUS: usize = 1;

/// A decoded 2D location, scored by the mean per-frame object
/// log-probability of the run that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub row: usize,
    pub col: usize,
    pub order: ScanOrder,
    pub score: f64,
}

/// Axis-aligned box with inclusive integer corners.
#[derive(Debug, Clone, PartialEq)]
pub struct BBox {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
    pub score: f64,
    /// `(row, col)` of the generating critical point (for ground-truth
    /// boxes, the floor midpoint).
    pub center: (usize, usize),
}

impl BBox {
    /// Builds a box from inclusive corners; the center defaults to the
    /// floor midpoint and the score to zero.
    pub fn from_corners(x0: usize, y0: usize, x1: usize, y1: usize) -> Self {
        debug_assert!(x0 <= x1 && y0 <= y1);
        Self {
            x0,
            y0,
            x1,
            y1,
            score: 0.0,
            center: ((y0 + y1) / 2, (x0 + x1) / 2),
        }
    }

    pub fn width(&self) -> usize {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0 + 1
    }

    /// Inclusive cell-count area.
    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    pub fn contains_cell(&self, row: usize, col: usize) -> bool {
        row >= self.y0 && row <= self.y1 && col >= self.x0 && col <= self.x1
    }

    pub fn contains_box(&self, other: &BBox) -> bool {
        self.x0 <= other.x0 && self.y0 <= other.y0 && self.x1 >= other.x1 && self.y1 >= other.y1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProposalError {
    EmptyBoxes,
    ScoreLenMismatch { boxes: usize, scores: usize },
    BadThreshold { threshold: f64 },
}

impl fmt::Display for ProposalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProposalError::EmptyBoxes => write!(f, "box list must be nonempty"),
            ProposalError::ScoreLenMismatch { boxes, scores } => {
                write!(f, "{scores} scores for {boxes} boxes")
            }
            ProposalError::BadThreshold { threshold } => {
                write!(f, "overlap threshold {threshold} must lie in (0, 1)")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ProposalError {}

/// Maps each run midpoint of each direction's alignment back to a 2D cell
/// and merges near-duplicates (Chebyshev distance <= 1), keeping the
/// higher-scored point.
pub fn to_critical_points(
    decoded: &[(ScanOrder, &Alignment, &FrameLogProbs)],
    n: usize,
) -> Vec<CriticalPoint> {
    let mut candidates = Vec::new();
    for (order, alignment, logp) in decoded {
        for &(start, end) in &alignment.emitted_runs {
            let mid = (start + end) / 2;
            let Ok((row, col)) = order.index_to_coord(mid, n) else {
                continue;
            };
            let len = (end - start + 1) as f64;
            let score = (start..=end).map(|t| logp.object(t)).sum::<f64>() / len;
            candidates.push(CriticalPoint {
                row,
                col,
                order: *order,
                score,
            });
        }
    }

    // Highest score wins its neighborhood; ordering is made total so the
    // merge result is deterministic.
    candidates.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.row.cmp(&b.row))
            .then(a.col.cmp(&b.col))
            .then(a.order.index().cmp(&b.order.index()))
    });
    let mut merged: Vec<CriticalPoint> = Vec::new();
    for point in candidates {
        let near = merged.iter().any(|kept| {
            kept.row.abs_diff(point.row) <= MERGE_RADIUS
                && kept.col.abs_diff(point.col) <= MERGE_RADIUS
        });
        if !near {
            merged.push(point);
        }
    }
    merged
}

/// Grows proposal boxes of the five aspect ratios around a critical point.
///
/// For each ratio the short side starts at [`BASE_SHORT_SIDE`] and grows by
/// [`GROWTH_STEP`]; the long side scales to preserve the ratio (rounded to
/// nearest integer). Boxes of even side length sit with their center at the
/// upper-left of the two central cells. Generation stops at the first box
/// that would cross the grid border; boxes are never truncated.
pub fn generate_proposals(point: &CriticalPoint, n: usize) -> Vec<BBox> {
    let mut boxes = Vec::new();
    for (rw, rh) in ASPECT_RATIOS {
        let scale = rw.min(rh) as f64;
        let mut short = BASE_SHORT_SIDE;
        loop {
            let factor = short as f64 / scale;
            let width = math::round(rw as f64 * factor) as i64;
            let height = math::round(rh as f64 * factor) as i64;
            let x0 = point.col as i64 - (width - 1) / 2;
            let y0 = point.row as i64 - (height - 1) / 2;
            let x1 = x0 + width - 1;
            let y1 = y0 + height - 1;
            if x0 < 0 || y0 < 0 || x1 >= n as i64 || y1 >= n as i64 {
                break;
            }
            boxes.push(BBox {
                x0: x0 as usize,
                y0: y0 as usize,
                x1: x1 as usize,
                y1: y1 as usize,
                score: point.score,
                center: (point.row, point.col),
            });
            short += GROWTH_STEP;
        }
    }
    boxes
}

/// Picks the top-scoring box as pseudo ground truth (ties: larger area,
/// then first index) and returns it with every box overlapping it at IoU
/// at or above `overlap_threshold`.
pub fn select_pseudo_ground_truth(
    boxes: &[BBox],
    scores: &[f64],
    overlap_threshold: f64,
) -> Result<(BBox, Vec<BBox>), ProposalError> {
    if boxes.is_empty() {
        return Err(ProposalError::EmptyBoxes);
    }
    if boxes.len() != scores.len() {
        return Err(ProposalError::ScoreLenMismatch {
            boxes: boxes.len(),
            scores: scores.len(),
        });
    }
    if !(overlap_threshold > 0.0 && overlap_threshold < 1.0) {
        return Err(ProposalError::BadThreshold {
            threshold: overlap_threshold,
        });
    }

    let mut best = 0usize;
    for idx in 1..boxes.len() {
        let better = scores[idx] > scores[best]
            || (scores[idx] == scores[best] && boxes[idx].area() > boxes[best].area());
        if better {
            best = idx;
        }
    }
    let pgt = boxes[best].clone();
    let positives = boxes
        .iter()
        .filter(|b| eval::iou(b, &pgt) >= overlap_threshold)
        .cloned()
        .collect();
    Ok((pgt, positives))
}
