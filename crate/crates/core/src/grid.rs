//! Feature grids and the four raster scan-order serializations.
//!
//! A [`FeatureGrid`] is a square `n x n` grid of `k`-dimensional cells. Each
//! [`ScanOrder`] is a bijection between timesteps `0..n*n` and grid
//! coordinates, so a serialized sequence can always be mapped back onto the
//! grid exactly.

use alloc::vec::Vec;
use core::fmt;

/// Square `n x n` grid of `k`-dim feature vectors.
///
/// Values are stored flat as `(row * n + col) * k + channel`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    side: usize,
    channels: usize,
    values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridError {
    /// Grids must be square; rectangular inputs are rejected, not padded.
    NotSquare { height: usize, width: usize },
    SideTooSmall { side: usize },
    NoChannels,
    ValueLenMismatch { expected: usize, got: usize },
    NonFiniteValue { index: usize },
    /// A count label larger than the sequence can ever hold.
    InfeasibleCount { count: usize, capacity: usize },
    TimestepOutOfRange { t: usize, len: usize },
    CoordOutOfRange { row: usize, col: usize, side: usize },
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::NotSquare { height, width } => {
                write!(f, "grid must be square, got {height}x{width}")
            }
            GridError::SideTooSmall { side } => {
                write!(f, "grid side must be at least 2, got {side}")
            }
            GridError::NoChannels => write!(f, "grid needs at least one channel"),
            GridError::ValueLenMismatch { expected, got } => {
                write!(f, "expected {expected} values, got {got}")
            }
            GridError::NonFiniteValue { index } => {
                write!(f, "non-finite value at flat index {index}")
            }
            GridError::InfeasibleCount { count, capacity } => {
                write!(f, "count {count} exceeds sequence capacity {capacity}")
            }
            GridError::TimestepOutOfRange { t, len } => {
                write!(f, "timestep {t} out of range for length {len}")
            }
            GridError::CoordOutOfRange { row, col, side } => {
                write!(f, "coordinate ({row}, {col}) outside {side}x{side} grid")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GridError {}

impl FeatureGrid {
    /// Builds a grid, rejecting non-square shapes, bad lengths and
    /// non-finite values.
    pub fn new(
        height: usize,
        width: usize,
        channels: usize,
        values: Vec<f64>,
    ) -> Result<Self, GridError> {
        if height != width {
            return Err(GridError::NotSquare { height, width });
        }
        if height < 2 {
            return Err(GridError::SideTooSmall { side: height });
        }
        if channels == 0 {
            return Err(GridError::NoChannels);
        }
        let expected = height * width * channels;
        if values.len() != expected {
            return Err(GridError::ValueLenMismatch {
                expected,
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFiniteValue { index });
        }
        Ok(Self {
            side: height,
            channels,
            values,
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The `k`-dim feature vector at `(row, col)`.
    pub fn cell(&self, row: usize, col: usize) -> &[f64] {
        let base = (row * self.side + col) * self.channels;
        &self.values[base..base + self.channels]
    }
}

/// One of the four raster traversals of a square grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScanOrder {
    RowMajorForward,
    RowMajorReverse,
    ColMajorForward,
    ColMajorReverse,
}

impl ScanOrder {
    pub const ALL: [ScanOrder; 4] = [
        ScanOrder::RowMajorForward,
        ScanOrder::RowMajorReverse,
        ScanOrder::ColMajorForward,
        ScanOrder::ColMajorReverse,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScanOrder::RowMajorForward => "row_major_forward",
            ScanOrder::RowMajorReverse => "row_major_reverse",
            ScanOrder::ColMajorForward => "col_major_forward",
            ScanOrder::ColMajorReverse => "col_major_reverse",
        }
    }

    /// Position of this order in [`ScanOrder::ALL`].
    pub fn index(self) -> usize {
        match self {
            ScanOrder::RowMajorForward => 0,
            ScanOrder::RowMajorReverse => 1,
            ScanOrder::ColMajorForward => 2,
            ScanOrder::ColMajorReverse => 3,
        }
    }

    /// Maps timestep `t` to the `(row, col)` this order visits at `t`.
    pub fn index_to_coord(self, t: usize, n: usize) -> Result<(usize, usize), GridError> {
        let len = n * n;
        if t >= len {
            return Err(GridError::TimestepOutOfRange { t, len });
        }
        // Reverse orders visit the same cells as their forward pair, last first.
        let coord = match self {
            ScanOrder::RowMajorForward => (t / n, t % n),
            ScanOrder::RowMajorReverse => {
                let r = len - 1 - t;
                (r / n, r % n)
            }
            ScanOrder::ColMajorForward => (t % n, t / n),
            ScanOrder::ColMajorReverse => {
                let r = len - 1 - t;
                (r % n, r / n)
            }
        };
        Ok(coord)
    }

    /// Inverse of [`ScanOrder::index_to_coord`].
    pub fn coord_to_index(self, row: usize, col: usize, n: usize) -> Result<usize, GridError> {
        if row >= n || col >= n {
            return Err(GridError::CoordOutOfRange { row, col, side: n });
        }
        let len = n * n;
        let t = match self {
            ScanOrder::RowMajorForward => row * n + col,
            ScanOrder::RowMajorReverse => len - 1 - (row * n + col),
            ScanOrder::ColMajorForward => col * n + row,
            ScanOrder::ColMajorReverse => len - 1 - (col * n + row),
        };
        Ok(t)
    }
}

impl core::str::FromStr for ScanOrder {
    type Err = &'static str;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "row_major_forward" => Ok(ScanOrder::RowMajorForward),
            "row_major_reverse" => Ok(ScanOrder::RowMajorReverse),
            "col_major_forward" => Ok(ScanOrder::ColMajorForward),
            "col_major_reverse" => Ok(ScanOrder::ColMajorReverse),
            _ => Err("unknown scan order"),
        }
    }
}

impl fmt::Display for ScanOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A grid serialized along one scan order, together with its count label.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSample {
    frames: Vec<f64>,
    t_len: usize,
    frame_dim: usize,
    order: ScanOrder,
    count: usize,
    source_grid: u64,
}

impl SequenceSample {
    pub fn t_len(&self) -> usize {
        self.t_len
    }

    pub fn frame_dim(&self) -> usize {
        self.frame_dim
    }

    pub fn order(&self) -> ScanOrder {
        self.order
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn source_grid(&self) -> u64 {
        self.source_grid
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        let base = t * self.frame_dim;
        &self.frames[base..base + self.frame_dim]
    }

    pub fn frames(&self) -> &[f64] {
        &self.frames
    }
}

/// Serializes `grid` along `order` into a length `n*n` sequence labelled
/// with `count`. Rejects counts that can never fit in the sequence.
pub fn serialize(
    grid: &FeatureGrid,
    order: ScanOrder,
    count: usize,
    source_grid: u64,
) -> Result<SequenceSample, GridError> {
    let n = grid.side();
    let k = grid.channels();
    let t_len = n * n;
    if count > t_len {
        return Err(GridError::InfeasibleCount {
            count,
            capacity: t_len,
        });
    }
    let mut frames = Vec::with_capacity(t_len * k);
    for t in 0..t_len {
        let (row, col) = order.index_to_coord(t, n)?;
        frames.extend_from_slice(grid.cell(row, col));
    }
    Ok(SequenceSample {
        frames,
        t_len,
        frame_dim: k,
        order,
        count,
        source_grid,
    })
}

/// Rebuilds the original grid from a serialized sample.
pub fn reconstruct_grid(sample: &SequenceSample) -> Result<FeatureGrid, GridError> {
    let n = sample.t_len().isqrt();
    debug_assert_eq!(n * n, sample.t_len());
    let k = sample.frame_dim();
    let mut values = alloc::vec![0.0; n * n * k];
    for t in 0..sample.t_len() {
        let (row, col) = sample.order().index_to_coord(t, n)?;
        let base = (row * n + col) * k;
        values[base..base + k].copy_from_slice(sample.frame(t));
    }
    FeatureGrid::new(n, n, k, values)
}
