//! Count-supervised critical-point localization on 2D feature grids.
//!
//! The pipeline turns an `n x n x k` feature grid into four 1D sequences
//! (one per raster scan order), runs each through a two-layer LSTM with a
//! shared two-class head, and trains with a count-based CTC loss that only
//! needs the number of objects per grid. Decoded object runs map back to 2D
//! critical points, which seed multi-aspect-ratio box proposals. Detection
//! metrics (recall/IoU curves, CorLoc, AP/mAP) and a synthetic scene
//! generator make the whole loop testable end to end.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the `std` feature
//! (default) switches float math to the native intrinsics, and the `rayon`
//! feature parallelizes gradient computation inside training batches.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod cctc;
pub mod eval;
pub mod grid;
pub mod math;
pub mod net;
pub mod proposals;
pub mod synth;
pub mod train;
