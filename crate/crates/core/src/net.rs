//! Two-layer unidirectional LSTM with a shared two-class linear head.
//!
//! `forward` produces per-frame log-probabilities over {blank, object} plus
//! a tape of cached activations; `backward` replays the tape and returns
//! exact parameter gradients for a given gradient on the pre-softmax
//! logits. All arithmetic is `f64` and fully deterministic.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::grid::SequenceSample;
use crate::math;

/// Standard deviation of the Gaussian weight initialization.
pub const INIT_STD_DEV: f64 = 0.01;

/// Number of output classes: {blank, object}.
pub const NUM_CLASSES: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub enum NetError {
    BadSizes,
    FrameDimMismatch { expected: usize, got: usize },
    EmptySequence,
    NotLogDistribution { row: usize, error: f64 },
    TapeMismatch,
    DLogitsLenMismatch { expected: usize, got: usize },
}

impl fmt::Display for NetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetError::BadSizes => write!(f, "layer sizes must be at least 1"),
            NetError::FrameDimMismatch { expected, got } => {
                write!(f, "frame dimension {got} does not match input size {expected}")
            }
            NetError::EmptySequence => write!(f, "sequence must contain at least one frame"),
            NetError::NotLogDistribution { row, error } => {
                write!(f, "row {row} is not a log-distribution (|logsumexp| = {error:e})")
            }
            NetError::TapeMismatch => write!(f, "tape shape does not match parameters"),
            NetError::DLogitsLenMismatch { expected, got } => {
                write!(f, "expected {expected} logit gradients, got {got}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for NetError {}

/// Gate rows are stacked input, forget, cell, output; row `gate * H + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer {
    pub input_size: usize,
    pub hidden_size: usize,
    /// `4H x input_size`, row-major.
    pub w_ih: Vec<f64>,
    /// `4H x H`, row-major.
    pub w_hh: Vec<f64>,
    /// `4H`.
    pub bias: Vec<f64>,
}

impl LstmLayer {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        Self {
            input_size,
            hidden_size,
            w_ih: vec![0.0; 4 * hidden_size * input_size],
            w_hh: vec![0.0; 4 * hidden_size * hidden_size],
            bias: vec![0.0; 4 * hidden_size],
        }
    }

    fn add_assign(&mut self, other: &Self) {
        add_slices(&mut self.w_ih, &other.w_ih);
        add_slices(&mut self.w_hh, &other.w_hh);
        add_slices(&mut self.bias, &other.bias);
    }

    fn scale(&mut self, s: f64) {
        scale_slice(&mut self.w_ih, s);
        scale_slice(&mut self.w_hh, s);
        scale_slice(&mut self.bias, s);
    }

    fn sq_l2(&self) -> f64 {
        sq_sum(&self.w_ih) + sq_sum(&self.w_hh) + sq_sum(&self.bias)
    }
}

/// Stacked unidirectional LSTM layers (two by construction).
#[derive(Debug, Clone, PartialEq)]
pub struct LstmStack {
    pub layers: Vec<LstmLayer>,
}

impl LstmStack {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        Self {
            layers: vec![
                LstmLayer::zeros(input_size, hidden_size),
                LstmLayer::zeros(hidden_size, hidden_size),
            ],
        }
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].input_size
    }

    pub fn hidden_size(&self) -> usize {
        self.layers.last().map(|l| l.hidden_size).unwrap_or(0)
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.add_assign(b);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for layer in &mut self.layers {
            layer.scale(s);
        }
    }

    pub fn sq_l2(&self) -> f64 {
        self.layers.iter().map(LstmLayer::sq_l2).sum()
    }
}

/// Linear head mapping the top hidden state to class logits.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub input_size: usize,
    pub output_size: usize,
    /// `output_size x input_size`, row-major.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Linear {
    pub fn zeros(input_size: usize, output_size: usize) -> Self {
        Self {
            input_size,
            output_size,
            weight: vec![0.0; output_size * input_size],
            bias: vec![0.0; output_size],
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        add_slices(&mut self.weight, &other.weight);
        add_slices(&mut self.bias, &other.bias);
    }

    pub fn scale(&mut self, s: f64) {
        scale_slice(&mut self.weight, s);
        scale_slice(&mut self.bias, s);
    }

    pub fn sq_l2(&self) -> f64 {
        sq_sum(&self.weight) + sq_sum(&self.bias)
    }
}

/// Full parameter set for one scan direction: stacked LSTM plus head.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub stack: LstmStack,
    pub head: Linear,
}

impl LstmParams {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        Self {
            stack: LstmStack::zeros(input_size, hidden_size),
            head: Linear::zeros(hidden_size, NUM_CLASSES),
        }
    }

    pub fn input_size(&self) -> usize {
        self.stack.input_size()
    }

    pub fn hidden_size(&self) -> usize {
        self.stack.hidden_size()
    }

    /// All parameters in a fixed order (layer w_ih, w_hh, bias; head
    /// weight, bias). The same order is used by `set_from_flat`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.stack.layers {
            out.extend_from_slice(&layer.w_ih);
            out.extend_from_slice(&layer.w_hh);
            out.extend_from_slice(&layer.bias);
        }
        out.extend_from_slice(&self.head.weight);
        out.extend_from_slice(&self.head.bias);
        out
    }

    pub fn set_from_flat(&mut self, flat: &[f64]) {
        let mut pos = 0;
        for layer in &mut self.stack.layers {
            for dst in [&mut layer.w_ih, &mut layer.w_hh, &mut layer.bias] {
                dst.copy_from_slice(&flat[pos..pos + dst.len()]);
                pos += dst.len();
            }
        }
        for dst in [&mut self.head.weight, &mut self.head.bias] {
            dst.copy_from_slice(&flat[pos..pos + dst.len()]);
            pos += dst.len();
        }
        debug_assert_eq!(pos, flat.len());
    }
}

/// Gradients with the same shape as [`LstmParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads {
    pub stack: LstmStack,
    pub head: Linear,
}

impl ParamGrads {
    pub fn zeros_like(params: &LstmParams) -> Self {
        Self {
            stack: LstmStack::zeros(params.input_size(), params.hidden_size()),
            head: Linear::zeros(params.head.input_size, params.head.output_size),
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        self.stack.add_assign(&other.stack);
        self.head.add_assign(&other.head);
    }

    pub fn scale(&mut self, s: f64) {
        self.stack.scale(s);
        self.head.scale(s);
    }

    pub fn l2_norm(&self) -> f64 {
        math::sqrt(self.stack.sq_l2() + self.head.sq_l2())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        LstmParams {
            stack: self.stack.clone(),
            head: self.head.clone(),
        }
        .to_flat()
    }
}

/// Per-frame log-probabilities over {blank = 0, object = 1}.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLogProbs {
    t_len: usize,
    log_p: Vec<f64>,
}

impl FrameLogProbs {
    /// Wraps a `T x 2` row-major table, checking every row is a
    /// log-distribution within 1e-9.
    pub fn new(log_p: Vec<f64>) -> Result<Self, NetError> {
        if log_p.is_empty() || log_p.len() % NUM_CLASSES != 0 {
            return Err(NetError::EmptySequence);
        }
        let t_len = log_p.len() / NUM_CLASSES;
        for t in 0..t_len {
            let err = math::abs(math::log_sum_exp2(log_p[2 * t], log_p[2 * t + 1]));
            if !(err <= 1e-9) {
                return Err(NetError::NotLogDistribution { row: t, error: err });
            }
        }
        Ok(Self { t_len, log_p })
    }

    /// Normalizes raw `T x 2` logits through a log-softmax.
    pub fn from_logits(logits: &[f64]) -> Result<Self, NetError> {
        if logits.is_empty() || logits.len() % NUM_CLASSES != 0 {
            return Err(NetError::EmptySequence);
        }
        let mut log_p = Vec::with_capacity(logits.len());
        for row in logits.chunks_exact(NUM_CLASSES) {
            let (a, b) = math::log_softmax2(row[0], row[1]);
            log_p.push(a);
            log_p.push(b);
        }
        Ok(Self {
            t_len: log_p.len() / NUM_CLASSES,
            log_p,
        })
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    pub fn blank(&self, t: usize) -> f64 {
        self.log_p[NUM_CLASSES * t]
    }

    pub fn object(&self, t: usize) -> f64 {
        self.log_p[NUM_CLASSES * t + 1]
    }

    pub fn log_prob(&self, t: usize, class: usize) -> f64 {
        self.log_p[NUM_CLASSES * t + class]
    }

    pub fn rows(&self) -> &[f64] {
        &self.log_p
    }

    /// Largest |logsumexp| over rows; 0 for a perfectly normalized table.
    pub fn max_normalization_error(&self) -> f64 {
        (0..self.t_len)
            .map(|t| math::abs(math::log_sum_exp2(self.blank(t), self.object(t))))
            .fold(0.0, f64::max)
    }
}

/// Cached activations from one forward pass of one layer.
#[derive(Debug, Clone)]
pub struct LayerTape {
    pub gate_i: Vec<f64>,
    pub gate_f: Vec<f64>,
    pub gate_g: Vec<f64>,
    pub gate_o: Vec<f64>,
    pub cell: Vec<f64>,
    pub cell_tanh: Vec<f64>,
    pub hidden: Vec<f64>,
}

impl LayerTape {
    fn zeros(t_len: usize, hidden_size: usize) -> Self {
        let z = || vec![0.0; t_len * hidden_size];
        Self {
            gate_i: z(),
            gate_f: z(),
            gate_g: z(),
            gate_o: z(),
            cell: z(),
            cell_tanh: z(),
            hidden: z(),
        }
    }
}

/// Everything `backward` needs to replay a forward pass.
#[derive(Debug, Clone)]
pub struct NetTape {
    pub input_size: usize,
    pub hidden_size: usize,
    pub t_len: usize,
    pub frames: Vec<f64>,
    pub layers: Vec<LayerTape>,
}

/// Initializes a full parameter set: weights i.i.d. Normal(0, 0.01^2) from
/// a ChaCha stream seeded with `seed`, biases zero.
pub fn init_params(
    input_size: usize,
    hidden_size: usize,
    seed: u64,
) -> Result<LstmParams, NetError> {
    if input_size == 0 || hidden_size == 0 {
        return Err(NetError::BadSizes);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(LstmParams {
        stack: init_stack(&mut rng, input_size, hidden_size),
        head: init_head(&mut rng, hidden_size),
    })
}

/// Draws one stacked LSTM from `rng`; biases stay zero.
pub fn init_stack(rng: &mut ChaCha8Rng, input_size: usize, hidden_size: usize) -> LstmStack {
    let normal = Normal::new(0.0, INIT_STD_DEV).expect("valid std dev");
    let mut stack = LstmStack::zeros(input_size, hidden_size);
    for layer in &mut stack.layers {
        for w in layer.w_ih.iter_mut().chain(layer.w_hh.iter_mut()) {
            *w = normal.sample(rng);
        }
    }
    stack
}

/// Draws the shared linear head from `rng`; bias stays zero.
pub fn init_head(rng: &mut ChaCha8Rng, hidden_size: usize) -> Linear {
    let normal = Normal::new(0.0, INIT_STD_DEV).expect("valid std dev");
    let mut head = Linear::zeros(hidden_size, NUM_CLASSES);
    for w in head.weight.iter_mut() {
        *w = normal.sample(rng);
    }
    head
}

/// Runs the stacked LSTM and head over a serialized sample.
pub fn forward(
    params: &LstmParams,
    sample: &SequenceSample,
) -> Result<(FrameLogProbs, NetTape), NetError> {
    forward_parts(&params.stack, &params.head, sample.frames(), sample.frame_dim())
}

/// Forward pass over raw frames (`T * frame_dim` flat). Initial hidden and
/// cell states are zero; the head is applied to the top layer's hidden
/// state at every timestep and log-softmaxed.
pub fn forward_parts(
    stack: &LstmStack,
    head: &Linear,
    frames: &[f64],
    frame_dim: usize,
) -> Result<(FrameLogProbs, NetTape), NetError> {
    validate_shapes(stack, head, frame_dim)?;
    if frames.is_empty() || frames.len() % frame_dim != 0 {
        return Err(NetError::EmptySequence);
    }
    let t_len = frames.len() / frame_dim;
    let num_layers = stack.layers.len();
    let top_h = stack.hidden_size();

    let mut tapes: Vec<LayerTape> = stack
        .layers
        .iter()
        .map(|l| LayerTape::zeros(t_len, l.hidden_size))
        .collect();
    let mut h_prev: Vec<Vec<f64>> = stack
        .layers
        .iter()
        .map(|l| vec![0.0; l.hidden_size])
        .collect();
    let mut c_prev = h_prev.clone();
    let max_h = stack.layers.iter().map(|l| l.hidden_size).max().unwrap();
    let mut z = vec![0.0; 4 * max_h];
    let mut xbuf = vec![0.0; max_h];
    let mut log_p = Vec::with_capacity(t_len * NUM_CLASSES);

    for t in 0..t_len {
        for (l, layer) in stack.layers.iter().enumerate() {
            let h = layer.hidden_size;
            let in_dim = layer.input_size;
            {
                let x: &[f64] = if l == 0 {
                    &frames[t * frame_dim..(t + 1) * frame_dim]
                } else {
                    &xbuf[..in_dim]
                };
                let z = &mut z[..4 * h];
                z.copy_from_slice(&layer.bias);
                matvec_add(z, &layer.w_ih, x);
                matvec_add(z, &layer.w_hh, &h_prev[l]);
            }
            let tape = &mut tapes[l];
            for j in 0..h {
                let gi = math::sigmoid(z[j]);
                let gf = math::sigmoid(z[h + j]);
                let gg = math::tanh(z[2 * h + j]);
                let go = math::sigmoid(z[3 * h + j]);
                let c = gf * c_prev[l][j] + gi * gg;
                let tc = math::tanh(c);
                let hv = go * tc;
                let idx = t * h + j;
                tape.gate_i[idx] = gi;
                tape.gate_f[idx] = gf;
                tape.gate_g[idx] = gg;
                tape.gate_o[idx] = go;
                tape.cell[idx] = c;
                tape.cell_tanh[idx] = tc;
                tape.hidden[idx] = hv;
                c_prev[l][j] = c;
                h_prev[l][j] = hv;
                xbuf[j] = hv;
            }
        }
        let h_top = &h_prev[num_layers - 1];
        let logit0 = head.bias[0] + dot(&head.weight[..top_h], h_top);
        let logit1 = head.bias[1] + dot(&head.weight[top_h..], h_top);
        let (lp0, lp1) = math::log_softmax2(logit0, logit1);
        log_p.push(lp0);
        log_p.push(lp1);
    }

    let tape = NetTape {
        input_size: frame_dim,
        hidden_size: top_h,
        t_len,
        frames: frames.to_vec(),
        layers: tapes,
    };
    Ok((
        FrameLogProbs {
            t_len,
            log_p,
        },
        tape,
    ))
}

/// Exact backpropagation through time given `d_logits`, the gradient of
/// the loss with respect to the pre-softmax logits (`T x 2` flat).
pub fn backward(
    params: &LstmParams,
    tape: &NetTape,
    d_logits: &[f64],
) -> Result<ParamGrads, NetError> {
    backward_parts(&params.stack, &params.head, tape, d_logits)
}

pub fn backward_parts(
    stack: &LstmStack,
    head: &Linear,
    tape: &NetTape,
    d_logits: &[f64],
) -> Result<ParamGrads, NetError> {
    validate_shapes(stack, head, tape.input_size)?;
    if tape.layers.len() != stack.layers.len()
        || tape.hidden_size != stack.hidden_size()
        || tape.frames.len() != tape.t_len * tape.input_size
    {
        return Err(NetError::TapeMismatch);
    }
    let t_len = tape.t_len;
    if d_logits.len() != t_len * NUM_CLASSES {
        return Err(NetError::DLogitsLenMismatch {
            expected: t_len * NUM_CLASSES,
            got: d_logits.len(),
        });
    }

    let top = stack.layers.len() - 1;
    let top_h = stack.hidden_size();
    let mut grads = ParamGrads {
        stack: LstmStack {
            layers: stack
                .layers
                .iter()
                .map(|l| LstmLayer::zeros(l.input_size, l.hidden_size))
                .collect(),
        },
        head: Linear::zeros(head.input_size, head.output_size),
    };

    // Head gradients and the external dh entering the top layer.
    let mut dh_into = vec![0.0; t_len * top_h];
    for t in 0..t_len {
        let h = &tape.layers[top].hidden[t * top_h..(t + 1) * top_h];
        for out in 0..NUM_CLASSES {
            let dl = d_logits[t * NUM_CLASSES + out];
            grads.head.bias[out] += dl;
            axpy(&mut grads.head.weight[out * top_h..(out + 1) * top_h], dl, h);
            axpy(
                &mut dh_into[t * top_h..(t + 1) * top_h],
                dl,
                &head.weight[out * top_h..(out + 1) * top_h],
            );
        }
    }

    // Layers top-down; each layer's input gradient feeds the layer below.
    for l in (0..stack.layers.len()).rev() {
        let layer = &stack.layers[l];
        let inputs: &[f64] = if l == 0 {
            &tape.frames
        } else {
            &tape.layers[l - 1].hidden
        };
        let dx = lstm_layer_backward(
            layer,
            &tape.layers[l],
            inputs,
            &dh_into,
            &mut grads.stack.layers[l],
            t_len,
        );
        dh_into = dx;
    }

    Ok(grads)
}

fn lstm_layer_backward(
    layer: &LstmLayer,
    tape: &LayerTape,
    inputs: &[f64],
    dh_ext: &[f64],
    grads: &mut LstmLayer,
    t_len: usize,
) -> Vec<f64> {
    let h = layer.hidden_size;
    let in_dim = layer.input_size;
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    let mut dz = vec![0.0; 4 * h];
    let mut dx = vec![0.0; t_len * in_dim];

    for t in (0..t_len).rev() {
        for j in 0..h {
            let idx = t * h + j;
            let gi = tape.gate_i[idx];
            let gf = tape.gate_f[idx];
            let gg = tape.gate_g[idx];
            let go = tape.gate_o[idx];
            let tc = tape.cell_tanh[idx];
            let c_prev = if t > 0 { tape.cell[idx - h] } else { 0.0 };

            let dh = dh_ext[idx] + dh_next[j];
            let d_go = dh * tc;
            let dc = dh * go * (1.0 - tc * tc) + dc_next[j];
            let d_gf = dc * c_prev;
            let d_gi = dc * gg;
            let d_gg = dc * gi;

            dz[j] = d_gi * gi * (1.0 - gi);
            dz[h + j] = d_gf * gf * (1.0 - gf);
            dz[2 * h + j] = d_gg * (1.0 - gg * gg);
            dz[3 * h + j] = d_go * go * (1.0 - go);
            dc_next[j] = dc * gf;
        }

        let x = &inputs[t * in_dim..(t + 1) * in_dim];
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        let dx_t = &mut dx[t * in_dim..(t + 1) * in_dim];
        for r in 0..4 * h {
            let d = dz[r];
            grads.bias[r] += d;
            axpy(&mut grads.w_ih[r * in_dim..(r + 1) * in_dim], d, x);
            if t > 0 {
                let h_prev = &tape.hidden[(t - 1) * h..t * h];
                axpy(&mut grads.w_hh[r * h..(r + 1) * h], d, h_prev);
            }
            axpy(&mut dh_next, d, &layer.w_hh[r * h..(r + 1) * h]);
            axpy(dx_t, d, &layer.w_ih[r * in_dim..(r + 1) * in_dim]);
        }
    }
    dx
}

fn validate_shapes(stack: &LstmStack, head: &Linear, frame_dim: usize) -> Result<(), NetError> {
    if stack.layers.is_empty() {
        return Err(NetError::BadSizes);
    }
    if stack.input_size() != frame_dim {
        return Err(NetError::FrameDimMismatch {
            expected: stack.input_size(),
            got: frame_dim,
        });
    }
    let mut in_dim = stack.input_size();
    for layer in &stack.layers {
        if layer.input_size != in_dim
            || layer.hidden_size == 0
            || layer.w_ih.len() != 4 * layer.hidden_size * layer.input_size
            || layer.w_hh.len() != 4 * layer.hidden_size * layer.hidden_size
            || layer.bias.len() != 4 * layer.hidden_size
        {
            return Err(NetError::BadSizes);
        }
        in_dim = layer.hidden_size;
    }
    if head.input_size != in_dim
        || head.output_size != NUM_CLASSES
        || head.weight.len() != head.output_size * head.input_size
        || head.bias.len() != head.output_size
    {
        return Err(NetError::BadSizes);
    }
    Ok(())
}

/// `out[r] += w[r] . x` over row-major `w`.
#[inline]
fn matvec_add(out: &mut [f64], w: &[f64], x: &[f64]) {
    let n = x.len();
    for (r, o) in out.iter_mut().enumerate() {
        *o += dot(&w[r * n..(r + 1) * n], x);
    }
}

// Four accumulators so the reduction vectorizes; the summation order is
// fixed, which keeps results bit-reproducible across runs.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let n4 = a.len() / 4 * 4;
    for (ca, cb) in a[..n4].chunks_exact(4).zip(b[..n4].chunks_exact(4)) {
        acc[0] += ca[0] * cb[0];
        acc[1] += ca[1] * cb[1];
        acc[2] += ca[2] * cb[2];
        acc[3] += ca[3] * cb[3];
    }
    let mut sum = (acc[0] + acc[2]) + (acc[1] + acc[3]);
    for (x, y) in a[n4..].iter().zip(&b[n4..]) {
        sum += x * y;
    }
    sum
}

#[inline]
fn axpy(out: &mut [f64], a: f64, x: &[f64]) {
    for (o, v) in out.iter_mut().zip(x) {
        *o += a * v;
    }
}

fn add_slices(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn scale_slice(dst: &mut [f64], s: f64) {
    for d in dst.iter_mut() {
        *d *= s;
    }
}

fn sq_sum(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{serialize, FeatureGrid, ScanOrder};
    use proptest::prelude::*;
    use rand::Rng;

    fn random_sample(k: usize, t_len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..k * t_len).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn zero_params_give_uniform_log_probs() {
        let params = LstmParams::zeros(3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let frames = random_sample(3, 6, &mut rng);
        let (logp, _) = forward_parts(&params.stack, &params.head, &frames, 3).unwrap();
        let half = math::ln(0.5);
        for t in 0..logp.t_len() {
            assert_eq!(logp.blank(t), half);
            assert_eq!(logp.object(t), half);
        }
    }

    #[test]
    fn single_step_matches_hand_computation() {
        // One cell per layer (H = 1, k = 1), T = 1, so the recurrence
        // reduces to scalar arithmetic that can be checked directly.
        let mut params = LstmParams::zeros(1, 1);
        let l1 = &mut params.stack.layers[0];
        l1.w_ih = vec![0.1, 0.2, 0.3, 0.4];
        l1.w_hh = vec![0.5, 0.6, 0.7, 0.8];
        l1.bias = vec![0.01, 0.02, 0.03, 0.04];
        let l2 = &mut params.stack.layers[1];
        l2.w_ih = vec![-0.2, 0.15, 0.25, -0.35];
        l2.w_hh = vec![0.9, -0.1, 0.2, 0.3];
        l2.bias = vec![0.05, -0.05, 0.02, -0.02];
        params.head.weight = vec![1.0, -1.0];
        params.head.bias = vec![0.1, -0.1];

        let x = 0.5;
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        // Layer 1 (h_prev = c_prev = 0).
        let i1 = sig(0.1 * x + 0.01);
        let g1 = (0.3 * x + 0.03f64).tanh();
        let o1 = sig(0.4 * x + 0.04);
        let c1 = i1 * g1; // forget gate drops out: c_prev = 0
        let h1 = o1 * c1.tanh();
        // Layer 2.
        let i2 = sig(-0.2 * h1 + 0.05);
        let g2 = (0.25 * h1 + 0.02f64).tanh();
        let o2 = sig(-0.35 * h1 - 0.02);
        let c2 = i2 * g2;
        let h2 = o2 * c2.tanh();
        let logit0 = 1.0 * h2 + 0.1;
        let logit1 = -1.0 * h2 - 0.1;
        let lse = (logit0.exp() + logit1.exp()).ln();

        let (logp, tape) = forward_parts(&params.stack, &params.head, &[x], 1).unwrap();
        assert!((logp.blank(0) - (logit0 - lse)).abs() < 1e-12);
        assert!((logp.object(0) - (logit1 - lse)).abs() < 1e-12);
        assert!((tape.layers[0].hidden[0] - h1).abs() < 1e-12);
        assert!((tape.layers[1].hidden[0] - h2).abs() < 1e-12);
    }

    #[test]
    fn init_is_deterministic() {
        let a = init_params(4, 8, 7).unwrap();
        let b = init_params(4, 8, 7).unwrap();
        assert_eq!(a, b);
        let c = init_params(4, 8, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_weight_mean_is_near_zero() {
        // k=32, H=48 draws well over 10^4 weights; the sample mean of
        // N(0, 0.01^2) draws stays inside +/-0.005 with huge margin.
        let params = init_params(32, 48, 7).unwrap();
        let mut sum = 0.0;
        let mut count = 0usize;
        for layer in &params.stack.layers {
            sum += layer.w_ih.iter().sum::<f64>() + layer.w_hh.iter().sum::<f64>();
            count += layer.w_ih.len() + layer.w_hh.len();
            assert!(layer.bias.iter().all(|&b| b == 0.0));
        }
        sum += params.head.weight.iter().sum::<f64>();
        count += params.head.weight.len();
        assert!(count >= 10_000, "need at least 10^4 weights, got {count}");
        let mean = sum / count as f64;
        assert!(mean.abs() < 0.005, "weight mean {mean} outside (-0.005, 0.005)");
    }

    #[test]
    fn default_paper_sizes_accepted() {
        let params = init_params(512, 256, 0).unwrap();
        assert_eq!(params.input_size(), 512);
        assert_eq!(params.hidden_size(), 256);
        assert_eq!(params.stack.layers[0].w_ih.len(), 4 * 256 * 512);
    }

    #[test]
    fn forward_through_sequence_sample() {
        let grid = FeatureGrid::new(2, 2, 3, (0..12).map(|v| v as f64 / 12.0).collect()).unwrap();
        let sample = serialize(&grid, ScanOrder::ColMajorReverse, 1, 9).unwrap();
        let params = init_params(3, 5, 3).unwrap();
        let (logp, tape) = forward(&params, &sample).unwrap();
        assert_eq!(logp.t_len(), 4);
        assert_eq!(tape.t_len, 4);
        assert!(logp.max_normalization_error() <= 1e-9);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let params = init_params(3, 4, 0).unwrap();
        assert!(matches!(
            forward_parts(&params.stack, &params.head, &[0.0; 8], 2),
            Err(NetError::FrameDimMismatch { .. })
        ));
    }

    #[test]
    fn zero_dlogits_give_zero_grads() {
        let params = init_params(3, 4, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let frames = random_sample(3, 5, &mut rng);
        let (_, tape) = forward_parts(&params.stack, &params.head, &frames, 3).unwrap();
        let grads = backward(&params, &tape, &vec![0.0; 10]).unwrap();
        assert!(grads.to_flat().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn backward_is_deterministic() {
        let params = init_params(3, 4, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let frames = random_sample(3, 7, &mut rng);
        let (_, tape) = forward_parts(&params.stack, &params.head, &frames, 3).unwrap();
        let d_logits: Vec<f64> = (0..14).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = backward(&params, &tape, &d_logits).unwrap();
        let b = backward(&params, &tape, &d_logits).unwrap();
        assert_eq!(a.to_flat(), b.to_flat());
    }

    #[test]
    fn tape_mismatch_rejected() {
        let params = init_params(3, 4, 5).unwrap();
        let other = init_params(3, 5, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let frames = random_sample(3, 4, &mut rng);
        let (_, tape) = forward_parts(&params.stack, &params.head, &frames, 3).unwrap();
        assert!(backward(&other, &tape, &vec![0.0; 8]).is_err());
        assert!(matches!(
            backward(&params, &tape, &vec![0.0; 6]),
            Err(NetError::DLogitsLenMismatch { .. })
        ));
    }

    /// BPTT vs central differences on a linear functional of the
    /// log-probabilities (independent of any loss module).
    #[test]
    fn bptt_matches_finite_differences() {
        let k = 3;
        let hidden = 4;
        let t_len = 5;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let params = init_params(k, hidden, 99).unwrap();
        let frames = random_sample(k, t_len, &mut rng);
        let weights: Vec<f64> = (0..t_len * 2).map(|_| rng.random_range(-1.0..1.0)).collect();

        let loss = |p: &LstmParams| -> f64 {
            let (logp, _) = forward_parts(&p.stack, &p.head, &frames, k).unwrap();
            logp.rows().iter().zip(&weights).map(|(l, w)| l * w).sum()
        };

        // d loss / d logit via the softmax Jacobian.
        let (logp, tape) = forward_parts(&params.stack, &params.head, &frames, k).unwrap();
        let mut d_logits = vec![0.0; t_len * 2];
        for t in 0..t_len {
            let p0 = logp.blank(t).exp();
            let p1 = logp.object(t).exp();
            let wsum = weights[2 * t] + weights[2 * t + 1];
            d_logits[2 * t] = weights[2 * t] - p0 * wsum;
            d_logits[2 * t + 1] = weights[2 * t + 1] - p1 * wsum;
        }
        let grads = backward(&params, &tape, &d_logits).unwrap().to_flat();

        let flat = params.to_flat();
        let h = 1e-5;
        let mut worst = 0.0f64;
        for idx in 0..flat.len() {
            let mut probe = params.clone();
            let mut bumped = flat.clone();
            bumped[idx] += h;
            probe.set_from_flat(&bumped);
            let up = loss(&probe);
            bumped[idx] -= 2.0 * h;
            probe.set_from_flat(&bumped);
            let down = loss(&probe);
            let fd = (up - down) / (2.0 * h);
            let denom = grads[idx].abs().max(fd.abs()).max(1e-3);
            worst = worst.max((grads[idx] - fd).abs() / denom);
        }
        assert!(worst < 1e-6, "max relative gradient error {worst}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn rows_always_normalize(seed in any::<u64>(), t_len in 1usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let params = init_params(2, 3, seed).unwrap();
            let frames = random_sample(2, t_len, &mut rng);
            let (logp, _) = forward_parts(&params.stack, &params.head, &frames, 2).unwrap();
            prop_assert!(logp.max_normalization_error() <= 1e-9);
        }
    }
}
