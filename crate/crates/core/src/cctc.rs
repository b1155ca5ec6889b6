//! Count-based CTC: loss, gradient, and alignment decoding over the binary
//! alphabet {blank, object}.
//!
//! A count label `c` expands to `c` repeated 'object' symbols; interleaving
//! blanks gives the extended label `blank o blank o ... blank` of length
//! `2c + 1`. Because every non-blank symbol is identical, the usual CTC
//! skip transition is never legal: consecutive objects must be separated by
//! at least one blank, which is exactly what makes the emitted object *runs*
//! countable. All recursions run in log space with `-inf` as the
//! zero-probability sentinel.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::math::{self, NEG_INF};
use crate::net::FrameLogProbs;

pub const BLANK: usize = 0;
pub const OBJECT: usize = 1;

/// Largest sequence length the brute-force enumerator accepts (2^T paths).
pub const BRUTE_FORCE_MAX_T: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub enum CctcError {
    /// `T < 2c - 1`: repeated object labels need separating blanks.
    InfeasibleCount { count: usize, t_len: usize },
    NonDistribution { row: usize, error: f64 },
    SequenceTooLong { t_len: usize, max: usize },
}

impl fmt::Display for CctcError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CctcError::InfeasibleCount { count, t_len } => {
                write!(f, "count {count} infeasible for {t_len} frames (need T >= 2c-1)")
            }
            CctcError::NonDistribution { row, error } => {
                write!(f, "log-prob row {row} unnormalized (|logsumexp| = {error:e})")
            }
            CctcError::SequenceTooLong { t_len, max } => {
                write!(f, "sequence length {t_len} exceeds enumeration limit {max}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CctcError {}

/// One of the two path symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    Blank,
    Object,
}

impl Symbol {
    pub fn class_index(self) -> usize {
        match self {
            Symbol::Blank => BLANK,
            Symbol::Object => OBJECT,
        }
    }
}

/// A count label and its expansion into repeated object symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct CountLabel {
    pub count: usize,
    pub expanded: Vec<Symbol>,
}

impl CountLabel {
    pub fn new(count: usize) -> Self {
        Self {
            count,
            expanded: vec![Symbol::Object; count],
        }
    }
}

/// Blank-interleaved label of length `2c + 1`: blanks at even indices,
/// objects at odd indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedLabel {
    symbols: Vec<Symbol>,
}

impl ExtendedLabel {
    pub fn new(count: usize) -> Self {
        let mut symbols = Vec::with_capacity(2 * count + 1);
        for s in 0..2 * count + 1 {
            symbols.push(if s % 2 == 1 { Symbol::Object } else { Symbol::Blank });
        }
        Self { symbols }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbol(&self, state: usize) -> Symbol {
        self.symbols[state]
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }
}

/// Forward/backward tables over the extended-label states, in log space.
///
/// `alpha[t][s]` includes the emission at `t`; `beta[t][s]` covers emissions
/// strictly after `t`, so `logsumexp_s(alpha[t][s] + beta[t][s])` equals the
/// total log-likelihood at every `t`.
#[derive(Debug, Clone)]
pub struct AlphaBetaTables {
    pub t_len: usize,
    pub num_states: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl AlphaBetaTables {
    pub fn alpha(&self, t: usize, state: usize) -> f64 {
        self.alpha[t * self.num_states + state]
    }

    pub fn beta(&self, t: usize, state: usize) -> f64 {
        self.beta[t * self.num_states + state]
    }

    /// Total log-likelihood reconstructed from row `t`; constant over `t`.
    pub fn row_log_likelihood(&self, t: usize) -> f64 {
        let row: Vec<f64> = (0..self.num_states)
            .map(|s| self.alpha(t, s) + self.beta(t, s))
            .collect();
        math::log_sum_exp(&row)
    }
}

/// A concrete length-`T` path and its maximal object runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub path: Vec<Symbol>,
    /// Inclusive `(start, end)` frame spans of maximal object runs.
    pub emitted_runs: Vec<(usize, usize)>,
}

impl Alignment {
    pub fn from_path(path: Vec<Symbol>) -> Self {
        let emitted_runs = object_runs(&path);
        Self { path, emitted_runs }
    }

    /// Number of object symbols after collapsing (merge repeats, drop
    /// blanks) — one per maximal run.
    pub fn collapsed_count(&self) -> usize {
        self.emitted_runs.len()
    }

    /// Sum of per-frame log-probabilities along the path.
    pub fn log_prob(&self, logp: &FrameLogProbs) -> f64 {
        self.path
            .iter()
            .enumerate()
            .map(|(t, sym)| logp.log_prob(t, sym.class_index()))
            .sum()
    }
}

fn object_runs(path: &[Symbol]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (t, sym) in path.iter().enumerate() {
        match (sym, start) {
            (Symbol::Object, None) => start = Some(t),
            (Symbol::Blank, Some(s)) => {
                runs.push((s, t - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, path.len() - 1));
    }
    runs
}

fn check_inputs(logp: &FrameLogProbs, count: usize) -> Result<(), CctcError> {
    for t in 0..logp.t_len() {
        let err = math::abs(math::log_sum_exp2(logp.blank(t), logp.object(t)));
        if !(err <= 1e-6) {
            return Err(CctcError::NonDistribution { row: t, error: err });
        }
    }
    if count >= 1 && logp.t_len() < 2 * count - 1 {
        return Err(CctcError::InfeasibleCount {
            count,
            t_len: logp.t_len(),
        });
    }
    Ok(())
}

#[inline]
fn emission(logp: &FrameLogProbs, t: usize, sym: Symbol) -> f64 {
    logp.log_prob(t, sym.class_index())
}

/// Runs the log-space forward and backward recursions for `count` objects.
///
/// Transitions are stay (`s -> s`) and advance (`s-1 -> s`); the skip
/// `s-2 -> s` is disabled because `l'[s-2]` always equals `l'[s]` for a
/// repeated-object label.
pub fn forward_backward(
    logp: &FrameLogProbs,
    count: usize,
) -> Result<(AlphaBetaTables, f64), CctcError> {
    check_inputs(logp, count)?;
    let t_len = logp.t_len();
    let label = ExtendedLabel::new(count);
    let states = label.len();

    let mut alpha = vec![NEG_INF; t_len * states];
    alpha[0] = emission(logp, 0, Symbol::Blank);
    if states > 1 {
        alpha[1] = emission(logp, 0, Symbol::Object);
    }
    for t in 1..t_len {
        let (prev, cur) = alpha.split_at_mut(t * states);
        let prev = &prev[(t - 1) * states..];
        let cur = &mut cur[..states];
        for s in 0..states {
            let stay = prev[s];
            let advance = if s >= 1 { prev[s - 1] } else { NEG_INF };
            let best = math::log_sum_exp2(stay, advance);
            cur[s] = if best == NEG_INF {
                NEG_INF
            } else {
                best + emission(logp, t, label.symbol(s))
            };
        }
    }

    let mut beta = vec![NEG_INF; t_len * states];
    beta[(t_len - 1) * states + states - 1] = 0.0;
    if states > 1 {
        beta[(t_len - 1) * states + states - 2] = 0.0;
    }
    for t in (0..t_len - 1).rev() {
        for s in 0..states {
            let stay = beta[(t + 1) * states + s] + emission(logp, t + 1, label.symbol(s));
            let advance = if s + 1 < states {
                beta[(t + 1) * states + s + 1] + emission(logp, t + 1, label.symbol(s + 1))
            } else {
                NEG_INF
            };
            beta[t * states + s] = math::log_sum_exp2(stay, advance);
        }
    }

    let last = &alpha[(t_len - 1) * states..];
    let log_z = if states > 1 {
        math::log_sum_exp2(last[states - 1], last[states - 2])
    } else {
        last[states - 1]
    };

    Ok((
        AlphaBetaTables {
            t_len,
            num_states: states,
            alpha,
            beta,
        },
        log_z,
    ))
}

/// Negative log-likelihood of emitting exactly `count` object runs, plus
/// the exact loss gradient with respect to the pre-softmax logits.
///
/// The gradient is the classic `softmax - posterior` form: the state
/// posteriors from the alpha/beta tables are pooled per symbol and
/// subtracted from the model's per-frame probabilities.
pub fn cctc_loss(logp: &FrameLogProbs, count: usize) -> Result<(f64, Vec<f64>), CctcError> {
    let (tables, log_z) = forward_backward(logp, count)?;
    let t_len = tables.t_len;
    let states = tables.num_states;
    let mut d_logits = vec![0.0; t_len * 2];

    if log_z == NEG_INF {
        // Zero total probability (possible only with -inf emissions); the
        // loss is +inf and no finite gradient exists.
        return Ok((f64::INFINITY, d_logits));
    }

    let label = ExtendedLabel::new(count);
    for t in 0..t_len {
        let mut post = [NEG_INF; 2];
        for s in 0..states {
            let v = tables.alpha(t, s) + tables.beta(t, s);
            let class = label.symbol(s).class_index();
            post[class] = math::log_sum_exp2(post[class], v);
        }
        for class in 0..2 {
            let q = if post[class] == NEG_INF {
                0.0
            } else {
                math::exp(post[class] - log_z)
            };
            let p = math::exp(logp.log_prob(t, class));
            d_logits[t * 2 + class] = p - q;
        }
    }

    Ok((-log_z, d_logits))
}

/// Independent oracle: enumerates all `2^T` binary paths, keeps those whose
/// collapsed label has exactly `count` objects, and returns the log of the
/// summed path probabilities (`-inf` when no path qualifies).
pub fn brute_force_likelihood(logp: &FrameLogProbs, count: usize) -> Result<f64, CctcError> {
    let t_len = logp.t_len();
    if t_len > BRUTE_FORCE_MAX_T {
        return Err(CctcError::SequenceTooLong {
            t_len,
            max: BRUTE_FORCE_MAX_T,
        });
    }
    check_inputs(logp, count)
        .or_else(|e| match e {
            // Infeasible counts are fine here: the sum is simply empty.
            CctcError::InfeasibleCount { .. } => Ok(()),
            other => Err(other),
        })?;

    let mut total = 0.0f64;
    for mask in 0u32..(1u32 << t_len) {
        let mut prob = 1.0;
        let mut runs = 0usize;
        let mut prev_object = false;
        for t in 0..t_len {
            let is_object = mask & (1 << t) != 0;
            let class = if is_object { OBJECT } else { BLANK };
            prob *= math::exp(logp.log_prob(t, class));
            if is_object && !prev_object {
                runs += 1;
            }
            prev_object = is_object;
        }
        if runs == count {
            total += prob;
        }
    }
    Ok(if total > 0.0 { math::ln(total) } else { NEG_INF })
}

/// Per-frame argmax decode. Ties resolve to blank; the predicted count is
/// the number of maximal object runs.
pub fn decode_best_path(logp: &FrameLogProbs) -> (usize, Alignment) {
    let path: Vec<Symbol> = (0..logp.t_len())
        .map(|t| {
            if logp.object(t) > logp.blank(t) {
                Symbol::Object
            } else {
                Symbol::Blank
            }
        })
        .collect();
    let alignment = Alignment::from_path(path);
    (alignment.collapsed_count(), alignment)
}

/// Max-product Viterbi over the extended-label states: the single most
/// probable path that collapses to exactly `count` objects. Score ties
/// prefer the smaller predecessor state.
pub fn decode_constrained(logp: &FrameLogProbs, count: usize) -> Result<Alignment, CctcError> {
    check_inputs(logp, count)?;
    let t_len = logp.t_len();
    let label = ExtendedLabel::new(count);
    let states = label.len();

    let mut score = vec![NEG_INF; t_len * states];
    let mut back = vec![0usize; t_len * states];
    score[0] = emission(logp, 0, Symbol::Blank);
    if states > 1 {
        score[1] = emission(logp, 0, Symbol::Object);
    }
    for t in 1..t_len {
        for s in 0..states {
            let stay = score[(t - 1) * states + s];
            let advance = if s >= 1 {
                score[(t - 1) * states + s - 1]
            } else {
                NEG_INF
            };
            let (best, from) = if s >= 1 && advance >= stay {
                (advance, s - 1)
            } else {
                (stay, s)
            };
            if best > NEG_INF {
                score[t * states + s] = best + emission(logp, t, label.symbol(s));
                back[t * states + s] = from;
            }
        }
    }

    let mut state = states - 1;
    if states > 1 && score[(t_len - 1) * states + states - 2] >= score[(t_len - 1) * states + states - 1]
    {
        state = states - 2;
    }
    if score[(t_len - 1) * states + state] == NEG_INF {
        // Unreachable final state means the count cannot fit, which the
        // feasibility precheck should already have caught.
        return Err(CctcError::InfeasibleCount { count, t_len });
    }

    let mut path_states = vec![0usize; t_len];
    path_states[t_len - 1] = state;
    for t in (1..t_len).rev() {
        state = back[t * states + state];
        path_states[t - 1] = state;
    }
    let path: Vec<Symbol> = path_states.into_iter().map(|s| label.symbol(s)).collect();
    Ok(Alignment::from_path(path))
}

/// One critical frame per emitted run: the floor midpoint.
pub fn runs_to_frames(alignment: &Alignment) -> Vec<usize> {
    alignment
        .emitted_runs
        .iter()
        .map(|&(start, end)| (start + end) / 2)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Builds FrameLogProbs from per-frame object probabilities.
    fn from_object_probs(probs: &[f64]) -> FrameLogProbs {
        let mut rows = Vec::with_capacity(probs.len() * 2);
        for &p in probs {
            rows.push((1.0 - p).ln());
            rows.push(p.ln());
        }
        FrameLogProbs::new(rows).unwrap()
    }

    fn random_logp(t_len: usize, rng: &mut ChaCha8Rng) -> FrameLogProbs {
        let logits: Vec<f64> = (0..t_len * 2).map(|_| rng.random_range(-4.0..4.0)).collect();
        FrameLogProbs::from_logits(&logits).unwrap()
    }

    #[test]
    fn single_frame_single_object() {
        let logp = from_object_probs(&[0.7]);
        let (loss, _) = cctc_loss(&logp, 1).unwrap();
        assert!((loss - (-(0.7f64.ln()))).abs() < 1e-12);
    }

    #[test]
    fn forced_alignment_three_frames_two_objects() {
        let probs = [0.6, 0.2, 0.8];
        let logp = from_object_probs(&probs);
        let (loss, _) = cctc_loss(&logp, 2).unwrap();
        let expected = -(probs[0].ln() + (1.0 - probs[1]).ln() + probs[2].ln());
        assert!((loss - expected).abs() < 1e-12);
    }

    #[test]
    fn two_frames_one_object_uniform() {
        let logp = from_object_probs(&[0.5, 0.5]);
        let (loss, _) = cctc_loss(&logp, 1).unwrap();
        assert!((loss - (-(0.75f64.ln()))).abs() < 1e-12);
    }

    #[test]
    fn count_zero_is_all_blank_path() {
        let probs = [0.3, 0.6, 0.1, 0.2];
        let logp = from_object_probs(&probs);
        let (loss, _) = cctc_loss(&logp, 0).unwrap();
        let expected: f64 = -probs.iter().map(|p| (1.0 - p).ln()).sum::<f64>();
        assert!((loss - expected).abs() < 1e-12);
    }

    #[test]
    fn infeasible_count_rejected() {
        let logp = from_object_probs(&[0.5, 0.5]);
        assert_eq!(
            cctc_loss(&logp, 2).unwrap_err(),
            CctcError::InfeasibleCount { count: 2, t_len: 2 }
        );
    }

    #[test]
    fn unnormalized_rows_rejected() {
        // FrameLogProbs enforces normalization at construction, so bad
        // tables never reach the loss.
        let rows = vec![-0.5, -0.5, -0.7, -0.7];
        assert!(FrameLogProbs::new(rows).is_err());
    }

    #[test]
    fn brute_force_examples() {
        let logp = from_object_probs(&[0.5, 0.5]);
        let bf0 = brute_force_likelihood(&logp, 0).unwrap();
        assert!((bf0 - 0.25f64.ln()).abs() < 1e-12);
        let bf1 = brute_force_likelihood(&logp, 1).unwrap();
        assert!((bf1 - 0.75f64.ln()).abs() < 1e-12);
        let bf2 = brute_force_likelihood(&logp, 2).unwrap();
        assert_eq!(bf2, NEG_INF);
    }

    #[test]
    fn brute_force_rejects_long_sequences() {
        let logp = from_object_probs(&vec![0.5; 17]);
        assert!(matches!(
            brute_force_likelihood(&logp, 1),
            Err(CctcError::SequenceTooLong { .. })
        ));
    }

    #[test]
    fn oracle_equivalence_random_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for t_len in 1..=8usize {
            for count in 0..=3usize {
                for _ in 0..40 {
                    let logp = random_logp(t_len, &mut rng);
                    let feasible = count == 0 || t_len >= 2 * count - 1;
                    let bf = brute_force_likelihood(&logp, count).unwrap();
                    if feasible {
                        let (loss, _) = cctc_loss(&logp, count).unwrap();
                        assert!(
                            (loss - (-bf)).abs() <= 1e-9,
                            "T={t_len} c={count}: dp {loss} vs brute {}",
                            -bf
                        );
                    } else {
                        assert!(cctc_loss(&logp, count).is_err());
                        assert_eq!(bf, NEG_INF);
                    }
                }
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let t_len = rng.random_range(1..=10usize);
            let max_count = (t_len + 1) / 2;
            let count = rng.random_range(0..=max_count.min(3));
            let logits: Vec<f64> = (0..t_len * 2).map(|_| rng.random_range(-3.0..3.0)).collect();
            let logp = FrameLogProbs::from_logits(&logits).unwrap();
            let (_, grad) = cctc_loss(&logp, count).unwrap();

            let h = 1e-5;
            for idx in 0..logits.len() {
                let mut up = logits.clone();
                up[idx] += h;
                let (lu, _) =
                    cctc_loss(&FrameLogProbs::from_logits(&up).unwrap(), count).unwrap();
                let mut down = logits.clone();
                down[idx] -= h;
                let (ld, _) =
                    cctc_loss(&FrameLogProbs::from_logits(&down).unwrap(), count).unwrap();
                let fd = (lu - ld) / (2.0 * h);
                let denom = grad[idx].abs().max(fd.abs()).max(1e-2);
                assert!(
                    (grad[idx] - fd).abs() / denom <= 1e-6,
                    "idx {idx}: analytic {} vs fd {fd}",
                    grad[idx]
                );
            }
        }
    }

    #[test]
    fn decode_best_path_examples() {
        // Object favored on frames 2 and 3 only.
        let logp = from_object_probs(&[0.1, 0.2, 0.9, 0.8, 0.3, 0.4]);
        let (count, alignment) = decode_best_path(&logp);
        assert_eq!(count, 1);
        assert_eq!(alignment.emitted_runs, vec![(2, 3)]);

        let logp = from_object_probs(&[0.1, 0.2, 0.3, 0.4]);
        let (count, alignment) = decode_best_path(&logp);
        assert_eq!(count, 0);
        assert!(alignment.emitted_runs.is_empty());

        let logp = from_object_probs(&[0.1, 0.9, 0.2, 0.1, 0.8, 0.3]);
        let (count, alignment) = decode_best_path(&logp);
        assert_eq!(count, 2);
        assert_eq!(alignment.emitted_runs, vec![(1, 1), (4, 4)]);
    }

    #[test]
    fn decode_ties_resolve_to_blank() {
        let logp = from_object_probs(&[0.5, 0.5, 0.5]);
        let (count, alignment) = decode_best_path(&logp);
        assert_eq!(count, 0);
        assert!(alignment.path.iter().all(|&s| s == Symbol::Blank));
    }

    #[test]
    fn constrained_decode_examples() {
        let logp = from_object_probs(&[0.4, 0.5, 0.6]);
        let alignment = decode_constrained(&logp, 2).unwrap();
        assert_eq!(
            alignment.path,
            vec![Symbol::Object, Symbol::Blank, Symbol::Object]
        );

        let logp = from_object_probs(&[0.2]);
        let alignment = decode_constrained(&logp, 1).unwrap();
        assert_eq!(alignment.path, vec![Symbol::Object]);

        let logp = from_object_probs(&[0.9, 0.1, 0.1, 0.1]);
        let alignment = decode_constrained(&logp, 1).unwrap();
        assert_eq!(
            alignment.path,
            vec![Symbol::Object, Symbol::Blank, Symbol::Blank, Symbol::Blank]
        );
    }

    /// Enumerates all count-consistent paths and returns the best log-prob.
    fn enumeration_max(logp: &FrameLogProbs, count: usize) -> f64 {
        let t_len = logp.t_len();
        let mut best = NEG_INF;
        for mask in 0u32..(1u32 << t_len) {
            let path: Vec<Symbol> = (0..t_len)
                .map(|t| {
                    if mask & (1 << t) != 0 {
                        Symbol::Object
                    } else {
                        Symbol::Blank
                    }
                })
                .collect();
            let alignment = Alignment::from_path(path);
            if alignment.collapsed_count() == count {
                best = best.max(alignment.log_prob(logp));
            }
        }
        best
    }

    #[test]
    fn constrained_decode_is_enumeration_max() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..60 {
            let t_len = rng.random_range(1..=10usize);
            let max_count = (t_len + 1) / 2;
            let count = rng.random_range(0..=max_count.min(3));
            let logp = random_logp(t_len, &mut rng);
            let alignment = decode_constrained(&logp, count).unwrap();
            assert_eq!(alignment.collapsed_count(), count);
            let best = enumeration_max(&logp, count);
            assert!((alignment.log_prob(&logp) - best).abs() < 1e-12);
        }
    }

    #[test]
    fn constrained_beats_random_consistent_paths() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t_len = 12;
        let count = 2;
        let logp = random_logp(t_len, &mut rng);
        let viterbi = decode_constrained(&logp, count).unwrap().log_prob(&logp);
        let mut sampled = 0usize;
        let mut attempts = 0usize;
        while sampled < 1000 && attempts < 200_000 {
            attempts += 1;
            let path: Vec<Symbol> = (0..t_len)
                .map(|_| {
                    if rng.random_bool(0.5) {
                        Symbol::Object
                    } else {
                        Symbol::Blank
                    }
                })
                .collect();
            let alignment = Alignment::from_path(path);
            if alignment.collapsed_count() != count {
                continue;
            }
            sampled += 1;
            assert!(alignment.log_prob(&logp) <= viterbi + 1e-12);
        }
        assert!(sampled >= 1000, "sampler starved: {sampled} paths");
    }

    #[test]
    fn runs_to_frames_examples() {
        let a = Alignment {
            path: vec![],
            emitted_runs: vec![(2, 3)],
        };
        assert_eq!(runs_to_frames(&a), vec![2]);
        let b = Alignment {
            path: vec![],
            emitted_runs: vec![(1, 1), (4, 4)],
        };
        assert_eq!(runs_to_frames(&b), vec![1, 4]);
        let c = Alignment {
            path: vec![],
            emitted_runs: vec![(0, 4)],
        };
        assert_eq!(runs_to_frames(&c), vec![2]);
    }

    #[test]
    fn extended_label_shape() {
        let label = ExtendedLabel::new(3);
        assert_eq!(label.len(), 7);
        for (s, sym) in label.symbols().iter().enumerate() {
            if s % 2 == 1 {
                assert_eq!(*sym, Symbol::Object);
            } else {
                assert_eq!(*sym, Symbol::Blank);
            }
        }
        let trivial = CountLabel::new(3);
        assert_eq!(trivial.expanded.len(), 3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn alpha_beta_rows_reconstruct_likelihood(
            seed in any::<u64>(),
            t_len in 1usize..12,
            count in 0usize..4,
        ) {
            prop_assume!(count == 0 || t_len >= 2 * count - 1);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let logp = random_logp(t_len, &mut rng);
            let (tables, log_z) = forward_backward(&logp, count).unwrap();
            for t in 0..t_len {
                prop_assert!((tables.row_log_likelihood(t) - log_z).abs() <= 1e-9);
            }
        }

        #[test]
        fn loss_finite_iff_feasible(
            seed in any::<u64>(),
            t_len in 1usize..10,
            count in 0usize..5,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let logp = random_logp(t_len, &mut rng);
            let feasible = count == 0 || t_len >= 2 * count - 1;
            match cctc_loss(&logp, count) {
                Ok((loss, _)) => {
                    prop_assert!(feasible);
                    prop_assert!(loss.is_finite());
                }
                Err(CctcError::InfeasibleCount { .. }) => prop_assert!(!feasible),
                Err(other) => prop_assert!(false, "unexpected error {other:?}"),
            }
        }
    }
}
