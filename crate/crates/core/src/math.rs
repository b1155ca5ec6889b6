//! Scalar float routines that work with and without `std`.
//!
//! All dynamic programming runs in log space; `NEG_INF` is the
//! zero-probability sentinel and every combinator here guards against it so
//! no `-inf - -inf` NaNs can leak out.

pub const NEG_INF: f64 = f64::NEG_INFINITY;

#[cfg(feature = "std")]
#[inline]
pub fn exp(x: f64) -> f64 {
    x.exp()
}

#[cfg(not(feature = "std"))]
#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[cfg(feature = "std")]
#[inline]
pub fn ln(x: f64) -> f64 {
    x.ln()
}

#[cfg(not(feature = "std"))]
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[cfg(feature = "std")]
#[inline]
pub fn tanh(x: f64) -> f64 {
    x.tanh()
}

#[cfg(not(feature = "std"))]
#[inline]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

#[cfg(feature = "std")]
#[inline]
pub fn sqrt(x: f64) -> f64 {
    x.sqrt()
}

#[cfg(not(feature = "std"))]
#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[cfg(feature = "std")]
#[inline]
pub fn abs(x: f64) -> f64 {
    x.abs()
}

#[cfg(not(feature = "std"))]
#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[cfg(feature = "std")]
#[inline]
pub fn round(x: f64) -> f64 {
    x.round()
}

#[cfg(not(feature = "std"))]
#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + exp(-x))
}

/// `ln(e^a + e^b)` with max-subtraction; `-inf` operands drop out.
#[inline]
pub fn log_sum_exp2(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == NEG_INF {
        return NEG_INF;
    }
    m + ln(exp(a - m) + exp(b - m))
}

/// `ln(e^a + e^b + e^c)`.
#[inline]
pub fn log_sum_exp3(a: f64, b: f64, c: f64) -> f64 {
    let m = a.max(b).max(c);
    if m == NEG_INF {
        return NEG_INF;
    }
    m + ln(exp(a - m) + exp(b - m) + exp(c - m))
}

/// Log-sum-exp over a slice; `-inf` for an empty or all-`-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().fold(NEG_INF, |acc, &x| acc.max(x));
    if m == NEG_INF {
        return NEG_INF;
    }
    let sum: f64 = xs.iter().map(|&x| exp(x - m)).sum();
    m + ln(sum)
}

/// Two-class log-softmax, stable for large logits.
#[inline]
pub fn log_softmax2(a: f64, b: f64) -> (f64, f64) {
    let lse = log_sum_exp2(a, b);
    (a - lse, b - lse)
}
