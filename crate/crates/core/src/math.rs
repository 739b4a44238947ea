//! Numerically stable scalar helpers shared across the crate.
//!
//! All smoothing code works in the log domain and only exponentiates through
//! [`guarded_exp`], so intermediate overflow cannot occur for exponents up to
//! the configured limit.

/// `ln(x)` routed through `libm` when built without `std`.
#[inline]
pub fn ln(x: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        x.ln()
    }
    #[cfg(not(feature = "std"))]
    {
        libm::log(x)
    }
}

/// `exp(x)` routed through `libm` when built without `std`.
#[inline]
pub fn exp(x: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        x.exp()
    }
    #[cfg(not(feature = "std"))]
    {
        libm::exp(x)
    }
}

/// `sqrt(x)` routed through `libm` when built without `std`.
#[inline]
pub fn sqrt(x: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        x.sqrt()
    }
    #[cfg(not(feature = "std"))]
    {
        libm::sqrt(x)
    }
}

/// Nearest-integer rounding, used for step/sample counts.
#[inline]
pub fn round(x: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        x.round()
    }
    #[cfg(not(feature = "std"))]
    {
        libm::round(x)
    }
}

/// Max-shifted `ln Σ exp(vals[k])`.
///
/// Shifting by the maximum keeps every intermediate `exp` in (0, 1], so the
/// result is finite for any finite inputs (magnitudes up to ~1e308 work; the
/// smoothing code only ever feeds it |arg| ≲ 1e4).
pub fn logsumexp(vals: &[f64]) -> f64 {
    let mut m = f64::NEG_INFINITY;
    for &v in vals {
        if v > m {
            m = v;
        }
    }
    if !m.is_finite() {
        return m;
    }
    let mut s = 0.0;
    for &v in vals {
        s += exp(v - m);
    }
    m + ln(s)
}

/// `exp(x)` that refuses to overflow: returns `None` when `x` exceeds `limit`.
///
/// Callers turn the `None` into a saturation diagnostic naming the owner; the
/// optimizer reads that as "the ν_β ramp is still needed here".
#[inline]
pub fn guarded_exp(x: f64, limit: f64) -> Option<f64> {
    if x > limit {
        None
    } else {
        Some(exp(x))
    }
}

/// Squared Euclidean distance between two equal-length slices.
#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for k in 0..a.len() {
        let d = a[k] - b[k];
        s += d * d;
    }
    s
}

/// Euclidean norm of a slice.
#[inline]
pub fn norm(v: &[f64]) -> f64 {
    let mut s = 0.0;
    for &x in v {
        s += x * x;
    }
    sqrt(s)
}

/// Infinity norm of a slice.
#[inline]
pub fn norm_inf(v: &[f64]) -> f64 {
    let mut m = 0.0_f64;
    for &x in v {
        let a = x.abs();
        if a > m {
            m = a;
        }
    }
    m
}
