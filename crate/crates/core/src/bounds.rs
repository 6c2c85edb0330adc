//! PAC sample-size algebra.
//!
//! The learner's output is trusted with confidence `1 - 1/h` when the number
//! of drawn examples `L` satisfies `L >= 2 h (d + ln h)`, where `d` is the
//! number of safe paths. [`required_samples`] solves for `L`; [`solve_h`]
//! inverts the bound for a given budget.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::sequence::sequence_space;

/// Relative tolerance of the bisection in [`solve_h`].
pub const H_TOLERANCE: f64 = 1e-10;

/// Largest `d` evaluated in plain `f64` (exactly representable).
const F64_EXACT_LIMIT: u64 = 1 << 53;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("h must be greater than 1, got {0}")]
    InvalidH(f64),
    #[error("confidence must lie in [0, 1), got {0}")]
    InvalidConfidence(f64),
    #[error("sample budget must be at least 1")]
    ZeroSamples,
    #[error("required sample count does not fit in 64 bits")]
    Overflow,
    #[error("{x_s} safe paths exceed the {total} possible sequences")]
    ProbabilityRange { x_s: BigUint, total: BigUint },
}

/// The quantities tied together by the PAC bound.
#[derive(Debug, Clone, PartialEq)]
pub struct PacParams {
    pub h: f64,
    pub d: BigUint,
    pub samples: u64,
    pub confidence: f64,
}

/// `max(0, 1 - 1/h)`.
pub fn confidence_for_h(h: f64) -> f64 {
    if h <= 1.0 {
        0.0
    } else {
        1.0 - 1.0 / h
    }
}

/// The `h` whose confidence is `confidence`.
pub fn h_for_confidence(confidence: f64) -> Result<f64, BoundsError> {
    if !(0.0..1.0).contains(&confidence) {
        return Err(BoundsError::InvalidConfidence(confidence));
    }
    Ok(1.0 / (1.0 - confidence))
}

fn small_d(d: &BigUint) -> Option<f64> {
    d.to_u64()
        .filter(|&d| d <= F64_EXACT_LIMIT)
        .map(|d| d as f64)
}

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

/// `2 h (d + ln h)` as an exact rational (with `h` and `ln h` taken as the
/// doubles they are).
fn bound_rational(h: f64, d: &BigUint) -> BigRational {
    let d = BigRational::from_integer(BigInt::from(d.clone()));
    rational(2.0 * h) * (d + rational(h.ln()))
}

/// Whether `2 h (d + ln h) >= samples`.
fn bound_reaches(h: f64, d: &BigUint, samples: u64) -> bool {
    if h <= 0.0 {
        return false;
    }
    match small_d(d) {
        Some(df) => 2.0 * h * (df + h.ln()) >= samples as f64,
        None => bound_rational(h, d) >= BigRational::from_integer(BigInt::from(samples)),
    }
}

/// Smallest integer `L` with `L >= 2 h (d + ln h)`.
pub fn required_samples(h: f64, d: &BigUint) -> Result<u64, BoundsError> {
    if h.is_nan() || h <= 1.0 || !h.is_finite() {
        return Err(BoundsError::InvalidH(h));
    }
    match small_d(d) {
        Some(df) => {
            let l = (2.0 * h * (df + h.ln())).ceil();
            if l >= u64::MAX as f64 {
                Err(BoundsError::Overflow)
            } else {
                Ok(l as u64)
            }
        }
        None => bound_rational(h, d)
            .ceil()
            .to_integer()
            .to_u64()
            .ok_or(BoundsError::Overflow),
    }
}

/// Solves `2 h (d + ln h) = samples` for `h` by bisection.
///
/// On `h > e^-d` the left side is strictly increasing from 0, so the root is
/// unique. The returned confidence is clamped to 0 when `h <= 1`.
pub fn solve_h(samples: u64, d: &BigUint) -> Result<PacParams, BoundsError> {
    if samples == 0 {
        return Err(BoundsError::ZeroSamples);
    }
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while !bound_reaches(hi, d, samples) {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..400 {
        if hi - lo <= H_TOLERANCE * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if bound_reaches(mid, d, samples) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let h = 0.5 * (lo + hi);
    Ok(PacParams {
        h,
        d: d.clone(),
        samples,
        confidence: confidence_for_h(h),
    })
}

/// `x_s / |I|^n`, rounded to the nearest double.
pub fn safety_probability(
    x_s: &BigUint,
    alphabet_size: usize,
    n: usize,
) -> Result<f64, BoundsError> {
    let total = sequence_space(alphabet_size, n);
    if x_s > &total {
        return Err(BoundsError::ProbabilityRange {
            x_s: x_s.clone(),
            total,
        });
    }
    if x_s.is_zero() {
        return Ok(0.0);
    }
    let ratio = BigRational::new(BigInt::from(x_s.clone()), BigInt::from(total));
    Ok(ratio.to_f64().unwrap_or(0.0))
}
