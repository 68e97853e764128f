//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar the library is generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

/// Converts an integer count into `T`.
#[inline]
pub fn from_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("count representable in scalar type")
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn vec_to_f64<T: Real>(v: &[T]) -> Vec<f64> {
    v.iter().map(|&x| to_f64(x)).collect()
}

/// `log(sum(exp(xs)))` with max subtraction. Returns `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp<T: Real>(xs: impl IntoIterator<Item = T> + Clone) -> T {
    let max = xs
        .clone()
        .into_iter()
        .fold(T::neg_infinity(), |m, x| if x > m { x } else { m });
    if max == T::neg_infinity() {
        return max;
    }
    let s: T = xs.into_iter().map(|x| (x - max).exp()).sum();
    max + s.ln()
}

pub fn norm1<T: Real>(h: &[T]) -> T {
    h.iter().map(|x| x.abs()).sum()
}

pub fn norm2<T: Real>(h: &[T]) -> T {
    h.iter().map(|&x| x * x).sum::<T>().sqrt()
}

pub fn norm_inf<T: Real>(h: &[T]) -> T {
    h.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// `Gamma(m / 2)` for a positive integer `m`, exact up to rounding.
pub fn gamma_half<T: Real>(m: u32) -> T {
    assert!(m > 0, "gamma_half requires m > 0");
    if m.is_multiple_of(2) {
        // Gamma(j) = (j-1)!
        let j = m / 2;
        (1..j).fold(T::one(), |acc, i| acc * lit(f64::from(i)))
    } else {
        // Gamma(j + 1/2) = sqrt(pi) * prod_{i=1..j} (i - 1/2)
        let j = (m - 1) / 2;
        (1..=j).fold(T::PI().sqrt(), |acc, i| acc * lit(f64::from(i) - 0.5))
    }
}
