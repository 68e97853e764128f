//! One-dimensional maximisation helpers and deterministic parallel sums.

use rayon::prelude::*;

use crate::scalar::{lit, Real};

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`,
/// stopping when the bracket is narrower than `tol`.
pub fn golden_section_max<T: Real>(mut f: impl FnMut(T) -> T, a: T, b: T, tol: T) -> T {
    let inv_phi = lit::<T>(0.618_033_988_749_894_9);
    let (mut a, mut b) = if a <= b { (a, b) } else { (b, a) };
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..500 {
        if (b - a) <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }

    lit::<T>(0.5) * (a + b)
}

/// Grows a bracket `[a, c]` around `x0` until the interior point beats both
/// ends, clamped to `[lo, hi]`.
pub fn bracket_max<T: Real>(mut f: impl FnMut(T) -> T, x0: T, step: T, lo: T, hi: T) -> (T, T) {
    let mut s = step.abs().max(T::epsilon());
    let two = lit::<T>(2.0);
    let mut b = x0.max(lo).min(hi);
    let mut fb = f(b);
    for _ in 0..200 {
        let a = (b - s).max(lo);
        let c = (b + s).min(hi);
        let (fa, fc) = (f(a), f(c));
        if fa <= fb && fc <= fb {
            return (a, c);
        }
        // Move towards the higher side and widen.
        if fc > fa {
            b = c;
            fb = fc;
        } else {
            b = a;
            fb = fa;
        }
        s *= two;
        if (b == lo || b == hi) && s > (hi - lo) {
            break;
        }
    }
    ((b - s).max(lo), (b + s).min(hi))
}

const CHUNK: usize = 2048;

/// Sums `f(i)` for `i in 0..n` in parallel with a fixed chunking, so the
/// result does not depend on thread scheduling.
pub fn par_sum<T: Real>(n: usize, f: impl Fn(usize) -> T + Sync) -> T {
    if n <= CHUNK {
        return (0..n).map(&f).sum();
    }
    let partial: Vec<T> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(n)).map(&f).sum())
        .collect();
    partial.into_iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let x = golden_section_max(|x: f64| -(x - 0.3).powi(2), -5.0, 5.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-9);
    }

    #[test]
    fn bracket_contains_maximum() {
        let f = |x: f64| -(x - 7.5).abs();
        let (a, c) = bracket_max(f, 0.0, 0.1, -20.0, 20.0);
        assert!(a <= 7.5 && 7.5 <= c);
    }

    #[test]
    fn par_sum_is_deterministic() {
        let f = |i: usize| 1.0 / (1.0 + i as f64);
        let a = par_sum(100_000, f);
        let b = par_sum(100_000, f);
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
