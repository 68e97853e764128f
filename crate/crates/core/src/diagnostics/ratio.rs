//! Ratio functionals on a ball and the moment bound built from them.

use crate::error::{Error, Result};
use crate::posterior::GridDensity;
use crate::scalar::{norm2, to_f64, vec_to_f64, Real};

use super::tails::BoundCheck;

/// Largest number of node pairs evaluated exactly.
pub const MAX_PAIRS: usize = 4_000_000;

/// Suprema of the ratio functionals over node pairs of a ball.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioSuprema<T> {
    pub sup_f_plus: T,
    pub sup_f_minus: T,
    /// Nodes of the ball.
    pub ball_nodes: usize,
    pub pairs_evaluated: usize,
    /// `true` when the pair set was subsampled.
    pub subsampled: bool,
    /// Largest change of `log lim - log post` between neighbouring ball
    /// nodes; a bound on the log-ratio resolution of the grid.
    pub resolution: T,
}

/// Suprema over `g, h` in the ball of radius `r` of
/// `f+(g, h) = {1 - lim(h) post(g) / (post(h) lim(g))}^+` and
/// `f-(g, h) = {post(h) lim(g) / (lim(h) post(g)) - 1}^-`.
///
/// Pairs are enumerated in log space. Beyond [`MAX_PAIRS`] a strided node
/// subset is used that always keeps the extreme log-ratio nodes. The identity
/// `sup f-(g, h) = sup f+(h, g)` is verified to `1e-12`.
pub fn fn_ratio_suprema<T: Real>(
    post: &GridDensity<T>,
    lim: &GridDensity<T>,
    r: T,
) -> Result<RatioSuprema<T>> {
    post.check_same_axes(lim)?;
    if post.frame() != lim.frame() {
        return Err(Error::GridMismatch(
            "densities are in different frames".into(),
        ));
    }
    if !(r > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "radius must be positive, got {r}"
        )));
    }
    // L(h) = log lim(h) - log post(h) on the ball.
    let mut ball = Vec::new();
    let mut log_ratio = Vec::new();
    for i in 0..post.len() {
        let h = post.node(i);
        if norm2(&h) > r {
            continue;
        }
        let (lp, ll) = (post.log_values()[i], lim.log_values()[i]);
        if !lp.is_finite() || !ll.is_finite() {
            return Err(Error::NonPositiveDensity {
                node: vec_to_f64(&h),
            });
        }
        ball.push(i);
        log_ratio.push(ll - lp);
    }
    if ball.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no grid node lies in the ball of radius {r}"
        )));
    }
    let resolution = neighbour_resolution(post, &ball, &log_ratio);

    let b = ball.len();
    let (subset, subsampled) = if b.saturating_mul(b) <= MAX_PAIRS {
        ((0..b).collect::<Vec<_>>(), false)
    } else {
        let keep = (MAX_PAIRS as f64).sqrt().floor() as usize;
        let stride = b.div_ceil(keep - 2);
        let mut s: Vec<usize> = (0..b).step_by(stride).collect();
        let argmin = argext(&log_ratio, |a, c| a < c);
        let argmax = argext(&log_ratio, |a, c| a > c);
        s.push(argmin);
        s.push(argmax);
        s.sort_unstable();
        s.dedup();
        (s, true)
    };

    let one = T::one();
    let f_plus = |lg: T, lh: T| (one - (lh - lg).exp()).max(T::zero());
    let f_minus = |lg: T, lh: T| (one - (lg - lh).exp()).max(T::zero());
    let (mut sup_plus, mut sup_minus, mut sup_plus_swapped) = (T::zero(), T::zero(), T::zero());
    for &gi in &subset {
        let lg = log_ratio[gi];
        for &hi in &subset {
            let lh = log_ratio[hi];
            sup_plus = sup_plus.max(f_plus(lg, lh));
            sup_minus = sup_minus.max(f_minus(lg, lh));
            sup_plus_swapped = sup_plus_swapped.max(f_plus(lh, lg));
        }
    }
    let tol = 1e-12;
    if to_f64((sup_minus - sup_plus_swapped).abs()) > tol {
        return Err(Error::Consistency(format!(
            "sup f- = {sup_minus} differs from swapped sup f+ = {sup_plus_swapped}"
        )));
    }
    // Closed form from the extremes of L.
    let lmin = log_ratio.iter().fold(T::infinity(), |m, &x| m.min(x));
    let lmax = log_ratio.iter().fold(T::neg_infinity(), |m, &x| m.max(x));
    let closed = one - (lmin - lmax).exp();
    if to_f64((closed - sup_plus).abs()) > tol || to_f64((closed - sup_minus).abs()) > tol {
        return Err(Error::Consistency(format!(
            "pair suprema ({sup_plus}, {sup_minus}) differ from the extreme-node value {closed}"
        )));
    }
    Ok(RatioSuprema {
        sup_f_plus: sup_plus,
        sup_f_minus: sup_minus,
        ball_nodes: b,
        pairs_evaluated: subset.len() * subset.len(),
        subsampled,
        resolution,
    })
}

fn argext<T: Real>(v: &[T], better: impl Fn(T, T) -> bool) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if better(x, v[best]) {
            best = i;
        }
    }
    best
}

fn neighbour_resolution<T: Real>(g: &GridDensity<T>, ball: &[usize], log_ratio: &[T]) -> T {
    let sizes: Vec<usize> = g.axes().iter().map(Vec::len).collect();
    let mut strides = vec![1usize; sizes.len()];
    for j in (0..sizes.len().saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * sizes[j + 1];
    }
    let mut position = std::collections::HashMap::with_capacity(ball.len());
    for (k, &i) in ball.iter().enumerate() {
        position.insert(i, k);
    }
    let mut res = T::zero();
    for (k, &i) in ball.iter().enumerate() {
        for (j, &s) in strides.iter().enumerate() {
            let idx = (i / s) % sizes[j];
            if idx + 1 < sizes[j] {
                if let Some(&k2) = position.get(&(i + s)) {
                    res = res.max((log_ratio[k2] - log_ratio[k]).abs());
                }
            }
        }
    }
    res
}

/// Result of [`lemma1_bound_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct Lemma1Check<T> {
    pub bound: BoundCheck<T>,
    pub suprema: RatioSuprema<T>,
}

/// For `s(h) = ||h||_2^k` and `K` the closed ball of radius `k_radius`:
/// `int s |phi - psi| <= sup f+ int s psi + sup f- int s phi + int_(K^c) s (phi + psi)`,
/// with `f+-` built from `(psi, phi)` as in [`fn_ratio_suprema`].
pub fn lemma1_bound_check<T: Real>(
    phi: &GridDensity<T>,
    psi: &GridDensity<T>,
    k: u32,
    k_radius: T,
) -> Result<Lemma1Check<T>> {
    let suprema = fn_ratio_suprema(psi, phi, k_radius)?;
    let ki = k as i32;
    let s = |h: &[T]| norm2(h).powi(ki);
    let lhs = phi.weighted_abs_difference(psi, s)?;
    let s_psi = psi.integrate(|h, _| s(h));
    let s_phi = phi.integrate(|h, _| s(h));
    let outside =
        |g: &GridDensity<T>| g.integrate(|h, _| if norm2(h) > k_radius { s(h) } else { T::zero() });
    let tail = outside(phi) + outside(psi);
    let rhs = suprema.sup_f_plus * s_psi + suprema.sup_f_minus * s_phi + tail;
    Ok(Lemma1Check {
        bound: BoundCheck { lhs, rhs },
        suprema,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posterior::{linspace, Frame};
    use proptest::prelude::*;

    fn normal(mean: f64, sd: f64, m: usize, half: f64) -> GridDensity<f64> {
        GridDensity::from_log_fn(vec![linspace(-half, half, m)], Frame::Theta, move |h| {
            -0.5 * ((h[0] - mean) / sd).powi(2)
        })
        .unwrap()
    }

    #[test]
    fn identical_densities_have_zero_suprema() {
        let a = normal(0.0, 1.0, 801, 10.0);
        let s = fn_ratio_suprema(&a, &a, 3.0).unwrap();
        assert_eq!((s.sup_f_plus, s.sup_f_minus), (0.0, 0.0));
        let l1 = lemma1_bound_check(&a, &a, 1, 3.0).unwrap();
        assert_eq!(l1.bound.lhs, 0.0);
        assert!(l1.bound.rhs >= 0.0);
    }

    #[test]
    fn shifted_pair_satisfies_moment_bound() {
        let phi = normal(0.0, 1.0, 4001, 12.0);
        let psi = normal(0.3, 1.2, 4001, 12.0);
        let c = lemma1_bound_check(&phi, &psi, 1, 4.0).unwrap();
        assert!(c.bound.holds(), "{:?}", c.bound);
        assert!(!c.suprema.subsampled);
    }

    #[test]
    fn suprema_of_shifted_normals_match_closed_form() {
        // log lim - log post = -0.5 (h^2 - (h - d)^2) + const, linear in h.
        let d = 0.2;
        let lim = normal(0.0, 1.0, 1201, 12.0);
        let post = normal(d, 1.0, 1201, 12.0);
        let s = fn_ratio_suprema(&post, &lim, 2.0).unwrap();
        let expected = 1.0 - (-2.0 * 2.0 * d).exp();
        assert!((s.sup_f_plus - expected).abs() < 1e-9);
        assert!(s.resolution > 0.0 && s.resolution < 0.01);
    }

    #[test]
    fn zero_density_in_ball_is_rejected() {
        let axes = vec![linspace(-2.0, 2.0, 5)];
        let a = GridDensity::new(
            axes.clone(),
            Frame::Theta,
            vec![0.0, 0.0, f64::NEG_INFINITY, 0.0, 0.0],
        )
        .unwrap();
        let b = GridDensity::new(axes, Frame::Theta, vec![0.0; 5]).unwrap();
        assert!(matches!(
            fn_ratio_suprema(&a, &b, 1.0),
            Err(Error::NonPositiveDensity { .. })
        ));
    }

    #[test]
    fn large_balls_are_subsampled_exactly() {
        let m = 201;
        let axes = vec![linspace(-6.0, 6.0, m), linspace(-6.0, 6.0, m)];
        let a = GridDensity::from_log_fn(axes.clone(), Frame::Theta, |h| {
            -0.5 * (h[0] * h[0] + h[1] * h[1])
        })
        .unwrap();
        let b = GridDensity::from_log_fn(axes, Frame::Theta, |h: &[f64]| {
            -0.5 * ((h[0] - 0.1).powi(2) + h[1] * h[1] / 1.1)
        })
        .unwrap();
        let s = fn_ratio_suprema(&a, &b, 5.0).unwrap();
        assert!(s.subsampled);
        assert!(s.pairs_evaluated <= MAX_PAIRS);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn symmetry_and_moment_bound_hold(m1 in -1.0f64..1.0, s1 in 0.5f64..2.0,
                                    m2 in -1.0f64..1.0, s2 in 0.5f64..2.0,
                                    radius in 0.5f64..5.0, k in 1u32..3) {
            let a = normal(m1, s1, 801, 16.0);
            let b = normal(m2, s2, 801, 16.0);
            let s = fn_ratio_suprema(&a, &b, radius).unwrap();
            prop_assert!((s.sup_f_minus - s.sup_f_plus).abs() <= 1e-12);
            let c = lemma1_bound_check(&a, &b, k, radius).unwrap();
            prop_assert!(c.bound.holds(), "{:?}", c.bound);
        }
    }
}
