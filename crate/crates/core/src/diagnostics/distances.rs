//! Weighted L1 and total variation distances between grid densities.

use crate::error::{Error, Result};
use crate::posterior::GridDensity;
use crate::scalar::{from_usize, lit, norm1, norm2, Real};

/// `||h^(x k)||_1 = sum |h_i1 ... h_ik|`, evaluated as `||h||_1^k`.
pub fn tensor_norm_1<T: Real>(h: &[T], k: u32) -> T {
    norm1(h).powi(k as i32)
}

/// Weighted L1 distances between two densities on shared axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedL1<T> {
    /// `int ||h^(x k)||_1 |a - b|`.
    pub z0: T,
    /// `p^(k/2) int ||h||_2^k |a - b|`, an upper bound on `z0`.
    pub z_upper: T,
}

/// Computes `z0` and its upper bound `z_upper`. `k = 0` gives the plain L1 distance.
pub fn weighted_l1_distance<T: Real>(
    a: &GridDensity<T>,
    b: &GridDensity<T>,
    k: u32,
) -> Result<WeightedL1<T>> {
    check_frames(a, b)?;
    let ki = k as i32;
    let z0 = a.weighted_abs_difference(b, |h| tensor_norm_1(h, k))?;
    let pk = from_usize::<T>(a.dim()).powf(lit::<T>(f64::from(k) * 0.5));
    let z_upper = pk * a.weighted_abs_difference(b, |h| norm2(h).powi(ki))?;
    Ok(WeightedL1 { z0, z_upper })
}

/// `(1/2) int |a - b|`, clamped to `[0, 1]` against rounding.
pub fn tv_distance<T: Real>(a: &GridDensity<T>, b: &GridDensity<T>) -> Result<T> {
    check_frames(a, b)?;
    let l1 = a.weighted_abs_difference(b, |_| T::one())?;
    Ok((lit::<T>(0.5) * l1).min(T::one()).max(T::zero()))
}

fn check_frames<T: Real>(a: &GridDensity<T>, b: &GridDensity<T>) -> Result<()> {
    if a.frame() != b.frame() {
        return Err(Error::GridMismatch(
            "densities are in different frames".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posterior::{linspace, Frame};
    use statrs::distribution::{ContinuousCDF, Normal};

    fn normal(mean: f64, m: usize, half: f64) -> GridDensity<f64> {
        GridDensity::from_log_fn(vec![linspace(-half, half, m)], Frame::Theta, move |h| {
            -0.5 * (h[0] - mean) * (h[0] - mean)
        })
        .unwrap()
    }

    #[test]
    fn tensor_norm_examples() {
        assert_eq!(tensor_norm_1(&[1.0, 2.0], 2), 9.0);
        assert_eq!(tensor_norm_1(&[-1.5, 2.0, 0.5], 1), 4.0);
        for p in 1..5usize {
            let ones = vec![1.0_f64; p];
            for k in 1..4u32 {
                let lhs = tensor_norm_1(&ones, k);
                let rhs = (p as f64).powf(f64::from(k) / 2.0) * norm2(&ones).powi(k as i32);
                assert!((lhs - (p as f64).powi(k as i32)).abs() < 1e-12);
                assert!((lhs - rhs).abs() < 1e-9 * rhs);
            }
        }
    }

    #[test]
    fn identical_densities_have_zero_distance() {
        let a = normal(0.0, 801, 10.0);
        let d = weighted_l1_distance(&a, &a, 2).unwrap();
        assert_eq!((d.z0, d.z_upper), (0.0, 0.0));
        assert_eq!(tv_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn one_dimensional_bound_is_tight() {
        let a = normal(0.0, 801, 10.0);
        let b = normal(0.3, 801, 10.0);
        for k in 1..=3 {
            let d = weighted_l1_distance(&a, &b, k).unwrap();
            assert_eq!(d.z0, d.z_upper);
        }
    }

    #[test]
    fn shifted_normal_matches_fine_quadrature() {
        let a = normal(0.0, 4001, 12.0);
        let b = normal(0.1, 4001, 12.0);
        let z0 = weighted_l1_distance(&a, &b, 1).unwrap().z0;
        let fa = normal(0.0, 1_000_001, 12.0);
        let fb = normal(0.1, 1_000_001, 12.0);
        let oracle = weighted_l1_distance(&fa, &fb, 1).unwrap().z0;
        assert!((z0 - oracle).abs() < 1e-4, "{z0} vs {oracle}");
    }

    #[test]
    fn tv_of_shifted_normals() {
        let a = normal(0.0, 4001, 12.0);
        let b = normal(0.5, 4001, 12.0);
        let expected = 2.0 * Normal::new(0.0, 1.0).unwrap().cdf(0.25) - 1.0;
        let tv = tv_distance(&a, &b).unwrap();
        assert!((tv - expected).abs() < 1e-4);
        assert!((tv - 0.1974).abs() < 1e-4);
        let far = normal(10.0, 4001, 20.0);
        assert!(tv_distance(&normal(0.0, 4001, 20.0), &far).unwrap() >= 0.999);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        assert!(tv_distance(&normal(0.0, 101, 5.0), &normal(0.0, 103, 5.0)).is_err());
    }
}
