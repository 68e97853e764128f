//! The limiting Gaussian and closed-form Gaussian moment bounds.

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::posterior::{Frame, GridDensity};
use crate::scalar::{from_usize, gamma_half, lit, norm1, to_f64, Real};

use super::{CurvatureEstimates, MleFit};

/// `N(mean, covariance)` in the parameter frame or the local frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitingGaussian<T> {
    pub mean: Vec<T>,
    pub covariance: SquareMatrix<T>,
    pub frame: Frame<T>,
}

/// Builds the limiting Gaussian of the alpha-posterior.
///
/// In the parameter frame the law is `N(theta_hat, V^-1 / (alpha n))`; in the
/// local frame `Frame::Lan { theta_star, n }` it is
/// `N(sqrt(n) (theta_hat - theta_star), V^-1 / alpha)`.
pub fn limiting_gaussian<T: Real>(
    fit: &MleFit<T>,
    curv: &CurvatureEstimates<T>,
    alpha: T,
    n: usize,
    frame: Frame<T>,
) -> Result<LimitingGaussian<T>> {
    if !(alpha > T::zero()) || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "limiting Gaussian needs alpha > 0 and n >= 1 (alpha {alpha}, n {n})"
        )));
    }
    let (mean, covariance) = match &frame {
        Frame::Theta => (
            fit.theta_hat.clone(),
            curv.v_inverse
                .scale(T::one() / (alpha * from_usize::<T>(n))),
        ),
        Frame::Lan {
            theta_star,
            n: frame_n,
        } => {
            if *frame_n != n || theta_star.len() != fit.theta_hat.len() {
                return Err(Error::InvalidArgument(
                    "local frame metadata does not match the fit".into(),
                ));
            }
            let rn = from_usize::<T>(n).sqrt();
            (
                fit.theta_hat
                    .iter()
                    .zip(theta_star)
                    .map(|(&a, &b)| rn * (a - b))
                    .collect(),
                curv.v_inverse.scale(T::one() / alpha),
            )
        }
    };
    let g = LimitingGaussian {
        mean,
        covariance: covariance.symmetrize(),
        frame,
    };
    if g.covariance.cholesky().is_none() {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: to_f64(g.covariance.min_eigenvalue()),
        });
    }
    Ok(g)
}

impl<T: Real> LimitingGaussian<T> {
    /// Log density at `x`.
    pub fn log_density(&self, x: &[T]) -> T {
        let prec = self.precision();
        let d: Vec<T> = x.iter().zip(&self.mean).map(|(&a, &b)| a - b).collect();
        let p = from_usize::<T>(self.mean.len());
        let log_det = self
            .covariance
            .log_det_spd()
            .expect("covariance is positive definite");
        -lit::<T>(0.5) * (prec.bilinear(&d, &d) + log_det + p * (T::PI() + T::PI()).ln())
    }

    fn precision(&self) -> SquareMatrix<T> {
        self.covariance
            .inverse()
            .expect("covariance is positive definite")
    }

    /// Tabulates the density on `axes`, in this Gaussian's frame, and
    /// renormalises with the trapezoid rule.
    pub fn tabulate(&self, axes: Vec<Vec<T>>) -> Result<GridDensity<T>> {
        if axes.len() != self.mean.len() {
            return Err(Error::GridMismatch(format!(
                "grid has {} axes, Gaussian has dimension {}",
                axes.len(),
                self.mean.len()
            )));
        }
        let prec = self.precision();
        let mean = self.mean.clone();
        GridDensity::from_log_fn(axes, self.frame.clone(), move |x| {
            let mut q = T::zero();
            for a in 0..x.len() {
                for b in 0..x.len() {
                    q += (x[a] - mean[a]) * prec[(a, b)] * (x[b] - mean[b]);
                }
            }
            -lit::<T>(0.5) * q
        })
    }

    /// Tabulates on the axes of `like`, checking the frames match.
    pub fn tabulate_like(&self, like: &GridDensity<T>) -> Result<GridDensity<T>> {
        if *like.frame() != self.frame {
            return Err(Error::GridMismatch(
                "grid and Gaussian frames differ".into(),
            ));
        }
        self.tabulate(like.axes().to_vec())
    }
}

/// Closed-form bound on centred absolute Gaussian moments:
/// `2^(3k/2-1) p^(k/2-1) / sqrt(pi) * Gamma((k+1)/2) * sum_i (cov_ii / alpha)^(k/2)`,
/// with `cov_ii` the diagonal of `V^-1`.
pub fn gaussian_abs_moment<T: Real>(cov_diag: &[T], k: u32, alpha: T) -> Result<T> {
    if k == 0 || cov_diag.is_empty() || !(alpha > T::zero()) {
        return Err(Error::InvalidArgument(
            "gaussian_abs_moment needs k >= 1, p >= 1 and alpha > 0".into(),
        ));
    }
    let kf = lit::<T>(f64::from(k));
    let half_k = kf * lit(0.5);
    let p = from_usize::<T>(cov_diag.len());
    let two = lit::<T>(2.0);
    let front = two.powf(lit::<T>(1.5) * kf - T::one()) * p.powf(half_k - T::one())
        / T::PI().sqrt()
        * gamma_half::<T>(k + 1);
    let sum: T = cov_diag.iter().map(|&c| (c / alpha).powf(half_k)).sum();
    Ok(front * sum)
}

/// `int n^(k/2) ||(theta - theta_star)^(x k)||_1 |post - lim| d theta` for
/// parameter-frame grids on shared axes.
pub fn tensor_moment_distance_corollary<T: Real>(
    post: &GridDensity<T>,
    lim: &GridDensity<T>,
    theta_star: &[T],
    k: u32,
    n: usize,
) -> Result<T> {
    if !(k == 1 || k == 2) {
        return Err(Error::InvalidArgument(format!("k must be 1 or 2, got {k}")));
    }
    if *post.frame() != Frame::Theta || *lim.frame() != Frame::Theta {
        return Err(Error::GridMismatch(
            "both densities must be in the parameter frame".into(),
        ));
    }
    if theta_star.len() != post.dim() {
        return Err(Error::InvalidArgument(
            "theta_star has the wrong dimension".into(),
        ));
    }
    let scale = from_usize::<T>(n).powf(lit::<T>(f64::from(k) * 0.5));
    let ki = k as i32;
    post.weighted_abs_difference(lim, |theta| {
        let mut buf = [T::zero(); crate::posterior::MAX_DIM];
        let d = &mut buf[..theta.len()];
        for (j, v) in d.iter_mut().enumerate() {
            *v = theta[j] - theta_star[j];
        }
        scale * norm1(d).powi(ki)
    })
}
