//! Remainder of the local asymptotic normality expansion.

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::model::{log_likelihood_ratio, Dataset, Model};
use crate::posterior::linspace;
use crate::scalar::{from_usize, lit, vec_to_f64, Real};

/// Largest `|R_n(h)|` over a set of local points.
#[derive(Debug, Clone, PartialEq)]
pub struct LanRemainder<T> {
    pub sup_abs: T,
    pub argmax: Vec<T>,
}

/// Nodes of the cube `[-radius, radius]^p` with `m` points per axis.
pub fn cube_points<T: Real>(p: usize, radius: T, m: usize) -> Vec<Vec<T>> {
    let axis = linspace(-radius, radius, m);
    let total = m.pow(p as u32);
    (0..total)
        .map(|flat| {
            let mut rem = flat;
            let mut h = vec![T::zero(); p];
            for j in (0..p).rev() {
                h[j] = axis[rem % m];
                rem /= m;
            }
            h
        })
        .collect()
}

/// `sup_h |R_n(h)|` with
/// `R_n(h) = log f_n(X | theta* + h/sqrt(n)) - log f_n(X | theta*) - h^T V Delta + h^T V h / 2`.
pub fn lan_remainder<T: Real>(
    model: &dyn Model<T>,
    data: &Dataset<T>,
    theta_star: &[T],
    v: &SquareMatrix<T>,
    delta: &[T],
    h_points: &[Vec<T>],
) -> Result<LanRemainder<T>> {
    let p = model.dim();
    if theta_star.len() != p || delta.len() != p || v.dim() != p {
        return Err(Error::InvalidArgument(
            "LAN inputs have inconsistent dimensions".into(),
        ));
    }
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    let rn = from_usize::<T>(data.len()).sqrt();
    let v_delta = v.mul_vec(delta);
    let half = lit::<T>(0.5);
    let mut best = LanRemainder {
        sup_abs: T::zero(),
        argmax: vec![T::zero(); p],
    };
    for h in h_points {
        if h.len() != p {
            return Err(Error::InvalidArgument(
                "local point has the wrong dimension".into(),
            ));
        }
        let theta: Vec<T> = theta_star
            .iter()
            .zip(h)
            .map(|(&t, &x)| t + x / rn)
            .collect();
        if !model.theta_box().contains(&theta) {
            return Err(Error::InvalidArgument(format!(
                "local point h = {:?} maps to theta = {:?} outside the parameter box",
                vec_to_f64(h),
                vec_to_f64(&theta)
            )));
        }
        let linear: T = h.iter().zip(&v_delta).map(|(&a, &b)| a * b).sum();
        let r = log_likelihood_ratio(model, data, &theta, theta_star) - linear
            + half * v.bilinear(h, h);
        if !r.is_finite() {
            return Err(Error::NonFinite {
                theta: vec_to_f64(&theta),
            });
        }
        if r.abs() > best.sup_abs {
            best = LanRemainder {
                sup_abs: r.abs(),
                argmax: h.clone(),
            };
        }
    }
    Ok(best)
}
