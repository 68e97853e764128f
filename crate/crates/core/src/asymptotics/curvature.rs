//! Curvature `V`, score covariance `M` and the sandwich `V^-1 M V^-1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::model::{finite_difference_score, Dataset, Model};
use crate::scalar::{from_usize, to_f64, vec_to_f64, Real};

use super::mle::hessian;

/// How derivatives were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureMethod {
    Analytic,
    FiniteDifference,
}

/// Which derivative path to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CurvatureRequest {
    /// Analytic when the model provides score and Hessian, else finite differences.
    #[default]
    Auto,
    Analytic,
    FiniteDifference,
}

/// Per-observation curvature and score covariance at a parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CurvatureEstimates<T> {
    /// `-(1/n)` times the log-likelihood Hessian; positive definite.
    pub v: SquareMatrix<T>,
    /// Uncentred score covariance `(1/n) sum s_i s_i^T`.
    pub m: SquareMatrix<T>,
    /// Sandwich `V^-1 M V^-1`.
    pub v_tilde: SquareMatrix<T>,
    pub v_inverse: SquareMatrix<T>,
    pub estimated_at: Vec<T>,
    pub method: CurvatureMethod,
}

impl<T: Real> CurvatureEstimates<T> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Estimates with [`CurvatureRequest::Auto`].
pub fn estimate_curvature<T: Real>(
    model: &dyn Model<T>,
    data: &Dataset<T>,
    at: &[T],
) -> Result<CurvatureEstimates<T>> {
    estimate_curvature_with(model, data, at, CurvatureRequest::Auto)
}

pub fn estimate_curvature_with<T: Real>(
    model: &dyn Model<T>,
    data: &Dataset<T>,
    at: &[T],
    request: CurvatureRequest,
) -> Result<CurvatureEstimates<T>> {
    if at.len() != model.dim() || !model.theta_box().contains_strictly(at) {
        return Err(Error::Domain {
            theta: vec_to_f64(at),
        });
    }
    if data.is_empty() || data.width() != model.obs_width() {
        return Err(Error::InvalidArgument(
            "curvature needs a non-empty dataset of the model's width".into(),
        ));
    }
    let first = data.get(0);
    let analytic_available =
        model.score_one(first, at).is_some() && model.hessian_one(first, at).is_some();
    let method = match request {
        CurvatureRequest::Auto if analytic_available => CurvatureMethod::Analytic,
        CurvatureRequest::Auto | CurvatureRequest::FiniteDifference => {
            CurvatureMethod::FiniteDifference
        }
        CurvatureRequest::Analytic if analytic_available => CurvatureMethod::Analytic,
        CurvatureRequest::Analytic => {
            return Err(Error::InvalidArgument(format!(
                "model {} has no analytic score and Hessian",
                model.name()
            )))
        }
    };
    let p = model.dim();
    let n = from_usize::<T>(data.len());
    let fd = method == CurvatureMethod::FiniteDifference;

    let v = hessian(model, data, at, fd)
        .scale(-T::one() / n)
        .symmetrize();
    let min_eigenvalue = v.min_eigenvalue();
    if !(min_eigenvalue > T::zero()) {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: to_f64(min_eigenvalue),
        });
    }

    let mut m = SquareMatrix::zeros(p);
    for x in data.iter() {
        let s = if fd {
            finite_difference_score(model, x, at)
        } else {
            model.score_one(x, at).expect("analytic score available")
        };
        for a in 0..p {
            for b in 0..p {
                m[(a, b)] += s[a] * s[b];
            }
        }
    }
    let m = m.scale(T::one() / n).symmetrize();
    let v_inverse = v.inverse()?.symmetrize();
    let v_tilde = v_inverse.matmul(&m).matmul(&v_inverse).symmetrize();
    Ok(CurvatureEstimates {
        v,
        m,
        v_tilde,
        v_inverse,
        estimated_at: at.to_vec(),
        method,
    })
}
