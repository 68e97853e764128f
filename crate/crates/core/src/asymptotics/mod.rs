//! MLE, curvature, sandwich variance and the limiting Gaussian.

mod curvature;
mod gaussian;
mod mle;

pub use curvature::{
    estimate_curvature, estimate_curvature_with, CurvatureEstimates, CurvatureMethod,
    CurvatureRequest,
};
pub use gaussian::{
    gaussian_abs_moment, limiting_gaussian, tensor_moment_distance_corollary, LimitingGaussian,
};
pub use mle::{fit_mle, fit_mle_single, fit_mle_with, MleFit, MleOptions};
