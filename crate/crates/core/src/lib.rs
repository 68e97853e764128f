//! Power-posterior (alpha-posterior) inference for low-dimensional models,
//! with diagnostics for moment convergence to the Bernstein-von Mises
//! Gaussian and asymptotic normality of the posterior mean.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the `*F64` and
//! `*F32` aliases name the common concrete instantiations.

// `!(x > 0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod optimize;
pub mod posterior;
pub mod scalar;

pub use error::{Error, Result};
pub use linalg::SquareMatrix;
pub use scalar::Real;

macro_rules! aliases {
    ($($($seg:ident)::+ => $f64:ident, $f32:ident;)*) => {
        $(
            pub type $f64 = $($seg)::+<f64>;
            pub type $f32 = $($seg)::+<f32>;
        )*
    };
}

aliases! {
    model::Dataset => DatasetF64, DatasetF32;
    linalg::SquareMatrix => SquareMatrixF64, SquareMatrixF32;
    posterior::GridDensity => GridDensityF64, GridDensityF32;
    posterior::AlphaConfig => AlphaConfigF64, AlphaConfigF32;
    posterior::Chain => ChainF64, ChainF32;
    asymptotics::MleFit => MleFitF64, MleFitF32;
    asymptotics::CurvatureEstimates => CurvatureEstimatesF64, CurvatureEstimatesF32;
    asymptotics::LimitingGaussian => LimitingGaussianF64, LimitingGaussianF32;
    diagnostics::DiagnosticsConfig => DiagnosticsConfigF64, DiagnosticsConfigF32;
    diagnostics::DiagnosticsReport => DiagnosticsReportF64, DiagnosticsReportF32;
    model::GaussianLocation => GaussianLocationF64, GaussianLocationF32;
    model::LaplaceLocation => LaplaceLocationF64, LaplaceLocationF32;
    model::LogisticRegression => LogisticRegressionF64, LogisticRegressionF32;
    model::NormalPrior => NormalPriorF64, NormalPriorF32;
}
