#![allow(dead_code)]

use powerpost::asymptotics::{estimate_curvature, fit_mle, MleFit};
use powerpost::harness::ExperimentConfig;
use powerpost::model::{Dataset, Model, Prior};
use powerpost::posterior::{normalize_on_grid, AlphaConfig, GridDensity};

/// Builds a sweep configuration from TOML tables for model and process.
pub fn config(
    model: &str,
    process: &str,
    ns: &[usize],
    alphas: &[f64],
    seeds: (u64, u64),
) -> ExperimentConfig {
    let text = format!(
        "n_sequence = {ns:?}\nalpha_set = {alphas:?}\nseeds = {{ start = {}, count = {} }}\nk_values = [1, 2]\n\n[model]\n{model}\n\n[process]\n{process}\n",
        seeds.0, seeds.1
    );
    ExperimentConfig::from_toml_str(&text).expect("valid test configuration")
}

pub const GAUSSIAN_MODEL: &str = "kind = \"gaussian_location\"";
pub const LAPLACE_MODEL: &str = "kind = \"laplace_location\"";
pub const LOGISTIC_MODEL: &str = "kind = \"logistic_regression\"";
pub const GAUSSIAN_DATA: &str = "kind = \"gaussian\"";
pub const LAPLACE_DATA: &str = "kind = \"laplace\"";
pub const T5_DATA: &str = "kind = \"student_t\"\ndf = 5.0";
pub const LOGISTIC_DATA: &str = "kind = \"logistic\"\ntheta = 1.0";

/// MLE from the box centre, curvature at the MLE and the grid posterior.
pub fn grid_posterior(
    model: &dyn Model<f64>,
    prior: &dyn Prior<f64>,
    data: &Dataset<f64>,
    alpha: f64,
) -> (MleFit<f64>, GridDensity<f64>) {
    let start = vec![0.0; model.dim()];
    let fit = fit_mle(model, data, &start).unwrap();
    let curv = estimate_curvature(model, data, &fit.theta_hat).unwrap();
    let cfg = AlphaConfig::new(alpha).unwrap();
    let post = normalize_on_grid(model, prior, data, &cfg, &fit, &curv).unwrap();
    (fit, post)
}

/// Conjugate Gaussian-location posterior `(mean, variance)` with unit
/// observation variance and prior `N(0, tau^2)`.
pub fn conjugate(sum: f64, n: usize, alpha: f64, tau: f64) -> (f64, f64) {
    let precision = alpha * n as f64 + 1.0 / (tau * tau);
    (alpha * sum / precision, 1.0 / precision)
}
