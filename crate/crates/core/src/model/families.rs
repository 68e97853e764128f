use crate::linalg::SquareMatrix;
use crate::scalar::{lit, Real};

use super::{Model, ThetaBox, DEFAULT_BOX_HALFWIDTH};

/// `N(theta, sigma^2 I)` location family in `dim` dimensions with known scale.
#[derive(Debug, Clone)]
pub struct GaussianLocation<T> {
    sigma: T,
    /// `-(p/2) ln(2 pi sigma^2)`.
    log_norm: T,
    theta_box: ThetaBox<T>,
    name: String,
}

impl<T: Real> GaussianLocation<T> {
    pub fn new(dim: usize, sigma: T) -> Self {
        assert!(dim >= 1 && sigma > T::zero());
        let name = if dim == 1 {
            "gaussian_location".to_string()
        } else {
            format!("gaussian_location_{dim}d")
        };
        let p = lit::<T>(dim as f64);
        Self {
            sigma,
            log_norm: -lit::<T>(0.5) * p * (T::TAU() * sigma * sigma).ln(),
            theta_box: ThetaBox::symmetric(dim, lit(DEFAULT_BOX_HALFWIDTH)),
            name,
        }
    }

    pub fn with_box(mut self, theta_box: ThetaBox<T>) -> Self {
        assert_eq!(theta_box.dim(), self.theta_box.dim());
        self.theta_box = theta_box;
        self
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }
}

impl<T: Real> Model<T> for GaussianLocation<T> {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.theta_box.dim()
    }

    fn obs_width(&self) -> usize {
        self.dim()
    }

    fn theta_box(&self) -> &ThetaBox<T> {
        &self.theta_box
    }

    fn log_density_one(&self, x: &[T], theta: &[T]) -> T {
        let var = self.sigma * self.sigma;
        let sq: T = x.iter().zip(theta).map(|(&a, &b)| (a - b) * (a - b)).sum();
        self.log_norm - sq / (var + var)
    }

    fn log_likelihood_sum(&self, data: &super::Dataset<T>, theta: &[T]) -> T {
        let var = self.sigma * self.sigma;
        let sq: T = if theta.len() == 1 {
            let t = theta[0];
            data.values().iter().map(|&a| (a - t) * (a - t)).sum()
        } else {
            data.iter()
                .map(|x| {
                    x.iter()
                        .zip(theta)
                        .map(|(&a, &b)| (a - b) * (a - b))
                        .sum::<T>()
                })
                .sum()
        };
        crate::scalar::from_usize::<T>(data.len()) * self.log_norm - sq / (var + var)
    }

    fn score_one(&self, x: &[T], theta: &[T]) -> Option<Vec<T>> {
        let var = self.sigma * self.sigma;
        Some(x.iter().zip(theta).map(|(&a, &b)| (a - b) / var).collect())
    }

    fn hessian_one(&self, _x: &[T], _theta: &[T]) -> Option<SquareMatrix<T>> {
        let var = self.sigma * self.sigma;
        Some(SquareMatrix::identity(self.dim()).scale(-T::one() / var))
    }
}

/// Laplace location family with known scale `b`: `f(x|theta) = exp(-|x - theta| / b) / (2b)`.
#[derive(Debug, Clone)]
pub struct LaplaceLocation<T> {
    scale: T,
    /// `-ln(2b)`.
    log_norm: T,
    theta_box: ThetaBox<T>,
}

impl<T: Real> LaplaceLocation<T> {
    pub fn new(scale: T) -> Self {
        assert!(scale > T::zero());
        Self {
            scale,
            log_norm: -(lit::<T>(2.0) * scale).ln(),
            theta_box: ThetaBox::symmetric(1, lit(DEFAULT_BOX_HALFWIDTH)),
        }
    }
}

impl<T: Real> Model<T> for LaplaceLocation<T> {
    fn name(&self) -> &str {
        "laplace_location"
    }

    fn dim(&self) -> usize {
        1
    }

    fn obs_width(&self) -> usize {
        1
    }

    fn theta_box(&self) -> &ThetaBox<T> {
        &self.theta_box
    }

    fn log_density_one(&self, x: &[T], theta: &[T]) -> T {
        self.log_norm - (x[0] - theta[0]).abs() / self.scale
    }

    fn log_likelihood_sum(&self, data: &super::Dataset<T>, theta: &[T]) -> T {
        let t = theta[0];
        let abs: T = data.values().iter().map(|&a| (a - t).abs()).sum();
        crate::scalar::from_usize::<T>(data.len()) * self.log_norm - abs / self.scale
    }

    fn score_one(&self, x: &[T], theta: &[T]) -> Option<Vec<T>> {
        let d = x[0] - theta[0];
        let s = if d > T::zero() {
            T::one()
        } else if d < T::zero() {
            -T::one()
        } else {
            T::zero()
        };
        Some(vec![s / self.scale])
    }

    fn is_smooth(&self) -> bool {
        false
    }
}

/// Logistic regression with one scalar coefficient and no intercept.
///
/// Observations are `(covariate, response)` pairs with response in `{0, 1}`;
/// covariates are conditioned on.
#[derive(Debug, Clone)]
pub struct LogisticRegression<T> {
    theta_box: ThetaBox<T>,
}

impl<T: Real> LogisticRegression<T> {
    pub fn new() -> Self {
        Self {
            theta_box: ThetaBox::symmetric(1, lit(DEFAULT_BOX_HALFWIDTH)),
        }
    }
}

impl<T: Real> Default for LogisticRegression<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// `log(1 + exp(eta))` without overflow.
fn softplus<T: Real>(eta: T) -> T {
    if eta > T::zero() {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

fn sigmoid<T: Real>(eta: T) -> T {
    if eta >= T::zero() {
        T::one() / (T::one() + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (T::one() + e)
    }
}

impl<T: Real> Model<T> for LogisticRegression<T> {
    fn name(&self) -> &str {
        "logistic_regression"
    }

    fn dim(&self) -> usize {
        1
    }

    fn obs_width(&self) -> usize {
        2
    }

    fn theta_box(&self) -> &ThetaBox<T> {
        &self.theta_box
    }

    fn log_density_one(&self, x: &[T], theta: &[T]) -> T {
        let eta = theta[0] * x[0];
        x[1] * eta - softplus(eta)
    }

    fn score_one(&self, x: &[T], theta: &[T]) -> Option<Vec<T>> {
        let p = sigmoid(theta[0] * x[0]);
        Some(vec![x[0] * (x[1] - p)])
    }

    fn hessian_one(&self, x: &[T], theta: &[T]) -> Option<SquareMatrix<T>> {
        let p = sigmoid(theta[0] * x[0]);
        Some(SquareMatrix::scalar(-x[0] * x[0] * p * (T::one() - p)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::finite_difference_score;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn max_score_error(model: &dyn Model<f64>, draw: impl Fn(&mut ChaCha8Rng) -> Vec<f64>) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let x = draw(&mut rng);
            let theta: Vec<f64> = (0..model.dim())
                .map(|_| rng.random_range(-3.0..3.0))
                .collect();
            let analytic = model.score_one(&x, &theta).unwrap();
            let fd = finite_difference_score(model, &x, &theta);
            for (a, b) in analytic.iter().zip(&fd) {
                worst = worst.max((a - b).abs() / a.abs().max(1e-3));
            }
        }
        worst
    }

    #[test]
    fn analytic_scores_match_finite_differences() {
        let g1 = GaussianLocation::new(1, 1.0);
        assert!(max_score_error(&g1, |r| vec![r.random_range(-5.0..5.0)]) < 1e-5);
        let g2 = GaussianLocation::new(2, 1.0);
        assert!(
            max_score_error(&g2, |r| vec![
                r.random_range(-5.0..5.0),
                r.random_range(-5.0..5.0)
            ]) < 1e-5
        );
        let lr = LogisticRegression::new();
        assert!(
            max_score_error(&lr, |r| vec![
                r.random_range(-3.0..3.0),
                f64::from(r.random_range(0..2u8))
            ]) < 1e-5
        );
        // Laplace probes land away from the kink with probability one.
        let lp = LaplaceLocation::new(1.0);
        assert!(max_score_error(&lp, |r| vec![r.random_range(-5.0..5.0)]) < 1e-5);
    }

    #[test]
    fn logistic_is_stable_for_large_linear_predictors() {
        let lr = LogisticRegression::<f64>::new();
        let v = lr.log_density_one(&[1000.0, 1.0], &[1.0]);
        assert!(v.is_finite() && v.abs() < 1e-300);
        let v = lr.log_density_one(&[1000.0, 0.0], &[1.0]);
        assert!((v + 1000.0).abs() < 1e-9);
    }

    #[test]
    fn hessians_match_second_differences() {
        let lr = LogisticRegression::<f64>::new();
        let x = [0.7, 1.0];
        let t = 0.4;
        let h = 1e-4;
        let fd = (lr.log_density_one(&x, &[t + h]) - 2.0 * lr.log_density_one(&x, &[t])
            + lr.log_density_one(&x, &[t - h]))
            / (h * h);
        let an = lr.hessian_one(&x, &[t]).unwrap()[(0, 0)];
        assert!((fd - an).abs() < 1e-6);
    }
}
