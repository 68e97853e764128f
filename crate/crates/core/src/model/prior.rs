use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::{lit, vec_to_f64, Real};

/// Prior density `pi(theta)` on the parameter space.
pub trait Prior<T: Real>: Send + Sync {
    fn name(&self) -> &str;

    fn log_density(&self, theta: &[T]) -> T;
}

/// Independent normal prior `N(mean_j, sd_j^2)` per coordinate.
#[derive(Debug, Clone)]
pub struct NormalPrior<T> {
    mean: Vec<T>,
    sd: Vec<T>,
    name: String,
}

impl<T: Real> NormalPrior<T> {
    pub fn new(mean: Vec<T>, sd: Vec<T>) -> Self {
        assert_eq!(mean.len(), sd.len());
        assert!(sd.iter().all(|&s| s > T::zero()));
        let name = format!("normal(mean={mean:?}, sd={sd:?})");
        Self { mean, sd, name }
    }

    /// `N(0, tau^2 I)` in `dim` dimensions.
    pub fn centered(dim: usize, tau: T) -> Self {
        Self::new(vec![T::zero(); dim], vec![tau; dim])
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    pub fn sd(&self) -> &[T] {
        &self.sd
    }
}

impl<T: Real> Prior<T> for NormalPrior<T> {
    fn name(&self) -> &str {
        &self.name
    }

    fn log_density(&self, theta: &[T]) -> T {
        let half = lit::<T>(0.5);
        theta
            .iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(&t, (&m, &s))| {
                let z = (t - m) / s;
                -half * z * z - s.ln() - half * T::TAU().ln()
            })
            .sum()
    }
}

/// Improper flat prior, `log pi = 0`.
#[derive(Debug, Clone, Default)]
pub struct FlatPrior;

impl<T: Real> Prior<T> for FlatPrior {
    fn name(&self) -> &str {
        "flat"
    }

    fn log_density(&self, _theta: &[T]) -> T {
        T::zero()
    }
}

/// Probes `probes` uniform points of the ball of radius `delta` around
/// `centre` and returns the smallest prior density seen. Errors at the first
/// probe where the density is not strictly positive.
pub fn check_prior_positivity<T: Real>(
    prior: &dyn Prior<T>,
    centre: &[T],
    delta: T,
    probes: usize,
    seed: u64,
) -> Result<T> {
    let p = centre.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_density = T::infinity();
    let mut theta = vec![T::zero(); p];
    for _ in 0..probes {
        let dir: Vec<f64> = (0..p).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = dir
            .iter()
            .map(|d| d * d)
            .sum::<f64>()
            .sqrt()
            .max(f64::MIN_POSITIVE);
        let radius = rng.random::<f64>().powf(1.0 / p as f64);
        for j in 0..p {
            theta[j] = centre[j] + delta * lit(radius * dir[j] / norm);
        }
        let d = prior.log_density(&theta).exp();
        if !(d > T::zero()) || !d.is_finite() {
            return Err(Error::NonPositiveDensity {
                node: vec_to_f64(&theta),
            });
        }
        min_density = min_density.min(d);
    }
    Ok(min_density)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_prior_matches_closed_form() {
        let pr = NormalPrior::<f64>::centered(1, 2.0);
        let v = pr.log_density(&[1.0]);
        let expected = -0.125 - 2f64.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((v - expected).abs() < 1e-14);
    }

    #[test]
    fn shipped_priors_are_positive_near_theta_star() {
        let centre = [0.5];
        let normal = NormalPrior::<f64>::centered(1, 1.0);
        assert!(check_prior_positivity(&normal, &centre, 0.5, 1000, 1).unwrap() > 0.0);
        assert!(check_prior_positivity(&FlatPrior, &centre, 0.5, 1000, 1).unwrap() > 0.0);
        let normal2 = NormalPrior::<f64>::centered(2, 10.0);
        assert!(check_prior_positivity(&normal2, &[0.0, 0.0], 0.5, 1000, 1).unwrap() > 0.0);
    }

    struct HalfLine;
    impl Prior<f64> for HalfLine {
        fn name(&self) -> &str {
            "half_line"
        }
        fn log_density(&self, theta: &[f64]) -> f64 {
            if theta[0] > 0.0 {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        }
    }

    #[test]
    fn vanishing_prior_is_detected() {
        let err = check_prior_positivity(&HalfLine, &[0.0], 0.5, 1000, 1).unwrap_err();
        assert!(matches!(err, Error::NonPositiveDensity { .. }));
    }
}
