//! Statistical models, data-generating processes and priors.
//!
//! Observations are i.i.d.; a [`Dataset`] stores them flat, `obs_width`
//! scalars per observation. Only i.i.d. sampling is implemented; general
//! dependent-data likelihoods are out of reach of this module.

mod families;
mod prior;
mod process;
mod pseudo_true;

pub use families::{GaussianLocation, LaplaceLocation, LogisticRegression};
pub use prior::{check_prior_positivity, FlatPrior, NormalPrior, Prior};
pub use process::{
    sample_data, GaussianProcess, LaplaceProcess, LogisticProcess, PseudoTrue, StudentTProcess,
    TrueProcess, WeightedSample,
};
pub use pseudo_true::{pseudo_true_parameter, PseudoTrueOptions};

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::scalar::{lit, vec_to_f64, Real};

/// Default half-width of every coordinate of the parameter box.
pub const DEFAULT_BOX_HALFWIDTH: f64 = 20.0;

/// Closed axis-aligned parameter box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ThetaBox<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Real> ThetaBox<T> {
    pub fn symmetric(dim: usize, halfwidth: T) -> Self {
        Self {
            lower: vec![-halfwidth; dim],
            upper: vec![halfwidth; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, theta: &[T]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&t, (&lo, &hi))| t >= lo && t <= hi)
    }

    pub fn contains_strictly(&self, theta: &[T]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&t, (&lo, &hi))| t > lo && t < hi)
    }

    pub fn check(&self, theta: &[T]) -> Result<()> {
        if self.contains(theta) {
            Ok(())
        } else {
            Err(Error::Domain {
                theta: vec_to_f64(theta),
            })
        }
    }
}

impl<T: Real> Default for ThetaBox<T> {
    fn default() -> Self {
        Self::symmetric(1, lit(DEFAULT_BOX_HALFWIDTH))
    }
}

/// A parametric family `f(x | theta)` for one observation.
pub trait Model<T: Real>: Send + Sync {
    fn name(&self) -> &str;

    /// Parameter dimension `p`.
    fn dim(&self) -> usize;

    /// Scalars per observation.
    fn obs_width(&self) -> usize;

    fn theta_box(&self) -> &ThetaBox<T>;

    fn log_density_one(&self, x: &[T], theta: &[T]) -> T;

    /// `sum_i log f(x_i | theta)`. The default is compiled per model, so the
    /// per-observation call is static.
    fn log_likelihood_sum(&self, data: &Dataset<T>, theta: &[T]) -> T {
        data.iter().map(|x| self.log_density_one(x, theta)).sum()
    }

    /// Analytic per-observation score, when available.
    fn score_one(&self, _x: &[T], _theta: &[T]) -> Option<Vec<T>> {
        None
    }

    /// Analytic per-observation Hessian of the log density, when available.
    fn hessian_one(&self, _x: &[T], _theta: &[T]) -> Option<SquareMatrix<T>> {
        None
    }

    /// `true` when the log density is twice differentiable in theta.
    fn is_smooth(&self) -> bool {
        true
    }
}

/// Observations stored row-major, `width` scalars each.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    width: usize,
    values: Vec<T>,
}

impl<T: Real> Dataset<T> {
    pub fn new(width: usize, values: Vec<T>) -> Result<Self> {
        if width == 0 || !values.len().is_multiple_of(width) {
            return Err(Error::InvalidArgument(format!(
                "{} values cannot be split into observations of width {width}",
                values.len()
            )));
        }
        Ok(Self { width, values })
    }

    /// One-dimensional observations.
    pub fn scalar(values: Vec<T>) -> Self {
        Self { width: 1, values }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.width
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> &[T] {
        &self.values[i * self.width..(i + 1) * self.width]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, T> {
        self.values.chunks_exact(self.width)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Component-wise sample mean.
    pub fn mean(&self) -> Vec<T> {
        let n = lit::<T>(self.len() as f64);
        let mut m = vec![T::zero(); self.width];
        for x in self.iter() {
            for (acc, &v) in m.iter_mut().zip(x) {
                *acc += v;
            }
        }
        m.iter().map(|&s| s / n).collect()
    }

    /// Writes one observation per line, components separated by a space.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        for x in self.iter() {
            let line: Vec<String> = x.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    /// Reads the format written by [`Dataset::write_text`]. Blank lines and `#` comments are skipped.
    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut width = None;
        let mut values = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut count = 0;
            for tok in line.split(|c: char| c.is_whitespace() || c == ',') {
                if tok.is_empty() {
                    continue;
                }
                let v: f64 = tok.parse().map_err(|_| {
                    Error::Parse(format!("line {}: cannot parse {tok:?}", lineno + 1))
                })?;
                values.push(lit(v));
                count += 1;
            }
            match width {
                None => width = Some(count),
                Some(w) if w != count => {
                    return Err(Error::Parse(format!(
                        "line {}: expected {w} components, found {count}",
                        lineno + 1
                    )))
                }
                _ => {}
            }
        }
        let width = width.ok_or_else(|| Error::Parse("dataset is empty".into()))?;
        Self::new(width, values)
    }
}

fn check_data<T: Real>(model: &dyn Model<T>, data: &Dataset<T>) -> Result<()> {
    if data.width() != model.obs_width() {
        return Err(Error::InvalidArgument(format!(
            "model {} expects observations of width {}, dataset has width {}",
            model.name(),
            model.obs_width(),
            data.width()
        )));
    }
    Ok(())
}

/// `sum_i log f(x_i | theta)`.
pub fn log_likelihood<T: Real>(model: &dyn Model<T>, theta: &[T], data: &Dataset<T>) -> Result<T> {
    check_data(model, data)?;
    model.theta_box().check(theta)?;
    let ll = log_likelihood_unchecked(model, theta, data);
    if ll.is_finite() {
        Ok(ll)
    } else {
        Err(Error::NonFinite {
            theta: vec_to_f64(theta),
        })
    }
}

pub(crate) fn log_likelihood_unchecked<T: Real>(
    model: &dyn Model<T>,
    theta: &[T],
    data: &Dataset<T>,
) -> T {
    model.log_likelihood_sum(data, theta)
}

/// `log f_n(X | a) - log f_n(X | b)` accumulated per observation, which
/// avoids cancelling two large sums.
pub fn log_likelihood_ratio<T: Real>(
    model: &dyn Model<T>,
    data: &Dataset<T>,
    a: &[T],
    b: &[T],
) -> T {
    data.iter()
        .map(|x| model.log_density_one(x, a) - model.log_density_one(x, b))
        .sum()
}

/// Central-difference step used for score fallbacks.
pub(crate) fn score_step<T: Real>(theta_j: T) -> T {
    lit::<T>(1e-5) * T::one().max(theta_j.abs())
}

/// Per-observation score by central finite differences of `log_density_one`.
pub fn finite_difference_score<T: Real>(model: &dyn Model<T>, x: &[T], theta: &[T]) -> Vec<T> {
    let mut t = theta.to_vec();
    (0..theta.len())
        .map(|j| {
            let h = score_step(theta[j]);
            t[j] = theta[j] + h;
            let up = model.log_density_one(x, &t);
            t[j] = theta[j] - h;
            let down = model.log_density_one(x, &t);
            t[j] = theta[j];
            (up - down) / (h + h)
        })
        .collect()
}

/// Analytic score when the model has one, finite differences otherwise.
pub fn score<T: Real>(model: &dyn Model<T>, x: &[T], theta: &[T]) -> Vec<T> {
    model
        .score_one(x, theta)
        .unwrap_or_else(|| finite_difference_score(model, x, theta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_single_point() {
        let m = GaussianLocation::<f64>::new(1, 1.0);
        let ll = log_likelihood(&m, &[0.0], &Dataset::scalar(vec![0.0])).unwrap();
        assert!((ll + 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-15);
        assert!((ll + 0.918939).abs() < 1e-6);
    }

    #[test]
    fn gaussian_two_points() {
        let m = GaussianLocation::<f64>::new(1, 1.0);
        let ll = log_likelihood(&m, &[0.0], &Dataset::scalar(vec![1.0, -1.0])).unwrap();
        let expected = -(2.0 * std::f64::consts::PI).ln() - 1.0;
        assert!((ll - expected).abs() < 1e-14);
    }

    #[test]
    fn outside_box_is_domain_error() {
        let m = GaussianLocation::<f64>::new(1, 1.0);
        let err = log_likelihood(&m, &[25.0], &Dataset::scalar(vec![0.0])).unwrap_err();
        assert!(matches!(err, Error::Domain { .. }));
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let m = LogisticRegression::<f64>::new();
        assert!(log_likelihood(&m, &[0.0], &Dataset::scalar(vec![0.0])).is_err());
    }

    #[test]
    fn laplace_median_maximizes_on_grid() {
        let data = sample_data(&LaplaceProcess::new(0.3, 1.0), 100, 11).unwrap();
        let m = LaplaceLocation::<f64>::new(1.0);
        let mut xs: Vec<f64> = data.values().to_vec();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = 0.5 * (xs[49] + xs[50]);
        let at_median = log_likelihood(&m, &[median], &data).unwrap();
        // Brute-force grid of width 0.01 around the median.
        for i in -300..=300 {
            let t = median + 0.01 * f64::from(i);
            let ll = log_likelihood(&m, &[t], &data).unwrap();
            assert!(ll <= at_median + 1e-12, "grid point {t} beats the median");
        }
    }

    #[test]
    fn dataset_text_round_trip() {
        let d = Dataset::new(2, vec![0.1, -2.5, 3.0, 1e-17]).unwrap();
        let mut buf = Vec::new();
        d.write_text(&mut buf).unwrap();
        let back = Dataset::<f64>::read_text(buf.as_slice()).unwrap();
        assert_eq!(d, back);
    }

    #[test]
    fn ragged_text_is_rejected() {
        let err = Dataset::<f64>::read_text("1 2\n3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
    }
}
