//! The alpha-posterior `pi(theta | X) ∝ f_n(X | theta)^alpha pi(theta)`,
//! tabulated on grids, rescaled to local coordinates, and sampled by MCMC.

mod grid;
mod mcmc;

pub use grid::{linspace, trapezoid_weights, Frame, GridDensity, MAX_DIM};
pub use mcmc::{sample_posterior, Chain, McmcOptions};

use serde::{Deserialize, Serialize};

use crate::asymptotics::{CurvatureEstimates, MleFit};
use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::model::{log_likelihood_unchecked, Dataset, Model, Prior};
use crate::scalar::{from_usize, lit, to_f64, vec_to_f64, Real};

/// Largest mass allowed on the two outermost cells of each axis.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-6;

/// Power and grid layout of an alpha-posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
pub struct AlphaConfig<T> {
    pub alpha: T,
    /// Grid half-width in limiting standard errors.
    #[serde(default = "default_halfwidth")]
    pub grid_halfwidth_se: T,
    /// Nodes per axis; odd. `None` picks 4001 for `p = 1`, 301 for `p = 2`
    /// and 61 above.
    #[serde(default)]
    pub nodes_per_dim: Option<usize>,
}

fn default_halfwidth<T: Real>() -> T {
    lit(12.0)
}

impl<T: Real> AlphaConfig<T> {
    pub fn new(alpha: T) -> Result<Self> {
        let cfg = Self {
            alpha,
            grid_halfwidth_se: default_halfwidth(),
            nodes_per_dim: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_nodes(mut self, nodes: usize) -> Result<Self> {
        self.nodes_per_dim = Some(nodes);
        self.validate()?;
        Ok(self)
    }

    pub fn with_halfwidth(mut self, se: T) -> Result<Self> {
        self.grid_halfwidth_se = se;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > T::zero()) || !self.alpha.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.grid_halfwidth_se > T::zero()) {
            return Err(Error::InvalidArgument(
                "grid half-width must be positive".into(),
            ));
        }
        if let Some(m) = self.nodes_per_dim {
            if m < 5 || m % 2 == 0 {
                return Err(Error::InvalidArgument(format!(
                    "nodes per axis must be odd and at least 5, got {m}"
                )));
            }
        }
        Ok(())
    }

    pub fn nodes_for_dim(&self, p: usize) -> usize {
        self.nodes_per_dim.unwrap_or(match p {
            1 => 4001,
            2 => 301,
            _ => 61,
        })
    }
}

/// `alpha log f_n(X | theta) + log pi(theta)`.
pub fn log_unnormalized_posterior<T: Real>(
    model: &dyn Model<T>,
    prior: &dyn Prior<T>,
    data: &Dataset<T>,
    cfg: &AlphaConfig<T>,
    theta: &[T],
) -> Result<T> {
    let ll = crate::model::log_likelihood(model, theta, data)?;
    let v = cfg.alpha * ll + prior.log_density(theta);
    if v.is_nan() || v == T::infinity() {
        return Err(Error::NonFinite {
            theta: vec_to_f64(theta),
        });
    }
    Ok(v)
}

/// Normalises the alpha-posterior on a grid centred at the MLE with
/// half-width `grid_halfwidth_se * sqrt([V^-1]_jj / (alpha n))` per axis.
pub fn normalize_on_grid<T: Real>(
    model: &dyn Model<T>,
    prior: &dyn Prior<T>,
    data: &Dataset<T>,
    cfg: &AlphaConfig<T>,
    fit: &MleFit<T>,
    curv: &CurvatureEstimates<T>,
) -> Result<GridDensity<T>> {
    normalize_on_grid_at(model, prior, data, cfg, &fit.theta_hat, &curv.v)
}

/// [`normalize_on_grid`] with an explicit centre and curvature. Axes are
/// clipped to the parameter box.
pub fn normalize_on_grid_at<T: Real>(
    model: &dyn Model<T>,
    prior: &dyn Prior<T>,
    data: &Dataset<T>,
    cfg: &AlphaConfig<T>,
    center: &[T],
    v: &SquareMatrix<T>,
) -> Result<GridDensity<T>> {
    cfg.validate()?;
    let p = model.dim();
    if center.len() != p || v.dim() != p {
        return Err(Error::InvalidArgument(
            "centre or curvature has the wrong dimension".into(),
        ));
    }
    if data.is_empty() || data.width() != model.obs_width() {
        return Err(Error::InvalidArgument(
            "dataset does not match the model".into(),
        ));
    }
    let bx = model.theta_box();
    bx.check(center)?;
    let v_inv = v.inverse()?;
    let an = cfg.alpha * from_usize::<T>(data.len());
    let m = cfg.nodes_for_dim(p);
    let mut axes = Vec::with_capacity(p);
    for j in 0..p {
        let var = v_inv[(j, j)];
        if !(var > T::zero()) {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: to_f64(v.min_eigenvalue()),
            });
        }
        let half = cfg.grid_halfwidth_se * (var / an).sqrt();
        let lo = (center[j] - half).max(bx.lower[j]);
        let hi = (center[j] + half).min(bx.upper[j]);
        axes.push(linspace(lo, hi, m));
    }
    let alpha = cfg.alpha;
    let g = GridDensity::from_log_fn(axes, Frame::Theta, |theta| {
        alpha * log_likelihood_unchecked(model, theta, data) + prior.log_density(theta)
    })?;
    if let Some(i) = g.log_values().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            theta: vec_to_f64(&g.node(i)),
        });
    }
    let mass = g.boundary_mass();
    if to_f64(mass) > BOUNDARY_MASS_LIMIT {
        return Err(Error::GridTooNarrow {
            mass: to_f64(mass),
            limit: BOUNDARY_MASS_LIMIT,
        });
    }
    Ok(g)
}

/// Rescales a parameter-frame density to `h = sqrt(n) (theta - theta_star)`:
/// `g_h(h) = n^(-p/2) g(theta_star + h / sqrt(n))`.
pub fn to_lan_frame<T: Real>(
    post: &GridDensity<T>,
    theta_star: &[T],
    n: usize,
) -> Result<GridDensity<T>> {
    if *post.frame() != Frame::Theta {
        return Err(Error::InvalidArgument(
            "input must be in the parameter frame".into(),
        ));
    }
    if theta_star.len() != post.dim() || n == 0 {
        return Err(Error::InvalidArgument(
            "theta_star must match the grid dimension and n must be positive".into(),
        ));
    }
    let nf = from_usize::<T>(n);
    let rn = nf.sqrt();
    let shift = lit::<T>(0.5) * from_usize::<T>(post.dim()) * nf.ln();
    let axes = post
        .axes()
        .iter()
        .zip(theta_star)
        .map(|(a, &t)| a.iter().map(|&x| rn * (x - t)).collect())
        .collect();
    let logs = post.log_values().iter().map(|&v| v - shift).collect();
    GridDensity::from_normalized(
        axes,
        Frame::Lan {
            theta_star: theta_star.to_vec(),
            n,
        },
        logs,
    )
}

/// Inverse of [`to_lan_frame`].
pub fn from_lan_frame<T: Real>(g: &GridDensity<T>) -> Result<GridDensity<T>> {
    let Frame::Lan { theta_star, n } = g.frame() else {
        return Err(Error::InvalidArgument(
            "input must be in the local frame".into(),
        ));
    };
    let nf = from_usize::<T>(*n);
    let rn = nf.sqrt();
    let shift = lit::<T>(0.5) * from_usize::<T>(g.dim()) * nf.ln();
    let axes = g
        .axes()
        .iter()
        .zip(theta_star)
        .map(|(a, &t)| a.iter().map(|&h| t + h / rn).collect())
        .collect();
    let logs = g.log_values().iter().map(|&v| v + shift).collect();
    GridDensity::from_normalized(axes, Frame::Theta, logs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GaussianLocation, NormalPrior};

    fn conjugate() -> (GaussianLocation<f64>, NormalPrior<f64>, Dataset<f64>) {
        // n = 4, sum x = 4.
        (
            GaussianLocation::new(1, 1.0),
            NormalPrior::centered(1, 1.0),
            Dataset::scalar(vec![0.5, 1.5, 2.0, 0.0]),
        )
    }

    #[test]
    fn alpha_one_is_the_ordinary_posterior() {
        let (m, pr, d) = conjugate();
        let cfg = AlphaConfig::new(1.0).unwrap();
        for t in [-1.0, 0.0, 0.37, 2.5] {
            let direct: f64 = d
                .values()
                .iter()
                .map(|x| -0.5 * (x - t) * (x - t) - 0.5 * (2.0 * std::f64::consts::PI).ln())
                .sum::<f64>()
                - 0.5 * t * t
                - 0.5 * (2.0 * std::f64::consts::PI).ln();
            let v = log_unnormalized_posterior(&m, &pr, &d, &cfg, &[t]).unwrap();
            assert!((v - direct).abs() < 1e-12);
        }
    }

    fn check_parabola(alpha: f64, vertex: f64, curvature: f64) {
        let (m, pr, d) = conjugate();
        let cfg = AlphaConfig::new(alpha).unwrap();
        let f = |t: f64| log_unnormalized_posterior(&m, &pr, &d, &cfg, &[t]).unwrap();
        let top = f(vertex);
        for t in [-2.0, -0.5, 0.1, 1.3, 3.0] {
            let expected = top - 0.5 * curvature * (t - vertex) * (t - vertex);
            assert!((f(t) - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn conjugate_parabolas() {
        check_parabola(0.5, 2.0 / 3.0, 3.0);
        check_parabola(2.0, 8.0 / 9.0, 9.0);
    }

    #[test]
    fn conjugate_grid_moments() {
        let (m, pr, d) = conjugate();
        let cfg = AlphaConfig::new(0.5).unwrap();
        let g =
            normalize_on_grid_at(&m, &pr, &d, &cfg, &[1.0], &SquareMatrix::scalar(1.0)).unwrap();
        assert!((g.total_mass() - 1.0).abs() < 1e-8);
        assert!((g.mean()[0] - 2.0 / 3.0).abs() < 1e-6);
        assert!((g.covariance()[(0, 0)] - 1.0 / 3.0).abs() < 1e-6);
        let h = to_lan_frame(&g, &[0.0], 4).unwrap();
        assert!((h.total_mass() - 1.0).abs() < 1e-8);
        assert!((h.mean()[0] - 4.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn far_prior_makes_the_grid_too_narrow() {
        let m = GaussianLocation::new(1, 1.0);
        let pr = NormalPrior::new(vec![100.0], vec![0.1]);
        let d = Dataset::scalar(vec![0.1, -0.2, 0.05, 0.0]);
        let cfg = AlphaConfig::new(1.0).unwrap();
        let err = normalize_on_grid_at(&m, &pr, &d, &cfg, &[0.0], &SquareMatrix::scalar(1.0))
            .unwrap_err();
        assert!(matches!(err, Error::GridTooNarrow { .. }), "{err}");
    }

    #[test]
    fn unit_n_frame_change_is_the_identity() {
        let (m, pr, d) = conjugate();
        let cfg = AlphaConfig::new(1.0).unwrap().with_nodes(201).unwrap();
        let g =
            normalize_on_grid_at(&m, &pr, &d, &cfg, &[1.0], &SquareMatrix::scalar(1.0)).unwrap();
        let h = to_lan_frame(&g, &[0.0], 1).unwrap();
        assert_eq!(h.axes(), g.axes());
        assert_eq!(h.log_values(), g.log_values());
    }

    #[test]
    fn frame_round_trip() {
        let (m, pr, d) = conjugate();
        let cfg = AlphaConfig::new(1.5).unwrap().with_nodes(401).unwrap();
        let g =
            normalize_on_grid_at(&m, &pr, &d, &cfg, &[1.0], &SquareMatrix::scalar(1.0)).unwrap();
        let back = from_lan_frame(&to_lan_frame(&g, &[0.3], 37).unwrap()).unwrap();
        for (a, b) in g.log_values().iter().zip(back.log_values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn config_validation() {
        assert!(AlphaConfig::new(0.0).is_err());
        assert!(AlphaConfig::new(-1.0).is_err());
        assert!(AlphaConfig::new(1.0).unwrap().with_nodes(100).is_err());
        assert_eq!(AlphaConfig::<f64>::new(1.0).unwrap().nodes_for_dim(2), 301);
    }
}
