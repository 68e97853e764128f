//! Maximum likelihood by safeguarded Newton ascent with multi-start checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::model::{log_likelihood_ratio, score, Dataset, Model};
use crate::optimize::{bracket_max, golden_section_max};
use crate::scalar::{from_usize, lit, norm2, norm_inf, vec_to_f64, Real};

/// Result of [`fit_mle`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MleFit<T> {
    pub theta_hat: Vec<T>,
    pub log_lik_at_max: T,
    /// `sqrt(n) (theta_hat - theta_star)`, set by [`MleFit::with_theta_star`].
    pub delta: Option<Vec<T>>,
    pub converged: bool,
    pub iterations: usize,
    /// Number of observations the fit used.
    pub n: usize,
}

impl<T: Real> MleFit<T> {
    /// Records `Delta = sqrt(n) (theta_hat - theta_star)`.
    pub fn with_theta_star(mut self, theta_star: &[T]) -> Self {
        let rn = from_usize::<T>(self.n).sqrt();
        self.delta = Some(
            self.theta_hat
                .iter()
                .zip(theta_star)
                .map(|(&a, &b)| rn * (a - b))
                .collect(),
        );
        self
    }
}

/// Settings of [`fit_mle_with`].
#[derive(Debug, Clone)]
pub struct MleOptions {
    pub max_iterations: usize,
    /// Number of starts, the first being the caller's start.
    pub starts: usize,
    /// Largest coordinate difference tolerated between multi-start optima.
    pub agreement: f64,
    /// Gradient tolerance relative to `max(1, |loglik|)`.
    pub gradient_tolerance: f64,
    /// Jitter of the extra starts, in units of `max(1, |start_j|)`.
    pub jitter: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            starts: 5,
            agreement: 1e-6,
            gradient_tolerance: 1e-6,
            jitter: 0.5,
        }
    }
}

/// Fits the MLE from `start` with the default options.
pub fn fit_mle<T: Real>(model: &dyn Model<T>, data: &Dataset<T>, start: &[T]) -> Result<MleFit<T>> {
    fit_mle_with(model, data, start, &MleOptions::default())
}

/// Runs [`fit_mle_single`] from `opts.starts` deterministic jittered starts
/// and requires the optima to agree.
pub fn fit_mle_with<T: Real>(
    model: &dyn Model<T>,
    data: &Dataset<T>,
    start: &[T],
    opts: &MleOptions,
) -> Result<MleFit<T>> {
    check_inputs(model, data, start)?;
    let starts = jittered_starts(model, start, opts);
    let fits: Vec<MleFit<T>> = starts
        .iter()
        .map(|s| fit_mle_single(model, data, s, opts))
        .collect::<Result<_>>()?;
    let mut spread = 0.0_f64;
    for f in &fits[1..] {
        for (a, b) in f.theta_hat.iter().zip(&fits[0].theta_hat) {
            spread = spread.max(crate::scalar::to_f64((*a - *b).abs()));
        }
    }
    if spread > opts.agreement {
        return Err(Error::NonUnique {
            spread,
            optima: fits.iter().map(|f| vec_to_f64(&f.theta_hat)).collect(),
        });
    }
    let mut best = fits
        .into_iter()
        .reduce(|a, b| {
            if b.log_lik_at_max > a.log_lik_at_max {
                b
            } else {
                a
            }
        })
        .expect("at least one start");
    best.iterations = best.iterations.max(1);
    Ok(best)
}

fn check_inputs<T: Real>(model: &dyn Model<T>, data: &Dataset<T>, start: &[T]) -> Result<()> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    if data.width() != model.obs_width() {
        return Err(Error::InvalidArgument(format!(
            "model {} expects observations of width {}",
            model.name(),
            model.obs_width()
        )));
    }
    if start.len() != model.dim() || !model.theta_box().contains_strictly(start) {
        return Err(Error::Domain {
            theta: vec_to_f64(start),
        });
    }
    Ok(())
}

fn jittered_starts<T: Real>(model: &dyn Model<T>, start: &[T], opts: &MleOptions) -> Vec<Vec<T>> {
    const PATTERN: [f64; 4] = [1.0, -1.0, 0.5, -0.5];
    let bx = model.theta_box();
    let mut out = vec![start.to_vec()];
    for s in 1..opts.starts.max(1) {
        let t: Vec<T> = start
            .iter()
            .enumerate()
            .map(|(j, &x)| {
                let sign = PATTERN[(s - 1 + j) % PATTERN.len()];
                let step = lit::<T>(opts.jitter * sign) * T::one().max(x.abs());
                let y = x + step;
                // Keep the start strictly inside the box.
                let margin = lit::<T>(1e-3) * (bx.upper[j] - bx.lower[j]);
                y.max(bx.lower[j] + margin).min(bx.upper[j] - margin)
            })
            .collect();
        out.push(t);
    }
    out
}

/// Hessian step for finite differences of the log-likelihood. Non-smooth
/// models use a wider, `n`-dependent step so the second difference averages
/// over the kinks.
pub(crate) fn hessian_step<T: Real>(model: &dyn Model<T>, n: usize, theta_j: T) -> T {
    let base = if model.is_smooth() {
        1e-4
    } else {
        (n as f64).powf(-1.0 / 3.0).max(1e-4)
    };
    lit::<T>(base) * T::one().max(theta_j.abs())
}

/// Gradient of the log-likelihood: analytic scores if available, otherwise
/// per-observation central differences.
pub(crate) fn gradient<T: Real>(model: &dyn Model<T>, data: &Dataset<T>, theta: &[T]) -> Vec<T> {
    let mut g = vec![T::zero(); theta.len()];
    for x in data.iter() {
        for (acc, s) in g.iter_mut().zip(score(model, x, theta)) {
            *acc += s;
        }
    }
    g
}

/// Hessian of the log-likelihood: analytic when the model provides it,
/// otherwise central second differences of per-observation log ratios.
pub(crate) fn hessian<T: Real>(
    model: &dyn Model<T>,
    data: &Dataset<T>,
    theta: &[T],
    force_finite_difference: bool,
) -> SquareMatrix<T> {
    let p = theta.len();
    if !force_finite_difference {
        if let Some(h0) = data.iter().next().and_then(|x| model.hessian_one(x, theta)) {
            let mut h = h0;
            for x in data.iter().skip(1) {
                let hi = model.hessian_one(x, theta).expect("hessian available");
                for (a, b) in h.as_row_major_mut().iter_mut().zip(hi.as_row_major()) {
                    *a += *b;
                }
            }
            return h;
        }
    }
    let n = data.len();
    let steps: Vec<T> = theta.iter().map(|&t| hessian_step(model, n, t)).collect();
    let shifted = |di: &[(usize, T)]| {
        let mut t = theta.to_vec();
        for &(j, d) in di {
            t[j] += d;
        }
        log_likelihood_ratio(model, data, &t, theta)
    };
    let mut h = SquareMatrix::zeros(p);
    for i in 0..p {
        let hi = steps[i];
        let up = shifted(&[(i, hi)]);
        let down = shifted(&[(i, -hi)]);
        h[(i, i)] = (up + down) / (hi * hi);
        for j in 0..i {
            let hj = steps[j];
            let v = (shifted(&[(i, hi), (j, hj)])
                - shifted(&[(i, hi), (j, -hj)])
                - shifted(&[(i, -hi), (j, hj)])
                + shifted(&[(i, -hi), (j, -hj)]))
                / (lit::<T>(4.0) * hi * hj);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}

/// One local ascent from `start`, without multi-start checks.
pub fn fit_mle_single<T: Real>(
    model: &dyn Model<T>,
    data: &Dataset<T>,
    start: &[T],
    opts: &MleOptions,
) -> Result<MleFit<T>> {
    check_inputs(model, data, start)?;
    if !model.is_smooth() && model.dim() == 1 {
        return golden_fallback(model, data, start, 0);
    }
    match newton(model, data, start, opts).and_then(|f| reject_boundary(model, f)) {
        Ok(fit) => Ok(fit),
        Err(e @ Error::NonConvergence { .. }) if model.dim() == 1 => {
            log::debug!("Newton failed ({e}); falling back to golden-section search");
            golden_fallback(model, data, start, opts.max_iterations)
        }
        Err(e) => Err(e),
    }
}

/// An optimum on the box boundary means the maximiser was not found.
fn reject_boundary<T: Real>(model: &dyn Model<T>, fit: MleFit<T>) -> Result<MleFit<T>> {
    let bx = model.theta_box();
    let near = fit.theta_hat.iter().enumerate().any(|(j, &t)| {
        let edge = lit::<T>(1e-6) * (bx.upper[j] - bx.lower[j]);
        t - bx.lower[j] < edge || bx.upper[j] - t < edge
    });
    if near {
        Err(Error::NonConvergence {
            iterations: fit.iterations,
            theta: vec_to_f64(&fit.theta_hat),
            reason: "maximum lies on the parameter box boundary".into(),
        })
    } else {
        Ok(fit)
    }
}

fn loglik<T: Real>(model: &dyn Model<T>, data: &Dataset<T>, theta: &[T]) -> T {
    crate::model::log_likelihood_unchecked(model, theta, data)
}

fn newton<T: Real>(
    model: &dyn Model<T>,
    data: &Dataset<T>,
    start: &[T],
    opts: &MleOptions,
) -> Result<MleFit<T>> {
    let bx = model.theta_box();
    let gtol = lit::<T>(opts.gradient_tolerance);
    let xtol = lit::<T>(1e-10);
    let mut theta = start.to_vec();
    let mut ll = loglik(model, data, &theta);
    if !ll.is_finite() {
        return Err(Error::NonFinite {
            theta: vec_to_f64(&theta),
        });
    }
    let fail = |iterations: usize, theta: &[T], reason: &str| Error::NonConvergence {
        iterations,
        theta: vec_to_f64(theta),
        reason: reason.to_string(),
    };
    for it in 1..=opts.max_iterations {
        let g = gradient(model, data, &theta);
        let h = hessian(model, data, &theta, false);
        let dir = ascent_direction(&g, &h);
        let grad_small = norm2(&g) < gtol * T::one().max(ll.abs());
        let step_small = norm_inf(&dir.0) <= xtol * T::one().max(norm_inf(&theta)) && dir.1;
        if grad_small && step_small {
            return Ok(MleFit {
                theta_hat: theta,
                log_lik_at_max: ll,
                delta: None,
                converged: true,
                iterations: it,
                n: data.len(),
            });
        }
        // Backtracking: stay strictly inside the box and never decrease.
        let mut t = T::one();
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<T> = theta.iter().zip(&dir.0).map(|(&a, &d)| a + t * d).collect();
            if bx.contains_strictly(&cand) {
                let gain = log_likelihood_ratio(model, data, &cand, &theta);
                if gain.is_finite() && gain >= T::zero() {
                    accepted = Some((cand, gain));
                    break;
                }
            }
            t *= lit(0.5);
        }
        match accepted {
            Some((cand, gain)) => {
                let stalled = gain == T::zero() && cand == theta;
                theta = cand;
                ll = loglik(model, data, &theta);
                if stalled && grad_small {
                    return Ok(MleFit {
                        theta_hat: theta,
                        log_lik_at_max: ll,
                        delta: None,
                        converged: true,
                        iterations: it,
                        n: data.len(),
                    });
                }
            }
            None if grad_small => {
                return Ok(MleFit {
                    theta_hat: theta,
                    log_lik_at_max: ll,
                    delta: None,
                    converged: true,
                    iterations: it,
                    n: data.len(),
                })
            }
            None => return Err(fail(it, &theta, "line search found no ascent")),
        }
    }
    Err(fail(opts.max_iterations, &theta, "iteration limit reached"))
}

/// Newton direction when the Hessian is negative definite, otherwise a
/// shifted (regularised) Newton direction. The flag reports a pure Newton step.
fn ascent_direction<T: Real>(g: &[T], h: &SquareMatrix<T>) -> (Vec<T>, bool) {
    let neg = h.scale(-T::one()).symmetrize();
    if let Ok(d) = solve_spd(&neg, g) {
        return (d, true);
    }
    let ev = neg.symmetric_eigenvalues();
    let min = ev.iter().fold(T::infinity(), |m, &x| m.min(x));
    let max = ev.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    let shift = (max * lit(1e-3)).max(lit(1e-8)) - min.min(T::zero());
    let mut reg = neg.clone();
    for i in 0..reg.dim() {
        reg[(i, i)] += shift;
    }
    match solve_spd(&reg, g) {
        Ok(d) => (d, false),
        Err(_) => (g.to_vec(), false),
    }
}

fn solve_spd<T: Real>(a: &SquareMatrix<T>, b: &[T]) -> Result<Vec<T>> {
    let l = a.cholesky().ok_or(Error::NotPositiveDefinite {
        min_eigenvalue: crate::scalar::to_f64(a.min_eigenvalue()),
    })?;
    let p = b.len();
    let mut y = vec![T::zero(); p];
    for i in 0..p {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    let mut x = vec![T::zero(); p];
    for i in (0..p).rev() {
        let mut s = y[i];
        for k in i + 1..p {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::NotPositiveDefinite {
            min_eigenvalue: 0.0,
        })
    }
}

/// Golden-section search on a bracket grown from `start` (`p = 1` only).
/// An optimum on the box boundary is reported as non-convergence.
fn golden_fallback<T: Real>(
    model: &dyn Model<T>,
    data: &Dataset<T>,
    start: &[T],
    prior_iterations: usize,
) -> Result<MleFit<T>> {
    let bx = model.theta_box();
    let (lo, hi) = (bx.lower[0], bx.upper[0]);
    let x0 = start[0];
    let f = |v: T| {
        let l = loglik(model, data, &[v]);
        if l.is_nan() {
            T::neg_infinity()
        } else {
            l
        }
    };
    let step = lit::<T>(0.1) * T::one().max(x0.abs());
    let (a, c) = bracket_max(f, x0, step, lo, hi);
    let tol = lit::<T>(1e-10) * T::one().max(x0.abs());
    let x = golden_section_max(f, a, c, tol);
    let edge = lit::<T>(1e-6) * (hi - lo);
    if x - lo < edge || hi - x < edge {
        return Err(Error::NonConvergence {
            iterations: prior_iterations,
            theta: vec![crate::scalar::to_f64(x)],
            reason: "maximum lies on the parameter box boundary".into(),
        });
    }
    Ok(MleFit {
        theta_hat: vec![x],
        log_lik_at_max: loglik(model, data, &[x]),
        delta: None,
        converged: true,
        iterations: prior_iterations + 1,
        n: data.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        sample_data, GaussianLocation, GaussianProcess, LaplaceLocation, LaplaceProcess,
        LogisticProcess, LogisticRegression,
    };

    #[test]
    fn gaussian_mle_is_sample_mean() {
        let data = sample_data::<f64>(&GaussianProcess::new(vec![1.3], 2.0), 500, 3).unwrap();
        let fit = fit_mle::<f64>(&GaussianLocation::new(1, 1.0), &data, &[0.0]).unwrap();
        assert!((fit.theta_hat[0] - data.mean()[0]).abs() < 1e-8);
        assert!(fit.converged);
    }

    #[test]
    fn laplace_mle_is_median_for_odd_n() {
        let data = sample_data::<f64>(&LaplaceProcess::new(-0.4, 1.0), 301, 5).unwrap();
        let mut xs = data.values().to_vec();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let fit = fit_mle::<f64>(&LaplaceLocation::new(1.0), &data, &[0.0]).unwrap();
        assert!((fit.theta_hat[0] - xs[150]).abs() < 1e-6);
    }

    #[test]
    fn separable_logistic_does_not_converge() {
        let data = Dataset::new(2, vec![-2.0, 0.0, -1.0, 0.0, 1.0, 1.0, 2.0, 1.0]).unwrap();
        let err = fit_mle::<f64>(&LogisticRegression::new(), &data, &[0.0]).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }), "{err}");
    }

    #[test]
    fn logistic_fit_has_small_gradient() {
        let data = sample_data::<f64>(&LogisticProcess::new(1.0), 1000, 2).unwrap();
        let m = LogisticRegression::new();
        let fit = fit_mle::<f64>(&m, &data, &[0.0]).unwrap();
        let g = gradient(&m, &data, &fit.theta_hat);
        assert!(norm2(&g) < 1e-6 * fit.log_lik_at_max.abs().max(1.0));
        assert!((fit.theta_hat[0] - 1.0).abs() < 0.3);
    }

    #[test]
    fn two_dimensional_gaussian_mle() {
        let data = sample_data::<f64>(&GaussianProcess::new(vec![0.5, -1.0], 1.0), 400, 8).unwrap();
        let fit = fit_mle::<f64>(&GaussianLocation::new(2, 1.0), &data, &[0.0, 0.0]).unwrap();
        let m = data.mean();
        assert!((fit.theta_hat[0] - m[0]).abs() < 1e-8);
        assert!((fit.theta_hat[1] - m[1]).abs() < 1e-8);
    }

    #[test]
    fn delta_uses_sqrt_n() {
        let fit = MleFit::<f64> {
            theta_hat: vec![0.3],
            log_lik_at_max: 0.0,
            delta: None,
            converged: true,
            iterations: 1,
            n: 100,
        }
        .with_theta_star(&[0.1]);
        assert!((fit.delta.unwrap()[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn start_outside_box_is_rejected() {
        let data = Dataset::scalar(vec![0.0]);
        assert!(fit_mle::<f64>(&GaussianLocation::new(1, 1.0), &data, &[30.0]).is_err());
    }
}
