use crate::error::{Error, Result};
use crate::optimize::{golden_section_max, par_sum};
use crate::scalar::{from_usize, lit, vec_to_f64, Real};

use super::{Model, TrueProcess};

/// Settings of the pseudo-true oracle.
#[derive(Debug, Clone)]
pub struct PseudoTrueOptions {
    /// Monte Carlo draws from the true law.
    pub draws: usize,
    pub seed: u64,
    /// Coarse grid step per coordinate.
    pub grid_step: f64,
    /// Cap on the number of coarse grid nodes (all coordinates together).
    pub max_grid_nodes: usize,
    /// Leading part of the sample used for the coarse grid.
    pub coarse_subsample: usize,
    /// Final precision of the refinement.
    pub tolerance: f64,
}

impl Default for PseudoTrueOptions {
    fn default() -> Self {
        Self {
            draws: 1_000_000,
            seed: 0x005e_ed0f_7e57,
            grid_step: 1e-2,
            max_grid_nodes: 4001,
            coarse_subsample: 20_000,
            tolerance: 1e-6,
        }
    }
}

/// Maximises a Monte Carlo estimate of `E_0[log f(x | theta)]` over the
/// model's parameter box: coarse grid first, then cyclic golden-section
/// refinement on the full sample.
pub fn pseudo_true_parameter<T: Real>(
    process: &dyn TrueProcess<T>,
    model: &dyn Model<T>,
    opts: &PseudoTrueOptions,
) -> Result<Vec<T>> {
    if process.obs_width() != model.obs_width() {
        return Err(Error::InvalidArgument(format!(
            "process {} produces width-{} observations, model {} expects {}",
            process.name(),
            process.obs_width(),
            model.name(),
            model.obs_width()
        )));
    }
    let sample = process.expectation_sample(opts.draws, opts.seed);
    let data = &sample.data;
    let weights = &sample.weights;
    let objective = |theta: &[T], len: usize| -> T {
        let total = par_sum(len, |i| {
            weights[i] * model.log_density_one(data.get(i), theta)
        });
        let wsum = par_sum(len, |i| weights[i]);
        total / wsum
    };

    let bx = model.theta_box();
    let p = model.dim();
    let per_dim_cap = (opts.max_grid_nodes as f64).powf(1.0 / p as f64).floor() as usize;
    let axes: Vec<Vec<T>> = (0..p)
        .map(|j| {
            let width = bx.upper[j] - bx.lower[j];
            let wanted = (to_f(width) / opts.grid_step).round() as usize + 1;
            let m = wanted.min(per_dim_cap).max(3);
            (0..m)
                .map(|i| bx.lower[j] + width * from_usize::<T>(i) / from_usize::<T>(m - 1))
                .collect()
        })
        .collect();
    let steps: Vec<T> = axes.iter().map(|a| a[1] - a[0]).collect();

    let coarse_len = opts.coarse_subsample.min(data.len());
    let mut best = (T::neg_infinity(), vec![T::zero(); p]);
    let mut theta = vec![T::zero(); p];
    let total: usize = axes.iter().map(Vec::len).product();
    for flat in 0..total {
        let mut rem = flat;
        for j in (0..p).rev() {
            let m = axes[j].len();
            theta[j] = axes[j][rem % m];
            rem /= m;
        }
        let v = objective(&theta, coarse_len);
        if !v.is_finite() {
            return Err(Error::NonFinite {
                theta: vec_to_f64(&theta),
            });
        }
        if v > best.0 {
            best = (v, theta.clone());
        }
    }

    let tol = lit::<T>(opts.tolerance);
    let mut current = best.1;
    let full = data.len();
    for _sweep in 0..50 {
        let mut moved = T::zero();
        for j in 0..p {
            let mut lo = (current[j] - steps[j] - steps[j]).max(bx.lower[j]);
            let mut hi = (current[j] + steps[j] + steps[j]).min(bx.upper[j]);
            let mut t = current.clone();
            let x = loop {
                let x = golden_section_max(
                    |v| {
                        t[j] = v;
                        objective(&t, full)
                    },
                    lo,
                    hi,
                    tol * lit(0.1),
                );
                // Re-centre when the optimum sits on an interior bracket edge.
                let span = hi - lo;
                if x - lo < tol && lo > bx.lower[j] {
                    hi = x;
                    lo = (x - span).max(bx.lower[j]);
                } else if hi - x < tol && hi < bx.upper[j] {
                    lo = x;
                    hi = (x + span).min(bx.upper[j]);
                } else {
                    break x;
                }
            };
            moved = moved.max((x - current[j]).abs());
            current[j] = x;
        }
        if p == 1 || moved < tol {
            break;
        }
    }
    Ok(current)
}

fn to_f<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
