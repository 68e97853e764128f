//! Random-walk Metropolis sampler used to cross-check grid posteriors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{log_likelihood_unchecked, Dataset, Model, Prior};
use crate::scalar::{from_usize, lit, to_f64, vec_to_f64, Real};

use super::AlphaConfig;

/// Settings of [`sample_posterior`].
#[derive(Debug, Clone)]
pub struct McmcOptions {
    /// Total steps including burn-in; at least 10^4.
    pub chain_length: usize,
    pub seed: u64,
    /// Leading fraction discarded and used for adaptation.
    pub burn_in_fraction: f64,
    /// Initial proposal standard deviation per coordinate; `None` uses
    /// `1 / sqrt(alpha n)`.
    pub initial_scale: Option<f64>,
    /// Acceptance band targeted during burn-in.
    pub target: (f64, f64),
    /// Acceptance band that counts as mixing after burn-in.
    pub mixing: (f64, f64),
    /// Steps per adaptation window.
    pub window: usize,
}

impl McmcOptions {
    pub fn new(chain_length: usize, seed: u64) -> Self {
        Self {
            chain_length,
            seed,
            burn_in_fraction: 0.2,
            initial_scale: None,
            target: (0.2, 0.5),
            mixing: (0.05, 0.95),
            window: 50,
        }
    }
}

/// Post-burn-in draws of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain<T> {
    dim: usize,
    samples: Vec<T>,
    pub acceptance_rate: f64,
    pub proposal_scale: f64,
}

impl<T: Real> Chain<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[T] {
        &self.samples[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, T> {
        self.samples.chunks_exact(self.dim)
    }

    pub fn mean(&self) -> Vec<T> {
        let mut m = vec![T::zero(); self.dim];
        for s in self.iter() {
            for (a, &v) in m.iter_mut().zip(s) {
                *a += v;
            }
        }
        let n = from_usize::<T>(self.len());
        m.into_iter().map(|v| v / n).collect()
    }

    /// Batch-means standard error of the mean, per coordinate, with
    /// `floor(sqrt(len))` batches.
    pub fn standard_error(&self) -> Vec<T> {
        let len = self.len();
        let batches = ((len as f64).sqrt().floor() as usize).max(2);
        let size = len / batches;
        let mean = self.mean();
        (0..self.dim)
            .map(|j| {
                let bm: Vec<T> = (0..batches)
                    .map(|b| {
                        let s: T = (b * size..(b + 1) * size).map(|i| self.sample(i)[j]).sum();
                        s / from_usize::<T>(size)
                    })
                    .collect();
                let var: T = bm.iter().map(|&x| (x - mean[j]) * (x - mean[j])).sum::<T>()
                    / from_usize::<T>(batches - 1);
                (var / from_usize::<T>(batches)).sqrt()
            })
            .collect()
    }
}

/// Random-walk Metropolis targeting `alpha log f_n + log pi`, started at
/// `start`. The proposal scale adapts during burn-in; afterwards the
/// acceptance rate must lie in `opts.mixing`.
pub fn sample_posterior<T: Real>(
    model: &dyn Model<T>,
    prior: &dyn Prior<T>,
    data: &Dataset<T>,
    cfg: &AlphaConfig<T>,
    start: &[T],
    opts: &McmcOptions,
) -> Result<Chain<T>> {
    cfg.validate()?;
    if opts.chain_length < 10_000 {
        return Err(Error::InvalidArgument(format!(
            "chain length must be at least 10000, got {}",
            opts.chain_length
        )));
    }
    let p = model.dim();
    let bx = model.theta_box();
    if start.len() != p || !bx.contains(start) {
        return Err(Error::Domain {
            theta: vec_to_f64(start),
        });
    }
    let target = |t: &[T]| -> T {
        if !bx.contains(t) {
            return T::neg_infinity();
        }
        let v = cfg.alpha * log_likelihood_unchecked(model, t, data) + prior.log_density(t);
        if v.is_nan() {
            T::neg_infinity()
        } else {
            v
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n = data.len().max(1) as f64;
    let mut log_scale = opts
        .initial_scale
        .unwrap_or(1.0 / (to_f64(cfg.alpha) * n).sqrt())
        .ln();
    let burn = (opts.chain_length as f64 * opts.burn_in_fraction).floor() as usize;
    let mut current = start.to_vec();
    let mut current_lp = target(&current);
    if current_lp == T::neg_infinity() {
        return Err(Error::NonFinite {
            theta: vec_to_f64(start),
        });
    }
    let mut proposal = vec![T::zero(); p];
    let mut samples = Vec::with_capacity((opts.chain_length - burn) * p);
    let (mut window_accepts, mut window_steps) = (0usize, 0usize);
    let mut accepted_after = 0usize;
    let centre = 0.5 * (opts.target.0 + opts.target.1);
    for step in 0..opts.chain_length {
        let scale = lit::<T>(log_scale.exp());
        for (q, &c) in proposal.iter_mut().zip(&current) {
            let z: f64 = rng.sample(StandardNormal);
            *q = c + scale * lit::<T>(z);
        }
        let lp = target(&proposal);
        let u: f64 = rng.random();
        let accept = lp > T::neg_infinity() && u.ln() < to_f64(lp - current_lp);
        if accept {
            current.copy_from_slice(&proposal);
            current_lp = lp;
        }
        if step < burn {
            window_accepts += usize::from(accept);
            window_steps += 1;
            if window_steps == opts.window {
                let rate = window_accepts as f64 / window_steps as f64;
                log_scale += 2.0 * (rate - centre);
                window_accepts = 0;
                window_steps = 0;
            }
        } else {
            accepted_after += usize::from(accept);
            samples.extend_from_slice(&current);
        }
    }
    let kept = opts.chain_length - burn;
    let rate = accepted_after as f64 / kept as f64;
    if rate < opts.mixing.0 || rate > opts.mixing.1 {
        return Err(Error::Mixing {
            rate,
            lo: opts.mixing.0,
            hi: opts.mixing.1,
        });
    }
    Ok(Chain {
        dim: p,
        samples,
        acceptance_rate: rate,
        proposal_scale: log_scale.exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FlatPrior, GaussianLocation, NormalPrior};

    fn conjugate() -> (GaussianLocation<f64>, NormalPrior<f64>, Dataset<f64>) {
        (
            GaussianLocation::new(1, 1.0),
            NormalPrior::centered(1, 1.0),
            Dataset::scalar(vec![0.5, 1.5, 2.0, 0.0]),
        )
    }

    #[test]
    fn conjugate_chain_mean() {
        let (m, pr, d) = conjugate();
        let cfg = AlphaConfig::new(0.5).unwrap();
        let chain =
            sample_posterior(&m, &pr, &d, &cfg, &[1.0], &McmcOptions::new(100_000, 3)).unwrap();
        let se = chain.standard_error()[0];
        assert!(
            (chain.mean()[0] - 2.0 / 3.0).abs() < 3.0 * se,
            "mean {} se {se}",
            chain.mean()[0]
        );
        assert!(chain.acceptance_rate > 0.2 && chain.acceptance_rate < 0.6);
    }

    #[test]
    fn chain_is_deterministic() {
        let (m, pr, d) = conjugate();
        let cfg = AlphaConfig::new(1.0).unwrap();
        let a = sample_posterior(&m, &pr, &d, &cfg, &[1.0], &McmcOptions::new(10_000, 9)).unwrap();
        let b = sample_posterior(&m, &pr, &d, &cfg, &[1.0], &McmcOptions::new(10_000, 9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn flat_target_with_tiny_steps_fails_to_mix() {
        let m = GaussianLocation::new(1, 1.0);
        let d = Dataset::scalar(vec![0.0, 1.0]);
        let cfg = AlphaConfig::new(1e-12).unwrap();
        let mut opts = McmcOptions::new(10_000, 1);
        opts.initial_scale = Some(1e-30);
        let err = sample_posterior(&m, &FlatPrior, &d, &cfg, &[0.0], &opts).unwrap_err();
        assert!(matches!(err, Error::Mixing { .. }), "{err}");
    }

    #[test]
    fn short_chains_are_rejected() {
        let (m, pr, d) = conjugate();
        let cfg = AlphaConfig::new(1.0).unwrap();
        assert!(sample_posterior(&m, &pr, &d, &cfg, &[1.0], &McmcOptions::new(100, 1)).is_err());
    }
}
