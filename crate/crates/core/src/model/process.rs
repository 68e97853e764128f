use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

use super::Dataset;

/// Pseudo-true parameter of a process: known in closed form, or left to
/// [`super::pseudo_true_parameter`].
#[derive(Debug, Clone, PartialEq)]
pub enum PseudoTrue<T> {
    Known(Vec<T>),
    Oracle,
}

/// Weighted observations used to estimate expectations under the true law.
#[derive(Debug, Clone)]
pub struct WeightedSample<T> {
    pub data: Dataset<T>,
    pub weights: Vec<T>,
}

/// An i.i.d. data-generating law `f_0`.
pub trait TrueProcess<T: Real>: Send + Sync {
    fn name(&self) -> &str;

    fn obs_width(&self) -> usize;

    /// Appends one observation to `out`.
    fn draw_into(&self, rng: &mut ChaCha8Rng, out: &mut Vec<T>);

    /// Known pseudo-true parameter. The built-in symmetric location processes
    /// report their centre, which is the KL minimiser for every symmetric
    /// location family.
    fn pseudo_true(&self) -> PseudoTrue<T> {
        PseudoTrue::Oracle
    }

    /// Sample used to estimate `E_0[log f(x | theta)]`. The default is plain
    /// i.i.d. draws with unit weights; processes override it with variance
    /// reduced designs.
    fn expectation_sample(&self, draws: usize, seed: u64) -> WeightedSample<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = Vec::with_capacity(draws * self.obs_width());
        for _ in 0..draws {
            self.draw_into(&mut rng, &mut values);
        }
        WeightedSample {
            data: Dataset::new(self.obs_width(), values).expect("width is positive"),
            weights: vec![T::one(); draws],
        }
    }
}

/// Draws `n` observations; deterministic in `(n, seed)`.
pub fn sample_data<T: Real>(
    process: &dyn TrueProcess<T>,
    n: usize,
    seed: u64,
) -> Result<Dataset<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample size must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n * process.obs_width());
    for _ in 0..n {
        process.draw_into(&mut rng, &mut values);
    }
    Dataset::new(process.obs_width(), values)
}

/// Antithetic design for laws symmetric about `centre`: each deviation `z`
/// contributes `centre + z` and `centre - z`.
fn antithetic<T: Real>(
    centre: &[f64],
    draws: usize,
    seed: u64,
    mut deviation: impl FnMut(&mut ChaCha8Rng, &mut Vec<f64>),
) -> WeightedSample<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = draws.div_ceil(2);
    let width = centre.len();
    let mut values = Vec::with_capacity(2 * pairs * width);
    let mut z = Vec::with_capacity(width);
    for _ in 0..pairs {
        z.clear();
        deviation(&mut rng, &mut z);
        values.extend(centre.iter().zip(&z).map(|(&c, &d)| lit::<T>(c + d)));
        values.extend(centre.iter().zip(&z).map(|(&c, &d)| lit::<T>(c - d)));
    }
    WeightedSample {
        data: Dataset::new(width, values).expect("width is positive"),
        weights: vec![T::one(); 2 * pairs],
    }
}

/// Isotropic Gaussian `N(mean, sd^2 I)`.
#[derive(Debug, Clone)]
pub struct GaussianProcess {
    mean: Vec<f64>,
    sd: f64,
    name: String,
}

impl GaussianProcess {
    pub fn new(mean: Vec<f64>, sd: f64) -> Self {
        assert!(!mean.is_empty() && sd > 0.0);
        let name = format!("gaussian(mean={mean:?}, sd={sd})");
        Self { mean, sd, name }
    }

    pub fn standard() -> Self {
        Self::new(vec![0.0], 1.0)
    }
}

impl<T: Real> TrueProcess<T> for GaussianProcess {
    fn name(&self) -> &str {
        &self.name
    }

    fn obs_width(&self) -> usize {
        self.mean.len()
    }

    fn draw_into(&self, rng: &mut ChaCha8Rng, out: &mut Vec<T>) {
        for &m in &self.mean {
            let z: f64 = StandardNormal.sample(rng);
            out.push(lit(m + self.sd * z));
        }
    }

    fn pseudo_true(&self) -> PseudoTrue<T> {
        PseudoTrue::Known(self.mean.iter().map(|&m| lit(m)).collect())
    }

    fn expectation_sample(&self, draws: usize, seed: u64) -> WeightedSample<T> {
        antithetic(&self.mean, draws, seed, |rng, z| {
            for _ in 0..self.mean.len() {
                let e: f64 = StandardNormal.sample(rng);
                z.push(self.sd * e);
            }
        })
    }
}

/// Laplace law with density `exp(-|x - loc| / scale) / (2 scale)`.
#[derive(Debug, Clone)]
pub struct LaplaceProcess {
    loc: f64,
    scale: f64,
    name: String,
}

impl LaplaceProcess {
    pub fn new(loc: f64, scale: f64) -> Self {
        assert!(scale > 0.0);
        Self {
            loc,
            scale,
            name: format!("laplace(loc={loc}, scale={scale})"),
        }
    }

    fn deviation(&self, rng: &mut ChaCha8Rng) -> f64 {
        // Inverse CDF on u in (-1/2, 1/2).
        let u: f64 = rng.random::<f64>() - 0.5;
        -self.scale * u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
    }
}

impl<T: Real> TrueProcess<T> for LaplaceProcess {
    fn name(&self) -> &str {
        &self.name
    }

    fn obs_width(&self) -> usize {
        1
    }

    fn draw_into(&self, rng: &mut ChaCha8Rng, out: &mut Vec<T>) {
        out.push(lit(self.loc + self.deviation(rng)));
    }

    fn pseudo_true(&self) -> PseudoTrue<T> {
        PseudoTrue::Known(vec![lit(self.loc)])
    }

    fn expectation_sample(&self, draws: usize, seed: u64) -> WeightedSample<T> {
        antithetic(&[self.loc], draws, seed, |rng, z| {
            z.push(self.deviation(rng))
        })
    }
}

/// Location-scale Student-t law.
#[derive(Debug, Clone)]
pub struct StudentTProcess {
    df: f64,
    loc: f64,
    scale: f64,
    dist: StudentT<f64>,
    name: String,
}

impl StudentTProcess {
    pub fn new(df: f64, loc: f64, scale: f64) -> Self {
        assert!(df > 0.0 && scale > 0.0);
        Self {
            df,
            loc,
            scale,
            dist: StudentT::new(df).expect("positive degrees of freedom"),
            name: format!("student_t(df={df}, loc={loc}, scale={scale})"),
        }
    }

    pub fn df(&self) -> f64 {
        self.df
    }
}

impl<T: Real> TrueProcess<T> for StudentTProcess {
    fn name(&self) -> &str {
        &self.name
    }

    fn obs_width(&self) -> usize {
        1
    }

    fn draw_into(&self, rng: &mut ChaCha8Rng, out: &mut Vec<T>) {
        out.push(lit(self.loc + self.scale * self.dist.sample(rng)));
    }

    fn pseudo_true(&self) -> PseudoTrue<T> {
        PseudoTrue::Known(vec![lit(self.loc)])
    }

    fn expectation_sample(&self, draws: usize, seed: u64) -> WeightedSample<T> {
        antithetic(&[self.loc], draws, seed, |rng, z| {
            z.push(self.scale * self.dist.sample(rng))
        })
    }
}

/// Logistic regression data: covariate `c ~ N(0, 1)`, response
/// `y ~ Bernoulli(1 / (1 + exp(-theta c)))`. Observations are `(c, y)`.
#[derive(Debug, Clone)]
pub struct LogisticProcess {
    theta: f64,
    name: String,
}

impl LogisticProcess {
    pub fn new(theta: f64) -> Self {
        Self {
            theta,
            name: format!("logistic(theta={theta})"),
        }
    }

    fn success_probability(&self, c: f64) -> f64 {
        1.0 / (1.0 + (-self.theta * c).exp())
    }
}

impl<T: Real> TrueProcess<T> for LogisticProcess {
    fn name(&self) -> &str {
        &self.name
    }

    fn obs_width(&self) -> usize {
        2
    }

    fn draw_into(&self, rng: &mut ChaCha8Rng, out: &mut Vec<T>) {
        let c: f64 = StandardNormal.sample(rng);
        let y = if rng.random::<f64>() < self.success_probability(c) {
            1.0
        } else {
            0.0
        };
        out.push(lit(c));
        out.push(lit(y));
    }

    fn pseudo_true(&self) -> PseudoTrue<T> {
        PseudoTrue::Known(vec![lit(self.theta)])
    }

    /// Antithetic covariates with the response integrated out exactly: every
    /// covariate contributes `(c, 1)` and `(c, 0)` weighted by their
    /// conditional probabilities.
    fn expectation_sample(&self, draws: usize, seed: u64) -> WeightedSample<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pairs = draws.div_ceil(2);
        let mut values = Vec::with_capacity(8 * pairs);
        let mut weights = Vec::with_capacity(4 * pairs);
        for _ in 0..pairs {
            let z: f64 = StandardNormal.sample(&mut rng);
            for c in [z, -z] {
                let p = self.success_probability(c);
                values.extend([lit::<T>(c), T::one(), lit::<T>(c), T::zero()]);
                weights.extend([lit::<T>(p), lit::<T>(1.0 - p)]);
            }
        }
        WeightedSample {
            data: Dataset::new(2, values).expect("width is positive"),
            weights,
        }
    }
}
