//! Random-instance sweeps of the tail and moment inequalities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    fn_ratio_suprema, lemma1_bound_check, lemma2_tail_bound, markov_bound_check,
    weighted_l1_distance,
};
use crate::error::Result;
use crate::posterior::{linspace, Frame, GridDensity};

/// Relative slack for comparisons that are exact in real arithmetic.
const ROUNDING: f64 = 1e-12;

/// One failed inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaViolation {
    pub instance: usize,
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
    pub description: String,
}

/// Outcome of [`check_lemmas`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaSweep {
    pub instances: usize,
    pub seed: u64,
    pub checks: usize,
    pub violations: Vec<LemmaViolation>,
}

impl LemmaSweep {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Random density family on a grid.
#[derive(Debug, Clone)]
enum Shape {
    Gaussian {
        mean: Vec<f64>,
        scale: Vec<f64>,
        rho: f64,
    },
    StudentT {
        mean: Vec<f64>,
        scale: Vec<f64>,
        df: f64,
    },
    Mixture {
        a: Vec<f64>,
        b: Vec<f64>,
        scale: f64,
        weight: f64,
    },
}

impl Shape {
    fn random(rng: &mut ChaCha8Rng, p: usize) -> Self {
        let mut vec_in =
            |lo: f64, hi: f64| -> Vec<f64> { (0..p).map(|_| rng.random_range(lo..hi)).collect() };
        let mean = vec_in(-1.0, 1.0);
        let scale = vec_in(0.5, 2.0);
        let b = vec_in(-2.0, 2.0);
        match rng.random_range(0..3) {
            0 => Shape::Gaussian {
                mean,
                scale,
                rho: if p == 2 {
                    rng.random_range(-0.7..0.7)
                } else {
                    0.0
                },
            },
            1 => Shape::StudentT {
                mean,
                scale,
                df: rng.random_range(5.0..12.0),
            },
            _ => Shape::Mixture {
                a: mean,
                b,
                scale: rng.random_range(0.5..1.5),
                weight: rng.random_range(0.2..0.8),
            },
        }
    }

    fn log_density(&self, h: &[f64]) -> f64 {
        match self {
            Shape::Gaussian { mean, scale, rho } => {
                let z: Vec<f64> = h
                    .iter()
                    .zip(mean)
                    .zip(scale)
                    .map(|((x, m), s)| (x - m) / s)
                    .collect();
                let q = if z.len() == 2 {
                    (z[0] * z[0] - 2.0 * rho * z[0] * z[1] + z[1] * z[1]) / (1.0 - rho * rho)
                } else {
                    z[0] * z[0]
                };
                -0.5 * q
            }
            Shape::StudentT { mean, scale, df } => {
                let q: f64 = h
                    .iter()
                    .zip(mean)
                    .zip(scale)
                    .map(|((x, m), s)| ((x - m) / s).powi(2))
                    .sum();
                -0.5 * (df + h.len() as f64) * (q / df).ln_1p()
            }
            Shape::Mixture {
                a,
                b,
                scale,
                weight,
            } => {
                let q = |c: &[f64]| -> f64 {
                    -0.5 * h
                        .iter()
                        .zip(c)
                        .map(|(x, m)| ((x - m) / scale).powi(2))
                        .sum::<f64>()
                };
                let (la, lb) = (weight.ln() + q(a), (1.0 - weight).ln() + q(b));
                let top = la.max(lb);
                top + ((la - top).exp() + (lb - top).exp()).ln()
            }
        }
    }
}

fn tabulate(shape: &Shape, axes: &[Vec<f64>]) -> Result<GridDensity<f64>> {
    let s = shape.clone();
    GridDensity::from_log_fn(axes.to_vec(), Frame::Theta, move |h| s.log_density(h))
}

/// Draws `instances` random density pairs `(phi, psi)` in one or two
/// dimensions together with random `(k, gamma, r)` and checks:
///
/// * the moment-distance bound through the ratio suprema,
/// * the tail-moment bound `E[||Z||^k 1{||Z|| > r}] <= (gamma+1)/(gamma r^gamma) E||Z||^(k(1+gamma))`,
/// * the Markov bound `P(||Z|| > r) <= r^(-k0) E||Z||^k0`,
/// * `z0 <= z_upper`,
/// * the swap identity `f-(g, h; phi, psi) = f+(g, h; psi, phi)`, on the
///   suprema and on random node pairs.
///
/// Deterministic in `seed`.
pub fn check_lemmas(instances: usize, seed: u64) -> Result<LemmaSweep> {
    let mut violations = Vec::new();
    let mut checks = 0;
    for i in 0..instances {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9).wrapping_add(i as u64));
        let p = if rng.random_bool(0.5) { 1 } else { 2 };
        let (half, nodes) = if p == 1 { (20.0, 2001) } else { (14.0, 161) };
        let axes: Vec<Vec<f64>> = (0..p).map(|_| linspace(-half, half, nodes)).collect();
        let phi = tabulate(&Shape::random(&mut rng, p), &axes)?;
        let psi_shape = Shape::random(&mut rng, p);
        let psi = tabulate(&psi_shape, &axes)?;
        let k: u32 = rng.random_range(1..=2);
        let k0: u32 = rng.random_range(k..=3);
        let gamma: f64 = rng.random_range(0.25..(4.0 / f64::from(k) - 1.0).min(2.0));
        let r: f64 = rng.random_range(1.0..5.0);
        let ball: f64 = rng.random_range(0.5..4.0);

        let mut record = |check: &str, lhs: f64, rhs: f64, ok: bool| {
            checks += 1;
            if !ok {
                violations.push(LemmaViolation {
                    instance: i,
                    check: check.to_string(),
                    lhs,
                    rhs,
                    description: format!(
                        "p={p} k={k} k0={k0} gamma={gamma} r={r} ball={ball} psi={psi_shape:?}"
                    ),
                });
            }
        };
        let le = |lhs: f64, rhs: f64| lhs <= rhs + ROUNDING * rhs.abs().max(lhs.abs());

        let l1 = lemma1_bound_check(&phi, &psi, k, ball)?;
        record(
            "moment_bound",
            l1.bound.lhs,
            l1.bound.rhs,
            le(l1.bound.lhs, l1.bound.rhs),
        );

        let l2 = lemma2_tail_bound(&psi, k, gamma, r)?;
        record("tail_moment_bound", l2.lhs, l2.rhs, le(l2.lhs, l2.rhs));

        let mk = markov_bound_check(&psi, r, k0)?;
        record("markov", mk.lhs, mk.rhs, le(mk.lhs, mk.rhs));

        let d = weighted_l1_distance(&phi, &psi, k)?;
        record("z0_le_z", d.z0, d.z_upper, le(d.z0, d.z_upper));

        let forward = fn_ratio_suprema(&psi, &phi, ball)?;
        let swapped = fn_ratio_suprema(&phi, &psi, ball)?;
        let gap = (forward.sup_f_plus - swapped.sup_f_minus).abs();
        record(
            "swap_identity",
            forward.sup_f_plus,
            swapped.sup_f_minus,
            gap <= ROUNDING,
        );
        let gap = (forward.sup_f_minus - swapped.sup_f_plus).abs();
        record(
            "swap_identity",
            forward.sup_f_minus,
            swapped.sup_f_plus,
            gap <= ROUNDING,
        );

        // Pointwise: L = log phi - log psi, and the swapped pair uses -L.
        let n = phi.len();
        for _ in 0..32 {
            let (g, h) = (rng.random_range(0..n), rng.random_range(0..n));
            let l = |j: usize| phi.log_values()[j] - psi.log_values()[j];
            let f_minus = (1.0 - (l(g) - l(h)).exp()).max(0.0);
            let f_plus_swapped = (1.0 - ((-l(h)) - (-l(g))).exp()).max(0.0);
            let gap = (f_minus - f_plus_swapped).abs();
            record(
                "swap_identity_pointwise",
                f_minus,
                f_plus_swapped,
                gap <= ROUNDING,
            );
        }
    }
    Ok(LemmaSweep {
        instances,
        seed,
        checks,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sweep_is_clean_and_deterministic() {
        let a = check_lemmas(6, 3).unwrap();
        assert!(a.passed(), "{:?}", a.violations);
        assert_eq!(a.checks, 6 * (6 + 32));
        assert_eq!(a, check_lemmas(6, 3).unwrap());
    }
}
