//! Concentration tail mass, the Markov bound and the tail-moment bound.

use crate::error::{Error, Result};
use crate::posterior::GridDensity;
use crate::scalar::{from_usize, lit, norm2, to_f64, Real};

/// Left and right side of an inequality `lhs <= rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck<T> {
    pub lhs: T,
    pub rhs: T,
}

impl<T: Real> BoundCheck<T> {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }

    pub fn margin(&self) -> T {
        self.rhs - self.lhs
    }
}

/// Trapezoid value of `1{z > r}`: a node exactly on the jump gets the
/// midpoint value 1/2.
fn outside<T: Real>(z: T, r: T) -> T {
    if z > r {
        T::one()
    } else if z == r {
        lit(0.5)
    } else {
        T::zero()
    }
}

/// Mass of `g` outside the closed ball of radius `r`, in `[0, 1]`.
pub fn concentration_tail_mass<T: Real>(g: &GridDensity<T>, r: T) -> Result<T> {
    check_radius(r)?;
    let m = g.integrate(|h, _| outside(norm2(h), r));
    Ok(m.min(T::one()).max(T::zero()))
}

/// `P(||h|| > r) <= r^(-k0) E ||h||^k0` on the tabulated density.
pub fn markov_bound_check<T: Real>(g: &GridDensity<T>, r: T, k0: u32) -> Result<BoundCheck<T>> {
    check_radius(r)?;
    let lhs = concentration_tail_mass(g, r)?;
    let moment = g.abs_moment(lit(f64::from(k0)))?;
    Ok(BoundCheck {
        lhs,
        rhs: moment / r.powi(k0 as i32),
    })
}

/// `E[||Z||^k 1{||Z|| > r}] <= (gamma + 1) / (gamma r^gamma) E ||Z||^(k (1 + gamma))`
/// for `Z` distributed as the grid density.
pub fn lemma2_tail_bound<T: Real>(
    g: &GridDensity<T>,
    k: u32,
    gamma: T,
    r: T,
) -> Result<BoundCheck<T>> {
    check_tail_moment_args(gamma, r)?;
    let kf = lit::<T>(f64::from(k));
    let lhs = g.integrate(|h, _| {
        let z = norm2(h);
        outside(z, r) * z.powf(kf)
    });
    let moment = g.abs_moment(kf * (T::one() + gamma))?;
    finish_tail_moment(lhs, moment, gamma, r, kf)
}

/// [`lemma2_tail_bound`] with expectations replaced by sample means of `||Z||`.
pub fn lemma2_tail_bound_samples<T: Real>(
    norms: &[T],
    k: u32,
    gamma: T,
    r: T,
) -> Result<BoundCheck<T>> {
    check_tail_moment_args(gamma, r)?;
    if norms.is_empty() || norms.iter().any(|&z| !(z >= T::zero())) {
        return Err(Error::InvalidArgument(
            "norms must be non-empty and non-negative".into(),
        ));
    }
    let kf = lit::<T>(f64::from(k));
    let n = from_usize::<T>(norms.len());
    let lhs = norms
        .iter()
        .map(|&z| if z > r { z.powf(kf) } else { T::zero() })
        .sum::<T>()
        / n;
    let moment = norms
        .iter()
        .map(|&z| z.powf(kf * (T::one() + gamma)))
        .sum::<T>()
        / n;
    finish_tail_moment(lhs, moment, gamma, r, kf)
}

fn finish_tail_moment<T: Real>(lhs: T, moment: T, gamma: T, r: T, kf: T) -> Result<BoundCheck<T>> {
    if !moment.is_finite() {
        return Err(Error::NonFiniteMoment {
            order: to_f64(kf * (T::one() + gamma)),
        });
    }
    Ok(BoundCheck {
        lhs,
        rhs: (gamma + T::one()) / (gamma * r.powf(gamma)) * moment,
    })
}

fn check_radius<T: Real>(r: T) -> Result<()> {
    if r > T::zero() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "radius must be positive, got {r}"
        )))
    }
}

fn check_tail_moment_args<T: Real>(gamma: T, r: T) -> Result<()> {
    check_radius(r)?;
    if gamma > T::zero() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "gamma must be positive, got {gamma}"
        )))
    }
}
