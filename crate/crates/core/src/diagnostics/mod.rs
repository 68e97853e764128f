//! Distances, remainders, tail masses and inequality checks on grid
//! densities in the local frame `h = sqrt(n) (theta - theta_star)`.

mod distances;
mod lan;
mod ratio;
mod tails;

pub use distances::{tensor_norm_1, tv_distance, weighted_l1_distance, WeightedL1};
pub use lan::{cube_points, lan_remainder, LanRemainder};
pub use ratio::{fn_ratio_suprema, lemma1_bound_check, Lemma1Check, RatioSuprema, MAX_PAIRS};
pub use tails::{
    concentration_tail_mass, lemma2_tail_bound, lemma2_tail_bound_samples, markov_bound_check,
    BoundCheck,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Real};

/// Orders, radii and thresholds of the diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields, default)]
pub struct DiagnosticsConfig<T> {
    /// Moment order `k`, `1 <= k <= k0`.
    pub k: u32,
    pub k0: u32,
    /// Tail exponent `gamma > 0`.
    pub gamma: T,
    /// Concentration radius; `None` means `n^(1/8)`.
    pub r: Option<T>,
    /// Ratio-event threshold.
    pub eta: T,
    /// Target bound for the moment distance.
    pub epsilon: T,
    /// Half-width of the cube `K = [-a, a]^p` for the LAN remainder.
    pub lan_radius: T,
    /// Points per axis of the LAN cube; `None` uses 61 for `p = 1`, 31 otherwise.
    pub lan_nodes: Option<usize>,
}

impl<T: Real> Default for DiagnosticsConfig<T> {
    fn default() -> Self {
        Self {
            k: 1,
            k0: 2,
            gamma: T::one(),
            r: None,
            eta: lit(0.1),
            epsilon: lit(0.05),
            lan_radius: lit(3.0),
            lan_nodes: None,
        }
    }
}

impl<T: Real> DiagnosticsConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.k < 1 || self.k > self.k0 {
            return bad(format!(
                "need 1 <= k <= k0, got k = {}, k0 = {}",
                self.k, self.k0
            ));
        }
        if !(self.gamma > T::zero()) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if let Some(r) = self.r {
            if !(r > T::zero()) {
                return bad(format!("r must be positive, got {r}"));
            }
        }
        if !(self.eta > T::zero()) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if !(self.epsilon > T::zero()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.lan_radius > T::zero()) {
            return bad("lan_radius must be positive".into());
        }
        if matches!(self.lan_nodes, Some(m) if m < 2) {
            return bad("lan_nodes must be at least 2".into());
        }
        Ok(())
    }

    /// Radius used at sample size `n`.
    pub fn radius(&self, n: usize) -> T {
        self.r
            .unwrap_or_else(|| from_usize::<T>(n).powf(lit(0.125)))
    }

    pub fn lan_nodes_for(&self, p: usize) -> usize {
        self.lan_nodes.unwrap_or(if p == 1 { 61 } else { 31 })
    }
}

/// One row of diagnostics for a `(n, alpha, seed)` cell; field order is the
/// CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DiagnosticsReport<T> {
    pub model: String,
    pub process: String,
    pub prior: String,
    pub n: usize,
    pub alpha: T,
    pub seed: u64,
    pub k: u32,
    pub r: T,
    pub z0: T,
    pub z_upper: T,
    pub tv: T,
    #[serde(rename = "sup_Rn")]
    pub sup_rn: T,
    pub tail_mass: T,
    pub sup_fn_plus: T,
    pub sup_fn_minus: T,
}

/// CSV header of [`DiagnosticsReport`].
pub const REPORT_COLUMNS: [&str; 15] = [
    "model",
    "process",
    "prior",
    "n",
    "alpha",
    "seed",
    "k",
    "r",
    "z0",
    "z_upper",
    "tv",
    "sup_Rn",
    "tail_mass",
    "sup_fn_plus",
    "sup_fn_minus",
];

impl<T: Real> DiagnosticsReport<T> {
    /// Checks `z0 <= z_upper`, `tv` in `[0, 1]` and non-negativity.
    pub fn check_invariants(&self) -> Result<()> {
        let values = [
            self.z0,
            self.z_upper,
            self.tv,
            self.sup_rn,
            self.tail_mass,
            self.sup_fn_plus,
            self.sup_fn_minus,
        ];
        if values.iter().any(|v| !(*v >= T::zero())) {
            return Err(Error::Consistency(format!(
                "negative or NaN diagnostic in {self:?}"
            )));
        }
        if self.z0 > self.z_upper {
            return Err(Error::Consistency(format!(
                "z0 = {} exceeds z_upper = {}",
                self.z0, self.z_upper
            )));
        }
        if self.tv > T::one() {
            return Err(Error::Consistency(format!("tv = {} exceeds 1", self.tv)));
        }
        Ok(())
    }

    /// Event `sup f+ <= eta`.
    pub fn event_a(&self, eta: T) -> bool {
        self.sup_fn_plus <= eta
    }

    /// Event `sup f- <= eta`.
    pub fn event_b(&self, eta: T) -> bool {
        self.sup_fn_minus <= eta
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_radius_is_eighth_root() {
        let c = DiagnosticsConfig::<f64>::default();
        assert!((c.radius(256) - 2.0).abs() < 1e-12);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn invalid_orders_are_rejected() {
        let c = DiagnosticsConfig::<f64> {
            k: 3,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = DiagnosticsConfig::<f64> {
            gamma: 0.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn csv_header_matches_columns() {
        let r = DiagnosticsReport::<f64> {
            model: "m".into(),
            process: "p".into(),
            prior: "q".into(),
            n: 1,
            alpha: 1.0,
            seed: 0,
            k: 1,
            r: 1.0,
            z0: 0.0,
            z_upper: 0.0,
            tv: 0.0,
            sup_rn: 0.0,
            tail_mass: 0.0,
            sup_fn_plus: 0.0,
            sup_fn_minus: 0.0,
        };
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(&r).unwrap();
        let s = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert_eq!(s.lines().next().unwrap(), REPORT_COLUMNS.join(","));
        assert!(r.check_invariants().is_ok());
    }
}
