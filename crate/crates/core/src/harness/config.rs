//! Experiment configuration read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsConfig;
use crate::error::{Error, Result};
use crate::model::{
    FlatPrior, GaussianLocation, GaussianProcess, LaplaceLocation, LaplaceProcess, LogisticProcess,
    LogisticRegression, Model, NormalPrior, Prior, PseudoTrue, StudentTProcess, TrueProcess,
};
use crate::posterior::AlphaConfig;
use crate::scalar::vec_to_f64;

/// A scalar or a list, for per-coordinate parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn expand(&self, p: usize, what: &str) -> Result<Vec<f64>> {
        match self {
            OneOrMany::One(x) => Ok(vec![*x; p]),
            OneOrMany::Many(v) if v.len() == p => Ok(v.clone()),
            OneOrMany::Many(v) => Err(Error::Config(format!(
                "{what} has {} entries, expected {p}",
                v.len()
            ))),
        }
    }
}

fn zero() -> OneOrMany {
    OneOrMany::One(0.0)
}
fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn ten() -> f64 {
    10.0
}

/// Model family selected by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    GaussianLocation {
        #[serde(default = "one_usize")]
        dim: usize,
        #[serde(default = "one")]
        sigma: f64,
    },
    LaplaceLocation {
        #[serde(default = "one")]
        scale: f64,
    },
    LogisticRegression,
}

/// Data-generating process selected by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProcessSpec {
    Gaussian {
        #[serde(default = "zero")]
        mean: OneOrMany,
        #[serde(default = "one")]
        sd: f64,
    },
    Laplace {
        #[serde(default)]
        loc: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    StudentT {
        df: f64,
        #[serde(default)]
        loc: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    Logistic {
        #[serde(default = "one")]
        theta: f64,
    },
}

/// Prior selected by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorSpec {
    Normal {
        #[serde(default = "zero")]
        mean: OneOrMany,
        #[serde(default = "ten")]
        sd: f64,
    },
    Flat,
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec::Normal {
            mean: zero(),
            sd: ten(),
        }
    }
}

/// Contiguous seed range `start .. start + count`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedRange {
    pub start: u64,
    pub count: u64,
}

impl SeedRange {
    pub fn iter(&self) -> impl Iterator<Item = u64> {
        self.start..self.start + self.count
    }
}

/// Grid settings shared by every cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "twelve")]
    pub grid_halfwidth_se: f64,
    #[serde(default)]
    pub nodes_per_dim: Option<usize>,
}

fn twelve() -> f64 {
    12.0
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            grid_halfwidth_se: twelve(),
            nodes_per_dim: None,
        }
    }
}

/// A sweep over `(n, alpha, seed)` cells for one model, process and prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub process: ProcessSpec,
    #[serde(default)]
    pub prior: PriorSpec,
    pub n_sequence: Vec<usize>,
    pub alpha_set: Vec<f64>,
    pub seeds: SeedRange,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig<f64>,
    /// Moment orders reported per cell; defaults to `[diagnostics.k]`.
    #[serde(default)]
    pub k_values: Option<Vec<u32>>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_output")]
    pub output_path: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("powerpost-out")
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks the schema-level invariants and that the components fit together.
    pub fn validate(&self) -> Result<()> {
        if self.n_sequence.is_empty() || self.n_sequence.contains(&0) {
            return Err(Error::Config(
                "n_sequence must be non-empty and positive".into(),
            ));
        }
        if self.n_sequence.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "n_sequence must be strictly increasing".into(),
            ));
        }
        if self.alpha_set.is_empty() || self.alpha_set.iter().any(|a| !(*a > 0.0) || !a.is_finite())
        {
            return Err(Error::Config(
                "alpha_set must be non-empty and positive".into(),
            ));
        }
        if self.seeds.count == 0 {
            return Err(Error::Config("seed range is empty".into()));
        }
        self.diagnostics.validate()?;
        for &k in self.k_values().iter() {
            DiagnosticsConfig {
                k,
                ..self.diagnostics.clone()
            }
            .validate()?;
        }
        self.alpha_config(1.0)?;
        self.build().map(|_| ())
    }

    pub fn k_values(&self) -> Vec<u32> {
        self.k_values
            .clone()
            .unwrap_or_else(|| vec![self.diagnostics.k])
    }

    pub fn alpha_config(&self, alpha: f64) -> Result<AlphaConfig<f64>> {
        let cfg = AlphaConfig {
            alpha,
            grid_halfwidth_se: self.grid.grid_halfwidth_se,
            nodes_per_dim: self.grid.nodes_per_dim,
        };
        cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Instantiates model, process and prior.
    pub fn build(&self) -> Result<Experiment> {
        let model = build_model(&self.model)?;
        let p = model.dim();
        let process = build_process(&self.process)?;
        let prior = build_prior(&self.prior, p)?;
        if process.obs_width() != model.obs_width() {
            return Err(Error::Config(format!(
                "process {} yields width-{} observations but model {} expects width {}",
                process.name(),
                process.obs_width(),
                model.name(),
                model.obs_width()
            )));
        }
        if let PseudoTrue::Known(t) = process.pseudo_true() {
            if t.len() != p || !model.theta_box().contains_strictly(&t) {
                return Err(Error::Config(format!(
                    "pseudo-true value {:?} does not fit the parameter box of {}",
                    vec_to_f64(&t),
                    model.name()
                )));
            }
        }
        Ok(Experiment {
            model,
            process,
            prior,
        })
    }
}

/// Instantiated components of an [`ExperimentConfig`].
pub struct Experiment {
    pub model: Box<dyn Model<f64>>,
    pub process: Box<dyn TrueProcess<f64>>,
    pub prior: Box<dyn Prior<f64>>,
}

fn positive(x: f64, what: &str) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Config(format!("{what} must be positive, got {x}")))
    }
}

fn build_model(spec: &ModelSpec) -> Result<Box<dyn Model<f64>>> {
    Ok(match *spec {
        ModelSpec::GaussianLocation { dim, sigma } => {
            if !(1..=3).contains(&dim) {
                return Err(Error::Config(format!("dim must be 1, 2 or 3, got {dim}")));
            }
            Box::new(GaussianLocation::new(dim, positive(sigma, "sigma")?))
        }
        ModelSpec::LaplaceLocation { scale } => {
            Box::new(LaplaceLocation::new(positive(scale, "scale")?))
        }
        ModelSpec::LogisticRegression => Box::new(LogisticRegression::new()),
    })
}

fn build_process(spec: &ProcessSpec) -> Result<Box<dyn TrueProcess<f64>>> {
    Ok(match spec {
        ProcessSpec::Gaussian { mean, sd } => {
            let mean = match mean {
                OneOrMany::One(x) => vec![*x],
                OneOrMany::Many(v) if !v.is_empty() => v.clone(),
                OneOrMany::Many(_) => return Err(Error::Config("mean is empty".into())),
            };
            Box::new(GaussianProcess::new(mean, positive(*sd, "sd")?))
        }
        ProcessSpec::Laplace { loc, scale } => {
            Box::new(LaplaceProcess::new(*loc, positive(*scale, "scale")?))
        }
        ProcessSpec::StudentT { df, loc, scale } => Box::new(StudentTProcess::new(
            positive(*df, "df")?,
            *loc,
            positive(*scale, "scale")?,
        )),
        ProcessSpec::Logistic { theta } => Box::new(LogisticProcess::new(*theta)),
    })
}

fn build_prior(spec: &PriorSpec, p: usize) -> Result<Box<dyn Prior<f64>>> {
    Ok(match spec {
        PriorSpec::Normal { mean, sd } => Box::new(NormalPrior::new(
            mean.expand(p, "prior mean")?,
            vec![positive(*sd, "prior sd")?; p],
        )),
        PriorSpec::Flat => Box::new(FlatPrior),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
n_sequence = [50, 200]
alpha_set = [0.5, 1.0]
seeds = { start = 1, count = 3 }

[model]
kind = "gaussian_location"

[process]
kind = "laplace"
scale = 1.0
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::from_toml_str(BASIC).unwrap();
        assert_eq!(cfg.prior, PriorSpec::default());
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_model_is_a_config_error() {
        let s = BASIC.replace("gaussian_location", "banana");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&s),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn empty_seed_range_is_rejected() {
        let s = BASIC.replace("count = 3", "count = 0");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&s),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn decreasing_n_is_rejected() {
        let s = BASIC.replace("[50, 200]", "[200, 50]");
        assert!(ExperimentConfig::from_toml_str(&s).is_err());
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let s = BASIC.replace(
            "kind = \"gaussian_location\"",
            "kind = \"logistic_regression\"",
        );
        assert!(ExperimentConfig::from_toml_str(&s).is_err());
    }
}
