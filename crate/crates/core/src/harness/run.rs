//! The per-cell pipeline and the parallel sweep.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    estimate_curvature, fit_mle, limiting_gaussian, CurvatureEstimates, MleFit,
};
use crate::diagnostics::{
    concentration_tail_mass, cube_points, fn_ratio_suprema, lan_remainder, tv_distance,
    weighted_l1_distance, DiagnosticsConfig, DiagnosticsReport, RatioSuprema,
};
use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::model::{pseudo_true_parameter, sample_data, PseudoTrue, PseudoTrueOptions};
use crate::posterior::{normalize_on_grid, to_lan_frame, Frame, GridDensity};

use super::config::{Experiment, ExperimentConfig};
use super::stats::{covariance, median};

/// Posterior-mean asymptotics of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Row {
    pub n: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Posterior mean.
    pub theta_bayes: Vec<f64>,
    pub theta_mle: Vec<f64>,
    /// `sqrt(n) (theta_bayes - theta_mle)`.
    pub gap: Vec<f64>,
    /// `sqrt(n) (theta_bayes - theta_star)`.
    pub scaled_error: Vec<f64>,
}

impl Theorem2Row {
    pub fn gap_norm(&self) -> f64 {
        self.gap.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn csv_header(p: usize) -> Vec<String> {
        let mut h = vec!["n".to_string(), "alpha".into(), "seed".into()];
        for name in ["theta_bayes", "theta_mle", "gap", "scaled_error"] {
            for j in 1..=p {
                h.push(format!("{name}_{j}"));
            }
        }
        h
    }

    fn csv_record(&self) -> Vec<String> {
        let mut r = vec![
            self.n.to_string(),
            self.alpha.to_string(),
            self.seed.to_string(),
        ];
        for v in [
            &self.theta_bayes,
            &self.theta_mle,
            &self.gap,
            &self.scaled_error,
        ] {
            r.extend(v.iter().map(f64::to_string));
        }
        r
    }
}

/// Everything computed for one `(n, alpha, seed)` cell.
#[derive(Debug, Clone)]
pub struct CellResult {
    /// One report per requested moment order.
    pub reports: Vec<DiagnosticsReport<f64>>,
    pub theorem2: Theorem2Row,
    pub theta_star: Vec<f64>,
    pub fit: MleFit<f64>,
    /// Curvature at the pseudo-true value.
    pub curvature_star: CurvatureEstimates<f64>,
    pub posterior_covariance: SquareMatrix<f64>,
    pub ratio: RatioSuprema<f64>,
    /// Posterior and limiting Gaussian in the local frame.
    pub posterior_local: GridDensity<f64>,
    pub limit_local: GridDensity<f64>,
}

/// Resolves the pseudo-true parameter, running the oracle when needed.
pub fn resolve_theta_star(exp: &Experiment) -> Result<Vec<f64>> {
    match exp.process.pseudo_true() {
        PseudoTrue::Known(t) => Ok(t),
        PseudoTrue::Oracle => pseudo_true_parameter(
            exp.process.as_ref(),
            exp.model.as_ref(),
            &PseudoTrueOptions::default(),
        ),
    }
}

/// Runs sample, MLE, curvature, grid posterior, local frame, limiting
/// Gaussian and all diagnostics for one cell.
pub fn run_cell(
    cfg: &ExperimentConfig,
    exp: &Experiment,
    theta_star: &[f64],
    n: usize,
    alpha: f64,
    seed: u64,
) -> Result<CellResult> {
    let model = exp.model.as_ref();
    let alpha_cfg = cfg.alpha_config(alpha)?;
    let data = sample_data(exp.process.as_ref(), n, seed)?;
    let bx = model.theta_box();
    let start: Vec<f64> = bx
        .lower
        .iter()
        .zip(&bx.upper)
        .map(|(lo, hi)| 0.5 * (lo + hi))
        .collect();
    let fit = fit_mle(model, &data, &start)?.with_theta_star(theta_star);
    let curv_hat = estimate_curvature(model, &data, &fit.theta_hat)?;
    let post = normalize_on_grid(
        model,
        exp.prior.as_ref(),
        &data,
        &alpha_cfg,
        &fit,
        &curv_hat,
    )?;
    let post_h = to_lan_frame(&post, theta_star, n)?;
    let curv_star = estimate_curvature(model, &data, theta_star)?;
    let frame = Frame::Lan {
        theta_star: theta_star.to_vec(),
        n,
    };
    let lim_h = limiting_gaussian(&fit, &curv_star, alpha, n, frame)?.tabulate_like(&post_h)?;

    let dcfg: &DiagnosticsConfig<f64> = &cfg.diagnostics;
    let r = dcfg.radius(n);
    let p = model.dim();
    let tv = tv_distance(&post_h, &lim_h)?;
    let delta = fit.delta.clone().expect("delta set above");
    let cube = cube_points(p, dcfg.lan_radius, dcfg.lan_nodes_for(p));
    let lan = lan_remainder(model, &data, theta_star, &curv_star.v, &delta, &cube)?;
    let tail_mass = concentration_tail_mass(&post_h, r)?;
    let ratio = fn_ratio_suprema(&post_h, &lim_h, r)?;

    let mut reports = Vec::new();
    for k in cfg.k_values() {
        let d = weighted_l1_distance(&post_h, &lim_h, k)?;
        let report = DiagnosticsReport {
            model: model.name().to_string(),
            process: exp.process.name().to_string(),
            prior: exp.prior.name().to_string(),
            n,
            alpha,
            seed,
            k,
            r,
            z0: d.z0,
            z_upper: d.z_upper,
            tv,
            sup_rn: lan.sup_abs,
            tail_mass,
            sup_fn_plus: ratio.sup_f_plus,
            sup_fn_minus: ratio.sup_f_minus,
        };
        report.check_invariants()?;
        reports.push(report);
    }

    let theta_bayes = post.mean();
    let rn = (n as f64).sqrt();
    let theorem2 = Theorem2Row {
        n,
        alpha,
        seed,
        gap: theta_bayes
            .iter()
            .zip(&fit.theta_hat)
            .map(|(b, m)| rn * (b - m))
            .collect(),
        scaled_error: theta_bayes
            .iter()
            .zip(theta_star)
            .map(|(b, t)| rn * (b - t))
            .collect(),
        theta_mle: fit.theta_hat.clone(),
        theta_bayes,
    };
    if theorem2.gap.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite {
            theta: theorem2.theta_bayes.clone(),
        });
    }
    Ok(CellResult {
        reports,
        theorem2,
        theta_star: theta_star.to_vec(),
        fit,
        curvature_star: curv_star,
        posterior_covariance: post.covariance(),
        ratio,
        posterior_local: post_h,
        limit_local: lim_h,
    })
}

/// Cell that raised an error during a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub n: usize,
    pub alpha: f64,
    pub seed: u64,
    pub reason: String,
}

/// Per `(n, alpha)` summary across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n: usize,
    pub alpha: f64,
    pub cells: usize,
    /// Median `z0` and `z_upper` keyed by moment order.
    pub median_z0: BTreeMap<u32, f64>,
    pub median_z_upper: BTreeMap<u32, f64>,
    pub median_tv: f64,
    pub median_sup_rn: f64,
    pub median_tail_mass: f64,
    pub median_sup_fn_plus: f64,
    pub median_sup_fn_minus: f64,
    /// Median of `||sqrt(n) (theta_bayes - theta_mle)||_2`.
    pub median_gap_norm: f64,
    pub scaled_error_mean: Vec<f64>,
    pub scaled_error_covariance: Vec<Vec<f64>>,
    /// Sandwich variance at the pseudo-true value, averaged over seeds.
    pub v_tilde: Vec<Vec<f64>>,
    /// Diagonal of the scaled-error covariance divided by that of `v_tilde`.
    pub covariance_ratio: Vec<f64>,
    /// Median posterior variance per coordinate.
    pub median_posterior_variance: Vec<f64>,
}

/// Summary file content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub model: String,
    pub process: String,
    pub prior: String,
    pub theta_star: Vec<f64>,
    pub total_cells: usize,
    pub failed_cells: usize,
    pub failure_fraction: f64,
    pub groups: Vec<GroupSummary>,
    pub failures: Vec<CellFailure>,
}

/// All rows of a sweep, sorted by cell key.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub reports: Vec<DiagnosticsReport<f64>>,
    pub theorem2: Vec<Theorem2Row>,
    pub summary: SweepSummary,
}

/// Largest failed fraction tolerated before a sweep counts as failed.
pub const MAX_FAILURE_FRACTION: f64 = 0.05;

impl SweepOutcome {
    pub fn too_many_failures(&self) -> bool {
        self.summary.failure_fraction > MAX_FAILURE_FRACTION
    }

    /// Medians of one group, if present.
    pub fn group(&self, n: usize, alpha: f64) -> Option<&GroupSummary> {
        self.summary
            .groups
            .iter()
            .find(|g| g.n == n && g.alpha == alpha)
    }

    /// Writes `diagnostics.csv`, `theorem2.csv` and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("diagnostics.csv"))?;
        if self.reports.is_empty() {
            w.write_record(crate::diagnostics::REPORT_COLUMNS)?;
        }
        for r in &self.reports {
            w.serialize(r)?;
        }
        w.flush()?;
        let p = self.summary.theta_star.len();
        let mut w = csv::Writer::from_path(dir.join("theorem2.csv"))?;
        w.write_record(Theorem2Row::csv_header(p))?;
        for r in &self.theorem2 {
            w.write_record(r.csv_record())?;
        }
        w.flush()?;
        let json = serde_json::to_string_pretty(&self.summary)?;
        fs::write(dir.join("summary.json"), json + "\n")?;
        Ok(())
    }
}

/// Evaluates every cell of `cfg` in parallel. Failed cells are logged and
/// summarised; outputs are ordered by `(n, alpha, seed, k)`.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    let exp = cfg.build()?;
    let theta_star = resolve_theta_star(&exp)?;
    let mut cells = Vec::new();
    for &n in &cfg.n_sequence {
        for &alpha in &cfg.alpha_set {
            for seed in cfg.seeds.iter() {
                cells.push((n, alpha, seed));
            }
        }
    }
    let results: Vec<(usize, f64, u64, Result<CellResult>)> = cells
        .par_iter()
        .map(|&(n, alpha, seed)| {
            (
                n,
                alpha,
                seed,
                run_cell(cfg, &exp, &theta_star, n, alpha, seed),
            )
        })
        .collect();

    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (n, alpha, seed, r) in results {
        match r {
            Ok(c) => ok.push(c),
            Err(e) => {
                log::warn!("cell n={n} alpha={alpha} seed={seed} failed: {e}");
                failures.push(CellFailure {
                    n,
                    alpha,
                    seed,
                    reason: e.to_string(),
                });
            }
        }
    }
    let key = |n: usize, a: f64, s: u64| (n, a.to_bits(), s);
    ok.sort_by_key(|c| key(c.theorem2.n, c.theorem2.alpha, c.theorem2.seed));
    failures.sort_by_key(|f| key(f.n, f.alpha, f.seed));

    let mut groups = Vec::new();
    for &n in &cfg.n_sequence {
        for &alpha in &cfg.alpha_set {
            let members: Vec<&CellResult> = ok
                .iter()
                .filter(|c| c.theorem2.n == n && c.theorem2.alpha == alpha)
                .collect();
            if !members.is_empty() {
                groups.push(summarise_group(n, alpha, &members, &cfg.k_values()));
            }
        }
    }
    let total = cells.len();
    let summary = SweepSummary {
        model: exp.model.name().to_string(),
        process: exp.process.name().to_string(),
        prior: exp.prior.name().to_string(),
        theta_star,
        total_cells: total,
        failed_cells: failures.len(),
        failure_fraction: failures.len() as f64 / total as f64,
        groups,
        failures,
    };
    Ok(SweepOutcome {
        reports: ok.iter().flat_map(|c| c.reports.iter().cloned()).collect(),
        theorem2: ok.iter().map(|c| c.theorem2.clone()).collect(),
        summary,
    })
}

fn summarise_group(n: usize, alpha: f64, members: &[&CellResult], ks: &[u32]) -> GroupSummary {
    let med = |f: &dyn Fn(&CellResult) -> f64| {
        median(&members.iter().map(|c| f(c)).collect::<Vec<_>>()).unwrap_or(f64::NAN)
    };
    let first = |c: &CellResult| c.reports[0].clone();
    let mut median_z0 = BTreeMap::new();
    let mut median_z_upper = BTreeMap::new();
    for (i, &k) in ks.iter().enumerate() {
        median_z0.insert(k, med(&|c| c.reports[i].z0));
        median_z_upper.insert(k, med(&|c| c.reports[i].z_upper));
    }
    let p = members[0].theta_star.len();
    let errors: Vec<Vec<f64>> = members
        .iter()
        .map(|c| c.theorem2.scaled_error.clone())
        .collect();
    let cov = covariance(&errors);
    let mut v_tilde = vec![vec![0.0; p]; p];
    for c in members {
        for (a, row) in v_tilde.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                *v += c.curvature_star.v_tilde[(a, b)] / members.len() as f64;
            }
        }
    }
    GroupSummary {
        n,
        alpha,
        cells: members.len(),
        median_z0,
        median_z_upper,
        median_tv: med(&|c| first(c).tv),
        median_sup_rn: med(&|c| first(c).sup_rn),
        median_tail_mass: med(&|c| first(c).tail_mass),
        median_sup_fn_plus: med(&|c| first(c).sup_fn_plus),
        median_sup_fn_minus: med(&|c| first(c).sup_fn_minus),
        median_gap_norm: med(&|c| c.theorem2.gap_norm()),
        scaled_error_mean: (0..p)
            .map(|j| errors.iter().map(|e| e[j]).sum::<f64>() / errors.len() as f64)
            .collect(),
        covariance_ratio: (0..p).map(|j| cov[j][j] / v_tilde[j][j]).collect(),
        scaled_error_covariance: cov,
        v_tilde,
        median_posterior_variance: (0..p)
            .map(|j| med(&|c| c.posterior_covariance[(j, j)]))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GaussianProcess;

    const CONJUGATE: &str = r#"
n_sequence = [100]
alpha_set = [1.0]
seeds = { start = 1, count = 2 }
k_values = [1, 2]

[model]
kind = "gaussian_location"

[process]
kind = "gaussian"

[prior]
kind = "normal"
sd = 10.0
"#;

    #[test]
    fn conjugate_cell_matches_closed_form_mean() {
        let cfg = ExperimentConfig::from_toml_str(CONJUGATE).unwrap();
        let exp = cfg.build().unwrap();
        let cell = run_cell(&cfg, &exp, &[0.0], 100, 1.0, 1).unwrap();
        let data = sample_data::<f64>(&GaussianProcess::standard(), 100, 1).unwrap();
        let sum: f64 = data.values().iter().sum();
        let mean = sum / (100.0 + 1.0 / 100.0);
        assert!((cell.theorem2.theta_bayes[0] - mean).abs() < 1e-6);
        assert_eq!(cell.reports.len(), 2);
        assert_eq!(cell.reports[1].k, 2);
        assert!(cell.reports[0].tv < 0.05);
    }

    #[test]
    fn sweep_is_deterministic_and_sorted() {
        let cfg = ExperimentConfig::from_toml_str(CONJUGATE).unwrap();
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(a.reports, b.reports);
        assert_eq!(a.summary, b.summary);
        assert_eq!(a.summary.failed_cells, 0);
        assert_eq!(
            a.reports.iter().map(|r| (r.seed, r.k)).collect::<Vec<_>>(),
            vec![(1, 1), (1, 2), (2, 1), (2, 2)]
        );
        let dir = tempfile::tempdir().unwrap();
        a.write(dir.path()).unwrap();
        let first = fs::read(dir.path().join("diagnostics.csv")).unwrap();
        b.write(dir.path()).unwrap();
        assert_eq!(first, fs::read(dir.path().join("diagnostics.csv")).unwrap());
        let header = String::from_utf8(first).unwrap();
        assert!(header.starts_with(&crate::diagnostics::REPORT_COLUMNS.join(",")));
    }
}
