mod common;

use common::*;
use powerpost::harness::stats::{is_non_increasing, is_non_increasing_with_ties, median};
use powerpost::harness::{run_sweep, SweepOutcome};
use powerpost::model::{sample_data, LogisticProcess, LogisticRegression, NormalPrior};

fn column(
    outcome: &SweepOutcome,
    alpha: f64,
    f: impl Fn(&powerpost::harness::GroupSummary) -> f64,
) -> Vec<f64> {
    outcome
        .summary
        .groups
        .iter()
        .filter(|g| g.alpha == alpha)
        .map(f)
        .collect()
}

#[test]
fn sweep_output_is_byte_identical_across_runs_and_thread_counts() {
    let cfg = config(GAUSSIAN_MODEL, T5_DATA, &[50, 200], &[0.5, 1.0], (1, 6));
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_sweep(&cfg).unwrap().write(a.path()).unwrap();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap();
    pool.install(|| run_sweep(&cfg).unwrap().write(b.path()).unwrap());
    for file in ["diagnostics.csv", "theorem2.csv", "summary.json"] {
        let x = std::fs::read(a.path().join(file)).unwrap();
        let y = std::fs::read(b.path().join(file)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{file} differs");
    }
}

#[test]
fn posterior_mean_gap_shrinks_for_every_builtin_pair() {
    let ns = [50, 200, 800, 3200];
    let odd = [51, 201, 801, 3201];
    let alphas = [0.25, 0.5, 1.0];
    let pairs: [(&str, &str, &[usize], &str); 5] = [
        (GAUSSIAN_MODEL, GAUSSIAN_DATA, &ns, "gaussian/gaussian"),
        (GAUSSIAN_MODEL, LAPLACE_DATA, &ns, "gaussian/laplace"),
        (GAUSSIAN_MODEL, T5_DATA, &ns, "gaussian/t5"),
        (LOGISTIC_MODEL, LOGISTIC_DATA, &ns, "logistic/logistic"),
        // Even n leaves the Laplace-location MLE non-unique.
        (LAPLACE_MODEL, LAPLACE_DATA, &odd, "laplace/laplace"),
    ];
    for (model, process, ns, label) in pairs {
        let out = run_sweep(&config(model, process, ns, &alphas, (1, 30))).unwrap();
        assert_eq!(out.summary.failed_cells, 0, "{label}");
        for &alpha in &alphas {
            let gaps = column(&out, alpha, |g| g.median_gap_norm);
            let last = *gaps.last().unwrap();
            if model == LAPLACE_MODEL {
                // Non-smooth likelihood: the median is noisy between neighbours.
                assert!(
                    is_non_increasing_with_ties(&gaps, 1, 0.1),
                    "{label} alpha {alpha}: {gaps:?}"
                );
            } else {
                assert!(is_non_increasing(&gaps), "{label} alpha {alpha}: {gaps:?}");
            }
            if model == LOGISTIC_MODEL {
                // Skewness bias of the posterior mean is of order 1 / (alpha sqrt(n)).
                assert!(alpha * last < 0.1, "{label} alpha {alpha}: {gaps:?}");
            } else {
                assert!(last < 0.1, "{label} alpha {alpha}: {gaps:?}");
            }
        }
    }
}

#[test]
fn scaled_error_limit_does_not_depend_on_alpha() {
    for process in [LAPLACE_DATA, T5_DATA] {
        let out = run_sweep(&config(
            GAUSSIAN_MODEL,
            process,
            &[2000],
            &[0.25, 1.0],
            (100, 200),
        ))
        .unwrap();
        let errors = |alpha: f64| -> Vec<f64> {
            out.theorem2
                .iter()
                .filter(|r| r.alpha == alpha)
                .map(|r| r.scaled_error[0])
                .collect()
        };
        let (a, b) = (errors(0.25), errors(1.0));
        let stats = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
            (m, var)
        };
        let ((ma, va), (mb, vb)) = (stats(&a), stats(&b));
        let se = (va / a.len() as f64 + vb / b.len() as f64).sqrt();
        assert!((ma - mb).abs() < 2.0 * se, "means {ma} {mb} se {se}");
        let ratio = va / vb;
        assert!((0.8..=1.25).contains(&ratio), "covariance ratio {ratio}");
    }
}

#[test]
fn posterior_spread_scales_inversely_with_alpha() {
    let tau = 10.0;
    let model = LogisticRegression::new();
    let prior = NormalPrior::centered(1, tau);
    for seed in 1..=5 {
        let data = sample_data::<f64>(&LogisticProcess::new(1.0), 2000, seed).unwrap();
        let precision = |alpha| {
            1.0 / grid_posterior(&model, &prior, &data, alpha).1.covariance()[(0, 0)]
                - 1.0 / (tau * tau)
        };
        let ratio = precision(1.0) / precision(0.5);
        assert!((ratio - 2.0).abs() < 0.1, "seed {seed}: {ratio}");
    }
    let out = run_sweep(&config(
        GAUSSIAN_MODEL,
        LAPLACE_DATA,
        &[2000],
        &[0.5, 1.0],
        (1, 5),
    ))
    .unwrap();
    let v = |alpha| out.group(2000, alpha).unwrap().median_posterior_variance[0];
    let (a, b) = (1.0 / v(0.5) - 0.01, 1.0 / v(1.0) - 0.01);
    assert!((b / a - 2.0).abs() < 1e-6);
}

#[test]
fn moment_distance_and_tv_shrink_on_misspecified_pair() {
    let out = run_sweep(&config(
        GAUSSIAN_MODEL,
        LAPLACE_DATA,
        &[50, 200, 800, 3200],
        &[0.5, 1.0],
        (1, 20),
    ))
    .unwrap();
    for alpha in [0.5, 1.0] {
        for k in [1u32, 2] {
            let z0 = column(&out, alpha, |g| g.median_z0[&k]);
            assert!(is_non_increasing(&z0), "k {k}: {z0:?}");
        }
        let tv = column(&out, alpha, |g| g.median_tv);
        assert!(is_non_increasing(&tv) && tv[3] < 0.05, "{tv:?}");
    }
}

#[test]
fn failed_cells_are_reported_not_fatal() {
    // Even sample sizes leave the Laplace-location MLE non-unique.
    let out = run_sweep(&config(
        LAPLACE_MODEL,
        LAPLACE_DATA,
        &[51, 100],
        &[1.0],
        (1, 4),
    ))
    .unwrap();
    assert_eq!(out.summary.total_cells, 8);
    assert_eq!(out.summary.failed_cells, 4);
    assert!(out
        .summary
        .failures
        .iter()
        .all(|f| f.n == 100 && !f.reason.is_empty()));
    assert!(out.too_many_failures());
    assert_eq!(out.reports.len(), 4 * 2);
    assert!(median(
        &out.theorem2
            .iter()
            .map(|r| r.gap_norm())
            .collect::<Vec<_>>()
    )
    .is_some());
}
