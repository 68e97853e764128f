use powerpost::asymptotics::{estimate_curvature, fit_mle, fit_mle_single, MleOptions};
use powerpost::model::{
    check_prior_positivity, sample_data, GaussianLocation, LaplaceProcess, LogisticProcess,
    LogisticRegression, NormalPrior,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn logistic_mle_does_not_depend_on_start(seed in 0u64..10_000, start in -3.0f64..3.0) {
        let model = LogisticRegression::new();
        let data = sample_data::<f64>(&LogisticProcess::new(1.0), 300, seed).unwrap();
        let a = fit_mle(&model, &data, &[0.0]).unwrap();
        let b = fit_mle_single(&model, &data, &[start], &MleOptions::default()).unwrap();
        prop_assert!((a.theta_hat[0] - b.theta_hat[0]).abs() < 1e-6);
    }

    #[test]
    fn normal_prior_is_positive_near_any_centre(c in -5.0f64..5.0, tau in 0.1f64..50.0) {
        let prior = NormalPrior::centered(1, tau);
        prop_assert!(check_prior_positivity(&prior, &[c], 0.5, 21, 7).is_ok());
    }
}

#[test]
fn scaled_mle_spread_matches_sandwich_variance() {
    // Laplace(0, 1) data in the Gaussian location model: V = 1, M = 2.
    let model = GaussianLocation::new(1, 1.0);
    let n = 1000;
    let mut scaled = Vec::new();
    let mut v_tilde = 0.0;
    for seed in 0..400 {
        let data = sample_data::<f64>(&LaplaceProcess::new(0.0, 1.0), n, seed).unwrap();
        let fit = fit_mle(&model, &data, &[0.0]).unwrap();
        scaled.push((n as f64).sqrt() * fit.theta_hat[0]);
        v_tilde += estimate_curvature(&model, &data, &[0.0]).unwrap().v_tilde[(0, 0)] / 400.0;
    }
    let var = scaled.iter().map(|x| x * x).sum::<f64>() / scaled.len() as f64;
    // Relative sd of a 400-draw variance estimate is about 0.1 here.
    assert!((var / 2.0 - 1.0).abs() < 0.25, "{var}");
    assert!((v_tilde / 2.0 - 1.0).abs() < 0.05, "{v_tilde}");
}
