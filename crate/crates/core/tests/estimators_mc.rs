use momentgate_core::estimators::{default_k_rho, default_k_theta, order_stats, qc_hat, rho_hat, theta_hat};
use momentgate_core::rng::derive_seed;
use momentgate_core::stats::mean;
use momentgate_core::tail_models::sample_iid;
use momentgate_core::theory::critical_curve;
use momentgate_core::TailModel;

const REPS: u64 = 500;
const N: usize = 1000;

fn samples(rho: f64, seed: u64) -> Vec<Vec<f64>> {
    let m = TailModel::log_weibull(rho).unwrap();
    (0..REPS).map(|r| sample_iid(&m, N, derive_seed(seed, &[r])).unwrap().values).collect()
}

#[test]
fn second_order_statistic_reduces_theta_bias() {
    let m = TailModel::log_weibull(2.0).unwrap();
    let target = critical_curve(&m, N as f64).unwrap().theta;
    let data = samples(2.0, 1);
    let bias = |k: usize| {
        let est: Vec<f64> = data.iter().map(|v| theta_hat(&order_stats(v, k).unwrap(), k).unwrap()).collect();
        mean(&est) / target - 1.0
    };
    let (b1, b2) = (bias(1), bias(2));
    assert!(b2.abs() < b1.abs(), "k=1: {b1}, k=2: {b2}");
}

#[test]
fn tail_regression_is_nearly_unbiased_for_log_weibull() {
    let data = samples(2.0, 2);
    let est: Vec<f64> = data.iter().map(|v| rho_hat(&order_stats(v, 100).unwrap(), 100).unwrap()).collect();
    let rel = mean(&est) / 2.0 - 1.0;
    assert!(rel.abs() < 0.05, "relative bias {rel}");
}

#[test]
fn qc_relative_mse_in_expected_band() {
    let m = TailModel::log_weibull(2.0).unwrap();
    let target = critical_curve(&m, N as f64).unwrap().qc_approx;
    let (kt, kr) = (default_k_theta(N as f64), default_k_rho(N as f64));
    let data = samples(2.0, 3);
    let rel_sq: Vec<f64> = data
        .iter()
        .map(|v| {
            let e = qc_hat(v, kt, kr).unwrap();
            assert_eq!(e.qc_hat, e.theta_hat * e.rho_hat);
            (e.qc_hat / target - 1.0).powi(2)
        })
        .collect();
    let rmse = mean(&rel_sq);
    assert!((0.02..=0.35).contains(&rmse), "relative MSE {rmse}");
}
