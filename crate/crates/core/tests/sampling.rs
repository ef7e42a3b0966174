use momentgate_core::quadrature::integrate;
use momentgate_core::stats::{ks_critical_1pct, ks_statistic, mean, variance};
use momentgate_core::tail_models::sample_iid;
use momentgate_core::theory::y_dagger;
use momentgate_core::{Tail, TailModel};

fn models() -> Vec<TailModel> {
    vec![
        TailModel::log_weibull(2.0).unwrap(),
        TailModel::log_weibull(1.3).unwrap(),
        TailModel::strict(1.5).unwrap(),
        TailModel::strict(3.0).unwrap(),
        TailModel::log_normal(),
    ]
}

#[test]
fn marginal_passes_ks() {
    for (i, m) in models().iter().enumerate() {
        let s = sample_iid(m, 10_000, 1000 + i as u64).unwrap();
        let d = ks_statistic(&s.values, |y| m.cdf(y).unwrap());
        assert!(d < ks_critical_1pct(10_000), "{m}: D = {d}");
    }
}

#[test]
fn h_of_sample_is_standard_exponential() {
    for (i, m) in models().iter().enumerate() {
        let s = sample_iid(m, 10_000, 7 + i as u64).unwrap();
        let h: Vec<f64> = s.values.iter().map(|&y| m.h(y).unwrap()).collect();
        assert!((mean(&h) - 1.0).abs() < 0.05, "{m}");

        let n = 100_000;
        let s = sample_iid(m, n, 70 + i as u64).unwrap();
        let h: Vec<f64> = s.values.iter().map(|&y| m.h(y).unwrap()).collect();
        // Exp(1): sd of the mean is 1/sqrt(n), of the variance sqrt(8/n).
        let nf = n as f64;
        assert!((mean(&h) - 1.0).abs() < 5.0 / nf.sqrt(), "{m}");
        assert!((variance(&h) - 1.0).abs() < 5.0 * (8.0 / nf).sqrt(), "{m}");
    }
}

#[test]
fn lognormal_sample_mean_matches_quadrature() {
    let m = TailModel::log_normal();
    let pdf = |y: f64| m.h_prime(y).unwrap() * (-m.h(y).unwrap()).exp();
    // Halves integrated separately: a relative tolerance cannot target zero.
    let upper = integrate(|y| y * pdf(y), 0.0, 40.0, 1e-12).unwrap();
    let lower = integrate(|y| y * pdf(-y), 0.0, 40.0, 1e-12).unwrap();
    let mu = upper - lower;
    let var = integrate(|y| (y - mu) * (y - mu) * pdf(y), -40.0, 40.0, 1e-12).unwrap();
    let n = 100_000;
    let s = sample_iid(&m, n, 5).unwrap();
    assert!((mean(&s.values) - mu).abs() < 3.0 * (var / n as f64).sqrt());
}

#[test]
fn sampling_is_reproducible() {
    let m = TailModel::strict(2.5).unwrap();
    assert_eq!(sample_iid(&m, 100, 9).unwrap(), sample_iid(&m, 100, 9).unwrap());
    assert_ne!(sample_iid(&m, 100, 9).unwrap().values, sample_iid(&m, 100, 10).unwrap().values);
}

#[test]
fn local_exponent_at_frontier_approaches_rho() {
    for m in [TailModel::log_normal(), TailModel::strict(1.5).unwrap(), TailModel::strict(4.0).unwrap()] {
        let r: Vec<f64> = [1e2, 1e4, 1e8]
            .iter()
            .map(|&n| m.rho_local(y_dagger(&m, n).unwrap()).unwrap())
            .collect();
        let rho = m.rho();
        assert!((r[2] - rho).abs() < (r[1] - rho).abs() && (r[1] - rho).abs() < (r[0] - rho).abs(), "{m}: {r:?}");
    }
    let m = TailModel::log_normal();
    let r: Vec<f64> = [1e2, 1e4, 1e8].iter().map(|&n| m.rho_local(y_dagger(&m, n).unwrap()).unwrap()).collect();
    assert!(r[0] < r[1] && r[1] < r[2] && r[2] < 2.0);
}
