//! Monte-Carlo properties of the harness.

use momentgate::config::ExperimentConfig;
use momentgate::montecarlo::{propagation_check, run, McReport, McRow};

fn report(text: &str) -> McReport {
    run(&ExperimentConfig::from_toml(text).unwrap()).unwrap()
}

fn combined_se(a: &McRow, b: &McRow) -> f64 {
    a.summary.se_mean.hypot(b.summary.se_mean)
}

#[test]
fn white_noise_series_reproduce_iid_cells() {
    let body = "models = [\"lognormal\"]\nn = [4096]\nk_theta = [10]\nk_rho = [100]\nreps = 200\nseed = 21\n";
    let iid = report(&format!("[experiment]\nkind = \"iid\"\n{body}"));
    let corr = report(&format!("[experiment]\nkind = \"corr\"\n{body}[corr]\ntau = [0]\n"));
    for est in ["theta", "rho", "qc"] {
        let a = iid.rows_for(est).next().unwrap();
        let b = corr.rows_for(est).next().unwrap();
        assert_eq!(a.target, b.target);
        let gap = (a.summary.mean - b.summary.mean).abs();
        assert!(gap < 2.0 * combined_se(a, b), "{est}: {gap} vs {}", combined_se(a, b));
    }
    // With tau = 0 the corrected estimators see the raw top values.
    let plain = corr.rows_for("qc").next().unwrap();
    let sieved = corr.rows_for("qc_corr").next().unwrap();
    assert_eq!(plain.summary, sieved.summary);
}

fn rescaling_report() -> McReport {
    report(
        "[experiment]\nkind = \"corr\"\nmodels = [\"lognormal\"]\nn = [65536]\nk_theta = [1]\nk_rho = [100]\nreps = 200\nseed = 12\n\
         [corr]\ntau = [0, 10, 50, 100]\n",
    )
}

#[test]
fn rescaled_largest_value_tracks_theta_at_effective_size() {
    let rep = rescaling_report();
    let mut off = Vec::new();
    for r in rep.rows_for("theta_rescaled").filter(|r| r.key.tau != Some(0.0)) {
        let s = r.summary;
        if s.bias.abs() >= 3.0 * s.se_mean {
            off.push(format!("tau={:?}: bias {:.4} = {:.1} se", r.key.tau, s.bias, s.bias / s.se_mean));
        }
    }
    assert!(off.is_empty(), "{}", off.join("; "));
}

#[test]
fn rescaled_largest_value_matches_independent_case() {
    // The k = 1 estimator is biased even without dependence; rescaling by n*
    // should reproduce that independent-case bias at every tau.
    let rep = rescaling_report();
    let rows: Vec<&McRow> = rep.rows_for("theta_rescaled").collect();
    let base = rows.iter().find(|r| r.key.tau == Some(0.0)).unwrap();
    for r in &rows {
        let gap = (r.summary.bias - base.summary.bias).abs();
        assert!(gap < 3.0 * combined_se(r, base), "tau={:?}: gap {gap}", r.key.tau);
    }
    let plain = rep.rows_for("theta").find(|r| r.key.tau == Some(100.0)).unwrap();
    assert!(plain.summary.bias > 10.0 * plain.summary.se_mean);
}

#[test]
fn theta_and_rho_estimates_covary_positively() {
    let rep = report(
        "[experiment]\nkind = \"iid\"\nmodels = [\"logweibull:rho=2\"]\nn = [1000]\nreps = 500\nseed = 9\n",
    );
    let qc = rep.rows_for("qc").next().unwrap();
    assert!(qc.cov_theta_rho > 0.0, "{}", qc.cov_theta_rho);
    let t = propagation_check(&rep);
    let corr = t.column("corr_theta_rho").unwrap();
    match t.rows[0][corr] {
        momentgate::format::Cell::Num(v) => assert!(v > 0.0 && v < 1.0),
        ref other => panic!("{other:?}"),
    }
}

#[test]
fn rho_mse_decreases_with_k_rho_for_log_weibull() {
    let rep = report(
        "[experiment]\nkind = \"iid\"\nmodels = [\"logweibull:rho=2\"]\nn = [1000]\nk_theta = [\"default\"]\n\
         k_rho = [10, 20, 50, 100, 200]\nreps = 500\nseed = 6\n",
    );
    let mse: Vec<f64> = rep.rows_for("rho").map(|r| r.summary.mse).collect();
    assert_eq!(mse.len(), 5);
    assert!(mse.windows(2).all(|w| w[1] <= w[0]), "{mse:?}");
}

#[test]
fn every_row_satisfies_the_mse_identity() {
    let rep = report(
        "[experiment]\nkind = \"iid\"\nmodels = [\"slep:rho=1.5\", \"lognormal\"]\nn = [300, 3000]\nk_theta = [1, 5]\n\
         k_rho = [20]\nreps = 60\nseed = 2\n",
    );
    assert_eq!(rep.rows.len(), 2 * 2 * 2 * 3);
    for r in &rep.rows {
        let s = r.summary;
        assert!((s.mse - (s.bias * s.bias + s.variance)).abs() <= 1e-12 * s.mse);
        assert!((s.relative_mse - s.mse / (r.target * r.target)).abs() <= 1e-15 * s.relative_mse.abs());
    }
}
