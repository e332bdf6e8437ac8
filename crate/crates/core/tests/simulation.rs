mod common;

use bandtaper::estimators::sample_covariance;
use bandtaper::linalg::{spectral_norm, sym_eigen_min, CovMatrix};
use bandtaper::simulation::{
    compare_study, log_log_slope, make_sigma0, precision_decay, risk_mc, sample_gaussian, t_value, tail_mass, RiskMethod,
    StudyConfig, TValue, TruthSpec,
};
use bandtaper::tuning::Method;
use bandtaper::with_threads;
use common::*;
use proptest::prelude::*;

#[test]
fn gaussian_sample_covariance_concentrates() {
    let z = sample_gaussian(&CovMatrix::identity(2), 50000, 3).unwrap();
    let s = sample_covariance(&z).unwrap();
    assert!(spectral_norm(&s.sub_identity()).unwrap() < 0.05);
}

trait SubIdentity {
    fn sub_identity(&self) -> bandtaper::linalg::RectMatrix;
}

impl SubIdentity for CovMatrix {
    fn sub_identity(&self) -> bandtaper::linalg::RectMatrix {
        let n = self.dim();
        self.block(0..n, 0..n).sub(&CovMatrix::identity(n).block(0..n, 0..n)).unwrap()
    }
}

#[test]
fn truth_has_pinned_minimum_eigenvalue() {
    for (p, rho, alpha) in [(12, 0.6, 0.1), (12, 0.3, 1.0), (9, 0.0, 0.5)] {
        let s = make_sigma0(&TruthSpec::new(p, rho, alpha).unwrap()).unwrap();
        assert!((lambda_min(&s.to_rows()) - 0.5).abs() < 1e-8);
        assert_eq!(s.get(0, 1), rho);
    }
    let s = make_sigma0(&TruthSpec::new(200, 0.6, 0.3).unwrap()).unwrap();
    assert!((sym_eigen_min(&s).unwrap() - 0.5).abs() < 1e-8);
}

#[test]
fn truth_belongs_to_bandable_class() {
    // Σ_{d ≥ k} 2ρ d^{−α−1} ≤ 2ρ (k^{−α−1} + k^{−α}/α)
    for alpha in [0.1, 0.3, 1.0] {
        let s = make_sigma0(&TruthSpec::new(120, 0.6, alpha).unwrap()).unwrap();
        let bound = 2.0 * 0.6 * (1.0 + 1.0 / alpha);
        for k in 1..=60 {
            assert!((k as f64).powf(alpha) * tail_mass(&s, k) <= bound);
        }
    }
}

#[test]
fn precision_decay_matches_direct_inverse_and_decreases() {
    let s = make_sigma0(&TruthSpec::new(200, 0.6, 0.3).unwrap()).unwrap();
    let w = inverse(&s.to_rows());
    let mut prev = f64::INFINITY;
    for k in [3usize, 5, 8] {
        let offset = 5.0 * k as f64 * (k as f64).ln();
        let direct = (0..200)
            .map(|j| (0..200).filter(|&i| (i as f64 - j as f64).abs() > offset).map(|i| w[i][j].abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let got = precision_decay(&s, k, 5.0).unwrap();
        assert!((got - direct).abs() < 1e-9 * direct.max(1e-300), "k={k}: {got} vs {direct}");
        assert!(got < prev);
        prev = got;
    }
}

fn small_config(reps: usize) -> StudyConfig {
    let mut cfg = StudyConfig::new(TruthSpec::new(20, 0.6, 0.1).unwrap(), 10, reps, 17);
    cfg.p0 = 16;
    cfg.ks = vec![2, 3];
    cfg.a_values = vec![5.0];
    cfg.draws = 20;
    cfg
}

#[test]
fn swapping_compared_methods_negates_differences() {
    let cfg = small_config(4);
    let mut swapped = cfg.clone();
    swapped.compare = [Method::Blockwise, Method::Tapering];
    let (a, b) = (compare_study(&cfg).unwrap(), compare_study(&swapped).unwrap());
    for (x, y) in a.compare.iter().zip(&b.compare) {
        assert!(x.d_f.iter().zip(&y.d_f).all(|(u, v)| *u == -*v));
        assert!(x.d_b.iter().zip(&y.d_b).all(|(u, v)| *u == -*v));
        match (x.t_f.unwrap(), y.t_f.unwrap()) {
            (TValue::Value(u), TValue::Value(v)) => assert!((u + v).abs() < 1e-12),
            (u, v) => assert_eq!(u, v),
        }
    }
}

#[test]
fn identical_methods_give_degenerate_t() {
    let mut cfg = small_config(3);
    cfg.compare = [Method::Tapering, Method::Tapering];
    let r = compare_study(&cfg).unwrap();
    assert!(r.compare.iter().all(|c| c.t_f == Some(TValue::Degenerate) && c.t_b == Some(TValue::Degenerate)));
}

#[test]
fn single_replication_reports_no_t_values() {
    let mut cfg = small_config(1);
    cfg.methods = vec![RiskMethod::Tuned { method: Method::Tapering }];
    let c = compare_study(&cfg).unwrap();
    assert!(c.compare.iter().all(|c| c.t_f.is_none() && c.t_b.is_none()));
    let r = risk_mc(&cfg).unwrap();
    assert_eq!(r.risk[0].mean_loss, r.risk[0].losses[0]);
}

#[test]
fn studies_do_not_depend_on_thread_count() {
    let mut cfg = small_config(4);
    cfg.methods = vec![
        RiskMethod::Tuned { method: Method::Tapering },
        RiskMethod::Tuned { method: Method::BandingPpp },
    ];
    cfg.cv_draws = 3;
    let one = with_threads(1, || (risk_mc(&cfg).unwrap(), compare_study(&cfg).unwrap())).unwrap();
    let many = with_threads(4, || (risk_mc(&cfg).unwrap(), compare_study(&cfg).unwrap())).unwrap();
    assert_eq!(serde_json::to_string(&one.0).unwrap(), serde_json::to_string(&many.0).unwrap());
    assert_eq!(serde_json::to_string(&one.1).unwrap(), serde_json::to_string(&many.1).unwrap());
}

#[test]
fn slope_recovers_power_law() {
    let ns = [50.0, 120.0, 300.0, 1000.0];
    let risk: Vec<f64> = ns.iter().map(|n: &f64| 0.7 * n.powf(-0.37)).collect();
    assert!((log_log_slope(&ns, &risk).unwrap() + 0.37).abs() < 1e-10);
}

proptest! {
    #[test]
    fn t_value_ignores_common_shifts(losses in proptest::collection::vec((0.0f64..5.0, 0.0f64..5.0), 2..30), c in -10.0f64..10.0) {
        let d: Vec<f64> = losses.iter().map(|(a, b)| a - b).collect();
        let shifted: Vec<f64> = losses.iter().map(|(a, b)| (a + c) - (b + c)).collect();
        if let (TValue::Value(x), TValue::Value(y)) = (t_value(&d).unwrap(), t_value(&shifted).unwrap()) {
            prop_assert!((x - y).abs() < 1e-6 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn t_value_is_odd_and_scale_free(d in proptest::collection::vec(-3.0f64..3.0, 2..30), c in 0.1f64..10.0) {
        let neg: Vec<f64> = d.iter().map(|x| -x).collect();
        let scaled: Vec<f64> = d.iter().map(|x| c * x).collect();
        if let TValue::Value(t) = t_value(&d).unwrap() {
            prop_assert!((t + t_value(&neg).unwrap().value().unwrap()).abs() < 1e-9 * (1.0 + t.abs()));
            prop_assert!((t - t_value(&scaled).unwrap().value().unwrap()).abs() < 1e-9 * (1.0 + t.abs()));
        }
    }
}
