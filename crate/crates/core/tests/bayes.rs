mod common;

use bandtaper::bayes::{
    iw_posterior, iw_sample, posterior_mean, ppp, ppp_means, wishart_sample, IwParams, Post, PostProcess, PosteriorDraws,
};
use bandtaper::estimators::{sample_covariance, tapering_estimator};
use bandtaper::linalg::{spd_inverse, spectral_norm, CovMatrix};
use bandtaper::operators::{BlockwiseParams, TaperParams};
use bandtaper::rng::{domain, substream};
use bandtaper::simulation::sample_gaussian;
use bandtaper::{with_threads, Estimator, Partition};

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

#[test]
fn wishart_mean_is_df_times_scale() {
    let scale = CovMatrix::identity(2);
    let draws: Vec<CovMatrix> =
        (0..20000).map(|d| wishart_sample(&scale, 50.0, &mut substream(3, domain::WISHART, d)).unwrap()).collect();
    for i in 0..2 {
        for j in 0..2 {
            let xs: Vec<f64> = draws.iter().map(|w| w.get(i, j)).collect();
            let (m, se) = mean_and_se(&xs);
            let target = if i == j { 50.0 } else { 0.0 };
            assert!((m - target).abs() < 3.0 * se, "entry ({i},{j}): {m} vs {target} (se {se})");
        }
    }
}

#[test]
fn scalar_wishart_has_chi_square_moments() {
    // W ~ s·χ²_df: mean df·s, variance 2·df·s²
    let (s, df) = (1.7, 7.5);
    let scale = CovMatrix::from_diagonal(&[s]);
    let xs: Vec<f64> =
        (0..40000).map(|d| wishart_sample(&scale, df, &mut substream(4, domain::WISHART, d)).unwrap().get(0, 0)).collect();
    let (m, se) = mean_and_se(&xs);
    assert!((m - df * s).abs() < 3.0 * se);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0);
    let target = 2.0 * df * s * s;
    // variance of the sample variance uses the fourth cumulant 48·df·s⁴
    let var_se = ((48.0 * df * s.powi(4) + 2.0 * target * target) / xs.len() as f64).sqrt();
    assert!((var - target).abs() < 3.0 * var_se, "{var} vs {target}");
}

#[test]
fn scalar_inverse_wishart_precision_mean() {
    // Σ⁻¹ ~ Gamma with mean (ν − 2)/s
    let (s, nu) = (2.5, 9.0);
    let params = IwParams::new(CovMatrix::from_diagonal(&[s]), nu).unwrap();
    let xs: Vec<f64> =
        (0..20000).map(|d| 1.0 / iw_sample(&params, &mut substream(5, domain::POSTERIOR, d)).unwrap().get(0, 0)).collect();
    let (m, se) = mean_and_se(&xs);
    assert!((m - (nu - 2.0) / s).abs() < 3.0 * se, "{m} vs {}", (nu - 2.0) / s);
}

#[test]
fn inverse_wishart_mean_matches_scale() {
    // E Σ = B / (ν − 2p − 2)
    let b = CovMatrix::from_rows(&[vec![2.0, 0.6, 0.1], vec![0.6, 1.0, 0.3], vec![0.1, 0.3, 1.5]]).unwrap();
    let nu = 16.0;
    let params = IwParams::new(b.clone(), nu).unwrap();
    let draws: Vec<CovMatrix> = (0..20000).map(|d| iw_sample(&params, &mut substream(6, domain::POSTERIOR, d)).unwrap()).collect();
    for i in 0..3 {
        for j in 0..3 {
            let xs: Vec<f64> = draws.iter().map(|w| w.get(i, j)).collect();
            let (m, se) = mean_and_se(&xs);
            let target = b.get(i, j) / (nu - 8.0);
            assert!((m - target).abs() < 3.5 * se, "({i},{j}) {m} vs {target}");
        }
    }
}

#[test]
fn scaled_inverse_wishart_matches_in_location() {
    let b = CovMatrix::from_rows(&[vec![1.0, 0.4], vec![0.4, 2.0]]).unwrap();
    let c = 7.0;
    let plain = IwParams::new(b.clone(), 9.0).unwrap();
    let scaled = IwParams::new(b.scaled(c), 9.0).unwrap();
    let n = 20000;
    for (i, j) in [(0, 0), (0, 1), (1, 1)] {
        let a: Vec<f64> = (0..n).map(|d| iw_sample(&plain, &mut substream(7, domain::POSTERIOR, d)).unwrap().get(i, j)).collect();
        let s: Vec<f64> =
            (0..n).map(|d| iw_sample(&scaled, &mut substream(8, domain::POSTERIOR, d)).unwrap().get(i, j) / c).collect();
        let ((ma, sa), (ms, ss)) = (mean_and_se(&a), mean_and_se(&s));
        assert!((ma - ms).abs() < 4.0 * (sa * sa + ss * ss).sqrt(), "({i},{j}) {ma} vs {ms}");
    }
}

#[test]
fn posterior_update_matches_scatter() {
    let z = sample_gaussian(&CovMatrix::identity(3), 25, 9).unwrap();
    let prior = IwParams::default_prior(3);
    let post = iw_posterior(&prior, &z).unwrap();
    let expect = prior.scale().add(&sample_covariance(&z).unwrap().scaled(25.0)).unwrap();
    assert!(post.scale().max_abs_diff(&expect) < 1e-12);
    assert_eq!(post.df(), 9.0 + 25.0);
}

fn posterior_for(p: usize, n: usize, seed: u64) -> IwParams {
    let sigma = CovMatrix::from_fn(p, |i, j| 0.5f64.powi((j - i) as i32));
    let z = sample_gaussian(&sigma, n, seed).unwrap();
    iw_posterior(&IwParams::default_prior(p), &z).unwrap()
}

#[test]
fn shared_draw_means_equal_individual_means() {
    let params = posterior_for(12, 40, 1);
    let part = Partition::new(12, 9).unwrap();
    let taper = Post { estimator: Estimator::Tapering(TaperParams::new(3, 0.5).unwrap()), partition: part };
    let block = Post { estimator: Estimator::Blockwise(BlockwiseParams::new(2, 5.0, 0.5).unwrap()), partition: part };
    let band = Post { estimator: Estimator::Banding { k: 2, epsilon: 0.5 }, partition: part };
    let posts: [&dyn PostProcess; 3] = [&taper, &block, &band];
    let shared = ppp_means(&params, &posts, 37, 5).unwrap();
    for (post, mean) in posts.iter().zip(&shared) {
        let alone = posterior_mean(&ppp(&params, *post, 37, 5).unwrap()).unwrap();
        assert_eq!(&alone, mean);
    }
}

#[test]
fn draws_do_not_depend_on_thread_count() {
    let params = posterior_for(8, 30, 2);
    let post = Post { estimator: Estimator::Tapering(TaperParams::new(2, 0.5).unwrap()), partition: Partition::new(8, 6).unwrap() };
    let one = with_threads(1, || ppp(&params, &post, 50, 11).unwrap()).unwrap();
    let four = with_threads(4, || ppp(&params, &post, 50, 11).unwrap()).unwrap();
    assert_eq!(one, four);
    let means1 = with_threads(1, || ppp_means(&params, &[&post], 50, 11).unwrap()).unwrap();
    let means3 = with_threads(3, || ppp_means(&params, &[&post], 50, 11).unwrap()).unwrap();
    assert_eq!(means1, means3);
}

#[test]
fn posterior_mean_is_order_invariant() {
    let params = posterior_for(6, 20, 3);
    let post = Post { estimator: Estimator::SampleCovariance, partition: Partition::new(6, 4).unwrap() };
    let d = ppp(&params, &post, 40, 1).unwrap();
    let mut rev = d.clone();
    rev.draws.reverse();
    let a = posterior_mean(&d).unwrap();
    let b = posterior_mean(&rev).unwrap();
    assert!(a.max_abs_diff(&b) < 1e-13);
}

#[test]
fn tapering_posterior_concentrates_on_frequentist_estimate() {
    let p = 10;
    let sigma = CovMatrix::from_fn(p, |i, j| 0.6f64.powi((j - i) as i32));
    let z = sample_gaussian(&sigma, 2000, 21).unwrap();
    let part = Partition::new(p, 8).unwrap();
    let params = TaperParams::new(4, 0.5).unwrap();
    let post = Post { estimator: Estimator::Tapering(params), partition: part };
    let mean = posterior_mean(&ppp(&iw_posterior(&IwParams::default_prior(p), &z).unwrap(), &post, 1000, 4).unwrap()).unwrap();
    let freq = tapering_estimator(&sample_covariance(&z).unwrap(), params, part).unwrap();
    assert!(spectral_norm(&mean.sub(&freq).unwrap()).unwrap() < 0.05);
}

#[test]
fn iw_draw_inverse_round_trip() {
    let params = posterior_for(5, 15, 4);
    let s = iw_sample(&params, &mut substream(1, domain::POSTERIOR, 0)).unwrap();
    let back = spd_inverse(&spd_inverse(&s).unwrap()).unwrap();
    assert!(back.max_abs_diff(&s) < 1e-9);
    let empty = PosteriorDraws { draws: vec![], seed: 0 };
    assert!(posterior_mean(&empty).is_err());
}
