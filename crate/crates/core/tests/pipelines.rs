use approx::assert_relative_eq;
use rand::Rng;

use scanrate::blockstats::{trajectory, Form, Statistic, Trajectory};
use scanrate::estimate::{
    combined_median_estimate, estimate, estimate_scanned, estimate_uncentered_single, mean, median,
    diverging_transform, Aggregation, EstimatorSpec, ScanPolicy,
};
use scanrate::ratemap::RateMap;
use scanrate::regress::{build_loglog_sample, fit_ols_intercept, Method};
use scanrate::scan::direct_scan;
use scanrate::simulate::{generate, InnovationSpec, ModelSpec};
use scanrate::stream;

fn cauchy(n: usize, seed: u64) -> Vec<f64> {
    generate(&ModelSpec::iid(InnovationSpec::Cauchy, n), &mut stream::derive(seed, "it", 0)).unwrap()
}

#[test]
fn aggregate_equals_mean_or_median_of_per_scan_values() {
    let x = cauchy(600, 1);
    for (agg, f) in [(Aggregation::Mean, mean as fn(&[f64]) -> f64), (Aggregation::Median, median)] {
        for n_scans in [1, 7, 20] {
            let spec = EstimatorSpec::new(Statistic::MeanSquares).scanned(n_scans, 5, agg);
            let rep = estimate_scanned(&x, &spec).unwrap();
            assert_eq!(rep.estimate, f(&rep.values()));
            assert!(rep.values().iter().all(|v| (0.0..=2.0).contains(v)));
        }
    }
}

#[test]
fn direct_policy_degenerates_to_single_estimate() {
    let x = cauchy(300, 2);
    let single = estimate_uncentered_single(&x, &EstimatorSpec::new(Statistic::SumSquares)).unwrap();
    for agg in [Aggregation::Mean, Aggregation::Median] {
        let spec = EstimatorSpec::new(Statistic::SumSquares)
            .with_scans(ScanPolicy::Direct)
            .with_aggregation(agg);
        assert_eq!(estimate(&x, &spec).unwrap().estimate, single.estimate);
    }
}

#[test]
fn scan_sets_are_nested_across_counts() {
    let small = ScanPolicy::Uniform { count: 5, seed: 3 }.scans(40).unwrap();
    let large = ScanPolicy::Uniform { count: 50, seed: 3 }.scans(40).unwrap();
    assert_eq!(small[..], large[..5]);
}

#[test]
fn origin_fit_is_not_scale_invariant() {
    let x = cauchy(400, 4);
    let spec = EstimatorSpec::new(Statistic::SumSquares)
        .with_method(Method::OlsOrigin)
        .with_map(RateMap::tail_moment(2, Form::Sum).with_clip(None));
    let y: Vec<f64> = x.iter().map(|v| 50.0 * v).collect();
    let (a, b) = (estimate(&x, &spec).unwrap().estimate, estimate(&y, &spec).unwrap().estimate);
    assert!((a - b).abs() > 1e-6, "{a} {b}");
}

#[test]
fn intercept_pipeline_is_scale_invariant_for_every_homogeneous_statistic() {
    let x = cauchy(400, 5);
    let y: Vec<f64> = x.iter().map(|v| 0.003 * v).collect();
    for stat in [
        Statistic::SumSquares,
        Statistic::MeanSquares,
        Statistic::abs_moment(3, Form::Sum),
        Statistic::abs_moment(1, Form::Average),
        Statistic::Max,
        Statistic::Range,
    ] {
        let spec = EstimatorSpec::new(stat).with_method(Method::OlsIntercept);
        let fit = |v: &[f64]| estimate(v, &spec).unwrap().per_scan[0].fit.slope;
        assert_relative_eq!(fit(&x), fit(&y), epsilon = 1e-10);
    }
}

#[test]
fn diverging_transform_shifts_slope() {
    let mut rng = stream::derive(6, "transform", 0);
    for _ in 0..20 {
        let values: Vec<f64> = (1..=300).map(|k| (k as f64).powf(-0.3) * rng.random_range(0.5..2.0)).collect();
        let t = Trajectory::injected(values).unwrap();
        let g = rng.random_range(-2.0..0.0);
        let tr = diverging_transform(&t, g).unwrap();
        let slope = |t: &Trajectory| fit_ols_intercept(&build_loglog_sample(t, 1, None).unwrap()).unwrap().slope;
        assert_relative_eq!(slope(&tr) - slope(&t), -g, epsilon = 1e-10);
    }
    let t = Trajectory::injected(vec![1.0, 0.5, 0.25]).unwrap();
    assert_eq!(diverging_transform(&t, 0.0).unwrap().values, t.values);
}

#[test]
fn combined_estimate_lies_within_per_order_range() {
    let x = cauchy(1000, 7);
    let base = EstimatorSpec::new(Statistic::MeanSquares).scanned(50, 2, Aggregation::Median);
    let c = combined_median_estimate(&x, &base, 4).unwrap();
    let v: Vec<f64> = c.per_order.iter().map(|p| p.1).collect();
    assert_eq!(v.len(), 3);
    let (lo, hi) = v.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(c.estimate >= lo && c.estimate <= hi);
    let two = combined_median_estimate(&x, &base, 2).unwrap();
    assert_eq!(two.estimate, two.per_order[0].1);
}

#[test]
fn gaussian_data_clips_to_two() {
    let x = generate(&ModelSpec::iid(InnovationSpec::Gaussian, 2000), &mut stream::derive(8, "g", 0)).unwrap();
    let spec = EstimatorSpec::new(Statistic::MeanSquares).scanned(30, 1, Aggregation::Median);
    let rep = estimate(&x, &spec).unwrap();
    assert!(rep.estimate > 1.7 && rep.estimate <= 2.0, "{}", rep.estimate);
}

#[test]
fn per_scan_trajectory_matches_report() {
    let x = cauchy(200, 9);
    let spec = EstimatorSpec::new(Statistic::SumSquares).scanned(4, 11, Aggregation::Mean);
    let rep = estimate(&x, &spec).unwrap();
    let scans = spec.scans.scans(200).unwrap();
    for (s, est) in scans.iter().zip(&rep.per_scan) {
        let t = trajectory(&x, s, Statistic::SumSquares).unwrap();
        let fit = fit_ols_intercept(&build_loglog_sample(&t, 1, None).unwrap()).unwrap();
        assert_eq!(fit.slope, est.fit.slope);
        assert_eq!(est.scan_start, s.start());
    }
    assert_eq!(direct_scan(200).unwrap().start(), 1);
}
