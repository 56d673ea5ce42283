//! Property tests against independent brute-force evaluations.

use proptest::prelude::*;

use scanrate::blockstats::{batch_value, trajectory, Statistic};
use scanrate::regress::{fit_lad_intercept, fit_ols_intercept, LogLogSample};
use scanrate::scan::{count_scans_containing, enumerate_scans, BlockWindow, ScanPath, Shrink};

fn scan_strategy(max_n: usize) -> impl Strategy<Value = ScanPath> {
    (2..=max_n).prop_flat_map(|n| {
        prop::collection::vec(prop::bool::ANY, n - 1).prop_map(move |bits| {
            let shrinks = bits
                .into_iter()
                .map(|b| if b { Shrink::Left } else { Shrink::Right })
                .collect();
            ScanPath::from_shrinks(n, shrinks).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn blocks_are_nested_and_end_full(scan in scan_strategy(60)) {
        let n = scan.n();
        let mut prev = scan.block_of_size(1).unwrap();
        for k in 2..=n {
            let w = scan.block_of_size(k).unwrap();
            prop_assert!(w.contains(&prev));
            prev = w;
        }
        prop_assert_eq!(prev.start, 1);
        prop_assert_eq!(scan.start(), scan.block_of_size(1).unwrap().start);
    }

    #[test]
    fn text_form_round_trips(scan in scan_strategy(40)) {
        let text = scan.to_string();
        prop_assert_eq!(text.parse::<ScanPath>().unwrap(), scan);
    }

    #[test]
    fn max_and_range_track_brute_force(
        x in prop::collection::vec(-1e3f64..1e3, 2..80),
        bits in prop::collection::vec(prop::bool::ANY, 79),
    ) {
        let n = x.len();
        let shrinks = bits[..n - 1].iter().map(|&b| if b { Shrink::Left } else { Shrink::Right }).collect();
        let scan = ScanPath::from_shrinks(n, shrinks).unwrap();
        for stat in [Statistic::Max, Statistic::Min, Statistic::Range] {
            let t = trajectory(&x, &scan, stat).unwrap();
            for k in 1..=n {
                let block = scan.block_of_size(k).unwrap().slice(&x);
                let hi = block.iter().cloned().fold(f64::MIN, f64::max);
                let lo = block.iter().cloned().fold(f64::MAX, f64::min);
                let want = match stat { Statistic::Max => hi, Statistic::Min => lo, _ => hi - lo };
                prop_assert_eq!(t.at(k), want);
                prop_assert_eq!(batch_value(block, stat).unwrap(), want);
            }
        }
    }

    #[test]
    fn ols_residuals_are_orthogonal(ys in prop::collection::vec(-5.0f64..5.0, 3..60)) {
        let ks: Vec<usize> = (1..=ys.len()).map(|k| 3 * k).collect();
        let f = fit_ols_intercept(&LogLogSample::from_points(&ks, &ys).unwrap()).unwrap();
        let a = f.intercept.unwrap();
        let (mut s0, mut s1) = (0.0, 0.0);
        for (&k, &y) in ks.iter().zip(&ys) {
            let r = y - a - f.slope * (k as f64).ln();
            s0 += r;
            s1 += r * (k as f64).ln();
        }
        prop_assert!(s0.abs() < 1e-9 && s1.abs() < 1e-9);
    }

    #[test]
    fn lad_beats_every_pair_line(ys in prop::collection::vec(-5.0f64..5.0, 2..25)) {
        let ks: Vec<usize> = (1..=ys.len()).collect();
        let x: Vec<f64> = ks.iter().map(|&k| (k as f64).ln()).collect();
        let f = fit_lad_intercept(&LogLogSample::from_points(&ks, &ys).unwrap()).unwrap();
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                let g = (ys[j] - ys[i]) / (x[j] - x[i]);
                let a = ys[i] - g * x[i];
                let obj: f64 = x.iter().zip(&ys).map(|(xi, yi)| (yi - a - g * xi).abs()).sum();
                prop_assert!(f.residual_sum <= obj + 1e-10);
            }
        }
    }
}

#[test]
fn containment_count_matches_enumeration() {
    for n in 1..=10 {
        let scans = enumerate_scans(n).unwrap();
        for k in 1..=n {
            for i in 1..=n - k + 1 {
                let w = BlockWindow::new(i, k, n).unwrap();
                let tally = scans
                    .iter()
                    .filter(|s| s.block_of_size(k).unwrap() == w)
                    .count() as u128;
                assert_eq!(tally, count_scans_containing(n, w).unwrap());
            }
        }
    }
}
