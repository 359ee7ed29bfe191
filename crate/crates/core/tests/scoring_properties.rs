use etas_lab::catalog::parse_catalog;
use etas_lab::scoring::{crps, exp1_cdf, ks_distance, n_test, weekly_counts, EcdfCurve};
use etas_lab::{Catalog, Event};
use proptest::prelude::*;

fn brute_crps(samples: &[u64], observed: u64) -> f64 {
    let top = samples.iter().copied().max().unwrap().max(observed) + 3;
    let m = samples.len() as f64;
    (0..=top)
        .map(|k| {
            let f = samples.iter().filter(|&&s| s <= k).count() as f64 / m;
            let step = if observed <= k { 1.0 } else { 0.0 };
            (f - step) * (f - step)
        })
        .sum()
}

#[test]
fn worked_examples() {
    assert_eq!(n_test(&[1, 2, 3, 4, 5], 3).unwrap().delta2, 0.6);
    assert!((crps(&[1, 2, 3], 2).unwrap() - 2.0 / 9.0).abs() < 1e-15);
    assert_eq!(crps(&[5], 0).unwrap(), 5.0);
    let one = EcdfCurve::from_samples(vec![1.0]);
    assert!((ks_distance(&one) - exp1_cdf(1.0)).abs() < 1e-15);
}

proptest! {
    #[test]
    fn crps_matches_brute_force(samples in prop::collection::vec(0u64..30, 1..40), observed in 0u64..40) {
        let fast = crps(&samples, observed).unwrap();
        prop_assert!((fast - brute_crps(&samples, observed)).abs() <= 1e-12);
        prop_assert!(fast >= 0.0);
    }

    #[test]
    fn crps_is_translation_invariant(samples in prop::collection::vec(0u64..30, 1..40), observed in 0u64..40, shift in 0u64..100) {
        let moved: Vec<u64> = samples.iter().map(|s| s + shift).collect();
        let a = crps(&samples, observed).unwrap();
        let b = crps(&moved, observed + shift).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn number_test_quantiles_overlap_by_ties(samples in prop::collection::vec(0u64..20, 1..50), observed in 0u64..25) {
        let t = n_test(&samples, observed).unwrap();
        let ties = samples.iter().filter(|&&s| s == observed).count() as f64 / samples.len() as f64;
        prop_assert!((t.delta1 + t.delta2 - 1.0 - ties).abs() <= 1e-12);
    }

    #[test]
    fn ecdf_is_right_continuous_step(samples in prop::collection::vec(0.0f64..10.0, 1..50)) {
        let curve = EcdfCurve::from_samples(samples.clone());
        let max = samples.iter().copied().fold(f64::MIN, f64::max);
        let min = samples.iter().copied().fold(f64::MAX, f64::min);
        prop_assert_eq!(curve.eval(max), 1.0);
        prop_assert_eq!(curve.eval(min - 1e-9), 0.0);
        for &x in &samples {
            let at = curve.eval(x);
            let expected = samples.iter().filter(|&&s| s <= x).count() as f64 / samples.len() as f64;
            prop_assert_eq!(at, expected);
        }
    }

    #[test]
    fn ks_distance_is_bounded(samples in prop::collection::vec(0.0f64..10.0, 1..50)) {
        let d = ks_distance(&EcdfCurve::from_samples(samples));
        prop_assert!((0.0..=1.0).contains(&d));
    }

    #[test]
    fn weekly_counts_partition_the_window(times in prop::collection::vec(0.0f64..100.0, 0..60), start in 0.0f64..20.0, n in 1usize..12) {
        let events: Vec<Event> = times.iter().map(|&t| Event::new(t, 3.0)).collect();
        let cat = Catalog::new(events, 0.0, 100.0, 2.5).unwrap();
        let counts = weekly_counts(&cat, start, n, 7.0);
        let end = start + n as f64 * 7.0;
        let inside = times.iter().filter(|&&t| t >= start && t < end).count() as u64;
        prop_assert_eq!(counts.len(), n);
        prop_assert_eq!(counts.iter().sum::<u64>(), inside);
    }

    #[test]
    fn catalogue_csv_round_trips(events in prop::collection::vec((0.0f64..100.0, 2.5f64..8.0), 0..40)) {
        let events: Vec<Event> = events.into_iter().map(|(t, m)| Event::new(t, m)).collect();
        let cat = Catalog::new(events, 0.0, 100.0, 2.5).unwrap();
        let back = parse_catalog(&cat.to_csv(), 2.5, 0.0, 100.0).unwrap();
        prop_assert_eq!(back, cat);
    }
}
