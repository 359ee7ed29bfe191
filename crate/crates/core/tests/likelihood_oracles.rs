use etas_lab::likelihood::{integrated_background, integrated_triggering, log_likelihood_binned, log_likelihood_exact};
use etas_lab::model::conditional_intensity;
use etas_lab::{BinningConfig, Catalog, EtasParameters, Event};
use proptest::prelude::*;

const M0: f64 = 2.5;

/// Integral of `f` over `[a, b]` on pieces that double in width from
/// `first`, so a sharp peak at `a` is resolved.
fn quad(f: impl Fn(f64) -> f64 + Copy, a: f64, b: f64, first: f64) -> f64 {
    let mut total = 0.0;
    let mut lo = a;
    let mut width = first.min(b - a);
    while lo < b {
        let hi = (lo + width).min(b);
        total += quadrature::double_exponential::integrate(f, lo, hi, 1e-14).integral;
        lo = hi;
        width *= 2.0;
    }
    total
}

#[test]
fn three_event_catalogue_matches_quadrature() {
    let params = EtasParameters::new(0.3, 0.2, 1.4, 0.03, 1.2, M0);
    let events = vec![Event::new(1.0, 4.1), Event::new(1.5, 2.9), Event::new(6.2, 3.3)];
    let cat = Catalog::new(events.clone(), 0.0, 10.0, M0).unwrap();
    let history = Catalog::empty(0.0, 10.0, M0).unwrap();

    let mut integral = params.mu * 10.0;
    for e in &events {
        let rate = |t: f64| params.kernel(t - e.time, e.magnitude);
        integral += quad(rate, e.time, 10.0, params.c);
    }
    let log_sum: f64 = events
        .iter()
        .map(|e| {
            let before = Catalog::new(
                events.iter().copied().filter(|h| h.time < e.time).collect(),
                0.0,
                10.0,
                M0,
            )
            .unwrap();
            conditional_intensity(&params, e.time, &before).ln()
        })
        .sum();
    let oracle = log_sum - integral;
    let exact = log_likelihood_exact(&params, &cat, &history).unwrap();
    assert!((exact - oracle).abs() <= 1e-8 * oracle.abs(), "{exact} vs {oracle}");
}

#[test]
fn trigger_integral_worked_values() {
    let params = EtasParameters::new(0.0, 1.0, 0.0, 1.0, 2.0, M0);
    let parent = Event::new(0.0, M0);
    let half = integrated_triggering(&params, &parent, 0.0, 1.0).unwrap();
    assert!((half - 0.5).abs() < 1e-14);
    let far = integrated_triggering(&params, &parent, 0.0, 1e6).unwrap();
    assert!((far - 1.0).abs() < 1e-5);
    let q = quad(|t| params.kernel(t, M0), 0.0, 1e6, 1.0);
    assert!((far - q).abs() < 1e-9);
}

#[test]
fn binned_drift_under_bin_halving() {
    let params = EtasParameters::new(0.2, 0.4, 1.9, 0.02, 1.12, M0);
    let fx = etas_lab::fixtures::aquila_like_fixture(3).unwrap();
    let exact = log_likelihood_exact(&params, &fx.catalog, &fx.history).unwrap();
    let mut delta = 1.0;
    for _ in 0..6 {
        let binning = BinningConfig { delta, ratio: 1.0, n_max: 12 };
        let binned = log_likelihood_binned(&params, &fx.catalog, &fx.history, &binning).unwrap();
        assert!((binned - exact).abs() <= 1e-10 * exact.abs(), "delta {delta}: {binned} vs {exact}");
        delta /= 2.0;
    }
}

fn any_params() -> impl Strategy<Value = EtasParameters> {
    (0.01f64..2.0, 0.01f64..3.0, 0.0f64..3.0, 0.001f64..2.0, 1.001f64..4.0)
        .prop_map(|(mu, k, alpha, c, p)| EtasParameters::new(mu, k, alpha, c, p, M0))
}

proptest! {
    #[test]
    fn trigger_integral_is_additive(
        params in any_params(),
        m in 2.5f64..7.0,
        a in 0.0f64..10.0,
        w1 in 1e-3f64..100.0,
        w2 in 1e-3f64..100.0,
    ) {
        let parent = Event::new(0.0, m);
        let (b, c) = (a + w1, a + w1 + w2);
        let whole = integrated_triggering(&params, &parent, a, c).unwrap();
        let parts = integrated_triggering(&params, &parent, a, b).unwrap()
            + integrated_triggering(&params, &parent, b, c).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-12 * whole);
    }

    #[test]
    fn trigger_integral_is_positive_and_bounded(params in any_params(), m in 2.5f64..7.0, b in 1e-3f64..1e4) {
        let parent = Event::new(0.0, m);
        let v = integrated_triggering(&params, &parent, 0.0, b).unwrap();
        let total = params.productivity(m) * params.c / (params.p - 1.0);
        prop_assert!(v > 0.0 && v <= total * (1.0 + 1e-12));
    }

    #[test]
    fn background_is_additive(mu in 0.0f64..10.0, a in -10.0f64..10.0, w1 in 1e-3f64..50.0, w2 in 1e-3f64..50.0) {
        let whole = integrated_background(mu, a, a + w1 + w2).unwrap();
        let parts = integrated_background(mu, a, a + w1).unwrap() + integrated_background(mu, a + w1, a + w1 + w2).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-12 * whole.max(1.0));
    }
}
