//! Forecast evaluation: inter-event-time diagnostics, number test and CRPS.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::catalog::{inter_event_times, Catalog};
use crate::error::{Error, Result};
use crate::util::quantile_sorted;

/// Empirical CDF of mean-normalized inter-event times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcdfCurve {
    /// Sorted normalized durations.
    pub points: Vec<f64>,
    /// eCDF value just after each point, `i / n`.
    pub probs: Vec<f64>,
}

impl EcdfCurve {
    /// Builds the eCDF of `samples` (any order).
    pub fn from_samples(mut samples: Vec<f64>) -> Self {
        samples.sort_by(f64::total_cmp);
        let n = samples.len() as f64;
        let probs = (1..=samples.len()).map(|i| i as f64 / n).collect();
        Self {
            points: samples,
            probs,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Right-continuous eCDF value at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.points.partition_point(|&p| p <= x);
        k as f64 / self.points.len() as f64
    }

    /// Two-column CSV `x,ecdf` plus the Exp(1) reference `1 − e^{−x}`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,ecdf,exp1_cdf\n");
        for (x, f) in self.points.iter().zip(&self.probs) {
            let _ = writeln!(out, "{x},{f},{}", exp1_cdf(*x));
        }
        out
    }
}

/// `1 − e^{−x}` for `x ≥ 0`.
pub fn exp1_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-x).exp_m1()
    }
}

/// eCDF of inter-event times divided by their mean.
pub fn normalized_iet_ecdf(cat: &Catalog) -> Result<EcdfCurve> {
    let gaps = inter_event_times(cat)?;
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::Domain("all events share one time; inter-event times are zero".into()));
    }
    Ok(EcdfCurve::from_samples(gaps.into_iter().map(|g| g / mean).collect()))
}

/// Kolmogorov–Smirnov distance between `curve` and a reference CDF,
/// checked on both sides of every jump.
pub fn ks_distance_to(curve: &EcdfCurve, reference: impl Fn(f64) -> f64) -> f64 {
    let n = curve.points.len() as f64;
    curve
        .points
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let g = reference(x);
            let after = (i + 1) as f64 / n;
            let before = i as f64 / n;
            (after - g).abs().max((g - before).abs())
        })
        .fold(0.0, f64::max)
}

/// KS distance to Exp(1).
pub fn ks_distance(curve: &EcdfCurve) -> f64 {
    ks_distance_to(curve, exp1_cdf)
}

/// Counts in `[start + (j−1)L, start + jL)` for `j = 1..=n_periods`.
pub fn weekly_counts(cat: &Catalog, start: f64, n_periods: usize, period_length: f64) -> Vec<u64> {
    let mut counts = vec![0u64; n_periods];
    for t in cat.times() {
        if t < start {
            continue;
        }
        let j = ((t - start) / period_length).floor();
        if j < n_periods as f64 {
            let mut j = j as usize;
            // Guard the half-open boundary against rounding in the division.
            while j > 0 && t < start + j as f64 * period_length {
                j -= 1;
            }
            while j + 1 < n_periods && t >= start + (j + 1) as f64 * period_length {
                j += 1;
            }
            if t < start + (j + 1) as f64 * period_length {
                counts[j] += 1;
            }
        }
    }
    counts
}

/// Number-test quantiles: `δ₁ = P̂(N ≥ N_obs)`, `δ₂ = P̂(N ≤ N_obs)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NTest {
    pub delta1: f64,
    pub delta2: f64,
}

pub fn n_test(samples: &[u64], observed: u64) -> Result<NTest> {
    if samples.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let m = samples.len() as f64;
    let ge = samples.iter().filter(|&&n| n >= observed).count();
    let le = samples.iter().filter(|&&n| n <= observed).count();
    Ok(NTest {
        delta1: ge as f64 / m,
        delta2: le as f64 / m,
    })
}

/// CRPS of a count ensemble against an observed count,
/// `Σ_k (F̂(k) − I(observed ≤ k))²`.
///
/// Terms vanish outside `[min(min N_j, obs), max(max N_j, obs))`, so only
/// that range is summed.
pub fn crps(samples: &[u64], observed: u64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let m = sorted.len() as f64;
    let lo = sorted[0].min(observed);
    let hi = sorted[sorted.len() - 1].max(observed);
    let mut idx = 0usize;
    let mut total = 0.0;
    for k in lo..hi {
        while idx < sorted.len() && sorted[idx] <= k {
            idx += 1;
        }
        let f = idx as f64 / m;
        let step = if observed <= k { 1.0 } else { 0.0 };
        total += (f - step) * (f - step);
    }
    Ok(total)
}

/// Replicate × period count matrix over contiguous periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastEnsemble {
    /// `n_periods + 1` increasing boundaries (days).
    pub boundaries: Vec<f64>,
    /// `counts[r][j]`: events of replicate `r` in period `j`.
    pub counts: Vec<Vec<u64>>,
}

impl ForecastEnsemble {
    pub fn new(boundaries: Vec<f64>, counts: Vec<Vec<u64>>) -> Result<Self> {
        if boundaries.len() < 2 || boundaries.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Precondition("period boundaries must be increasing".into()));
        }
        let n = boundaries.len() - 1;
        if let Some(row) = counts.iter().find(|r| r.len() != n) {
            return Err(Error::Precondition(format!(
                "replicate has {} periods, expected {n}",
                row.len()
            )));
        }
        Ok(Self { boundaries, counts })
    }

    /// Reduces catalogues to counts over `n_periods` periods of
    /// `period_length` days from `start`.
    pub fn from_catalogs<'a>(
        catalogs: impl IntoIterator<Item = &'a Catalog>,
        start: f64,
        n_periods: usize,
        period_length: f64,
    ) -> Result<Self> {
        let boundaries = period_boundaries(start, n_periods, period_length);
        let counts = catalogs
            .into_iter()
            .map(|c| weekly_counts(c, start, n_periods, period_length))
            .collect();
        Self::new(boundaries, counts)
    }

    pub fn n_periods(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn n_replicates(&self) -> usize {
        self.counts.len()
    }

    /// Counts of every replicate for period `j`.
    pub fn period(&self, j: usize) -> Vec<u64> {
        self.counts.iter().map(|r| r[j]).collect()
    }

    /// `replicate,p1,…,pN` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("replicate");
        for j in 1..=self.n_periods() {
            let _ = write!(out, ",p{j}");
        }
        out.push('\n');
        for (r, row) in self.counts.iter().enumerate() {
            let _ = write!(out, "{r}");
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn period_boundaries(start: f64, n_periods: usize, period_length: f64) -> Vec<f64> {
    (0..=n_periods).map(|j| start + j as f64 * period_length).collect()
}

/// Scores for one forecast period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodScore {
    pub period: usize,
    pub start: f64,
    pub end: f64,
    pub observed: u64,
    pub median: f64,
    pub lo95: f64,
    pub hi95: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub crps: f64,
}

impl PeriodScore {
    pub fn covered(&self) -> bool {
        self.lo95 <= self.observed as f64 && self.observed as f64 <= self.hi95
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub periods: Vec<PeriodScore>,
}

impl ScoreReport {
    /// Number of periods whose observed count lies in the central 95% band.
    pub fn coverage(&self) -> usize {
        self.periods.iter().filter(|p| p.covered()).count()
    }

    /// `period,observed,median,lo95,hi95,delta1,delta2,crps`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("period,observed,median,lo95,hi95,delta1,delta2,crps\n");
        for p in &self.periods {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                p.period, p.observed, p.median, p.lo95, p.hi95, p.delta1, p.delta2, p.crps
            );
        }
        out
    }
}

/// Per-period number test, CRPS and predictive band against `observed`.
pub fn score_forecast(ensemble: &ForecastEnsemble, observed: &Catalog) -> Result<ScoreReport> {
    let first = ensemble.boundaries[0];
    let last = *ensemble.boundaries.last().expect("validated");
    if first < observed.start() || last > observed.end() {
        return Err(Error::Precondition(format!(
            "forecast periods [{first}, {last}] exceed observed window [{}, {}]",
            observed.start(),
            observed.end()
        )));
    }
    let mut periods = Vec::with_capacity(ensemble.n_periods());
    for j in 0..ensemble.n_periods() {
        let (start, end) = (ensemble.boundaries[j], ensemble.boundaries[j + 1]);
        let obs = observed.times().filter(|&t| t >= start && t < end).count() as u64;
        let samples = ensemble.period(j);
        let nt = n_test(&samples, obs)?;
        let mut sorted: Vec<f64> = samples.iter().map(|&v| v as f64).collect();
        sorted.sort_by(f64::total_cmp);
        periods.push(PeriodScore {
            period: j + 1,
            start,
            end,
            observed: obs,
            median: quantile_sorted(&sorted, 0.5),
            lo95: quantile_sorted(&sorted, 0.025),
            hi95: quantile_sorted(&sorted, 0.975),
            delta1: nt.delta1,
            delta2: nt.delta2,
            crps: crps(&samples, obs)?,
        });
    }
    Ok(ScoreReport { periods })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Event;
    use approx::assert_relative_eq;

    fn cat(times: &[f64]) -> Catalog {
        let events = times.iter().map(|&t| Event::new(t, 3.0)).collect();
        Catalog::new(events, 0.0, 100.0, 2.5).unwrap()
    }

    #[test]
    fn ecdf_examples() {
        let curve = normalized_iet_ecdf(&cat(&[0.0, 1.0, 2.0, 3.0])).unwrap();
        assert_eq!(curve.points, vec![1.0, 1.0, 1.0]);
        assert_eq!(curve.eval(0.999), 0.0);
        assert_eq!(curve.eval(1.0), 1.0);

        let curve = normalized_iet_ecdf(&cat(&[0.0, 1.0, 3.0])).unwrap();
        assert_relative_eq!(curve.points[0], 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(curve.points[1], 4.0 / 3.0, max_relative = 1e-15);
        assert!(normalized_iet_ecdf(&cat(&[1.0])).is_err());
    }

    #[test]
    fn ks_examples() {
        let single = EcdfCurve::from_samples(vec![1.0]);
        assert_relative_eq!(ks_distance(&single), 1.0 - (-1.0f64).exp(), max_relative = 1e-15);

        let n = 200;
        let at_quantiles: Vec<f64> = (0..n)
            .map(|i| -(1.0 - (i as f64 + 0.5) / n as f64).ln())
            .collect();
        let d = ks_distance(&EcdfCurve::from_samples(at_quantiles));
        assert!(d <= 1.0 / n as f64);
    }

    #[test]
    fn weekly_count_examples() {
        assert_eq!(weekly_counts(&cat(&[0.5, 6.9, 7.0]), 0.0, 2, 7.0), vec![2, 1]);
        assert_eq!(weekly_counts(&cat(&[]), 0.0, 3, 7.0), vec![0, 0, 0]);
        let c = cat(&[0.0, 1.0, 13.9, 14.0, 20.9, 21.0, 30.0]);
        let counts = weekly_counts(&c, 0.0, 3, 7.0);
        assert_eq!(counts.iter().sum::<u64>(), 5);
    }

    #[test]
    fn n_test_examples() {
        let nt = n_test(&[1, 2, 3, 4, 5], 3).unwrap();
        assert_eq!((nt.delta1, nt.delta2), (0.6, 0.6));
        let nt = n_test(&[4, 4, 4], 4).unwrap();
        assert_eq!((nt.delta1, nt.delta2), (1.0, 1.0));
        let nt = n_test(&[1, 2, 3], 10).unwrap();
        assert_eq!((nt.delta1, nt.delta2), (0.0, 1.0));
        assert!(n_test(&[], 1).is_err());
    }

    #[test]
    fn crps_examples() {
        assert_eq!(crps(&[7, 7, 7], 7).unwrap(), 0.0);
        assert_relative_eq!(crps(&[1, 2, 3], 2).unwrap(), 2.0 / 9.0, max_relative = 1e-15);
        assert_eq!(crps(&[5], 0).unwrap(), 5.0);
    }

    #[test]
    fn perfect_ensemble_scores_zero() {
        let observed = cat(&[0.5, 1.0, 8.0, 15.0, 15.5, 16.0]);
        let ens = ForecastEnsemble::from_catalogs([&observed, &observed, &observed], 0.0, 3, 7.0).unwrap();
        let report = score_forecast(&ens, &observed).unwrap();
        for p in &report.periods {
            assert_eq!(p.crps, 0.0);
            assert_eq!((p.delta1, p.delta2), (1.0, 1.0));
            assert!(p.covered());
        }
    }

    #[test]
    fn rejects_periods_outside_window() {
        let observed = cat(&[1.0]);
        let ens = ForecastEnsemble::new(vec![90.0, 97.0, 104.0], vec![vec![0, 0]]).unwrap();
        assert!(score_forecast(&ens, &observed).is_err());
    }
}
