//! Branching (cluster) simulation of temporal ETAS catalogues.
//!
//! Generation 0 is a homogeneous Poisson background plus the direct offspring
//! of any imposed history events; every later generation is the offspring of
//! the previous one. Offspring counts are Poisson with mean equal to the
//! kernel integral up to the window end, and offspring times are drawn by
//! inverting the truncated kernel CDF.

use rand::distributions::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, Event};
use crate::error::{Error, Result};
use crate::likelihood::log_triggering_integral;
use crate::model::{sample_magnitude, EtasParameters, MagnitudeLaw};

/// Default per-replicate event cap.
pub const DEFAULT_MAX_EVENTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub params: EtasParameters,
    pub magnitude_law: MagnitudeLaw,
    pub window: (f64, f64),
    /// Imposed parents (e.g. a mainshock). They seed offspring inside the
    /// window but are not part of the output.
    pub history: Catalog,
    pub max_events: usize,
    pub seed: u64,
    /// Simulate even when the branching ratio is ≥ 1 (or infinite).
    pub allow_supercritical: bool,
}

impl SimulationConfig {
    pub fn new(params: EtasParameters, magnitude_law: MagnitudeLaw, window: (f64, f64), seed: u64) -> Result<Self> {
        Ok(Self {
            params,
            magnitude_law,
            window,
            history: Catalog::empty(window.0, window.1, params.m0)?,
            max_events: DEFAULT_MAX_EVENTS,
            seed,
            allow_supercritical: false,
        })
    }

    pub fn with_history(mut self, history: Catalog) -> Self {
        self.history = history;
        self
    }

    /// Expected direct offspring per event (infinite when β ≤ α).
    pub fn branching_ratio(&self) -> f64 {
        self.params
            .branching_ratio(&self.magnitude_law)
            .unwrap_or(f64::INFINITY)
    }

    pub fn validate(&self) -> Result<()> {
        let (t1, t2) = self.window;
        if !(t1 < t2 && t1.is_finite() && t2.is_finite()) {
            return Err(Error::InvalidWindow { start: t1, end: t2 });
        }
        if self.max_events == 0 {
            return Err(Error::Config("max_events must be > 0".into()));
        }
        // μ = 0 is allowed here: offspring-only simulations.
        let mut checked = self.params;
        if checked.mu == 0.0 {
            checked.mu = 1.0;
        }
        checked.validate()?;
        let ratio = self.branching_ratio();
        if ratio >= 1.0 && !self.allow_supercritical {
            return Err(Error::Supercritical { ratio });
        }
        Ok(())
    }
}

/// A simulated catalogue and whether the event cap cut it short.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedCatalog {
    pub catalog: Catalog,
    pub overflowed: bool,
    pub generations: usize,
}

/// Sorted background times: Poisson(μ(t2 − t1)) points uniform on `[t1, t2)`.
pub fn sample_background<R: Rng + ?Sized>(mu: f64, t1: f64, t2: f64, rng: &mut R) -> Result<Vec<f64>> {
    sample_background_capped(mu, t1, t2, usize::MAX - 1, rng)
}

/// As [`sample_background`], but draws at most `cap + 1` points.
fn sample_background_capped<R: Rng + ?Sized>(mu: f64, t1: f64, t2: f64, cap: usize, rng: &mut R) -> Result<Vec<f64>> {
    if !(t1 < t2) {
        return Err(Error::InvalidInterval { a: t1, b: t2 });
    }
    let n = poisson_count(mu * (t2 - t1), rng).min(cap + 1);
    let mut times: Vec<f64> = (0..n)
        .map(|_| {
            let t = t1 + rng.gen::<f64>() * (t2 - t1);
            if t < t2 {
                t
            } else {
                t1
            }
        })
        .collect();
    times.sort_by(f64::total_cmp);
    Ok(times)
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if !(mean > 0.0) {
        return 0;
    }
    if !mean.is_finite() || mean > 1e15 {
        return usize::MAX;
    }
    // rand_distr's Poisson returns a float-valued count.
    Poisson::new(mean).expect("positive mean").sample(rng) as usize
}

/// Inverse of the parent's kernel CDF restricted to `(a, b]`: the time `t`
/// at which a fraction `u` of the kernel mass over `(a, b]` has accrued.
pub fn kernel_inverse_cdf(params: &EtasParameters, parent_time: f64, a: f64, b: f64, u: f64) -> f64 {
    let c = params.c;
    let q = 1.0 - params.p;
    let la = ((a.max(parent_time) - parent_time) / c).ln_1p();
    let lb = ((b - parent_time) / c).ln_1p();
    // (1+x)^{1−p} moves from e^{q·la} to e^{q·lb}; interpolate in that space.
    let e = q * la + (u * (q * (lb - la)).exp_m1()).ln_1p();
    parent_time + c * (e / q).exp_m1()
}

/// Fraction of the parent's kernel mass over `(a, b]` that falls in `(a, t]`.
pub fn kernel_cdf(params: &EtasParameters, parent_time: f64, a: f64, b: f64, t: f64) -> f64 {
    let c = params.c;
    let q = 1.0 - params.p;
    let la = ((a.max(parent_time) - parent_time) / c).ln_1p();
    let lb = ((b - parent_time) / c).ln_1p();
    let lt = ((t - parent_time) / c).ln_1p();
    (q * (lt - la)).exp_m1() / (q * (lb - la)).exp_m1()
}

/// Direct offspring of `parent` in `(parent.time, t2)`.
pub fn sample_offspring<R: Rng + ?Sized>(
    params: &EtasParameters,
    parent: &Event,
    t2: f64,
    law: &MagnitudeLaw,
    rng: &mut R,
) -> Result<Vec<Event>> {
    if !(parent.time < t2) {
        return Err(Error::Precondition(format!(
            "parent at {} is not before window end {t2}",
            parent.time
        )));
    }
    Ok(offspring_in(params, parent, parent.time, t2, law, usize::MAX, rng).0)
}

/// Offspring of `parent` restricted to `(max(a, parent.time), b)`.
fn offspring_in<R: Rng + ?Sized>(
    params: &EtasParameters,
    parent: &Event,
    a: f64,
    b: f64,
    law: &MagnitudeLaw,
    room: usize,
    rng: &mut R,
) -> (Vec<Event>, bool) {
    let lo = a.max(parent.time);
    if !(lo < b) {
        return (Vec::new(), false);
    }
    let mean = log_triggering_integral(params, parent, lo, b).exp();
    let n = poisson_count(mean, rng);
    let cut = n > room;
    let n = n.min(room);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let u: f64 = Open01.sample(rng);
        let t = kernel_inverse_cdf(params, parent.time, lo, b, u);
        // Rounding can land exactly on an endpoint; redraw.
        if !(t > parent.time && t >= lo && t < b) {
            continue;
        }
        let m = sample_magnitude(law, Open01.sample(rng)).expect("u in (0, 1)");
        out.push(Event::new(t, m));
    }
    (out, cut)
}

/// Simulates one catalogue over `cfg.window`.
pub fn simulate_catalog(cfg: &SimulationConfig) -> Result<SimulatedCatalog> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    simulate_with_rng(cfg, &cfg.params, &mut rng)
}

fn simulate_with_rng<R: Rng + ?Sized>(cfg: &SimulationConfig, params: &EtasParameters, rng: &mut R) -> Result<SimulatedCatalog> {
    let (t1, t2) = cfg.window;
    let law = &cfg.magnitude_law;
    let cap = cfg.max_events;
    let mut overflowed = false;
    let mut background = sample_background_capped(params.mu, t1, t2, cap, rng)?;
    if background.len() > cap {
        background.truncate(cap);
        overflowed = true;
    }
    let mut generation: Vec<Event> = background
        .into_iter()
        .map(|t| Event::new(t, sample_magnitude(law, Open01.sample(rng)).expect("u in (0, 1)")))
        .collect();
    if !overflowed {
        for parent in cfg.history.events() {
            let (kids, cut) = offspring_in(params, parent, t1, t2, law, cap - generation.len(), rng);
            generation.extend(kids);
            if cut {
                overflowed = true;
                break;
            }
        }
    }

    let mut all: Vec<Event> = Vec::new();
    let mut generations = 0;
    while !generation.is_empty() {
        generations += 1;
        let first = all.len();
        all.append(&mut generation);
        if overflowed {
            break;
        }
        let mut next = Vec::new();
        for i in first..all.len() {
            let parent = all[i];
            let room = cap - all.len() - next.len();
            let (kids, cut) = offspring_in(params, &parent, parent.time, t2, law, room, rng);
            next.extend(kids);
            if cut {
                overflowed = true;
                break;
            }
        }
        generation = next;
    }
    let catalog = Catalog::new(all, t1, t2, law.m0)?;
    Ok(SimulatedCatalog {
        catalog,
        overflowed,
        generations,
    })
}

/// Seed for replicate `r` of an ensemble with base seed `base`
/// (SplitMix64 over the pair).
pub fn replicate_seed(base: u64, r: usize) -> u64 {
    let mut z = base
        .wrapping_add((r as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `n_replicates` independent catalogues. With `draws`, replicate `r` uses
/// `draws[r]` in place of `cfg.params` (posterior-predictive mode).
/// Replicates run in parallel; output order is replicate order.
pub fn simulate_ensemble(
    cfg: &SimulationConfig,
    n_replicates: usize,
    draws: Option<&[EtasParameters]>,
) -> Result<Vec<SimulatedCatalog>> {
    simulate_ensemble_with(cfg, n_replicates, draws, |sim| sim)
}

/// Like [`simulate_ensemble`] but passes each replicate through `reduce` as
/// soon as it is simulated, so only the reduced values are kept.
pub fn simulate_ensemble_with<T, F>(
    cfg: &SimulationConfig,
    n_replicates: usize,
    draws: Option<&[EtasParameters]>,
    reduce: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(SimulatedCatalog) -> T + Sync,
{
    if n_replicates == 0 {
        return Err(Error::Precondition("need at least one replicate".into()));
    }
    if let Some(d) = draws {
        if d.len() != n_replicates {
            return Err(Error::Precondition(format!(
                "{} parameter draws for {n_replicates} replicates",
                d.len()
            )));
        }
    }
    (0..n_replicates)
        .into_par_iter()
        .map(|r| {
            let mut rep = cfg.clone();
            rep.seed = replicate_seed(cfg.seed, r);
            if let Some(d) = draws {
                rep.params = d[r];
            }
            simulate_catalog(&rep).map(&reduce)
        })
        .collect()
}

/// Long-format ensemble CSV: `replicate,time,magnitude`.
pub fn ensemble_to_csv(ensemble: &[SimulatedCatalog]) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("replicate,time,magnitude\n");
    for (r, sim) in ensemble.iter().enumerate() {
        for e in sim.catalog.events() {
            let _ = writeln!(out, "{r},{},{}", e.time, e.magnitude);
        }
    }
    out
}

/// Summary of a simulation run written next to the catalogue files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub replicates: usize,
    pub events: Vec<usize>,
    pub overflowed: Vec<bool>,
    pub branching_ratio: f64,
}
