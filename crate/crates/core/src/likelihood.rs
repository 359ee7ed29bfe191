//! Temporal ETAS log-likelihood: exact, binned and linearized forms.
//!
//! The observed-window log-likelihood is
//!
//! ```text
//! L(θ) = −Λ₀(T₁, T₂) − Σ_i Λ_i(max(T₁, t_i), T₂) + Σ_j log λ(t_j | H_{t_j})
//! ```
//!
//! where the `Λ_i` sum runs over every parent (catalogue events plus imposed
//! history) and the log-intensity sum over catalogue events only. The binned
//! form splits each `Λ_i` over a geometric partition starting at the parent.
//! The linearized form replaces every `log f` (each integral piece and each
//! log-intensity) by its first-order expansion in the internal coordinates:
//!
//! ```text
//! L̄(θ) = −Σ_integrals exp(log f* + g·(θ − θ*)) + Σ_intensities (log f* + g·(θ − θ*))
//! ```

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{event_order, Catalog, Event};
use crate::error::{Error, Result};
use crate::model::EtasParameters;
use crate::priors::PriorSet;
use crate::util::pairwise_sum;

/// Geometric bin settings: first bin `delta` days, growth `ratio`, at most
/// `n_max + 1` geometric endpoints after the parent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinningConfig {
    pub delta: f64,
    pub ratio: f64,
    pub n_max: usize,
}

impl Default for BinningConfig {
    fn default() -> Self {
        Self {
            delta: 0.1,
            ratio: 1.0,
            n_max: 12,
        }
    }
}

/// Bin endpoints for one parent.
#[derive(Debug, Clone, PartialEq)]
pub struct BinPartition {
    pub parent_time: f64,
    pub endpoints: Vec<f64>,
    pub delta: f64,
    pub ratio: f64,
    pub n_max: usize,
}

impl BinPartition {
    /// `(start, end)` pairs of consecutive endpoints.
    pub fn bins(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.endpoints.windows(2).map(|w| (w[0], w[1]))
    }

    /// Clips the partition to start at `t1`, dropping endpoints at or before
    /// it. Returns `None` when nothing remains.
    pub fn clipped(&self, t1: f64) -> Option<Vec<(f64, f64)>> {
        let end = *self.endpoints.last()?;
        if t1 >= end {
            return None;
        }
        if t1 <= self.parent_time {
            return Some(self.bins().collect());
        }
        let mut points = vec![t1];
        points.extend(self.endpoints.iter().copied().filter(|&e| e > t1));
        Some(points.windows(2).map(|w| (w[0], w[1])).collect())
    }
}

/// Endpoints `t_i, t_i + Δ, t_i + Δ(1+δ), …, t_i + Δ(1+δ)^n_max, T₂`, with
/// every geometric point at or beyond `T₂` dropped.
pub fn make_bins(t_i: f64, delta: f64, ratio: f64, n_max: usize, t2: f64) -> Result<BinPartition> {
    if !(t_i < t2) {
        return Err(Error::EmptyPartition {
            parent: t_i,
            end: t2,
        });
    }
    if !(delta > 0.0 && ratio > 0.0) {
        return Err(Error::Precondition(format!(
            "binning needs delta > 0 and ratio > 0, got ({delta}, {ratio})"
        )));
    }
    let mut endpoints = vec![t_i];
    let mut width = delta;
    for _ in 0..=n_max {
        let point = t_i + width;
        if point >= t2 {
            break;
        }
        endpoints.push(point);
        width *= 1.0 + ratio;
    }
    endpoints.push(t2);
    Ok(BinPartition {
        parent_time: t_i,
        endpoints,
        delta,
        ratio,
        n_max,
    })
}

/// `μ·(t2 − t1)`.
pub fn integrated_background(mu: f64, t1: f64, t2: f64) -> Result<f64> {
    if !(t1 < t2) {
        return Err(Error::InvalidInterval { a: t1, b: t2 });
    }
    Ok(mu * (t2 - t1))
}

/// Expected number of direct offspring of `parent` in `[a, b]`.
pub fn integrated_triggering(params: &EtasParameters, parent: &Event, a: f64, b: f64) -> Result<f64> {
    if !(a < b) {
        return Err(Error::InvalidInterval { a, b });
    }
    if !(params.p > 1.0) {
        return Err(Error::InvalidParameter {
            name: "p",
            message: format!("{} violates p > 1", params.p),
        });
    }
    Ok(log_triggering_integral(params, parent, a, b).exp())
}

/// `ln Λ_parent(a, b)`, `−∞` when the interval ends at or before the parent.
///
/// Uses `(1+x_a)^{1−p} − (1+x_b)^{1−p} = −(1+x_a)^{1−p}·expm1((1−p)(L_b − L_a))`
/// with `L = ln(1 + x)`, which stays accurate as `p → 1`.
pub(crate) fn log_triggering_integral(params: &EtasParameters, parent: &Event, a: f64, b: f64) -> f64 {
    if b <= parent.time || params.k <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let c = params.c;
    let la = ((a.max(parent.time) - parent.time) / c).ln_1p();
    let lb = ((b - parent.time) / c).ln_1p();
    let one_minus_p = 1.0 - params.p;
    let shape = if one_minus_p == 0.0 {
        (lb - la).ln()
    } else {
        one_minus_p * la + (-(one_minus_p * (lb - la)).exp_m1() / -one_minus_p).ln()
    };
    params.k.ln() + params.alpha * (parent.magnitude - params.m0) + c.ln() + shape
}

/// One additive piece of the likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Component {
    /// `Λ₀(T₁, T₂)`.
    Background,
    /// `Λ_parent(start, end)` for the parent at index `parent` of the merged
    /// parent list.
    Bin { parent: usize, start: f64, end: f64 },
    /// `log λ(t)` at catalogue event `event`.
    LogIntensity { event: usize },
}

impl Component {
    pub fn kind(&self) -> TermKind {
        match self {
            Component::LogIntensity { .. } => TermKind::LogIntensity,
            _ => TermKind::Integral,
        }
    }
}

/// How a linearized `log f` enters the approximate likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    /// Enters as `−exp(log f)`.
    Integral,
    /// Enters as `+log f`.
    LogIntensity,
}

/// First-order expansion of one `log f` around `center`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedTerm {
    pub component: Component,
    pub value_at_center: f64,
    pub gradient: Vec<f64>,
    pub center: Vec<f64>,
}

impl LinearizedTerm {
    pub fn kind(&self) -> TermKind {
        self.component.kind()
    }

    /// The linear form evaluated at `theta`.
    pub fn eval(&self, theta: &[f64]) -> f64 {
        self.value_at_center
            + self
                .gradient
                .iter()
                .zip(theta.iter().zip(&self.center))
                .map(|(g, (t, c))| g * (t - c))
                .sum::<f64>()
    }
}

/// Catalogue plus history laid out for repeated likelihood evaluation.
#[derive(Debug, Clone)]
pub struct LikelihoodLayout {
    t1: f64,
    t2: f64,
    m0: f64,
    parents: Vec<Event>,
    /// Position of each catalogue event inside `parents`; events at the same
    /// time are never each other's parents.
    observed: Vec<ObservedSlot>,
}

#[derive(Debug, Clone, Copy)]
struct ObservedSlot {
    time: f64,
    /// Number of parents strictly before `time`.
    n_before: usize,
}

impl LikelihoodLayout {
    /// `history` holds parents that are not catalogue events (imposed
    /// mainshocks, events before `T₁`). Events of `history` at or after `T₂`
    /// are ignored.
    pub fn new(cat: &Catalog, history: &Catalog) -> Self {
        let (t1, t2) = (cat.start(), cat.end());
        let mut parents: Vec<Event> = cat
            .events()
            .iter()
            .chain(history.events())
            .copied()
            .filter(|e| e.time < t2)
            .collect();
        parents.sort_by(event_order);
        let observed = cat
            .events()
            .iter()
            .map(|e| ObservedSlot {
                time: e.time,
                n_before: parents.partition_point(|p| p.time < e.time),
            })
            .collect();
        Self {
            t1,
            t2,
            m0: cat.m0(),
            parents,
            observed,
        }
    }

    pub fn m0(&self) -> f64 {
        self.m0
    }

    /// Model parameters for internal coordinates `theta`.
    pub fn params_at(&self, priors: &PriorSet, theta: &[f64]) -> EtasParameters {
        EtasParameters::from_array(priors.to_model(theta), self.m0)
    }

    pub fn window(&self) -> (f64, f64) {
        (self.t1, self.t2)
    }

    pub fn parents(&self) -> &[Event] {
        &self.parents
    }

    pub fn n_observed(&self) -> usize {
        self.observed.len()
    }

    /// λ at each catalogue event, in catalogue order.
    pub fn intensities(&self, params: &EtasParameters) -> Vec<f64> {
        let weights: Vec<f64> = self.parents.iter().map(|e| params.productivity(e.magnitude)).collect();
        let inv_c = 1.0 / params.c;
        self.observed
            .par_iter()
            .map(|slot| {
                let triggered: f64 = self.parents[..slot.n_before]
                    .iter()
                    .zip(&weights)
                    .map(|(e, w)| w * (-params.p * ((slot.time - e.time) * inv_c).ln_1p()).exp())
                    .sum();
                params.mu + triggered
            })
            .collect()
    }

    fn sum_log_intensity(&self, params: &EtasParameters) -> Result<f64> {
        let lambdas = self.intensities(params);
        let mut logs = Vec::with_capacity(lambdas.len());
        for (slot, lam) in self.observed.iter().zip(lambdas) {
            if !(lam > 0.0 && lam.is_finite()) {
                return Err(Error::DegenerateLikelihood { time: slot.time });
            }
            logs.push(lam.ln());
        }
        Ok(pairwise_sum(&logs))
    }

    /// Exact log-likelihood with closed-form integrals over the whole window.
    pub fn exact(&self, params: &EtasParameters) -> Result<f64> {
        let background = integrated_background(params.mu, self.t1, self.t2)?;
        let integrals: Vec<f64> = self
            .parents
            .iter()
            .map(|e| log_triggering_integral(params, e, self.t1.max(e.time), self.t2).exp())
            .collect();
        Ok(-background - pairwise_sum(&integrals) + self.sum_log_intensity(params)?)
    }

    /// Every component of the binned decomposition, in a fixed order:
    /// background, then the bins of each parent, then each log-intensity.
    pub fn components(&self, binning: &BinningConfig) -> Result<Vec<Component>> {
        let mut out = vec![Component::Background];
        for (idx, parent) in self.parents.iter().enumerate() {
            let partition = make_bins(parent.time, binning.delta, binning.ratio, binning.n_max, self.t2)?;
            if let Some(bins) = partition.clipped(self.t1) {
                out.extend(bins.into_iter().map(|(start, end)| Component::Bin {
                    parent: idx,
                    start,
                    end,
                }));
            }
        }
        out.extend((0..self.observed.len()).map(|event| Component::LogIntensity { event }));
        Ok(out)
    }

    /// `log f` for every component at `params`.
    pub fn component_logs(&self, components: &[Component], params: &EtasParameters) -> Vec<f64> {
        let needs_lambda = components
            .iter()
            .any(|c| matches!(c, Component::LogIntensity { .. }));
        let lambdas = if needs_lambda {
            self.intensities(params)
        } else {
            Vec::new()
        };
        components
            .iter()
            .map(|c| match *c {
                Component::Background => (params.mu * (self.t2 - self.t1)).ln(),
                Component::Bin { parent, start, end } => {
                    log_triggering_integral(params, &self.parents[parent], start, end)
                }
                Component::LogIntensity { event } => lambdas[event].ln(),
            })
            .collect()
    }

    /// Binned log-likelihood: identical to [`exact`](Self::exact) up to
    /// rounding.
    pub fn binned(&self, params: &EtasParameters, binning: &BinningConfig) -> Result<f64> {
        let components = self.components(binning)?;
        let logs = self.component_logs(&components, params);
        let mut integrals = Vec::with_capacity(components.len());
        let mut intensity_logs = Vec::with_capacity(self.observed.len());
        for (c, v) in components.iter().zip(logs) {
            match c.kind() {
                TermKind::Integral => integrals.push(v.exp()),
                TermKind::LogIntensity => {
                    if !v.is_finite() {
                        let Component::LogIntensity { event } = c else { unreachable!() };
                        return Err(Error::DegenerateLikelihood {
                            time: self.observed[*event].time,
                        });
                    }
                    intensity_logs.push(v);
                }
            }
        }
        Ok(-pairwise_sum(&integrals) + pairwise_sum(&intensity_logs))
    }
}

/// Exact log-likelihood of `cat` with extra parents `history`.
pub fn log_likelihood_exact(params: &EtasParameters, cat: &Catalog, history: &Catalog) -> Result<f64> {
    LikelihoodLayout::new(cat, history).exact(params)
}

/// Binned log-likelihood; equals [`log_likelihood_exact`] up to rounding.
pub fn log_likelihood_binned(
    params: &EtasParameters,
    cat: &Catalog,
    history: &Catalog,
    binning: &BinningConfig,
) -> Result<f64> {
    LikelihoodLayout::new(cat, history).binned(params, binning)
}

/// Central-difference step in internal coordinates.
pub const LINEARIZATION_STEP: f64 = 1e-5;

/// Linearizes every component's `log f` at internal point `center`.
///
/// Gradients are central differences with step [`LINEARIZATION_STEP`].
/// Components that vanish identically around `center` (e.g. every trigger
/// integral when K is held at zero) are dropped.
pub fn linearize_log_terms(
    center: &[f64],
    priors: &PriorSet,
    layout: &LikelihoodLayout,
    binning: &BinningConfig,
) -> Result<Vec<LinearizedTerm>> {
    let components = layout.components(binning)?;
    linearize_components(center, priors, layout, &components, LINEARIZATION_STEP)
}

pub(crate) fn linearize_components(
    center: &[f64],
    priors: &PriorSet,
    layout: &LikelihoodLayout,
    components: &[Component],
    step: f64,
) -> Result<Vec<LinearizedTerm>> {
    let eval = |theta: &[f64]| -> Vec<f64> {
        let params = layout.params_at(priors, theta);
        layout.component_logs(components, &params)
    };
    let at_center = eval(center);
    let dim = center.len();
    let mut plus = Vec::with_capacity(dim);
    let mut minus = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut t = center.to_vec();
        t[j] = center[j] + step;
        plus.push(eval(&t));
        t[j] = center[j] - step;
        minus.push(eval(&t));
    }

    let mut terms = Vec::with_capacity(components.len());
    for (i, component) in components.iter().enumerate() {
        let value = at_center[i];
        if value == f64::NEG_INFINITY
            && component.kind() == TermKind::Integral
            && (0..dim).all(|j| plus[j][i] == f64::NEG_INFINITY && minus[j][i] == f64::NEG_INFINITY)
        {
            continue;
        }
        if !value.is_finite() {
            return Err(Error::Linearization {
                component: format!("{component:?}"),
                value,
            });
        }
        let gradient: Vec<f64> = (0..dim)
            .map(|j| (plus[j][i] - minus[j][i]) / (2.0 * step))
            .collect();
        if gradient.iter().any(|g| !g.is_finite()) {
            return Err(Error::Linearization {
                component: format!("{component:?}"),
                value,
            });
        }
        terms.push(LinearizedTerm {
            component: *component,
            value_at_center: value,
            gradient,
            center: center.to_vec(),
        });
    }
    Ok(terms)
}

/// Assembles `−Σ exp(linear integral terms) + Σ linear log-intensity terms`
/// at `theta`.
pub fn approximate_log_likelihood(theta: &[f64], terms: &[LinearizedTerm]) -> Result<f64> {
    let mut integrals = Vec::with_capacity(terms.len());
    let mut linear = Vec::new();
    for term in terms {
        let v = term.eval(theta);
        match term.kind() {
            TermKind::Integral => {
                let e = v.exp();
                if !e.is_finite() {
                    return Err(Error::Overflow);
                }
                integrals.push(e);
            }
            TermKind::LogIntensity => linear.push(v),
        }
    }
    Ok(-pairwise_sum(&integrals) + pairwise_sum(&linear))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Param;
    use crate::priors::FixMode;
    use approx::assert_relative_eq;

    fn params(k: f64, alpha: f64, c: f64, p: f64) -> EtasParameters {
        EtasParameters::new(0.5, k, alpha, c, p, 2.5)
    }

    fn small_catalog() -> (Catalog, Catalog) {
        let events = vec![Event::new(0.7, 3.1), Event::new(1.2, 4.0), Event::new(1.25, 2.6), Event::new(6.0, 3.3)];
        let cat = Catalog::new(events, 0.0, 10.0, 2.5).unwrap();
        let history = Catalog::new(vec![Event::new(-2.0, 5.0)], -2.0, 10.0, 2.5).unwrap();
        (cat, history)
    }

    #[test]
    fn bin_examples() {
        assert_eq!(make_bins(0.0, 0.1, 1.0, 10, 1.0).unwrap().endpoints, vec![0.0, 0.1, 0.2, 0.4, 0.8, 1.0]);
        assert_eq!(make_bins(0.0, 2.0, 1.0, 10, 1.0).unwrap().endpoints, vec![0.0, 1.0]);
        assert_eq!(make_bins(0.0, 0.1, 1.0, 2, 1.0).unwrap().endpoints, vec![0.0, 0.1, 0.2, 0.4, 1.0]);
        assert!(matches!(make_bins(1.0, 0.1, 1.0, 2, 1.0), Err(Error::EmptyPartition { .. })));
    }

    #[test]
    fn clipping_starts_at_window() {
        let part = make_bins(-1.0, 0.5, 1.0, 12, 3.0).unwrap();
        let bins = part.clipped(0.0).unwrap();
        assert_eq!(bins[0].0, 0.0);
        assert_eq!(bins.last().unwrap().1, 3.0);
        assert!(part.clipped(3.0).is_none());
    }

    #[test]
    fn background_examples() {
        assert_eq!(integrated_background(0.5, 0.0, 10.0).unwrap(), 5.0);
        assert_eq!(integrated_background(1.0, 3.0, 3.5).unwrap(), 0.5);
        assert_eq!(integrated_background(0.0, 1.0, 2.0).unwrap(), 0.0);
        assert!(integrated_background(1.0, 2.0, 2.0).is_err());
    }

    #[test]
    fn triggering_examples() {
        let p = EtasParameters::new(0.5, 1.0, 0.0, 1.0, 2.0, 2.5);
        let parent = Event::new(0.0, 4.0);
        assert_relative_eq!(integrated_triggering(&p, &parent, 0.0, 1.0).unwrap(), 0.5, max_relative = 1e-14);
        assert_eq!(integrated_triggering(&p, &Event::new(5.0, 3.0), 1.0, 2.0).unwrap(), 0.0);
        let far = integrated_triggering(&p, &parent, 0.0, 1e6).unwrap();
        assert_relative_eq!(far, 1.0 - 1.0 / (1.0 + 1e6), max_relative = 1e-12);
        let mut bad = p;
        bad.p = 1.0;
        assert!(integrated_triggering(&bad, &parent, 0.0, 1.0).is_err());
    }

    #[test]
    fn triggering_near_p_one_is_smooth() {
        let parent = Event::new(0.0, 3.0);
        let a = integrated_triggering(&params(0.2, 1.0, 0.05, 1.0 + 1e-9), &parent, 0.0, 100.0).unwrap();
        let b = integrated_triggering(&params(0.2, 1.0, 0.05, 1.0 + 2e-9), &parent, 0.0, 100.0).unwrap();
        let log_limit = 0.2 * (1.0f64 * 0.5).exp() * 0.05 * (100.0f64 / 0.05).ln_1p();
        assert_relative_eq!(a, log_limit, max_relative = 1e-7);
        assert!(b < a);
    }

    #[test]
    fn poisson_examples() {
        let p = EtasParameters::new(1.0, 0.0, 1.0, 0.1, 1.2, 2.5);
        let events = (1..=5).map(|t| Event::new(t as f64, 3.0)).collect();
        let cat = Catalog::new(events, 0.0, 10.0, 2.5).unwrap();
        let empty = Catalog::empty(0.0, 10.0, 2.5).unwrap();
        assert_relative_eq!(log_likelihood_exact(&p, &cat, &empty).unwrap(), -10.0, max_relative = 1e-15);

        let p = EtasParameters::new(0.5, 0.3, 1.0, 0.1, 1.2, 2.5);
        assert_relative_eq!(log_likelihood_exact(&p, &empty, &empty).unwrap(), -5.0, max_relative = 1e-15);
    }

    #[test]
    fn zero_intensity_is_degenerate() {
        let p = EtasParameters::new(0.0, 0.0, 1.0, 0.1, 1.2, 2.5);
        let cat = Catalog::new(vec![Event::new(1.0, 3.0)], 0.0, 10.0, 2.5).unwrap();
        let empty = Catalog::empty(0.0, 10.0, 2.5).unwrap();
        assert!(matches!(
            log_likelihood_exact(&p, &cat, &empty),
            Err(Error::DegenerateLikelihood { time }) if time == 1.0
        ));
    }

    #[test]
    fn binned_matches_exact() {
        let (cat, history) = small_catalog();
        let p = params(0.3, 1.2, 0.05, 1.3);
        let exact = log_likelihood_exact(&p, &cat, &history).unwrap();
        for binning in [
            BinningConfig::default(),
            BinningConfig { delta: 0.05, ratio: 0.5, n_max: 30 },
            BinningConfig { delta: 50.0, ratio: 1.0, n_max: 0 },
        ] {
            let binned = log_likelihood_binned(&p, &cat, &history, &binning).unwrap();
            assert_relative_eq!(binned, exact, max_relative = 1e-12);
        }
    }

    #[test]
    fn history_only_acts_as_parent() {
        let (cat, history) = small_catalog();
        let layout = LikelihoodLayout::new(&cat, &history);
        assert_eq!(layout.n_observed(), 4);
        assert_eq!(layout.parents().len(), 5);
        let p = params(0.3, 1.2, 0.05, 1.3);
        let lam = layout.intensities(&p);
        let direct = crate::model::conditional_intensity(&p, 0.7, &history);
        assert_relative_eq!(lam[0], direct, max_relative = 1e-14);
    }

    #[test]
    fn approximation_is_exact_at_center() {
        let (cat, history) = small_catalog();
        let priors = PriorSet::default();
        let layout = LikelihoodLayout::new(&cat, &history);
        let center = priors.to_internal(&[0.5, 0.3, 1.2, 0.05, 1.3]);
        let terms = linearize_log_terms(&center, &priors, &layout, &BinningConfig::default()).unwrap();
        let approx = approximate_log_likelihood(&center, &terms).unwrap();
        let binned = layout
            .binned(&layout.params_at(&priors, &center), &BinningConfig::default())
            .unwrap();
        assert_relative_eq!(approx, binned, max_relative = 1e-12);
    }

    #[test]
    fn approximation_moves_with_stored_gradients() {
        let (cat, history) = small_catalog();
        let priors = PriorSet::default();
        let layout = LikelihoodLayout::new(&cat, &history);
        let center = priors.to_internal(&[0.5, 0.3, 1.2, 0.05, 1.3]);
        let terms = linearize_log_terms(&center, &priors, &layout, &BinningConfig::default()).unwrap();
        let mut moved = center.clone();
        moved[2] += 0.1;
        let direct: f64 = terms
            .iter()
            .map(|t| {
                let v = t.value_at_center + 0.1 * t.gradient[2];
                match t.kind() {
                    TermKind::Integral => -v.exp(),
                    TermKind::LogIntensity => v,
                }
            })
            .sum();
        assert_relative_eq!(approximate_log_likelihood(&moved, &terms).unwrap(), direct, max_relative = 1e-12);
    }

    #[test]
    fn affine_component_is_linearized_exactly() {
        // With μ excluded the background term is constant in θ.
        let (cat, history) = small_catalog();
        let mut priors = PriorSet::default();
        priors.fix(Param::Mu, 0.5, 1.0, FixMode::Exclude).unwrap();
        let layout = LikelihoodLayout::new(&cat, &history);
        let center = vec![0.0; priors.dim()];
        let terms = linearize_log_terms(&center, &priors, &layout, &BinningConfig::default()).unwrap();
        let background = terms.iter().find(|t| t.component == Component::Background).unwrap();
        for shift in [-0.5, 0.5] {
            let theta: Vec<f64> = center.iter().map(|c| c + shift).collect();
            let logs = layout.component_logs(&[Component::Background], &layout.params_at(&priors, &theta));
            assert_relative_eq!(background.eval(&theta), logs[0], max_relative = 1e-12);
        }
    }

    #[test]
    fn zero_k_drops_trigger_terms() {
        let (cat, history) = small_catalog();
        let mut priors = PriorSet::default();
        priors.fix(Param::K, 0.0, 1e-4, FixMode::Exclude).unwrap();
        let layout = LikelihoodLayout::new(&cat, &history);
        for mu_theta in [-1.0, 0.0, 0.7] {
            let center = vec![mu_theta, 0.0, 0.0, 0.0];
            let terms = linearize_log_terms(&center, &priors, &layout, &BinningConfig::default()).unwrap();
            assert!(terms.iter().all(|t| !matches!(t.component, Component::Bin { .. })));
            let mu = priors.to_model(&center)[0];
            let poisson = -mu * 10.0 + 4.0 * mu.ln();
            assert_relative_eq!(approximate_log_likelihood(&center, &terms).unwrap(), poisson, max_relative = 1e-12);
        }
    }
}
