//! Approximate Bayesian fitting of the temporal ETAS model.
//!
//! Each iteration linearizes every likelihood component at the current point
//! `θ₀`, maximises the resulting approximate log-posterior to get `θ₁`, then
//! picks the blend `w·θ₀ + (1 − w)·θ₁` that maximises the exact
//! log-posterior over a grid of weights. Iteration stops once no internal
//! coordinate moves by more than the relative tolerance.
//!
//! The posterior is then approximated by a Gaussian on the internal scale,
//! centred at the mode with covariance equal to the inverse of the negative
//! finite-difference Hessian of the exact log-posterior.

mod optimizer;

use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use optimizer::{bfgs_maximize, BfgsOptions, BfgsResult};

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::likelihood::{
    linearize_components, BinningConfig, Component, LikelihoodLayout, LinearizedTerm, TermKind,
    LINEARIZATION_STEP,
};
use crate::model::{EtasParameters, Param};
use crate::priors::{log_prior_internal, PriorSet};
use crate::util::{pairwise_sum, quantile_sorted};

/// Settings for [`fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Starting values `[μ, K, α, c, p]` on the model scale.
    pub initial: [f64; 5],
    pub binning: BinningConfig,
    pub max_iterations: usize,
    /// Relative change per internal coordinate below which the fit stops.
    pub convergence_tol: f64,
    /// Added to `|θ₀_j|` in the denominator of the relative change.
    pub convergence_floor: f64,
    /// Number of blend weights, evenly spaced on `[0, 1]`.
    pub line_search_points: usize,
    /// Finite-difference step for the Hessian at the mode.
    pub hessian_step: f64,
    /// Newton steps on the exact log-posterior after the iteration stops,
    /// so the Gaussian approximation is centred at the mode.
    pub polish_steps: usize,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            initial: [0.5, 0.1, 1.0, 0.1, 1.1],
            binning: BinningConfig::default(),
            max_iterations: 100,
            convergence_tol: 0.01,
            convergence_floor: 1e-8,
            line_search_points: 21,
            hessian_step: 1e-3,
            polish_steps: 20,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.convergence_tol > 0.0) {
            return Err(Error::Config("convergence_tol must be > 0".into()));
        }
        if self.line_search_points < 2 {
            return Err(Error::Config("line_search_points must be >= 2".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        if !(self.hessian_step > 0.0) {
            return Err(Error::Config("hessian_step must be > 0".into()));
        }
        Ok(())
    }
}

/// One outer iteration of the fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Internal point after the line search.
    pub theta: Vec<f64>,
    /// Exact log-posterior at `theta`.
    pub objective: f64,
    /// Chosen blend weight on the previous point.
    pub weight: f64,
    pub relative_change: f64,
    /// Approximate minus binned log-likelihood at the expansion point.
    pub center_gap: f64,
    pub inner_iterations: usize,
}

/// Gaussian approximation of the posterior on the internal scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorApproximation {
    /// Parameters carrying an internal coordinate, in vector order.
    pub free: Vec<Param>,
    /// Mode on the internal scale.
    pub mode: Vec<f64>,
    /// `[μ, K, α, c, p]` at the mode.
    pub mode_model: [f64; 5],
    pub covariance: Vec<Vec<f64>>,
    pub priors: PriorSet,
    pub m0: f64,
    pub log_posterior_at_mode: f64,
    pub iterations_used: usize,
    pub converged: bool,
    /// Accepted Newton steps of the final mode polish.
    pub polish_steps_used: usize,
    /// Seconds spent in [`fit`], excluding any I/O.
    pub wall_time: f64,
    pub trace: Vec<IterationRecord>,
}

impl PosteriorApproximation {
    pub fn mode_params(&self) -> EtasParameters {
        EtasParameters::from_array(self.mode_model, self.m0)
    }

    pub fn dim(&self) -> usize {
        self.mode.len()
    }

    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.covariance[i][j])
    }

    /// Internal-scale standard deviation of each free coordinate.
    pub fn internal_sd(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.covariance[i][i].sqrt()).collect()
    }

    /// Copy with the covariance multiplied by `factor`.
    pub fn with_scaled_covariance(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for row in &mut out.covariance {
            for v in row {
                *v *= factor;
            }
        }
        out
    }
}

/// Exact log-posterior on the internal scale.
pub struct LogPosterior<'a> {
    layout: &'a LikelihoodLayout,
    priors: &'a PriorSet,
}

impl<'a> LogPosterior<'a> {
    pub fn new(layout: &'a LikelihoodLayout, priors: &'a PriorSet) -> Self {
        Self { layout, priors }
    }

    pub fn params(&self, theta: &[f64]) -> EtasParameters {
        self.layout.params_at(self.priors, theta)
    }

    pub fn eval(&self, theta: &[f64]) -> Result<f64> {
        Ok(self.layout.exact(&self.params(theta))? + log_prior_internal(theta))
    }

    /// Like [`eval`](Self::eval) but maps failures to −∞.
    pub fn eval_or_neg_inf(&self, theta: &[f64]) -> f64 {
        match self.eval(theta) {
            Ok(v) if v.is_finite() => v,
            _ => f64::NEG_INFINITY,
        }
    }
}

/// The linearized log-likelihood plus the standard-normal log-prior, with the
/// log-intensity terms folded into one affine function.
#[derive(Debug, Clone)]
pub struct ApproximatePosterior {
    center: Vec<f64>,
    integral_values: Vec<f64>,
    integral_gradients: Vec<Vec<f64>>,
    affine_value: f64,
    affine_gradient: Vec<f64>,
}

impl ApproximatePosterior {
    pub fn new(center: &[f64], terms: &[LinearizedTerm]) -> Self {
        let d = center.len();
        let mut integral_values = Vec::new();
        let mut integral_gradients = Vec::new();
        let mut affine_values = Vec::new();
        let mut affine_gradient = vec![0.0; d];
        for term in terms {
            debug_assert_eq!(term.center, center);
            match term.kind() {
                TermKind::Integral => {
                    integral_values.push(term.value_at_center);
                    integral_gradients.push(term.gradient.clone());
                }
                TermKind::LogIntensity => {
                    affine_values.push(term.value_at_center);
                    for (a, g) in affine_gradient.iter_mut().zip(&term.gradient) {
                        *a += g;
                    }
                }
            }
        }
        Self {
            center: center.to_vec(),
            integral_values,
            integral_gradients,
            affine_value: pairwise_sum(&affine_values),
            affine_gradient,
        }
    }

    /// Approximate log-likelihood only (no prior).
    pub fn log_likelihood(&self, theta: &[f64]) -> Option<f64> {
        self.eval(theta, false).map(|(v, _)| v)
    }

    /// Approximate log-posterior and its gradient.
    pub fn value_and_gradient(&self, theta: &[f64]) -> Option<(f64, Vec<f64>)> {
        self.eval(theta, true)
    }

    fn eval(&self, theta: &[f64], with_prior: bool) -> Option<(f64, Vec<f64>)> {
        let d = theta.len();
        let delta: Vec<f64> = theta.iter().zip(&self.center).map(|(t, c)| t - c).collect();
        let mut grad = self.affine_gradient.clone();
        let mut exps = Vec::with_capacity(self.integral_values.len());
        for (v, g) in self.integral_values.iter().zip(&self.integral_gradients) {
            let e = (v + dot(g, &delta)).exp();
            if !e.is_finite() {
                return None;
            }
            for j in 0..d {
                grad[j] -= e * g[j];
            }
            exps.push(e);
        }
        let mut value = -pairwise_sum(&exps) + self.affine_value + dot(&self.affine_gradient, &delta);
        if with_prior {
            value += log_prior_internal(theta);
            for j in 0..d {
                grad[j] -= theta[j];
            }
        }
        Some((value, grad))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Internal starting point for `config.initial`. Coordinates whose initial
/// value sits outside (or at the edge of) the prior support start at the
/// prior median instead.
pub fn initial_internal(priors: &PriorSet, config: &FitConfig) -> Vec<f64> {
    priors
        .free_params()
        .into_iter()
        .map(|p| {
            let link = priors.link(p);
            let u = link.spec.cdf(config.initial[p.index()]);
            if u <= 1e-12 || u >= 1.0 - 1e-12 {
                0.0
            } else {
                link.to_internal(config.initial[p.index()])
            }
        })
        .collect()
}

/// Fits the model to `cat` with extra parents `history`, starting from
/// `config.initial`.
pub fn fit(cat: &Catalog, history: &Catalog, priors: &PriorSet, config: &FitConfig) -> Result<PosteriorApproximation> {
    let start = initial_internal(priors, config);
    fit_from(cat, history, priors, config, &start)
}

/// Like [`fit`] but starting from internal point `start`.
pub fn fit_from(
    cat: &Catalog,
    history: &Catalog,
    priors: &PriorSet,
    config: &FitConfig,
    start: &[f64],
) -> Result<PosteriorApproximation> {
    config.validate()?;
    if cat.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if start.len() != priors.dim() {
        return Err(Error::Precondition(format!(
            "start has {} coordinates, priors have {} free parameters",
            start.len(),
            priors.dim()
        )));
    }
    let clock = Instant::now();
    let layout = LikelihoodLayout::new(cat, history);
    let components: Vec<Component> = layout.components(&config.binning)?;
    let posterior = LogPosterior::new(&layout, priors);

    let mut theta0 = start.to_vec();
    let mut current = posterior.eval(&theta0)?;
    let mut trace = Vec::new();
    let mut converged = false;
    let weights: Vec<f64> = (0..config.line_search_points)
        .map(|i| i as f64 / (config.line_search_points - 1) as f64)
        .collect();

    for iteration in 1..=config.max_iterations {
        let terms = linearize_components(&theta0, priors, &layout, &components, LINEARIZATION_STEP)?;
        let approx = ApproximatePosterior::new(&theta0, &terms);
        let center_gap = approx.log_likelihood(&theta0).ok_or(Error::Overflow)? - (current - log_prior_internal(&theta0));

        let inner = bfgs_maximize(|t| approx.value_and_gradient(t), &theta0, &BfgsOptions::default())
            .ok_or(Error::Overflow)?;
        let theta1 = inner.x;

        // w = 1 keeps θ₀, whose value is already known.
        let candidates: Vec<(f64, f64)> = weights
            .par_iter()
            .map(|&w| {
                if w == 1.0 {
                    return (w, current);
                }
                let blend: Vec<f64> = theta0
                    .iter()
                    .zip(&theta1)
                    .map(|(a, b)| w * a + (1.0 - w) * b)
                    .collect();
                (w, posterior.eval_or_neg_inf(&blend))
            })
            .collect();
        let (weight, best) = candidates
            .iter()
            .copied()
            .fold((1.0, current), |acc, (w, v)| if v > acc.1 { (w, v) } else { acc });
        let next: Vec<f64> = theta0
            .iter()
            .zip(&theta1)
            .map(|(a, b)| weight * a + (1.0 - weight) * b)
            .collect();

        let relative_change = next
            .iter()
            .zip(&theta0)
            .map(|(n, o)| (n - o).abs() / (o.abs() + config.convergence_floor))
            .fold(0.0, f64::max);

        trace.push(IterationRecord {
            iteration,
            theta: next.clone(),
            objective: best,
            weight,
            relative_change,
            center_gap,
            inner_iterations: inner.iterations,
        });
        theta0 = next;
        current = best;
        if relative_change < config.convergence_tol {
            converged = true;
            break;
        }
    }

    let (theta0, current, hessian, polish_steps_used) =
        polish_mode(&posterior, theta0, current, config.hessian_step, config.polish_steps);
    let covariance = invert_negative_hessian(&hessian)?;
    let d = theta0.len();
    let covariance = (0..d)
        .map(|i| (0..d).map(|j| 0.5 * (covariance[(i, j)] + covariance[(j, i)])).collect())
        .collect();

    Ok(PosteriorApproximation {
        free: priors.free_params(),
        mode_model: priors.to_model(&theta0),
        mode: theta0,
        covariance,
        priors: priors.clone(),
        m0: cat.m0(),
        log_posterior_at_mode: current,
        iterations_used: trace.len(),
        converged,
        polish_steps_used,
        wall_time: clock.elapsed().as_secs_f64(),
        trace,
    })
}

/// Solves `(−H + λI) s = g` with the smallest `λ` from `0, 10⁻⁶·scale,
/// 10⁻⁵·scale, …` that makes the matrix positive definite. Reports whether
/// `λ > 0` was needed.
fn ascent_step(hess: &DMatrix<f64>, grad: &DVector<f64>) -> Option<(DVector<f64>, bool)> {
    let neg = -hess;
    let neg = (&neg + neg.transpose()) * 0.5;
    let scale = neg.diagonal().amax().max(1.0);
    let d = neg.nrows();
    let mut lambda = 0.0;
    for _ in 0..14 {
        let shifted = &neg + DMatrix::identity(d, d) * lambda;
        if let Some(chol) = shifted.cholesky() {
            return Some((chol.solve(grad), lambda > 0.0));
        }
        lambda = if lambda == 0.0 { 1e-6 * scale } else { lambda * 10.0 };
    }
    None
}

/// Damped Newton ascent on the exact log-posterior. Returns the final point,
/// its value, the Hessian there and the number of accepted steps.
fn polish_mode(
    posterior: &LogPosterior<'_>,
    mut x: Vec<f64>,
    mut fx: f64,
    h: f64,
    max_steps: usize,
) -> (Vec<f64>, f64, DMatrix<f64>, usize) {
    let mut accepted = 0;
    loop {
        let (grad, hess) = finite_difference_derivatives(posterior, &x, fx, h);
        if accepted >= max_steps {
            return (x, fx, hess, accepted);
        }
        let Some((step, damped)) = ascent_step(&hess, &grad) else {
            return (x, fx, hess, accepted);
        };
        if (!damped && step.amax() < 1e-7) || !step.iter().all(|v| v.is_finite()) {
            return (x, fx, hess, accepted);
        }
        let mut scale = 1.0;
        let mut improved = None;
        for _ in 0..30 {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a + scale * s).collect();
            let ft = posterior.eval_or_neg_inf(&trial);
            if ft > fx {
                improved = Some((trial, ft));
                break;
            }
            scale *= 0.5;
        }
        let Some((trial, ft)) = improved else {
            return (x, fx, hess, accepted);
        };
        let gain = ft - fx;
        x = trial;
        fx = ft;
        accepted += 1;
        if gain < 1e-10 {
            let (_, hess) = finite_difference_derivatives(posterior, &x, fx, h);
            return (x, fx, hess, accepted);
        }
    }
}

/// Central-difference Hessian of the exact log-posterior at `x`.
pub fn finite_difference_hessian(posterior: &LogPosterior<'_>, x: &[f64], fx: f64, h: f64) -> DMatrix<f64> {
    finite_difference_derivatives(posterior, x, fx, h).1
}

/// Central-difference gradient and Hessian from one shared stencil.
fn finite_difference_derivatives(
    posterior: &LogPosterior<'_>,
    x: &[f64],
    fx: f64,
    h: f64,
) -> (DVector<f64>, DMatrix<f64>) {
    let d = x.len();
    let shifted = |steps: &[(usize, f64)]| {
        let mut t = x.to_vec();
        for &(i, s) in steps {
            t[i] += s;
        }
        t
    };
    let mut points: Vec<Vec<f64>> = Vec::new();
    for i in 0..d {
        points.push(shifted(&[(i, h)]));
        points.push(shifted(&[(i, -h)]));
    }
    for i in 0..d {
        for j in (i + 1)..d {
            for (si, sj) in [(h, h), (h, -h), (-h, h), (-h, -h)] {
                points.push(shifted(&[(i, si), (j, sj)]));
            }
        }
    }
    let values: Vec<f64> = points.par_iter().map(|p| posterior.eval_or_neg_inf(p)).collect();

    let mut hess = DMatrix::zeros(d, d);
    for i in 0..d {
        hess[(i, i)] = (values[2 * i] - 2.0 * fx + values[2 * i + 1]) / (h * h);
    }
    let mut k = 2 * d;
    for i in 0..d {
        for j in (i + 1)..d {
            let (pp, pm, mp, mm) = (values[k], values[k + 1], values[k + 2], values[k + 3]);
            let v = (pp - pm - mp + mm) / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
            k += 4;
        }
    }
    let grad = DVector::from_fn(d, |i, _| (values[2 * i] - values[2 * i + 1]) / (2.0 * h));
    (grad, hess)
}

/// `(−H)⁻¹`, requiring `−H` to be positive definite.
fn invert_negative_hessian(hessian: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let neg = -hessian;
    let neg = (&neg + neg.transpose()) * 0.5;
    if neg.iter().any(|v| !v.is_finite()) {
        return Err(Error::IndefiniteHessian {
            directions: (0..neg.nrows()).collect(),
        });
    }
    match neg.clone().cholesky() {
        Some(chol) => Ok(chol.inverse()),
        None => {
            let eig = SymmetricEigen::new(neg);
            let mut directions: Vec<usize> = eig
                .eigenvalues
                .iter()
                .enumerate()
                .filter(|(_, &l)| l <= 0.0)
                .map(|(k, _)| {
                    let v = eig.eigenvectors.column(k);
                    v.iamax()
                })
                .collect();
            directions.sort_unstable();
            directions.dedup();
            Err(Error::IndefiniteHessian { directions })
        }
    }
}

/// Lower-triangular factor of the covariance; falls back to an eigen
/// square root with negative eigenvalues clamped to zero.
fn covariance_factor(cov: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(chol) = cov.clone().cholesky() {
        return chol.l();
    }
    let eig = SymmetricEigen::new(cov.clone());
    let sqrt_vals = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()));
    &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals)
}

/// Internal-scale draws from the Gaussian approximation.
pub fn sample_internal(post: &PosteriorApproximation, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let d = post.dim();
    let factor = covariance_factor(&post.covariance_matrix());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let z = DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(&mut rng)));
            let x = &factor * z;
            post.mode.iter().zip(x.iter()).map(|(m, v)| m + v).collect()
        })
        .collect()
}

/// Model-scale parameter draws: Gaussian draws on the internal scale pushed
/// through each parameter's link. Deterministic given `seed`.
pub fn sample_posterior(post: &PosteriorApproximation, n: usize, seed: u64) -> Result<Vec<EtasParameters>> {
    if n == 0 {
        return Err(Error::Precondition("need at least one draw".into()));
    }
    Ok(sample_internal(post, n, seed)
        .iter()
        .map(|theta| EtasParameters::from_array(post.priors.to_model(theta), post.m0))
        .collect())
}

/// Monte Carlo summary of one parameter on the model scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub param: Param,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
}

impl ParameterSummary {
    pub fn covers(&self, value: f64) -> bool {
        self.q025 <= value && value <= self.q975
    }
}

/// Mean, sd and type-7 quantiles of `n >= 1000` posterior draws for each of
/// the five parameters.
pub fn posterior_summary(post: &PosteriorApproximation, n: usize, seed: u64) -> Result<Vec<ParameterSummary>> {
    if n < 1000 {
        return Err(Error::Precondition(format!("posterior summary needs n >= 1000, got {n}")));
    }
    let draws = sample_posterior(post, n, seed)?;
    Ok(Param::ALL
        .into_iter()
        .map(|param| {
            let mut values: Vec<f64> = draws.iter().map(|d| d.get(param)).collect();
            // Moments about the first draw, so identical draws give sd 0 exactly.
            let shift = values[0];
            let shifted: Vec<f64> = values.iter().map(|v| v - shift).collect();
            let mean_shifted = pairwise_sum(&shifted) / n as f64;
            let mean = shift + mean_shifted;
            let var = shifted.iter().map(|v| (v - mean_shifted).powi(2)).sum::<f64>() / (n - 1) as f64;
            values.sort_by(f64::total_cmp);
            ParameterSummary {
                param,
                mean,
                sd: var.sqrt(),
                q025: quantile_sorted(&values, 0.025),
                q50: quantile_sorted(&values, 0.5),
                q975: quantile_sorted(&values, 0.975),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{aquila_like_fixture, poisson_fixture};
    use crate::priors::FixMode;

    fn poisson_fit() -> (PosteriorApproximation, usize, f64) {
        let fx = poisson_fixture(11).unwrap();
        let mut priors = PriorSet::default();
        priors.fix(Param::K, 0.0, 1e-4, FixMode::Exclude).unwrap();
        let post = fit(&fx.catalog, &fx.history, &priors, &FitConfig::default()).unwrap();
        (post, fx.catalog.len(), fx.catalog.end() - fx.catalog.start())
    }

    #[test]
    fn poisson_mode_matches_mle() {
        let (post, n, t) = poisson_fit();
        assert!(post.converged);
        assert_eq!(post.dim(), 4);
        let mle = n as f64 / t;
        let se = mle / (n as f64).sqrt();
        assert!((post.mode_model[0] - mle).abs() < 2.0 * se, "{} vs {mle}", post.mode_model[0]);
        assert_eq!(post.mode_model[1], 0.0);
    }

    #[test]
    fn restart_at_mode_converges_immediately() {
        let fx = aquila_like_fixture(3).unwrap();
        let priors = PriorSet::default();
        let config = FitConfig::default();
        let post = fit(&fx.catalog, &fx.history, &priors, &config).unwrap();
        let again = fit_from(&fx.catalog, &fx.history, &priors, &config, &post.mode).unwrap();
        assert!(again.converged);
        assert_eq!(again.iterations_used, 1);
    }

    #[test]
    fn trace_is_monotone_and_exact_at_center() {
        let fx = aquila_like_fixture(4).unwrap();
        let post = fit(&fx.catalog, &fx.history, &PriorSet::default(), &FitConfig::default()).unwrap();
        let objectives: Vec<f64> = post.trace.iter().map(|r| r.objective).collect();
        assert!(objectives.windows(2).all(|w| w[1] >= w[0]));
        for r in &post.trace {
            assert!(r.center_gap.abs() < 1e-8, "gap {}", r.center_gap);
            assert!((0.0..=1.0).contains(&r.weight));
        }
        assert!(post.log_posterior_at_mode >= *objectives.last().unwrap());
        let cov = post.covariance_matrix();
        assert_eq!(cov, cov.transpose());
        assert!(cov.cholesky().is_some());
    }

    #[test]
    fn degenerate_covariance_draws_the_mode() {
        let (post, _, _) = poisson_fit();
        let flat = post.with_scaled_covariance(1e-20);
        let mode = flat.mode_params();
        for d in sample_posterior(&flat, 50, 1).unwrap() {
            for param in Param::ALL {
                let (a, b) = (d.get(param), mode.get(param));
                assert!((a - b).abs() <= 1e-8 * b.abs().max(1e-300), "{param}: {a} vs {b}");
            }
        }
        let summary = posterior_summary(&post.with_scaled_covariance(0.0), 1000, 2).unwrap();
        for s in summary {
            assert_eq!(s.sd, 0.0);
            assert_eq!(s.q025, s.q975);
        }
    }

    #[test]
    fn draws_respect_supports_and_center_on_mode() {
        let fx = aquila_like_fixture(5).unwrap();
        let post = fit(&fx.catalog, &fx.history, &PriorSet::default(), &FitConfig::default()).unwrap();
        let n = 4000;
        for d in sample_posterior(&post, n, 9).unwrap() {
            assert!(d.mu > 0.0 && d.k >= 0.0 && d.alpha >= 0.0 && d.c > 0.0 && d.p > 1.0);
        }
        let draws = sample_internal(&post, n, 9);
        let sd = post.internal_sd();
        for j in 0..post.dim() {
            let mean = draws.iter().map(|d| d[j]).sum::<f64>() / n as f64;
            assert!((mean - post.mode[j]).abs() < 4.0 * sd[j] / (n as f64).sqrt());
        }
        assert_eq!(sample_posterior(&post, 10, 9).unwrap(), sample_posterior(&post, 10, 9).unwrap());
    }

    #[test]
    fn summary_properties() {
        let (post, _, _) = poisson_fit();
        assert!(posterior_summary(&post, 999, 1).is_err());
        let n = 20_000;
        let a = posterior_summary(&post, n, 1).unwrap();
        let b = posterior_summary(&post, n, 2).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.mean - y.mean).abs() < 3.0 * x.sd / (n as f64).sqrt() + 1e-300);
        }
        // α has no likelihood information with K = 0, so its internal mode is
        // the prior's 0 and the median maps to the middle of U(0, 10).
        assert!(post.mode[1].abs() < 1e-6);
        assert!((a[2].q50 - 5.0).abs() < 0.2, "median {}", a[2].q50);
    }

    #[test]
    fn indefinite_hessian_reports_directions() {
        let h = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 2.0]);
        match invert_negative_hessian(&h) {
            Err(Error::IndefiniteHessian { directions }) => assert_eq!(directions, vec![1]),
            other => panic!("{other:?}"),
        }
        let ok = invert_negative_hessian(&DMatrix::from_row_slice(1, 1, &[-4.0])).unwrap();
        assert_eq!(ok[(0, 0)], 0.25);
    }

    #[test]
    fn config_validation() {
        assert!(FitConfig { convergence_tol: 0.0, ..Default::default() }.validate().is_err());
        assert!(FitConfig { line_search_points: 1, ..Default::default() }.validate().is_err());
        let json = serde_json::to_string(&FitConfig::default()).unwrap();
        assert_eq!(serde_json::from_str::<FitConfig>(&json).unwrap(), FitConfig::default());
        assert_eq!(serde_json::from_str::<FitConfig>("{}").unwrap(), FitConfig::default());
    }
}
