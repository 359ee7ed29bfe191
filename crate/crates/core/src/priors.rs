//! Priors on the five ETAS parameters and the inverse-PIT link.
//!
//! Every parameter is fitted on an internal scale where its prior is a
//! standard normal. A [`LinkedPrior`] maps an internal value `θ` to the model
//! scale through `F⁻¹(Φ(θ))`, where `F` is the target prior CDF, so the
//! pushed-forward distribution is exactly the target prior.
//!
//! Gamma priors use the shape–rate convention: `Gamma(shape, rate)` has mean
//! `shape / rate` and variance `shape / rate²`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};
use crate::model::Param;

/// Probabilities fed to a quantile function are clamped to
/// `[TAIL_CLAMP, 1 - TAIL_CLAMP]`.
pub const TAIL_CLAMP: f64 = 1e-15;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Φ(θ), the standard normal CDF.
pub fn std_normal_cdf(theta: f64) -> f64 {
    0.5 * libm::erfc(-theta / std::f64::consts::SQRT_2)
}

/// Φ⁻¹(u) for `0 < u < 1`: Wichura's AS241 followed by one Newton step.
pub fn std_normal_quantile(u: f64) -> f64 {
    if !(u > 0.0) {
        return f64::NEG_INFINITY;
    }
    if !(u < 1.0) {
        return f64::INFINITY;
    }
    let x = as241(u);
    let r = (std_normal_cdf(x) - u) / std_normal_pdf(x);
    if r.is_finite() {
        x - r
    } else {
        x
    }
}

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn as241(u: f64) -> f64 {
    const A: [f64; 8] = [
        3.387_132_872_796_366_5,
        133.141_667_891_784_38,
        1_971.590_950_306_551_4,
        13_731.693_765_509_46,
        45_921.953_931_549_87,
        67_265.770_927_008_7,
        33_430.575_583_588_13,
        2_509.080_928_730_122_7,
    ];
    const B: [f64; 8] = [
        1.0,
        42.313_330_701_600_91,
        687.187_007_492_057_9,
        5_394.196_021_424_751,
        21_213.794_301_586_597,
        39_307.895_800_092_71,
        28_729.085_735_721_943,
        5_226.495_278_852_545,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_5,
        4.630_337_846_156_546,
        5.769_497_221_460_691,
        3.647_848_324_763_204_5,
        1.270_458_252_452_368_4,
        0.241_780_725_177_450_6,
        0.022_723_844_989_269_184,
        7.745_450_142_783_414e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_759,
        1.676_384_830_183_803_8,
        0.689_767_334_985_1,
        0.148_103_976_427_480_08,
        0.015_198_666_563_616_457,
        5.475_938_084_995_345e-4,
        1.050_750_071_644_416_9e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103,
        5.463_784_911_164_114,
        1.784_826_539_917_291_3,
        0.296_560_571_828_504_9,
        0.026_532_189_526_576_124,
        0.001_242_660_947_388_078_4,
        2.711_555_568_743_487_6e-5,
        2.010_334_399_292_288_1e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        0.599_832_206_555_888,
        0.136_929_880_922_735_8,
        0.014_875_361_290_850_615,
        7.868_691_311_456_133e-4,
        1.846_318_317_510_054_8e-5,
        1.421_511_758_316_446e-7,
        2.044_263_103_389_939_7e-15,
    ];
    let q = u - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let tail = if q < 0.0 { u } else { 1.0 - u };
    let r = (-tail.ln()).sqrt();
    let x = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

/// Standard normal density.
pub fn std_normal_pdf(theta: f64) -> f64 {
    (-0.5 * theta * theta - LN_SQRT_2PI).exp()
}

/// Prior family.
///
/// Serializes as `{"gamma": [shape, rate]}` or `{"uniform": [low, high]}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorKind {
    Gamma(f64, f64),
    Uniform(f64, f64),
}

/// A prior for one named parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub param: Param,
    pub kind: PriorKind,
}

impl PriorSpec {
    pub fn new(param: Param, kind: PriorKind) -> Result<Self> {
        match kind {
            PriorKind::Gamma(shape, rate) => {
                if !(shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()) {
                    return Err(Error::Domain(format!(
                        "gamma prior for {param} needs shape > 0 and rate > 0, got ({shape}, {rate})"
                    )));
                }
            }
            PriorKind::Uniform(low, high) => {
                if !(low < high && low.is_finite() && high.is_finite()) {
                    return Err(Error::Domain(format!(
                        "uniform prior for {param} needs low < high, got ({low}, {high})"
                    )));
                }
            }
        }
        Ok(Self { param, kind })
    }

    pub fn gamma(param: Param, shape: f64, rate: f64) -> Result<Self> {
        Self::new(param, PriorKind::Gamma(shape, rate))
    }

    pub fn uniform(param: Param, low: f64, high: f64) -> Result<Self> {
        Self::new(param, PriorKind::Uniform(low, high))
    }

    /// `μ ~ Gamma(0.3, 0.6)`, `K, α, c ~ U(0, 10)`, `p ~ U(1, 10)`.
    pub fn default_for(param: Param) -> Self {
        let kind = match param {
            Param::Mu => PriorKind::Gamma(0.3, 0.6),
            Param::K | Param::Alpha | Param::C => PriorKind::Uniform(0.0, 10.0),
            Param::P => PriorKind::Uniform(1.0, 10.0),
        };
        Self { param, kind }
    }

    pub fn mean(&self) -> f64 {
        match self.kind {
            PriorKind::Gamma(shape, rate) => shape / rate,
            PriorKind::Uniform(low, high) => 0.5 * (low + high),
        }
    }

    pub fn variance(&self) -> f64 {
        match self.kind {
            PriorKind::Gamma(shape, rate) => shape / (rate * rate),
            PriorKind::Uniform(low, high) => (high - low).powi(2) / 12.0,
        }
    }

    /// Forward CDF.
    pub fn cdf(&self, x: f64) -> f64 {
        match self.kind {
            PriorKind::Gamma(shape, rate) => {
                if x <= 0.0 {
                    0.0
                } else if x.is_infinite() {
                    1.0
                } else {
                    regularized_lower_gamma(shape, rate * x)
                }
            }
            PriorKind::Uniform(low, high) => ((x - low) / (high - low)).clamp(0.0, 1.0),
        }
    }

    /// Inverse CDF for `0 < u < 1`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("probability {u} outside (0, 1)")));
        }
        Ok(match self.kind {
            PriorKind::Uniform(low, high) => low + u * (high - low),
            PriorKind::Gamma(shape, rate) => gamma_quantile(shape, u) / rate,
        })
    }

    /// A near-degenerate prior of the same family centred on `value`:
    /// `Gamma(value·ε, ε)` or `U(value − ε, value + ε)`, the latter truncated
    /// below at the parameter's natural lower bound.
    pub fn fixed_like(&self, value: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Domain(format!("epsilon must be > 0, got {epsilon}")));
        }
        if !value.is_finite() {
            return Err(Error::Domain(format!("non-finite fixed value for {}", self.param)));
        }
        match self.kind {
            PriorKind::Gamma(..) => {
                if value <= 0.0 {
                    return Err(Error::Domain(format!(
                        "{} fixed at {value}: gamma support is (0, inf)",
                        self.param
                    )));
                }
                Self::gamma(self.param, value * epsilon, epsilon)
            }
            PriorKind::Uniform(..) => {
                let floor = natural_lower_bound(self.param);
                if value < floor {
                    return Err(Error::Domain(format!(
                        "{} fixed at {value}: below support bound {floor}",
                        self.param
                    )));
                }
                let low = (value - epsilon).max(floor);
                Self::uniform(self.param, low, value + epsilon)
            }
        }
    }
}

fn natural_lower_bound(param: Param) -> f64 {
    match param {
        Param::P => 1.0,
        _ => 0.0,
    }
}

/// Near-degenerate prior for `param` at `value`, using the family of the
/// default prior for that parameter.
pub fn make_fixed_prior(param: Param, value: f64, epsilon: f64) -> Result<PriorSpec> {
    PriorSpec::default_for(param).fixed_like(value, epsilon)
}

/// Quantile of the unit-rate gamma distribution with the given shape.
///
/// Safeguarded Newton iteration on `y = ln x` against `P(shape, e^y) = u`,
/// falling back to bisection whenever the Newton step leaves the bracket.
/// P(a, x). Below `a + 1` the power series is summed in log space, which
/// stays accurate for tiny `x` where `gamma_lr` loses precision.
fn regularized_lower_gamma(a: f64, x: f64) -> f64 {
    if x >= a + 1.0 {
        return gamma_lr(a, x);
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..1000 {
        term *= x / (a + n as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    (a * x.ln() - x - ln_gamma(a + 1.0) + sum.ln()).exp()
}

fn gamma_quantile(shape: f64, u: f64) -> f64 {
    let lg = ln_gamma(shape);
    let cdf = |y: f64| {
        let x = y.exp();
        if x <= 0.0 {
            0.0
        } else if !x.is_finite() {
            1.0
        } else {
            regularized_lower_gamma(shape, x)
        }
    };
    // d/dy P(shape, e^y) = e^{y·shape − e^y} / Γ(shape)
    let dcdf = |y: f64| (shape * y - y.exp() - lg).exp();

    let start = shape.ln();
    let (mut lo, mut hi) = (start, start);
    let mut step = 1.0;
    while cdf(lo) > u {
        lo -= step;
        step *= 2.0;
        if lo < -1e4 {
            return 0.0;
        }
    }
    step = 1.0;
    while cdf(hi) < u {
        hi += step;
        step *= 2.0;
        if hi > 800.0 {
            return f64::MAX;
        }
    }

    let mut y = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = cdf(y) - u;
        if f == 0.0 {
            return y.exp();
        }
        if f < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let d = dcdf(y);
        let newton = y - f / d;
        let next = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - y).abs() < 1e-14 * (1.0 + y.abs()) || hi - lo < 1e-14 * (1.0 + y.abs()) {
            return next.exp();
        }
        y = next;
    }
    y.exp()
}

/// A prior together with its inverse-PIT link from the standard-normal
/// internal scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkedPrior {
    pub spec: PriorSpec,
}

impl LinkedPrior {
    pub fn new(spec: PriorSpec) -> Self {
        Self { spec }
    }

    /// `F⁻¹(Φ(θ))`, with Φ(θ) clamped to `[TAIL_CLAMP, 1 − TAIL_CLAMP]`.
    pub fn to_model(&self, theta: f64) -> f64 {
        let u = std_normal_cdf(theta).clamp(TAIL_CLAMP, 1.0 - TAIL_CLAMP);
        self.spec
            .quantile(u)
            .expect("clamped probability lies in (0, 1)")
    }

    /// `Φ⁻¹(F(x))`, the internal value mapping to `x`.
    pub fn to_internal(&self, x: f64) -> f64 {
        let u = self.spec.cdf(x).clamp(TAIL_CLAMP, 1.0 - TAIL_CLAMP);
        std_normal_quantile(u)
    }
}

/// Maps an internal value to the model scale.
pub fn link_to_model_scale(lp: &LinkedPrior, theta: f64) -> f64 {
    lp.to_model(theta)
}

/// Σ standard-normal log-densities over the coordinates of `theta`.
pub fn log_prior_internal(theta: &[f64]) -> f64 {
    theta.iter().map(|t| -0.5 * t * t - LN_SQRT_2PI).sum()
}

/// How a parameter marked as fixed enters the fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixMode {
    /// Replace the prior by a near-degenerate prior of the same family; the
    /// coordinate stays in the optimisation.
    #[default]
    Prior,
    /// Hold the model-scale value constant and drop the coordinate.
    Exclude,
}

/// Priors for all five parameters, plus any coordinates excluded from the
/// fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSet {
    links: [LinkedPrior; 5],
    excluded: [Option<f64>; 5],
}

impl Default for PriorSet {
    fn default() -> Self {
        Self::from_specs(Param::ALL.map(PriorSpec::default_for))
            .expect("default priors are ordered")
    }
}

impl PriorSet {
    /// Builds from one spec per parameter, in `[μ, K, α, c, p]` order.
    pub fn from_specs(specs: [PriorSpec; 5]) -> Result<Self> {
        for (spec, param) in specs.iter().zip(Param::ALL) {
            if spec.param != param {
                return Err(Error::Config(format!(
                    "prior for {} supplied in slot of {param}",
                    spec.param
                )));
            }
        }
        Ok(Self {
            links: specs.map(LinkedPrior::new),
            excluded: [None; 5],
        })
    }

    pub fn link(&self, param: Param) -> &LinkedPrior {
        &self.links[param.index()]
    }

    pub fn links(&self) -> &[LinkedPrior; 5] {
        &self.links
    }

    pub fn set_prior(&mut self, spec: PriorSpec) {
        self.links[spec.param.index()] = LinkedPrior::new(spec);
        self.excluded[spec.param.index()] = None;
    }

    /// Fixes `param` at `value`.
    pub fn fix(&mut self, param: Param, value: f64, epsilon: f64, mode: FixMode) -> Result<()> {
        let spec = self.links[param.index()].spec.fixed_like(value, epsilon)?;
        match mode {
            FixMode::Prior => self.set_prior(spec),
            FixMode::Exclude => self.excluded[param.index()] = Some(value),
        }
        Ok(())
    }

    pub fn excluded_value(&self, param: Param) -> Option<f64> {
        self.excluded[param.index()]
    }

    /// Parameters that carry an internal coordinate, in canonical order.
    pub fn free_params(&self) -> Vec<Param> {
        Param::ALL
            .into_iter()
            .filter(|p| self.excluded[p.index()].is_none())
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.excluded.iter().filter(|e| e.is_none()).count()
    }

    /// Model-scale `[μ, K, α, c, p]` for an internal vector over the free
    /// parameters.
    pub fn to_model(&self, theta: &[f64]) -> [f64; 5] {
        debug_assert_eq!(theta.len(), self.dim());
        let mut free = theta.iter();
        Param::ALL.map(|p| match self.excluded[p.index()] {
            Some(v) => v,
            None => self.links[p.index()].to_model(*free.next().expect("dimension checked")),
        })
    }

    /// Internal coordinates of the free parameters for model values `x`.
    pub fn to_internal(&self, x: &[f64; 5]) -> Vec<f64> {
        self.free_params()
            .into_iter()
            .map(|p| self.links[p.index()].to_internal(x[p.index()]))
            .collect()
    }
}
