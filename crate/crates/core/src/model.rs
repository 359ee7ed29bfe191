//! ETAS triggering kernel, ground intensity and the exponential magnitude law.
//!
//! The intensity implemented here is the time-only ground process
//!
//! ```text
//! λ(t | H_t) = μ + Σ_{t_h < t} K·exp(α(m_h − M₀))·((t − t_h)/c + 1)^(−p)
//! ```
//!
//! Magnitudes are handled separately by [`MagnitudeLaw`], with
//! `m − M₀ ~ Exp(β)`.

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, Event};
use crate::error::{Error, Result};

/// Names of the five fitted parameters, in the order used by every vector in
/// this crate.
pub const PARAM_NAMES: [&str; 5] = ["mu", "K", "alpha", "c", "p"];

/// Index of a fitted parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Param {
    #[serde(rename = "mu")]
    Mu,
    #[serde(rename = "K")]
    K,
    #[serde(rename = "alpha")]
    Alpha,
    #[serde(rename = "c")]
    C,
    #[serde(rename = "p")]
    P,
}

impl Param {
    pub const ALL: [Param; 5] = [Param::Mu, Param::K, Param::Alpha, Param::C, Param::P];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        PARAM_NAMES[self.index()]
    }

    /// Accepts the canonical names plus a few case variants (`k`, `Mu`).
    pub fn from_name(name: &str) -> Option<Param> {
        match name {
            "mu" | "Mu" | "MU" => Some(Param::Mu),
            "K" | "k" => Some(Param::K),
            "alpha" | "Alpha" => Some(Param::Alpha),
            "c" | "C" => Some(Param::C),
            "p" | "P" => Some(Param::P),
            _ => None,
        }
    }
}

impl std::fmt::Display for Param {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// ETAS parameters (μ, K, α, c, p) with the completeness magnitude M₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtasParameters {
    pub mu: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub alpha: f64,
    pub c: f64,
    pub p: f64,
    pub m0: f64,
}

impl EtasParameters {
    pub fn new(mu: f64, k: f64, alpha: f64, c: f64, p: f64, m0: f64) -> Self {
        Self {
            mu,
            k,
            alpha,
            c,
            p,
            m0,
        }
    }

    /// Builds parameters from a `[μ, K, α, c, p]` vector.
    pub fn from_array(values: [f64; 5], m0: f64) -> Self {
        Self::new(values[0], values[1], values[2], values[3], values[4], m0)
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.mu, self.k, self.alpha, self.c, self.p]
    }

    pub fn get(&self, param: Param) -> f64 {
        self.to_array()[param.index()]
    }

    /// Checks μ > 0, K ≥ 0, α ≥ 0, c > 0, p > 1 (all finite).
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, name: &'static str, v: f64, rule: &str| {
            if ok && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    message: format!("{v} violates {rule}"),
                })
            }
        };
        check(self.mu > 0.0, "mu", self.mu, "mu > 0")?;
        check(self.k >= 0.0, "K", self.k, "K >= 0")?;
        check(self.alpha >= 0.0, "alpha", self.alpha, "alpha >= 0")?;
        check(self.c > 0.0, "c", self.c, "c > 0")?;
        check(self.p > 1.0, "p", self.p, "p > 1")?;
        check(true, "m0", self.m0, "finite")
    }

    /// Productivity of a parent of magnitude `m`: K·exp(α(m − M₀)).
    #[inline]
    pub fn productivity(&self, magnitude: f64) -> f64 {
        self.k * (self.alpha * (magnitude - self.m0)).exp()
    }

    /// Kernel at lag `dt >= 0` for a parent of magnitude `magnitude`.
    #[inline]
    pub fn kernel(&self, dt: f64, magnitude: f64) -> f64 {
        self.productivity(magnitude) * (dt / self.c + 1.0).powf(-self.p)
    }

    /// Expected number of direct offspring per event under `law`, or `None`
    /// when β ≤ α and the magnitude factor diverges.
    pub fn branching_ratio(&self, law: &MagnitudeLaw) -> Option<f64> {
        if law.beta <= self.alpha {
            return None;
        }
        Some(self.k * law.beta / (law.beta - self.alpha) * self.c / (self.p - 1.0))
    }
}

/// Rate contributed at time `t` by one parent.
pub fn triggering_rate(params: &EtasParameters, t: f64, parent: &Event) -> Result<f64> {
    if t < parent.time {
        return Err(Error::Precondition(format!(
            "t = {t} precedes parent time {}",
            parent.time
        )));
    }
    Ok(params.kernel(t - parent.time, parent.magnitude))
}

/// μ plus the contributions of every history event strictly before `t`.
pub fn conditional_intensity(params: &EtasParameters, t: f64, history: &Catalog) -> f64 {
    params.mu + triggered_sum(params, t, history.events())
}

/// Σ kernel over `parents` with time strictly before `t`.
pub(crate) fn triggered_sum(params: &EtasParameters, t: f64, parents: &[Event]) -> f64 {
    parents
        .iter()
        .filter(|e| e.time < t)
        .map(|e| params.kernel(t - e.time, e.magnitude))
        .sum()
}

/// Exponential magnitude law: `m − M₀ ~ Exp(β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeLaw {
    pub beta: f64,
    pub m0: f64,
}

impl MagnitudeLaw {
    pub fn new(beta: f64, m0: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "beta",
                message: format!("{beta} violates beta > 0"),
            });
        }
        Ok(Self { beta, m0 })
    }

    /// Gutenberg–Richter b-value corresponding to β (b = β / ln 10). Display
    /// only.
    pub fn b_value(&self) -> f64 {
        self.beta / std::f64::consts::LN_10
    }

    /// E[exp(α(m − M₀))], infinite when β ≤ α.
    pub fn mean_productivity_factor(&self, alpha: f64) -> f64 {
        if self.beta <= alpha {
            f64::INFINITY
        } else {
            self.beta / (self.beta - alpha)
        }
    }
}

/// Inverse-CDF draw: M₀ − ln(1 − u)/β.
pub fn sample_magnitude(law: &MagnitudeLaw, u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Precondition(format!("u = {u} outside (0, 1)")));
    }
    Ok(law.m0 - (-u).ln_1p() / law.beta)
}

/// Maximum-likelihood β̂ = 1 / (mean(m) − M₀).
pub fn estimate_beta(cat: &Catalog) -> Result<MagnitudeLaw> {
    if cat.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let excess = cat.magnitudes().map(|m| m - cat.m0()).sum::<f64>() / cat.len() as f64;
    if excess <= 0.0 {
        return Err(Error::DegenerateMagnitudes);
    }
    MagnitudeLaw::new(1.0 / excess, cat.m0())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> EtasParameters {
        EtasParameters::new(0.5, 0.1, 0.0, 0.1, 1.1, 2.5)
    }

    #[test]
    fn kernel_identity_at_parent_time() {
        let p = EtasParameters::new(0.5, 0.37, 1.3, 0.2, 1.4, 2.5);
        let parent = Event::new(3.0, 2.5);
        assert_eq!(triggering_rate(&p, 3.0, &parent).unwrap(), 0.37);
    }

    #[test]
    fn kernel_reference_values() {
        // 0.1 * 2^-1.1 and e * 0.1 * 2^-1.1
        let parent = Event::new(0.0, 2.5);
        let v = triggering_rate(&params(), 0.1, &parent).unwrap();
        assert_relative_eq!(v, 0.046_651_649_576_840_37, max_relative = 1e-12);

        let mut p = params();
        p.alpha = 1.0;
        let v = triggering_rate(&p, 0.1, &Event::new(0.0, 3.5)).unwrap();
        assert_relative_eq!(v, 0.126_812_331_312_364_3, max_relative = 1e-12);
    }

    #[test]
    fn kernel_rejects_time_before_parent() {
        assert!(triggering_rate(&params(), -0.1, &Event::new(0.0, 3.0)).is_err());
    }

    #[test]
    fn intensity_examples() {
        let empty = Catalog::empty(0.0, 1.0, 2.5).unwrap();
        assert_eq!(conditional_intensity(&params(), 0.5, &empty), 0.5);

        let one = Catalog::new(vec![Event::new(0.0, 2.5)], 0.0, 1.0, 2.5).unwrap();
        assert_relative_eq!(
            conditional_intensity(&params(), 0.1, &one),
            0.546_651_649_576_840_4,
            max_relative = 1e-12
        );

        let two = Catalog::new(vec![Event::new(0.0, 2.5); 2], 0.0, 1.0, 2.5).unwrap();
        let single = conditional_intensity(&params(), 0.1, &one) - 0.5;
        assert_relative_eq!(
            conditional_intensity(&params(), 0.1, &two),
            0.5 + 2.0 * single,
            max_relative = 1e-14
        );
    }

    #[test]
    fn magnitude_sampling_examples() {
        let law = MagnitudeLaw::new(1.0, 2.5).unwrap();
        assert_relative_eq!(
            sample_magnitude(&law, 1.0 - (-1.0f64).exp()).unwrap(),
            3.5,
            max_relative = 1e-14
        );
        assert_relative_eq!(sample_magnitude(&law, 1e-300).unwrap(), 2.5);
        let law = MagnitudeLaw::new(2.0, 0.0).unwrap();
        assert_relative_eq!(
            sample_magnitude(&law, 0.5).unwrap(),
            0.346_573_590_279_972_6,
            max_relative = 1e-14
        );
        assert!(sample_magnitude(&law, 0.0).is_err());
        assert!(sample_magnitude(&law, 1.0).is_err());
    }

    #[test]
    fn beta_estimate_examples() {
        let cat = Catalog::new(vec![Event::new(1.0, 3.5)], 0.0, 2.0, 2.5).unwrap();
        assert_relative_eq!(estimate_beta(&cat).unwrap().beta, 1.0);
        let cat = Catalog::new(vec![Event::new(1.0, 3.0), Event::new(1.5, 4.0)], 0.0, 2.0, 2.5)
            .unwrap();
        assert_relative_eq!(estimate_beta(&cat).unwrap().beta, 1.0);
        let cat = Catalog::new(vec![Event::new(1.0, 2.5)], 0.0, 2.0, 2.5).unwrap();
        assert!(matches!(estimate_beta(&cat), Err(Error::DegenerateMagnitudes)));
    }

    #[test]
    fn validate_rejects_p_at_one() {
        let mut p = params();
        p.p = 1.0;
        assert!(matches!(
            p.validate(),
            Err(Error::InvalidParameter { name: "p", .. })
        ));
        assert!(params().validate().is_ok());
    }

    #[test]
    fn branching_ratio_diverges_when_beta_le_alpha() {
        let p = EtasParameters::new(0.3, 0.1, 2.0, 0.05, 1.15, 2.5);
        assert!(p.branching_ratio(&MagnitudeLaw::new(2.0, 2.5).unwrap()).is_none());
        let eta = p.branching_ratio(&MagnitudeLaw::new(2.5, 2.5).unwrap()).unwrap();
        assert_relative_eq!(eta, 0.1 * 5.0 * 0.05 / 0.15, max_relative = 1e-12);
    }
}
