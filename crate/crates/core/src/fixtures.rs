//! Seeded synthetic catalogues used by the tests, examples and CLI demos.
//!
//! Nothing here is stored as data: every fixture is regenerated from its seed.

use std::f64::consts::LN_10;

use crate::catalog::{Catalog, Event};
use crate::error::Result;
use crate::model::{EtasParameters, MagnitudeLaw};
use crate::simulator::{simulate_catalog, SimulationConfig};

pub const FIXTURE_M0: f64 = 2.5;

/// Gutenberg–Richter law with b = 1 above [`FIXTURE_M0`].
pub fn fixture_law() -> MagnitudeLaw {
    MagnitudeLaw::new(LN_10, FIXTURE_M0).expect("valid law")
}

/// Parameters of the one-mainshock sequences: modest background, a
/// productive kernel and a branching ratio of about 0.38.
pub fn aquila_like_params() -> EtasParameters {
    EtasParameters::new(0.2, 0.4, 1.9, 0.02, 1.12, FIXTURE_M0)
}

/// Truth for the parameter-recovery catalogues (branching ratio ≈ 0.25).
pub fn recovery_params() -> EtasParameters {
    EtasParameters::new(0.3, 0.1, 2.0, 0.05, 1.15, FIXTURE_M0)
}

/// A synthetic catalogue together with everything used to make it.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub truth: EtasParameters,
    pub law: MagnitudeLaw,
    /// Imposed parents; empty when the catalogue is purely simulated.
    pub history: Catalog,
    pub catalog: Catalog,
    pub seed: u64,
}

fn simulate(truth: EtasParameters, window: (f64, f64), history: Catalog, seed: u64) -> Result<Fixture> {
    let law = fixture_law();
    let cfg = SimulationConfig::new(truth, law, window, seed)?.with_history(history.clone());
    let sim = simulate_catalog(&cfg)?;
    Ok(Fixture {
        truth,
        law,
        history,
        catalog: sim.catalog,
        seed,
    })
}

/// Homogeneous Poisson catalogue: μ = 1 per day over 1000 days, K = 0.
pub fn poisson_fixture(seed: u64) -> Result<Fixture> {
    let truth = EtasParameters::new(1.0, 0.0, 1.0, 0.1, 1.1, FIXTURE_M0);
    let window = (0.0, 1000.0);
    simulate(truth, window, Catalog::empty(window.0, window.1, FIXTURE_M0)?, seed)
}

/// One M6.2 mainshock imposed as history at day 70 of a 140-day window.
pub fn aquila_like_fixture(seed: u64) -> Result<Fixture> {
    aquila_like_with(aquila_like_params(), seed)
}

/// [`aquila_like_fixture`] with other parameters.
pub fn aquila_like_with(truth: EtasParameters, seed: u64) -> Result<Fixture> {
    let window = (0.0, 140.0);
    let history = Catalog::new(vec![Event::new(70.0, 6.2)], window.0, window.1, FIXTURE_M0)?;
    simulate(truth, window, history, seed)
}

/// About 2000 events over 5600 days from [`recovery_params`].
pub fn recovery_fixture(seed: u64) -> Result<Fixture> {
    let window = (0.0, 5600.0);
    simulate(recovery_params(), window, Catalog::empty(window.0, window.1, FIXTURE_M0)?, seed)
}

/// A 300-day catalogue with an M6.5 mainshock planted at day 230: the
/// mainshock is part of the returned catalogue (so it can be found by
/// magnitude) and its offspring run to the end of the window, which leaves
/// ten full weeks after it.
pub fn planted_mainshock_fixture(seed: u64) -> Result<Fixture> {
    let truth = aquila_like_params();
    let window = (0.0, 300.0);
    let mainshock = Event::new(230.0, 6.5);
    let history = Catalog::new(vec![mainshock], window.0, window.1, FIXTURE_M0)?;
    let mut fx = simulate(truth, window, history, seed)?;
    fx.catalog = fx.catalog.merge(&fx.history)?;
    Ok(fx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_subcritical() {
        let law = fixture_law();
        for p in [aquila_like_params(), recovery_params()] {
            let r = p.branching_ratio(&law).unwrap();
            assert!(r > 0.2 && r < 0.6, "ratio {r}");
        }
    }

    #[test]
    fn fixtures_are_deterministic() {
        let a = aquila_like_fixture(7).unwrap();
        let b = aquila_like_fixture(7).unwrap();
        assert_eq!(a.catalog, b.catalog);
    }

    #[test]
    fn planted_mainshock_is_largest_recent_event() {
        let fx = planted_mainshock_fixture(1).unwrap();
        assert!(fx.catalog.events().iter().any(|e| e.time == 230.0 && e.magnitude == 6.5));
    }
}
