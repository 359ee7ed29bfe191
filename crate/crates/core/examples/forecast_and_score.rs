//! Trains on the events before a mainshock, forecasts ten weekly counts
//! from posterior-predictive simulations and scores them against what
//! happened.
//!
//! `cargo run --release --example forecast_and_score`

use etas_lab::cli::{forecast_after_mainshock, ForecastSection};
use etas_lab::fixtures::planted_mainshock_fixture;
use etas_lab::inference::FitConfig;
use etas_lab::scoring::score_forecast;
use etas_lab::PriorSet;

fn main() -> etas_lab::Result<()> {
    let fx = planted_mainshock_fixture(0)?;
    let section: ForecastSection = serde_json::from_str(r#"{ "mainshock_threshold": 6.5, "n_replicates": 1000, "seed": 0 }"#)?;
    let fc = forecast_after_mainshock(&fx.catalog, &section, &PriorSet::default(), &FitConfig::default(), None)?;
    println!(
        "mainshock M{} at day {}; beta {:.3}; {} of {} replicates hit the event cap",
        fc.mainshock.magnitude,
        fc.mainshock.time,
        fc.beta,
        fc.overflowed_replicates,
        fc.ensemble.n_replicates()
    );

    let report = score_forecast(&fc.ensemble, &fc.observed)?;
    println!("{:>4} {:>8} {:>7} {:>16} {:>7} {:>8}", "week", "observed", "median", "95% band", "delta2", "CRPS");
    for p in &report.periods {
        println!(
            "{:>4} {:>8} {:>7} {:>16} {:>7.3} {:>8.3}",
            p.period,
            p.observed,
            p.median,
            format!("[{}, {}]", p.lo95, p.hi95),
            p.delta2,
            p.crps
        );
    }
    println!("{}/10 weeks inside the 95% band", report.coverage());
    Ok(())
}
