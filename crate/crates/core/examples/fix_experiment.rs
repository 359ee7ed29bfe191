//! Fixes one parameter at a time and compares posterior spread and fit time
//! with the full model.
//!
//! `cargo run --release --example fix_experiment`

use etas_lab::cli::{run_fix_experiment, ExperimentSection, GridEntry};
use etas_lab::fixtures::{aquila_like_fixture, aquila_like_params};
use etas_lab::inference::FitConfig;
use etas_lab::{Param, PriorSet};

fn main() -> etas_lab::Result<()> {
    let fx = aquila_like_fixture(0)?;
    let truth = aquila_like_params();
    let experiment = ExperimentSection {
        grid: vec![
            GridEntry { param: Param::Alpha, value: truth.alpha },
            GridEntry { param: Param::K, value: truth.k },
            GridEntry { param: Param::Mu, value: 2.0 * truth.mu },
        ],
        ..Default::default()
    };
    let rows = run_fix_experiment(&fx.catalog, &fx.history, &PriorSet::default(), &experiment, &FitConfig::default(), 10_000)?;
    println!("{:<12} {:>9} {:>9} {:>9} {:>9} {:>8}", "fixed", "mean K", "sd K", "mean a", "sd a", "time s");
    for row in &rows {
        let label = row.fixed.map_or("none".to_string(), |g| format!("{}={:.3}", g.param, g.value));
        let get = |p: Param| row.summary.iter().find(|s| s.param == p).expect("all parameters summarised");
        let (k, a) = (get(Param::K), get(Param::Alpha));
        println!("{label:<12} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>8.3}", k.mean, k.sd, a.mean, a.sd, row.wall_time);
    }
    Ok(())
}
