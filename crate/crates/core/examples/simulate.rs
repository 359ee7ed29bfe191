//! Branching simulation with an imposed mainshock, and an ensemble of
//! replicates.
//!
//! `cargo run --release --example simulate`

use etas_lab::fixtures::{aquila_like_params, fixture_law, FIXTURE_M0};
use etas_lab::scoring::weekly_counts;
use etas_lab::simulator::{simulate_catalog, simulate_ensemble, SimulationConfig};
use etas_lab::{Catalog, Event};

fn main() -> etas_lab::Result<()> {
    let params = aquila_like_params();
    let law = fixture_law();
    let history = Catalog::new(vec![Event::new(70.0, 6.2)], 0.0, 140.0, FIXTURE_M0)?;
    let cfg = SimulationConfig::new(params, law, (0.0, 140.0), 7)?.with_history(history);
    println!("branching ratio {:.3}", cfg.branching_ratio());

    let sim = simulate_catalog(&cfg)?;
    println!("{} events in {} generations", sim.catalog.len(), sim.generations);
    let weeks = weekly_counts(&sim.catalog, 0.0, 20, 7.0);
    for (i, n) in weeks.iter().enumerate() {
        println!("week {:>2} {:>4} {}", i + 1, n, "#".repeat((*n as usize).min(60)));
    }

    let ensemble = simulate_ensemble(&cfg, 200, None)?;
    let mut sizes: Vec<usize> = ensemble.iter().map(|s| s.catalog.len()).collect();
    sizes.sort_unstable();
    println!(
        "200 replicates: median {} events, 95% range [{}, {}]",
        sizes[100], sizes[5], sizes[194]
    );
    Ok(())
}
