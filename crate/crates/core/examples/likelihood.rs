//! Exact, binned and linearized log-likelihood of a clustered catalogue.
//!
//! `cargo run --release --example likelihood`

use etas_lab::fixtures::aquila_like_fixture;
use etas_lab::likelihood::{
    approximate_log_likelihood, linearize_log_terms, log_likelihood_binned, log_likelihood_exact, LikelihoodLayout,
};
use etas_lab::{BinningConfig, PriorSet};

fn main() -> etas_lab::Result<()> {
    let fx = aquila_like_fixture(1)?;
    println!("{} events in [{}, {}], history: {} event(s)", fx.catalog.len(), fx.catalog.start(), fx.catalog.end(), fx.history.len());

    let binning = BinningConfig::default();
    let exact = log_likelihood_exact(&fx.truth, &fx.catalog, &fx.history)?;
    let binned = log_likelihood_binned(&fx.truth, &fx.catalog, &fx.history, &binning)?;
    println!("exact  log L at truth: {exact:.10}");
    println!("binned log L at truth: {binned:.10}");

    // Linearize every component at the truth and move one coordinate away.
    let priors = PriorSet::default();
    let layout = LikelihoodLayout::new(&fx.catalog, &fx.history);
    let center = priors.to_internal(&fx.truth.to_array());
    let terms = linearize_log_terms(&center, &priors, &layout, &binning)?;
    println!("{} linearized components", terms.len());
    for shift in [0.0, 0.05, 0.2] {
        let mut theta = center.clone();
        theta[1] += shift;
        let approx = approximate_log_likelihood(&theta, &terms)?;
        let exact = layout.exact(&layout.params_at(&priors, &theta))?;
        println!("K coordinate +{shift:<4}: approximate {approx:.4}, exact {exact:.4}");
    }
    Ok(())
}
