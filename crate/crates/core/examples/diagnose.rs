//! Normalized inter-event-time distributions of Poisson and clustered
//! catalogues against Exp(1).
//!
//! `cargo run --release --example diagnose`

use etas_lab::fixtures::{aquila_like_params, aquila_like_with, poisson_fixture};
use etas_lab::scoring::{exp1_cdf, ks_distance, normalized_iet_ecdf};

fn main() -> etas_lab::Result<()> {
    let poisson = normalized_iet_ecdf(&poisson_fixture(0)?.catalog)?;
    println!("Poisson catalogue: KS distance to Exp(1) {:.4}", ks_distance(&poisson));

    println!("{:>5} {:>7} {:>10} {:>10}", "mu", "events", "eCDF(0.1)", "KS");
    for mu in [0.1, 0.2, 1.0, 5.0] {
        let mut params = aquila_like_params();
        params.mu = mu;
        let cat = aquila_like_with(params, 0)?.catalog;
        let curve = normalized_iet_ecdf(&cat)?;
        println!("{mu:>5} {:>7} {:>10.3} {:>10.4}", cat.len(), curve.eval(0.1), ks_distance(&curve));
    }
    println!("Exp(1) CDF at 0.1: {:.3}", exp1_cdf(0.1));
    Ok(())
}
