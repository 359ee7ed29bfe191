//! Priors as transformations of standard-normal coordinates.
//!
//! `cargo run --release --example priors`

use etas_lab::priors::std_normal_quantile;
use etas_lab::{LinkedPrior, Param, PriorSet, PriorSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> etas_lab::Result<()> {
    let set = PriorSet::default();
    for param in Param::ALL {
        let link = set.link(param);
        let values: Vec<String> = [-2.0, 0.0, 2.0].iter().map(|&t| format!("{:.4}", link.to_model(t))).collect();
        println!("{param:>5} {:?}: theta = -2, 0, 2 -> {}", link.spec.kind, values.join(", "));
    }

    // Push standard-normal draws through the Gamma(0.3, 0.6) link.
    let mu = LinkedPrior::new(PriorSpec::gamma(Param::Mu, 0.3, 0.6)?);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let n = 100_000;
    let draws: Vec<f64> = (0..n).map(|_| mu.to_model(std_normal_quantile(rng.gen_range(1e-300..1.0)))).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    println!("Gamma(0.3, 0.6) push-forward: sample mean {mean:.4}, prior mean {:.4}", mu.spec.mean());

    // A near-degenerate prior pins a parameter at a value.
    let mut fixed = PriorSet::default();
    fixed.fix(Param::Alpha, 1.9, 1e-4, etas_lab::FixMode::Prior)?;
    let alpha = fixed.link(Param::Alpha);
    println!("alpha fixed at 1.9: theta = -3, 3 -> {:.5}, {:.5}", alpha.to_model(-3.0), alpha.to_model(3.0));
    Ok(())
}
