//! Fits the ETAS model to a synthetic aftershock sequence and compares the
//! posterior with the generating parameters.
//!
//! `cargo run --release --example fit`

use etas_lab::fixtures::aquila_like_fixture;
use etas_lab::inference::{fit, posterior_summary, FitConfig};
use etas_lab::PriorSet;

fn main() -> etas_lab::Result<()> {
    let fx = aquila_like_fixture(2)?;
    let post = fit(&fx.catalog, &fx.history, &PriorSet::default(), &FitConfig::default())?;
    println!(
        "{} events, {} iterations, {} polish steps, converged: {}, {:.2}s",
        fx.catalog.len(),
        post.iterations_used,
        post.polish_steps_used,
        post.converged,
        post.wall_time
    );
    for r in &post.trace {
        println!("  iter {:>2}: log posterior {:.4}, w = {:.2}, change {:.4}", r.iteration, r.objective, r.weight, r.relative_change);
    }
    println!("{:>5} {:>9} {:>9} {:>9} {:>19}", "param", "truth", "mean", "sd", "95% interval");
    for s in posterior_summary(&post, 10_000, 0)? {
        println!(
            "{:>5} {:>9.4} {:>9.4} {:>9.4}   [{:.4}, {:.4}]",
            s.param.name(),
            fx.truth.get(s.param),
            s.mean,
            s.sd,
            s.q025,
            s.q975
        );
    }
    Ok(())
}
