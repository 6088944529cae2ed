//! Separation ratios at a handful of outer configurations: the mean of the
//! weighted functional restricted to well-separated extensions over the
//! unrestricted one.

use bxi::estimators::{separation_ratio, ConditionalParams};

fn main() -> bxi::Result<()> {
    let params = ConditionalParams { n_outer: 6, n_inner: 16, n_particles: 256, dt: 1e-3, h: 0.05, seed: 21 };
    for s in separation_ratio(2.0, &[0.5, 1.0], &params)? {
        println!(
            "λ = {}: {} configurations, min {:.3e}, median {:.3e}, max {:.3e}",
            s.lambda,
            s.ratios.len(),
            s.min,
            s.median,
            s.max
        );
    }
    Ok(())
}
