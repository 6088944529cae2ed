//! Estimate b_r(λ) over a few radii and fit its decay rate against the exact
//! exponent.

use bxi::estimators::{estimate_b, EventFilter};
use bxi::exponents::{fit_exponent, flatness, xi_exact};

fn main() -> bxi::Result<()> {
    let lambda = 1.0;
    let mut records = Vec::new();
    for r in [1.0, 2.0, 3.0, 4.0] {
        let est = estimate_b(r, &[lambda], 400, EventFilter::None, 1e-3, 0.05, 11)?;
        let rec = est.records[0].clone();
        println!("r = {r}: b = {:.4e} ± {:.1e} ({} excluded)", rec.value, rec.stderr, est.excluded);
        records.push(rec);
    }
    let fit = fit_exponent(&records)?;
    let exact = xi_exact(lambda)?;
    println!("fitted ξ = {:.3} ± {:.3}, exact ξ(2, {lambda}) = {exact}", fit.xi_hat, fit.stderr);
    println!("flatness band of e^(rξ) b_r: {:.3}", flatness(&records, exact)?.band_ratio());
    Ok(())
}
