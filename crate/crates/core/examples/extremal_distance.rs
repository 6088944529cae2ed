//! Discrete π-extremal distance of rectangles and the three comparison
//! checks on a sampled domain.

use std::f64::consts::PI;

use bxi::estimators::build_config;
use bxi::extremal::{pi_extremal_distance, verify_disk_removal, verify_serial_cut, DEFAULT_TOL};
use bxi::geometry::PathDomainSpec;
use bxi::rng::RandomSeed;

fn main() -> bxi::Result<()> {
    for (l, h) in [(1.0, 0.05), (2.0, 0.02), (4.0, 0.01)] {
        let got = pi_extremal_distance(&PathDomainSpec::rectangle(l, PI, h), DEFAULT_TOL)?.l;
        println!("rectangle {l} x π at h = {h}: L = {got:.6}");
    }

    let rect = PathDomainSpec::rectangle(4.0, PI, 0.05);
    let cut = verify_serial_cut(&rect, 2.0, 0.1)?;
    println!("serial cut at s = 2: L = {:.4}, L1 + L2 = {:.4}", cut.l, cut.l1 + cut.l2);

    let mut skipped = 0;
    for trial in 0..40 {
        let cfg = build_config(4.0, 1e-3, 0.05, RandomSeed::trial(3, trial), false)?;
        let Some(d) = cfg.domains.first.as_ref().filter(|_| cfg.l1.is_finite()) else { continue };
        match verify_disk_removal(d, 0.1) {
            Ok(r) => {
                println!(
                    "sampled domain {trial}: L = {:.4}, after disk removal {:.4}, slack {:.4} ({skipped} skipped)",
                    r.l_before, r.l_after, r.slack
                );
                break;
            }
            Err(_) => skipped += 1,
        }
    }
    Ok(())
}
