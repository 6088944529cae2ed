//! Draw a full path, cut out its upcrossing and extend it by conditioned
//! rejection, then check the logarithmic gambler's ruin on a small batch.

use bxi::geometry::loop_in_annulus;
use bxi::path_sampler::{extend_conditioned, hits_outer_first, sample_full_path, AnnulusSpec};
use bxi::rng::RandomSeed;
use bxi::stats::proportion;

fn main() -> bxi::Result<()> {
    let dt = 1e-3;
    let path = sample_full_path(2.0, dt, RandomSeed::new(1, 0))?;
    println!(
        "full path to C_2: {} steps, deepest log-radius {:.3}, end angle {:.3}",
        path.len(),
        path.min_u(),
        path.end_angle()
    );
    println!("winds once inside A(0.5, 1.5): {}", loop_in_annulus(&path, AnnulusSpec::new(0.5, 1.5)?));

    let up = path.upcrossing_part();
    println!("upcrossing: {} steps from angle {:.3}", up.len(), up.start_angle());

    let ext = extend_conditioned(&up, 3.0, dt, RandomSeed::new(1, 1))?;
    println!("extension to C_3 accepted after {} attempts, {} steps", ext.attempts, ext.path.len());

    let n = 2000;
    let mut rng = RandomSeed::new(2, 0).rng();
    let mut hits = 0;
    for _ in 0..n {
        hits += hits_outer_first(1.0, 2.0, dt, &mut rng)? as usize;
    }
    let (p, se) = proportion(hits, n);
    println!("P(hit C_2 before C_0 from C_1) = {p:.4} ± {se:.4} (exact 0.5)");
    Ok(())
}
