//! Sample a pair of upcrossings, rasterize them and look at the two outer
//! domains they cut out, with their π-extremal distances.

use bxi::estimators::{build_config, full_path_grid};
use bxi::geometry::{disconnection_test, PathDomainSpec};
use bxi::rng::RandomSeed;

fn main() -> bxi::Result<()> {
    let (r, dt, h) = (3.0, 1e-3, 0.05);
    for trial in 0..5 {
        let cfg = build_config(r, dt, h, RandomSeed::trial(7, trial), true)?;
        let cells = |d: &Option<PathDomainSpec>| d.as_ref().map_or(0, |d| d.cell_count());
        let (y1, y2) = cfg.full_paths.as_ref().expect("requested full paths");
        let grid = full_path_grid(&[y1.clone(), y2.clone()], r, h)?;
        println!(
            "trial {trial}: L1 = {:8.3}  L2 = {:8.3}  domains {:>5} / {:>5} cells  obstacles {:>5}  disconnected {}",
            cfg.l1,
            cfg.l2,
            cells(&cfg.domains.first),
            cells(&cfg.domains.second),
            grid.obstacle_count(),
            disconnection_test(&grid)
        );
    }
    Ok(())
}
