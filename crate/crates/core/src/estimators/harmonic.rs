use std::f64::consts::TAU;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{partition, run_trials, Estimates, EstimateRecord};
use crate::error::{Error, Result};
use crate::extremal::{Network, DEFAULT_TOL, MAX_ITERATIONS};
use crate::geometry::{default_u_min, disconnection_test, GridGeometry, InnerCap, OccupancyGrid, MAX_CELL};
use crate::path_sampler::{sample_full_path, sample_full_path_from, SampledPath};
use crate::rng::{RandomSeed, Rng};
use crate::stats::{mean_stderr, proportion};

/// How `Z` is evaluated on a rasterized pair of full paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZMode {
    Harmonic,
    /// Fraction of this many Brownian walkers from uniform points of `C_0`.
    NestedMc(usize),
}

/// Grid for `Z` on the disk of radius `e^r`: rows are laid out so that
/// `u = 0` is a row centre, the lowest row sits just below the deepest
/// point of the paths and the inner cap is a super node.
pub fn full_path_grid(paths: &[SampledPath], r: f64, h: f64) -> Result<OccupancyGrid> {
    if !(h > 0.0) || h > MAX_CELL {
        return Err(Error::InvalidArgument(format!("cell size {h} outside (0, {MAX_CELL}]")));
    }
    let m = (r / h - 0.5).ceil().max(1.0);
    let du = r / (m + 0.5);
    let n_u = ((r - default_u_min(paths)) / du).ceil() as usize;
    let n_theta = (TAU / h - 1e-9).ceil() as usize;
    let geom = GridGeometry {
        u_min: r - n_u as f64 * du,
        u_max: r,
        n_u,
        n_theta,
        du,
        dtheta: TAU / n_theta as f64,
        theta0: 0.0,
        periodic: true,
    };
    let mut grid = OccupancyGrid::empty(geom).with_cap(InnerCap::SuperNode).with_source_at(0.0);
    for p in paths {
        grid.stamp(p);
    }
    Ok(grid)
}

/// Discrete harmonic measure of the outer circle seen from each cell of
/// the source row; obstacle cells read 0.
fn source_row_potential(grid: &OccupancyGrid) -> Result<Vec<f64>> {
    source_row_potential_with(grid, &vec![1.0; grid.geom.n_theta])
}

/// As [`source_row_potential`] with boundary value `top[c]` on the outer
/// edge of column `c`.
pub(crate) fn source_row_potential_with(grid: &OccupancyGrid, top: &[f64]) -> Result<Vec<f64>> {
    let g = grid.geom;
    let row = grid.source_row;
    if disconnection_test(grid) {
        return Ok(vec![0.0; g.n_theta]);
    }
    let reach = grid.reachable_from_outer();
    let mut index = vec![usize::MAX; g.len()];
    let mut n = 0;
    for i in 0..g.len() {
        if reach[i] && !grid.obstacle[i] {
            index[i] = n;
            n += 1;
        }
    }
    let bottom_open = grid.inner_cap == InnerCap::SuperNode && (0..g.n_theta).any(|c| index[g.idx(0, c)] != usize::MAX);
    let aux = n;
    let mut net = Network::new(if bottom_open { n + 1 } else { n });
    let gv = g.dtheta / g.du;
    let gh = g.du / g.dtheta;
    for i in 0..g.len() {
        let a = index[i];
        if a == usize::MAX {
            continue;
        }
        let (r, c) = g.row_col(i);
        let [below, above, left, right] = g.neighbors(i);
        for (nb, w) in [(above, gv), (right, gh), (below, gv), (left, gh)] {
            if let Some(j) = nb {
                if grid.obstacle[j] {
                    net.tie(a, 2.0 * w, 0.0);
                }
            }
        }
        for (nb, w) in [(above, gv), (right, gh)] {
            if let Some(j) = nb {
                if index[j] != usize::MAX {
                    net.edge(a, index[j], w);
                }
            }
        }
        if r + 1 == g.n_u {
            net.tie(a, 2.0 * gv, top[c]);
        }
        if r == 0 {
            match grid.inner_cap {
                InnerCap::SuperNode => net.edge(a, aux, 2.0 * gv),
                InnerCap::Absorb => net.tie(a, 2.0 * gv, 0.0),
            }
        }
    }
    if bottom_open {
        for c in 0..g.n_theta {
            if grid.obstacle[g.idx(0, c)] {
                net.tie(aux, 2.0 * gv, 0.0);
            }
        }
    }
    let sol = net.solve(DEFAULT_TOL, MAX_ITERATIONS)?;
    Ok((0..g.n_theta)
        .map(|c| {
            let i = g.idx(row, c);
            match index[i] {
                usize::MAX => 0.0,
                k => sol.x[k].clamp(0.0, 1.0),
            }
        })
        .collect())
}

/// `Z` (probability that an independent Brownian motion from a uniform
/// point of `C_0` reaches `C_r` avoiding the obstacles) on `grid`.
pub fn estimate_z(grid: &OccupancyGrid, r: f64, mode: ZMode, dt: f64, seed: RandomSeed) -> Result<f64> {
    match mode {
        ZMode::Harmonic => {
            let phi = source_row_potential(grid)?;
            Ok(positive_if_connected(grid, crate::stats::pairwise_sum(&phi) / phi.len() as f64))
        }
        ZMode::NestedMc(m) => {
            if m == 0 {
                return Err(Error::InvalidArgument("need at least one walker".into()));
            }
            let mut rng = seed.rng();
            let mut hits = 0usize;
            for _ in 0..m {
                if walker_escapes(grid, r, dt, &mut rng) {
                    hits += 1;
                }
            }
            Ok(hits as f64 / m as f64)
        }
    }
}

/// `max` of the harmonic solution over the source row.
pub(crate) fn z_hat(grid: &OccupancyGrid) -> Result<f64> {
    let phi = source_row_potential(grid)?;
    Ok(positive_if_connected(grid, phi.iter().cloned().fold(0.0, f64::max)))
}

// The exact discrete solution is strictly positive on every cell joined to
// the outer row; round-off must not turn a connected grid into Z = 0.
fn positive_if_connected(grid: &OccupancyGrid, z: f64) -> f64 {
    if z > 0.0 || disconnection_test(grid) {
        z
    } else {
        f64::MIN_POSITIVE
    }
}

fn walker_escapes(grid: &OccupancyGrid, r: f64, dt: f64, rng: &mut Rng) -> bool {
    let g = grid.geom;
    let sd = dt.sqrt();
    let normal = |rng: &mut Rng| -> f64 { rng.sample(rand_distr::StandardNormal) };
    let (mut u, mut th) = (0.0, rng.random::<f64>() * TAU);
    let blocked = |u: f64, th: f64| -> bool {
        match g.cell_of(crate::path_sampler::CylPoint::new(u, th)) {
            Some(i) => grid.obstacle[i],
            None => false,
        }
    };
    if blocked(u, th) {
        return false;
    }
    loop {
        u += sd * normal(rng);
        th += sd * normal(rng);
        if u >= r {
            return true;
        }
        if u < g.u_min {
            match grid.inner_cap {
                InnerCap::Absorb => return false,
                InnerCap::SuperNode => {
                    u = g.u_min + 0.5 * g.du;
                    th = rng.random::<f64>() * TAU;
                }
            }
        }
        if blocked(u, th) {
            return false;
        }
    }
}

/// `Z^λ` with `0^λ = 0` for every `λ ≥ 0`, so `λ = 0` gives the
/// non-disconnection indicator.
pub(crate) fn z_pow(z: f64, lambda: f64) -> f64 {
    if z > 0.0 {
        z.powf(lambda)
    } else {
        0.0
    }
}

fn sample_pair(r: f64, dt: f64, seed: RandomSeed) -> Result<[SampledPath; 2]> {
    Ok([sample_full_path(r, dt, seed.fork(1))?, sample_full_path(r, dt, seed.fork(2))?])
}

fn power_records(quantity: &str, zs: &[f64], r: f64, lambdas: &[f64], seed: u64) -> Vec<EstimateRecord> {
    lambdas
        .iter()
        .map(|&lambda| {
            let xs: Vec<f64> = zs.iter().map(|&z| z_pow(z, lambda)).collect();
            let (m, se) = mean_stderr(&xs);
            EstimateRecord::new(quantity, r, lambda, m, se, xs.len(), seed)
        })
        .collect()
}

fn check_r(r: f64) -> Result<()> {
    if r >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("r must be ≥ 1, got {r}")))
    }
}

/// `a_r(λ) = E[Z_r^λ]` from `n` pairs of full paths.
pub fn estimate_a(r: f64, lambdas: &[f64], n: usize, dt: f64, h: f64, seed: u64) -> Result<Estimates> {
    check_r(r)?;
    let results = run_trials(n, seed, |s| {
        let paths = sample_pair(r, dt, s)?;
        let grid = full_path_grid(&paths, r, h)?;
        estimate_z(&grid, r, ZMode::Harmonic, dt, s)
    });
    let (zs, excluded) = partition(results)?;
    Ok(Estimates {
        records: power_records("a", &zs, r, lambdas, seed),
        excluded,
    })
}

/// Upper proxy `â_r(λ)`: `Z` replaced by its maximum over `C_0` and the
/// starting points pinned. By rotation invariance the first path starts
/// at angle 0 and the second runs over `start_grid` equally spaced angles;
/// the largest batch mean is reported. `start_grid = 1` uses independent
/// uniform starts.
pub fn estimate_a_hat(
    r: f64,
    lambdas: &[f64],
    n: usize,
    start_grid: usize,
    dt: f64,
    h: f64,
    seed: u64,
) -> Result<Estimates> {
    check_r(r)?;
    if start_grid == 0 {
        return Err(Error::InvalidArgument("start_grid must be ≥ 1".into()));
    }
    let mut best: Vec<Option<EstimateRecord>> = vec![None; lambdas.len()];
    let mut excluded = 0;
    for k in 0..start_grid {
        let batch_seed = RandomSeed::new(seed, k as u64).fork(0xA4A7).value;
        let results = run_trials(n, batch_seed, |s| {
            let paths = if start_grid == 1 {
                sample_pair(r, dt, s)?
            } else {
                let phi = TAU * k as f64 / start_grid as f64;
                [
                    sample_full_path_from(r, dt, 0.0, s.fork(1))?,
                    sample_full_path_from(r, dt, phi, s.fork(2))?,
                ]
            };
            z_hat(&full_path_grid(&paths, r, h)?)
        });
        let (zs, failed) = partition(results)?;
        excluded += failed;
        for (slot, rec) in best.iter_mut().zip(power_records("a_hat", &zs, r, lambdas, seed)) {
            if slot.as_ref().is_none_or(|b| rec.value > b.value) {
                *slot = Some(rec);
            }
        }
    }
    Ok(Estimates {
        records: best.into_iter().flatten().collect(),
        excluded,
    })
}

/// Probability that two full paths do not disconnect `C_0` from `C_r`.
pub fn estimate_disconnection(r: f64, n: usize, dt: f64, h: f64, seed: u64) -> Result<EstimateRecord> {
    check_r(r)?;
    let results = run_trials(n, seed, |s| {
        let paths = sample_pair(r, dt, s)?;
        Ok(!disconnection_test(&full_path_grid(&paths, r, h)?))
    });
    let (open, _) = partition(results)?;
    let k = open.iter().filter(|&&o| o).count();
    let (p, se) = proportion(k, open.len());
    Ok(EstimateRecord::new("p_connected", r, 0.0, p, se, open.len(), seed))
}

/// Everything the series experiments need from one pair of full paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSample {
    /// `min(L¹, L²)` of the upcrossing parts.
    pub l: f64,
    pub l1: f64,
    pub z: f64,
    pub connected: bool,
    pub e_n: bool,
}

/// One pair of full paths to `C_r` evaluated for `b`, `a` and
/// disconnection on shared randomness.
pub fn series_sample(r: f64, dt: f64, h: f64, seed: RandomSeed) -> Result<SeriesSample> {
    check_r(r)?;
    let cfg = super::build_config(r, dt, h, seed, true)?;
    let (y1, y2) = cfg.full_paths.as_ref().expect("built with full paths");
    let grid = full_path_grid(&[y1.clone(), y2.clone()], r, h)?;
    let z = estimate_z(&grid, r, ZMode::Harmonic, dt, seed)?;
    Ok(SeriesSample {
        l: cfg.l,
        l1: cfg.l1,
        z,
        connected: z > 0.0,
        e_n: cfg.flags.e_n.unwrap_or(false),
    })
}

/// `a_r(λ)` records from precomputed `Z` values.
pub fn a_records(zs: &[f64], r: f64, lambdas: &[f64], seed: u64) -> Vec<EstimateRecord> {
    power_records("a", zs, r, lambdas, seed)
}

/// Brute-force `E[Z]`: a third full path avoids the rasterized pair.
pub fn three_path_oracle(r: f64, n: usize, dt: f64, h: f64, seed: u64) -> Result<EstimateRecord> {
    check_r(r)?;
    let results = run_trials(n, seed, |s| {
        let paths = sample_pair(r, dt, s)?;
        let grid = full_path_grid(&paths, r, h)?;
        let w = sample_full_path(r, dt, s.fork(3))?;
        let mut own = OccupancyGrid::empty(grid.geom);
        own.stamp(&w);
        Ok(!own.obstacle.iter().zip(&grid.obstacle).any(|(&a, &b)| a && b))
    });
    let (avoid, _) = partition(results)?;
    let k = avoid.iter().filter(|&&a| a).count();
    let (p, se) = proportion(k, avoid.len());
    Ok(EstimateRecord::new("a_three_path", r, 1.0, p, se, avoid.len(), seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path_sampler::{CylPoint, PathKind};

    fn ring(u: f64) -> SampledPath {
        let pts = (0..=800).map(|k| CylPoint::new(u, TAU * k as f64 / 800.0)).collect();
        SampledPath::new(pts, 1e-3, PathKind::FullPath)
    }

    #[test]
    fn zero_row_is_a_cell_centre() {
        let g = full_path_grid(&[], 2.0, 0.05).unwrap();
        let row = g.source_row;
        assert!(g.geom.center(g.geom.idx(row, 0)).u.abs() < 1e-12);
        assert!(g.geom.du <= 0.05);
    }

    #[test]
    fn empty_grid_gives_one() {
        let g = full_path_grid(&[], 2.0, 0.05).unwrap();
        let z = estimate_z(&g, 2.0, ZMode::Harmonic, 1e-3, RandomSeed::new(0, 0)).unwrap();
        assert!((z - 1.0).abs() < 1e-6);
        assert!((z_hat(&g).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn ring_gives_zero() {
        let g = full_path_grid(&[ring(1.0)], 2.0, 0.05).unwrap();
        assert!(disconnection_test(&g));
        assert_eq!(estimate_z(&g, 2.0, ZMode::Harmonic, 1e-3, RandomSeed::new(0, 0)).unwrap(), 0.0);
        let mc = estimate_z(&g, 2.0, ZMode::NestedMc(200), 1e-3, RandomSeed::new(0, 0)).unwrap();
        assert_eq!(mc, 0.0);
    }

    #[test]
    fn z_pow_zero_lambda_is_indicator() {
        assert_eq!(z_pow(0.0, 0.0), 0.0);
        assert_eq!(z_pow(0.3, 0.0), 1.0);
    }

    #[test]
    fn harmonic_positive_iff_connected() {
        for i in 0..10 {
            let paths = sample_pair(2.0, 1e-3, RandomSeed::new(77, i)).unwrap();
            let g = full_path_grid(&paths, 2.0, 0.05).unwrap();
            let z = estimate_z(&g, 2.0, ZMode::Harmonic, 1e-3, RandomSeed::new(0, 0)).unwrap();
            assert_eq!(z > 0.0, !disconnection_test(&g));
            assert!((0.0..=1.0).contains(&z));
        }
    }
}
