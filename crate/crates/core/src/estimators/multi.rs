use std::f64::consts::TAU;

use super::harmonic::{full_path_grid, source_row_potential_with, z_pow};
use super::{partition, run_trials, EstimateRecord};
use crate::error::{Error, Result};
use crate::geometry::OccupancyGrid;
use crate::path_sampler::{sample_full_path, SampledPath};
use crate::rng::RandomSeed;
use crate::stats::{mean_stderr, pairwise_sum};

/// Packets of full paths started on `C_0` and stopped on `C_n`, together
/// with the avoidance/ordering event and the outer-circle gaps.
#[derive(Debug, Clone)]
pub struct PacketConfig {
    pub packets: Vec<Vec<SampledPath>>,
    pub grid: OccupancyGrid,
    /// Packets pairwise disjoint at grid resolution and met in clockwise
    /// order `1, 2, …, l` on the outer circle.
    pub ordered: bool,
    /// For each packet `k`, outer-row columns strictly between packet `k` and
    /// packet `k - 1`; with a single packet, every column.
    pub gaps: Vec<Vec<usize>>,
}

fn validate(p: &[u32], lambdas: &[f64]) -> Result<()> {
    if p.is_empty() || p.len() != lambdas.len() {
        return Err(Error::InvalidArgument("need as many packet sizes as exponents, at least one".into()));
    }
    if p.iter().any(|&k| k == 0 || k > 5) {
        return Err(Error::InvalidArgument("packet sizes must lie in 1..=5".into()));
    }
    if lambdas.iter().any(|&l| !(l >= 0.0)) {
        return Err(Error::InvalidArgument("exponents must be ≥ 0".into()));
    }
    Ok(())
}

/// Sample `Σ p_j` full paths to `C_n` grouped into packets of sizes `p`.
pub fn packet_config(p: &[u32], n: f64, dt: f64, h: f64, seed: RandomSeed) -> Result<PacketConfig> {
    let mut packets = Vec::with_capacity(p.len());
    let mut tag = 0;
    for &size in p {
        let mut packet = Vec::with_capacity(size as usize);
        for _ in 0..size {
            tag += 1;
            packet.push(sample_full_path(n, dt, seed.fork(tag))?);
        }
        packets.push(packet);
    }
    let all: Vec<SampledPath> = packets.iter().flatten().cloned().collect();
    let grid = full_path_grid(&all, n, h)?;
    let g = grid.geom;

    let mut disjoint = true;
    if packets.len() > 1 {
        let rasters: Vec<Vec<bool>> = packets
            .iter()
            .map(|pk| {
                let mut own = OccupancyGrid::empty(g);
                for path in pk {
                    own.stamp(path);
                }
                own.obstacle
            })
            .collect();
        'outer: for a in 0..rasters.len() {
            for b in a + 1..rasters.len() {
                if rasters[a].iter().zip(&rasters[b]).any(|(&x, &y)| x && y) {
                    disjoint = false;
                    break 'outer;
                }
            }
        }
    }

    let (blocks_ok, gaps) = if packets.len() == 1 {
        (true, vec![(0..g.n_theta).collect()])
    } else {
        gap_columns(&packets, &grid)
    };
    Ok(PacketConfig {
        ordered: disjoint && blocks_ok,
        packets,
        grid,
        gaps,
    })
}

/// Check that endpoints form contiguous per-packet blocks in clockwise
/// order and return the column sets of the gaps between blocks.
fn gap_columns(packets: &[Vec<SampledPath>], grid: &OccupancyGrid) -> (bool, Vec<Vec<usize>>) {
    let l = packets.len();
    let mut ends: Vec<(f64, usize)> = packets
        .iter()
        .enumerate()
        .flat_map(|(k, pk)| pk.iter().map(move |p| (p.end_angle(), k)))
        .collect();
    ends.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let m = ends.len();
    let Some(cut) = (0..m).find(|&i| ends[i].1 != ends[(i + m - 1) % m].1) else {
        return (false, vec![Vec::new(); l]);
    };
    ends.rotate_left(cut);
    let mut blocks: Vec<(usize, f64, f64)> = Vec::new();
    for &(a, k) in &ends {
        match blocks.last_mut() {
            Some(b) if b.0 == k => b.2 = a,
            _ => blocks.push((k, a, a)),
        }
    }
    let ok = blocks.len() == l && blocks.iter().enumerate().all(|(i, b)| blocks[(i + 1) % l].0 == (b.0 + l - 1) % l);
    if !ok {
        return (false, vec![Vec::new(); l]);
    }
    let g = grid.geom;
    let mut gaps = vec![Vec::new(); l];
    for (i, b) in blocks.iter().enumerate() {
        let next = blocks[(i + 1) % l];
        let from = b.2;
        let span = (next.1 - from).rem_euclid(TAU);
        gaps[b.0] = (0..g.n_theta)
            .filter(|&c| {
                let centre = g.theta0 + (c as f64 + 0.5) * g.dtheta;
                let off = (centre - from).rem_euclid(TAU);
                off > 0.0 && off < span
            })
            .collect();
    }
    (true, gaps)
}

/// Per-gap avoidance probabilities `Z^k`: a Brownian motion from a uniform
/// point of `C_0` reaching `C_n` through the gap of packet `k` without
/// touching any packet.
pub fn gap_probabilities(cfg: &PacketConfig) -> Result<Vec<f64>> {
    let n = cfg.grid.geom.n_theta;
    cfg.gaps
        .iter()
        .map(|cols| {
            let mut top = vec![0.0; n];
            for &c in cols {
                top[c] = 1.0;
            }
            if cols.is_empty() {
                return Ok(0.0);
            }
            let phi = source_row_potential_with(&cfg.grid, &top)?;
            Ok(pairwise_sum(&phi) / n as f64)
        })
        .collect()
}

/// `E[1_E Π_k (Z^k)^{λ_k}]` over `trials` packet configurations at radius
/// `n`; reported with `lambda = Σ λ_k`.
pub fn estimate_multi_packet(
    p: &[u32],
    lambdas: &[f64],
    n: f64,
    trials: usize,
    dt: f64,
    h: f64,
    seed: u64,
) -> Result<EstimateRecord> {
    validate(p, lambdas)?;
    if !(n >= 1.0) {
        return Err(Error::InvalidArgument(format!("n must be ≥ 1, got {n}")));
    }
    let results = run_trials(trials, seed, |s| {
        let cfg = packet_config(p, n, dt, h, s)?;
        if !cfg.ordered {
            return Ok(0.0);
        }
        let zs = gap_probabilities(&cfg)?;
        Ok(zs.iter().zip(lambdas).map(|(&z, &l)| z_pow(z, l)).product())
    });
    let (xs, _) = partition(results)?;
    let (m, se) = mean_stderr(&xs);
    let quantity = format!(
        "b_multi_{}",
        p.iter().map(|k| k.to_string()).collect::<Vec<_>>().join("_")
    );
    Ok(EstimateRecord::new(&quantity, n, lambdas.iter().sum(), m, se, xs.len(), seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path_sampler::{CylPoint, PathKind};

    fn radial(theta: f64, r: f64) -> SampledPath {
        let pts = (0..=200).map(|k| CylPoint::new(r * k as f64 / 200.0, theta)).collect();
        SampledPath::new(pts, 1e-3, PathKind::FullPath)
    }

    fn synthetic(angles: &[&[f64]]) -> (bool, Vec<Vec<usize>>) {
        let packets: Vec<Vec<SampledPath>> =
            angles.iter().map(|a| a.iter().map(|&t| radial(t, 2.0)).collect()).collect();
        let all: Vec<SampledPath> = packets.iter().flatten().cloned().collect();
        let grid = full_path_grid(&all, 2.0, 0.05).unwrap();
        gap_columns(&packets, &grid)
    }

    #[test]
    fn clockwise_blocks_accepted() {
        // Counterclockwise from packet 0 the next block must be the last packet.
        let (ok, gaps) = synthetic(&[&[0.0], &[4.0], &[2.0]]);
        assert!(ok);
        assert_eq!(gaps.len(), 3);
        assert!(gaps.iter().all(|g| !g.is_empty()));
        let (bad, _) = synthetic(&[&[0.0], &[2.0], &[4.0]]);
        assert!(!bad);
    }

    #[test]
    fn interleaved_packets_rejected() {
        let (ok, _) = synthetic(&[&[0.0, 2.0], &[1.0, 3.0]]);
        assert!(!ok);
    }

    #[test]
    fn sizes_validated() {
        assert!(validate(&[6], &[1.0]).is_err());
        assert!(validate(&[1, 2], &[1.0]).is_err());
        assert!(validate(&[2], &[1.0]).is_ok());
    }

    #[test]
    fn single_packet_matches_a() {
        let s = RandomSeed::new(4, 0);
        let cfg = packet_config(&[2], 2.0, 1e-3, 0.05, s).unwrap();
        let z = gap_probabilities(&cfg).unwrap()[0];
        let direct = super::super::estimate_z(
            &cfg.grid,
            2.0,
            super::super::ZMode::Harmonic,
            1e-3,
            s,
        )
        .unwrap();
        assert!((z - direct).abs() < 1e-12 || direct == f64::MIN_POSITIVE);
    }
}
