//! π-extremal distance of path domains by discrete Dirichlet energy.
//!
//! For a domain with inner arc `∂₁` and outer arc `∂₂`, the potential that is
//! 0 on `∂₁`, 1 on `∂₂` and has zero flux through the sides minimises the
//! energy, and the π-extremal distance is `π / energy`. On the cylinder the
//! edge conductances are `dθ/du` across rows and `du/dθ` across columns; the
//! Dirichlet arcs sit on the outer edges of their cells (half-cell links), so
//! a full `(0,L) × (0,π)` rectangle returns exactly `L`.

mod lemmas;
mod mass;
pub mod solver;

use std::collections::VecDeque;
use std::f64::consts::PI;

use crate::error::Result;
use crate::geometry::PathDomainSpec;

pub use lemmas::{
    verify_disk_removal, verify_serial_cut, verify_subarc, DiskRemoval, SerialCut, SubArc, SubarcCheck,
    GRID_TOL, DISK_REMOVAL_BOUND, serial_bound, subarc_bound,
};
pub use mass::{excursion_mass_oracle, excursion_mass_rectangle, MassEstimate};
pub use solver::{Network, DEFAULT_TOL, MAX_ITERATIONS};

#[derive(Debug, Clone)]
pub struct HarmonicSolution {
    /// Potential per grid cell; zero outside the solved region.
    pub potential: Vec<f64>,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct ExtremalResult {
    /// π-extremal distance; `f64::INFINITY` when `∂₁` is empty or cut off.
    pub l: f64,
    pub solution: Option<HarmonicSolution>,
}

impl ExtremalResult {
    pub fn infinite() -> Self {
        Self { l: f64::INFINITY, solution: None }
    }

    pub fn is_finite(&self) -> bool {
        self.l.is_finite()
    }
}

/// `exp(-λ L)` with `exp(-λ·∞) = 0` for every `λ ≥ 0`, including `λ = 0`.
pub fn weight(lambda: f64, l: f64) -> f64 {
    if l.is_infinite() {
        0.0
    } else {
        (-lambda * l).exp()
    }
}

/// π-extremal distance between `∂₁` and `∂₂` in `domain`.
pub fn pi_extremal_distance(domain: &PathDomainSpec, tol: f64) -> Result<ExtremalResult> {
    let g = domain.geom;
    if domain.d1.is_empty() || domain.d2.is_empty() {
        return Ok(ExtremalResult::infinite());
    }
    let mut is_floating = vec![false; g.len()];
    for &i in &domain.floating {
        is_floating[i] = true;
    }
    // Restrict to the part connected to ∂₂ (through the floating node too).
    let mut seen = vec![false; g.len()];
    let mut queue: VecDeque<usize> = domain.d2.iter().copied().collect();
    for &i in &domain.d2 {
        seen[i] = true;
    }
    let mut floating_open = false;
    while let Some(i) = queue.pop_front() {
        if is_floating[i] && !floating_open {
            floating_open = true;
            for &j in &domain.floating {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        for j in g.neighbors(i).into_iter().flatten() {
            if domain.mask[j] && !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    if !domain.d1.iter().any(|&i| seen[i]) {
        return Ok(ExtremalResult::infinite());
    }

    let mut index = vec![usize::MAX; g.len()];
    let mut cells = Vec::new();
    for i in 0..g.len() {
        if seen[i] {
            index[i] = cells.len();
            cells.push(i);
        }
    }
    let use_float = floating_open && !domain.floating.is_empty();
    let n = cells.len() + usize::from(use_float);
    let float_node = cells.len();
    let g_row = g.dtheta / g.du;
    let g_col = g.du / g.dtheta;
    let mut net = Network::new(n);
    for (k, &i) in cells.iter().enumerate() {
        let nb = g.neighbors(i);
        // above and right only, so each edge is added once
        if let Some(j) = nb[1] {
            if seen[j] {
                net.edge(k, index[j], g_row);
            }
        }
        if let Some(j) = nb[3] {
            if seen[j] && j != i {
                net.edge(k, index[j], g_col);
            }
        }
    }
    for &i in &domain.d1 {
        if seen[i] {
            net.tie(index[i], 2.0 * g_row, 0.0);
        }
    }
    for &i in &domain.d2 {
        net.tie(index[i], 2.0 * g_row, 1.0);
    }
    if use_float {
        for &i in &domain.floating {
            if seen[i] {
                net.edge(index[i], float_node, 2.0 * g_row);
            }
        }
    }
    let s = net.solve(tol, MAX_ITERATIONS)?;
    let energy = net.energy(&s.x);
    let mut potential = vec![0.0; g.len()];
    for (k, &i) in cells.iter().enumerate() {
        potential[i] = s.x[k];
    }
    Ok(ExtremalResult {
        l: PI / energy,
        solution: Some(HarmonicSolution {
            potential,
            energy,
            residual: s.residual,
            iterations: s.iterations,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{GridGeometry, PathDomainSpec};

    #[test]
    fn rectangle_is_exact() {
        for l in [1.0, 2.0] {
            let d = PathDomainSpec::rectangle(l, PI, 0.02);
            let r = pi_extremal_distance(&d, DEFAULT_TOL).unwrap();
            assert!((r.l - l).abs() / l < 1e-6, "L = {l}: got {}", r.l);
            let s = r.solution.unwrap();
            assert!(s.potential.iter().all(|&p| (0.0..=1.0).contains(&p)));
            assert!(s.residual <= DEFAULT_TOL);
        }
    }

    #[test]
    fn empty_inner_arc_is_infinite() {
        let mut d = PathDomainSpec::rectangle(1.0, PI, 0.05);
        d.d1.clear();
        let r = pi_extremal_distance(&d, DEFAULT_TOL).unwrap();
        assert!(r.l.is_infinite());
        assert_eq!(weight(0.0, r.l), 0.0);
        assert_eq!(weight(1.0, r.l), 0.0);
    }

    #[test]
    fn cut_off_inner_arc_is_infinite() {
        let g = GridGeometry::rectangle(1.0, PI, 0.05);
        let mut mask = vec![true; g.len()];
        for c in 0..g.n_theta {
            mask[g.idx(5, c)] = false;
        }
        let d = PathDomainSpec::from_mask(g, mask);
        assert!(pi_extremal_distance(&d, DEFAULT_TOL).unwrap().l.is_infinite());
    }
}
