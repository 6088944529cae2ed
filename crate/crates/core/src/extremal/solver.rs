//! Jacobi-preconditioned conjugate gradient on weighted graph Laplacians.

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 1_000_000;

/// A resistor network with some nodes tied to fixed potentials.
///
/// Unknown nodes are `0..n`. Links to fixed potentials only touch the
/// diagonal and the right-hand side.
#[derive(Debug, Default, Clone)]
pub struct Network {
    diag: Vec<f64>,
    rhs: Vec<f64>,
    edges: Vec<(u32, u32, f64)>,
    /// (node, conductance, potential) links to fixed values.
    ties: Vec<(u32, f64, f64)>,
    csr_start: Vec<usize>,
    csr_col: Vec<u32>,
    csr_w: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Solve {
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

impl Network {
    pub fn new(n: usize) -> Self {
        Self {
            diag: vec![0.0; n],
            rhs: vec![0.0; n],
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn edge(&mut self, a: usize, b: usize, w: f64) {
        self.diag[a] += w;
        self.diag[b] += w;
        self.edges.push((a as u32, b as u32, w));
    }

    pub fn tie(&mut self, a: usize, w: f64, value: f64) {
        self.diag[a] += w;
        self.rhs[a] += w * value;
        self.ties.push((a as u32, w, value));
    }

    fn build_csr(&mut self) {
        let n = self.len();
        let mut count = vec![0usize; n + 1];
        for &(a, b, _) in &self.edges {
            count[a as usize + 1] += 1;
            count[b as usize + 1] += 1;
        }
        for i in 0..n {
            count[i + 1] += count[i];
        }
        let mut fill = count.clone();
        let m = count[n];
        self.csr_col = vec![0; m];
        self.csr_w = vec![0.0; m];
        for &(a, b, w) in &self.edges {
            let (a, b) = (a as usize, b as usize);
            self.csr_col[fill[a]] = b as u32;
            self.csr_w[fill[a]] = w;
            fill[a] += 1;
            self.csr_col[fill[b]] = a as u32;
            self.csr_w[fill[b]] = w;
            fill[b] += 1;
        }
        self.csr_start = count;
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.len() {
            let mut s = self.diag[i] * x[i];
            for k in self.csr_start[i]..self.csr_start[i + 1] {
                s -= self.csr_w[k] * x[self.csr_col[k] as usize];
            }
            y[i] = s;
        }
    }

    /// Solve `A x = b` to `max|r| ≤ tol`.
    pub fn solve(&mut self, tol: f64, max_iter: usize) -> Result<Solve> {
        self.build_csr();
        let n = self.len();
        let mut x = vec![0.0; n];
        if n == 0 {
            return Ok(Solve { x, residual: 0.0, iterations: 0 });
        }
        // Start from the Jacobi guess.
        for i in 0..n {
            x[i] = if self.diag[i] > 0.0 { self.rhs[i] / self.diag[i] } else { 0.0 };
        }
        let mut ax = vec![0.0; n];
        self.apply(&x, &mut ax);
        let mut r: Vec<f64> = self.rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let inv: Vec<f64> = self.diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 0.0 }).collect();
        let mut z: Vec<f64> = r.iter().zip(&inv).map(|(a, b)| a * b).collect();
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut ap = vec![0.0; n];
        let norm_inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut res = norm_inf(&r);
        let mut it = 0;
        while res > tol {
            if it >= max_iter {
                return Err(Error::NoConvergence { iterations: it, residual: res });
            }
            it += 1;
            self.apply(&p, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if pap <= 0.0 {
                return Err(Error::NoConvergence { iterations: it, residual: res });
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            res = norm_inf(&r);
            for i in 0..n {
                z[i] = r[i] * inv[i];
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Ok(Solve { x, residual: res, iterations: it })
    }

    /// Dirichlet energy of a potential (interior edges plus fixed ties).
    pub fn energy(&self, x: &[f64]) -> f64 {
        let mut e = 0.0;
        for &(a, b, w) in &self.edges {
            let d = x[a as usize] - x[b as usize];
            e += w * d * d;
        }
        for &(a, w, v) in &self.ties {
            let d = x[a as usize] - v;
            e += w * d * d;
        }
        e
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_chain() {
        // 0 -- a -- b -- 1 with unit conductances: potentials 1/3, 2/3.
        let mut net = Network::new(2);
        net.tie(0, 1.0, 0.0);
        net.edge(0, 1, 1.0);
        net.tie(1, 1.0, 1.0);
        let s = net.solve(1e-12, 100).unwrap();
        assert!((s.x[0] - 1.0 / 3.0).abs() < 1e-10);
        assert!((s.x[1] - 2.0 / 3.0).abs() < 1e-10);
        assert!((net.energy(&s.x) - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let mut net = Network::new(50);
        net.tie(0, 1.0, 1.0);
        for i in 0..49 {
            net.edge(i, i + 1, 1.0);
        }
        net.tie(49, 1.0, 0.0);
        match net.solve(1e-14, 2) {
            Err(Error::NoConvergence { iterations, residual }) => {
                assert_eq!(iterations, 2);
                assert!(residual > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
