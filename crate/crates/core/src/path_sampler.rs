//! Planar Brownian paths, Brownian upcrossings of annuli and conditioned
//! extensions.
//!
//! All samplers step in cylinder coordinates `(u, θ) = (log|z|, arg z)`. By
//! conformal invariance of planar Brownian motion under `log`, the
//! time-changed process `(u, θ)` is itself a planar Brownian motion, so fixed
//! Gaussian steps of variance `dt` per coordinate are exact in law at grid
//! times and the resolution is the same at every scale.
//!
//! Upcrossings use the Bessel-3 construction: the radial log-coordinate is the
//! norm of a three-dimensional Gaussian walk started at the origin and the
//! angle an independent Brownian motion from a uniform start.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{RandomSeed, Rng};

/// Maximum number of Gaussian steps any single sampler call may take.
pub const STEP_CAP: u64 = 10_000_000_000;

/// Full paths that dive below this log-radius skip the rest of the
/// excursion: the return to the floor is drawn from the exact first-passage
/// law and only its angular displacement is kept.
pub const DEEP_FLOOR: f64 = -6.5;

/// Lowest level tracked in [`SampledPath::hit_indices`].
const LOWEST_TRACKED: f64 = -2.0;

/// Endpoint tolerance `5√dt`.
pub fn tol(dt: f64) -> f64 {
    5.0 * dt.sqrt()
}

/// Default time step: `1e-4` up to log-radius 4, `1e-3` beyond.
pub fn default_dt(r: f64) -> f64 {
    if r <= 4.0 {
        1e-4
    } else {
        1e-3
    }
}

/// A point on the cylinder. `theta` is unwrapped (not reduced mod 2π).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylPoint {
    pub u: f64,
    pub theta: f64,
}

impl CylPoint {
    pub fn new(u: f64, theta: f64) -> Self {
        Self { u, theta }
    }

    /// Cartesian coordinates of `exp(u + iθ)`.
    pub fn planar(&self) -> (f64, f64) {
        let r = self.u.exp();
        (r * self.theta.cos(), r * self.theta.sin())
    }

    pub fn from_planar(x: f64, y: f64) -> Self {
        Self::new(0.5 * (x * x + y * y).ln(), y.atan2(x))
    }

    fn lerp(a: CylPoint, b: CylPoint, t: f64) -> CylPoint {
        CylPoint::new(a.u + t * (b.u - a.u), a.theta + t * (b.theta - a.theta))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    FullPath,
    Upcrossing,
    Extension,
}

/// Annulus `A(r_in, r_out)` given by its two log-radii.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusSpec {
    pub r_in: f64,
    pub r_out: f64,
}

impl AnnulusSpec {
    pub fn new(r_in: f64, r_out: f64) -> Result<Self> {
        if !(r_in < r_out) || !r_in.is_finite() || !r_out.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "annulus needs r_in < r_out, got ({r_in}, {r_out})"
            )));
        }
        Ok(Self { r_in, r_out })
    }

    pub fn width(&self) -> f64 {
        self.r_out - self.r_in
    }
}

/// Key of a tracked level: twice the log-radius, so half-integers are exact.
fn level_key(level: f64) -> i32 {
    (2.0 * level).round() as i32
}

/// A discretized trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    pub points: Vec<CylPoint>,
    pub dt: f64,
    /// First index reaching each visited integer or half-integer log-radius
    /// in `[-2, max u]`, keyed by twice the log-radius.
    pub hit_indices: BTreeMap<i32, usize>,
    pub kind: PathKind,
    /// For full paths: index of the last point on or inside `C_0` before the
    /// final hit (the discrete `S_r`).
    pub last_exit: Option<usize>,
}

impl SampledPath {
    pub fn new(points: Vec<CylPoint>, dt: f64, kind: PathKind) -> Self {
        let hit_indices = compute_hits(&points);
        let last_exit = match kind {
            PathKind::FullPath => points.iter().rposition(|p| p.u <= 0.0),
            _ => None,
        };
        Self {
            points,
            dt,
            hit_indices,
            kind,
            last_exit,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> CylPoint {
        self.points[0]
    }

    pub fn last(&self) -> CylPoint {
        *self.points.last().expect("empty path")
    }

    /// First index at which the path reaches log-radius `level`
    /// (integer or half-integer levels only).
    pub fn hit_index(&self, level: f64) -> Option<usize> {
        self.hit_indices.get(&level_key(level)).copied()
    }

    /// First index at which `u ≥ level`, for any real level.
    pub fn first_reach_above(&self, level: f64) -> Option<usize> {
        self.points.iter().position(|p| p.u >= level)
    }

    /// Whether the path ever reaches log-radius `level` or below.
    pub fn visits_below(&self, level: f64) -> bool {
        self.points.iter().any(|p| p.u <= level)
    }

    pub fn min_u(&self) -> f64 {
        self.points.iter().map(|p| p.u).fold(f64::INFINITY, f64::min)
    }

    pub fn max_u(&self) -> f64 {
        self.points.iter().map(|p| p.u).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Endpoint angle reduced to `[0, 2π)`.
    pub fn end_angle(&self) -> f64 {
        self.last().theta.rem_euclid(TAU)
    }

    pub fn start_angle(&self) -> f64 {
        self.first().theta.rem_euclid(TAU)
    }

    /// The upcrossing part `Y[S_r, T_r]` of a full path: starts on `C_0` at
    /// the interpolated last exit and runs to the end.
    pub fn upcrossing_part(&self) -> SampledPath {
        let i = self.last_exit.unwrap_or(0);
        let mut pts = Vec::with_capacity(self.points.len() - i);
        let a = self.points[i];
        if i + 1 < self.points.len() {
            let b = self.points[i + 1];
            let start = if a.u < 0.0 && b.u > a.u {
                CylPoint::lerp(a, b, (0.0 - a.u) / (b.u - a.u))
            } else {
                CylPoint::new(0.0, a.theta)
            };
            pts.push(CylPoint::new(0.0, start.theta));
            pts.extend_from_slice(&self.points[i + 1..]);
        } else {
            pts.push(a);
        }
        SampledPath::new(pts, self.dt, PathKind::Upcrossing)
    }

    /// Rotate by `phi` (adds `phi` to every angle).
    pub fn rotated(&self, phi: f64) -> SampledPath {
        let mut out = self.clone();
        for p in &mut out.points {
            p.theta += phi;
        }
        out
    }

    /// Concatenate `next`, which must start where `self` ends.
    pub fn concat(&self, next: &SampledPath) -> SampledPath {
        let mut pts = self.points.clone();
        pts.extend_from_slice(&next.points[1..]);
        SampledPath::new(pts, self.dt, self.kind)
    }

    /// Sub-path of points `[from, to]` inclusive.
    pub fn slice(&self, from: usize, to: usize, kind: PathKind) -> SampledPath {
        SampledPath::new(self.points[from..=to].to_vec(), self.dt, kind)
    }
}

fn compute_hits(points: &[CylPoint]) -> BTreeMap<i32, usize> {
    let mut hits = BTreeMap::new();
    if points.is_empty() {
        return hits;
    }
    let start = points[0].u;
    let eps = 1e-12;
    let (mut lo, mut hi) = (start, start);
    let record = |from: f64, to: f64, idx: usize, hits: &mut BTreeMap<i32, usize>| {
        let mut k = (2.0 * from - eps).ceil() as i32;
        while (k as f64) / 2.0 <= to + eps {
            if (k as f64) / 2.0 >= LOWEST_TRACKED - eps {
                hits.entry(k).or_insert(idx);
            }
            k += 1;
        }
    };
    record(start, start, 0, &mut hits);
    for (i, p) in points.iter().enumerate().skip(1) {
        if p.u > hi {
            record(hi, p.u, i, &mut hits);
            hi = p.u;
        } else if p.u < lo {
            record(p.u, lo, i, &mut hits);
            lo = p.u;
        }
    }
    hits
}

#[inline]
fn normal(rng: &mut Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn uniform_angle(rng: &mut Rng) -> f64 {
    rng.random::<f64>() * TAU
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    Ok(())
}

/// Full path from a uniform point on `C_0` to its first hit of `C_r`.
pub fn sample_full_path(r: f64, dt: f64, seed: RandomSeed) -> Result<SampledPath> {
    let mut rng = seed.rng();
    let theta0 = uniform_angle(&mut rng);
    full_path_from(r, dt, theta0, &mut rng)
}

/// Full path from the prescribed angle `theta0` on `C_0`.
pub fn sample_full_path_from(r: f64, dt: f64, theta0: f64, seed: RandomSeed) -> Result<SampledPath> {
    let mut rng = seed.rng();
    full_path_from(r, dt, theta0, &mut rng)
}

fn full_path_from(r: f64, dt: f64, theta0: f64, rng: &mut Rng) -> Result<SampledPath> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("r must be positive, got {r}")));
    }
    check_dt(dt)?;
    let sd = dt.sqrt();
    let mut pts = vec![CylPoint::new(0.0, theta0)];
    let mut cur = pts[0];
    let mut steps = 0u64;
    loop {
        steps += 1;
        if steps > STEP_CAP {
            return Err(Error::StepCap { cap: STEP_CAP, context: "sampling a full path" });
        }
        let next = CylPoint::new(cur.u + sd * normal(rng), cur.theta + sd * normal(rng));
        if next.u >= r {
            let t = (r - cur.u) / (next.u - cur.u);
            let hit = CylPoint::lerp(cur, next, t);
            pts.push(CylPoint::new(r, hit.theta));
            break;
        }
        if next.u < DEEP_FLOOR {
            // First passage back up to the floor from depth x has the Lévy
            // law x²/N²; the angle diffuses for that long.
            let depth = DEEP_FLOOR - next.u;
            let z = normal(rng);
            let tau = depth * depth / (z * z).max(1e-300);
            let theta = next.theta + tau.sqrt() * normal(rng);
            cur = CylPoint::new(DEEP_FLOOR, theta);
        } else {
            cur = next;
        }
        pts.push(cur);
    }
    Ok(SampledPath::new(pts, dt, PathKind::FullPath))
}

/// Brownian upcrossing of `annulus` via the Bessel-3 construction.
pub fn sample_upcrossing(annulus: AnnulusSpec, dt: f64, seed: RandomSeed) -> Result<SampledPath> {
    let mut rng = seed.rng();
    let theta0 = uniform_angle(&mut rng);
    upcrossing_from(annulus, dt, theta0, &mut rng)
}

/// Upcrossing with a prescribed start angle.
pub fn sample_upcrossing_from(
    annulus: AnnulusSpec,
    dt: f64,
    theta0: f64,
    seed: RandomSeed,
) -> Result<SampledPath> {
    let mut rng = seed.rng();
    upcrossing_from(annulus, dt, theta0, &mut rng)
}

fn upcrossing_from(annulus: AnnulusSpec, dt: f64, theta0: f64, rng: &mut Rng) -> Result<SampledPath> {
    check_dt(dt)?;
    let span = annulus.width();
    let sd = dt.sqrt();
    let mut w = [0.0f64; 3];
    let mut rho = 0.0;
    let mut theta = theta0;
    let mut pts = vec![CylPoint::new(annulus.r_in, theta0)];
    let mut steps = 0u64;
    loop {
        steps += 1;
        if steps > STEP_CAP {
            return Err(Error::StepCap { cap: STEP_CAP, context: "sampling an upcrossing" });
        }
        for c in &mut w {
            *c += sd * normal(rng);
        }
        let next_rho = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
        let next_theta = theta + sd * normal(rng);
        if next_rho >= span {
            let t = (span - rho) / (next_rho - rho);
            pts.push(CylPoint::new(annulus.r_out, theta + t * (next_theta - theta)));
            break;
        }
        rho = next_rho;
        theta = next_theta;
        pts.push(CylPoint::new(annulus.r_in + rho, theta));
    }
    Ok(SampledPath::new(pts, dt, PathKind::Upcrossing))
}

/// Outcome of running a Brownian motion on the cylinder until it leaves the
/// strip `lo < u < hi`.
#[derive(Debug, Clone)]
pub struct StripExit {
    pub points: Vec<CylPoint>,
    pub exited_high: bool,
}

/// Probability that a Brownian bridge over one step of variance `dt`
/// between levels `a` and `b` (both on the same side of `level`) touches it.
fn bridge_crossing(a: f64, b: f64, level: f64, dt: f64) -> f64 {
    (-2.0 * (a - level) * (b - level) / dt).exp()
}

/// Brownian motion from `start` until it hits `u = lo` or `u = hi`; the
/// terminal point is interpolated onto the boundary line. Crossings between
/// grid times are detected with the Brownian-bridge probability, so the exit
/// side has exactly the continuous law.
pub fn run_in_strip(start: CylPoint, lo: f64, hi: f64, dt: f64, rng: &mut Rng) -> Result<StripExit> {
    let sd = dt.sqrt();
    let mut pts = vec![start];
    let mut cur = start;
    let mut steps = 0u64;
    loop {
        steps += 1;
        if steps > STEP_CAP {
            return Err(Error::StepCap { cap: STEP_CAP, context: "running a strip exit" });
        }
        let next = CylPoint::new(cur.u + sd * normal(rng), cur.theta + sd * normal(rng));
        if next.u >= hi {
            let t = (hi - cur.u) / (next.u - cur.u);
            pts.push(CylPoint::new(hi, CylPoint::lerp(cur, next, t).theta));
            return Ok(StripExit { points: pts, exited_high: true });
        }
        if next.u <= lo {
            let t = (lo - cur.u) / (next.u - cur.u);
            pts.push(CylPoint::new(lo, CylPoint::lerp(cur, next, t).theta));
            return Ok(StripExit { points: pts, exited_high: false });
        }
        let p_hi = bridge_crossing(cur.u, next.u, hi, dt);
        let p_lo = bridge_crossing(cur.u, next.u, lo, dt);
        if p_hi + p_lo > 1e-14 {
            let x: f64 = rng.random();
            if x < p_hi + p_lo {
                let high = x < p_hi;
                let level = if high { hi } else { lo };
                pts.push(CylPoint::new(level, CylPoint::lerp(cur, next, 0.5).theta));
                return Ok(StripExit { points: pts, exited_high: high });
            }
        }
        pts.push(next);
        cur = next;
    }
}

/// Conditioned extension together with the number of rejection attempts.
#[derive(Debug, Clone)]
pub struct Extension {
    pub path: SampledPath,
    pub attempts: u64,
}

/// Brownian motion from the endpoint of `path` (on `C_r`), conditioned to
/// hit `C_{r'}` before `C_0`, realized by rejection.
pub fn extend_conditioned(path: &SampledPath, r_prime: f64, dt: f64, seed: RandomSeed) -> Result<Extension> {
    let mut rng = seed.rng();
    extend_with(path, r_prime, dt, &mut rng)
}

pub(crate) fn extend_with(path: &SampledPath, r_prime: f64, dt: f64, rng: &mut Rng) -> Result<Extension> {
    check_dt(dt)?;
    let end = path.last();
    let r = end.u;
    if (r - r_prime).abs() < 1e-12 {
        return Err(Error::InvalidArgument("degenerate target: r' = r".into()));
    }
    if !(r > 0.0) || r_prime < r {
        return Err(Error::InvalidArgument(format!(
            "extension needs 0 < r < r', got r = {r}, r' = {r_prime}"
        )));
    }
    let mut attempts = 0;
    loop {
        attempts += 1;
        let exit = run_in_strip(end, 0.0, r_prime, dt, rng)?;
        if exit.exited_high {
            return Ok(Extension {
                path: SampledPath::new(exit.points, dt, PathKind::Extension),
                attempts,
            });
        }
    }
}

/// One unconditioned attempt from `C_a`: does the motion hit `C_b` before
/// `C_0`? Used for the logarithmic gambler's-ruin check.
pub fn hits_outer_first(a: f64, b: f64, dt: f64, rng: &mut Rng) -> Result<bool> {
    let start = CylPoint::new(a, uniform_angle(rng));
    Ok(run_in_strip(start, 0.0, b, dt, rng)?.exited_high)
}

/// Does a Brownian motion from the real point `eps ∈ (0,1)` reach the unit
/// circle without leaving the wedge `|arg z| ≤ alpha`?
pub fn wedge_escape(eps: f64, alpha: f64, dt: f64, rng: &mut Rng) -> bool {
    let sd = dt.sqrt();
    let (mut u, mut th) = (eps.ln(), 0.0f64);
    loop {
        u += sd * normal(rng);
        th += sd * normal(rng);
        if th.abs() > alpha {
            return false;
        }
        if u >= 0.0 {
            return true;
        }
    }
}

/// Pointwise inverse `z ↦ 1/z`, order reversed. Maps an upcrossing of
/// `A(r, r')` to one of `A(-r', -r)`.
pub fn invert_reverse(path: &SampledPath) -> SampledPath {
    let pts: Vec<CylPoint> = path
        .points
        .iter()
        .rev()
        .map(|p| CylPoint::new(-p.u, -p.theta))
        .collect();
    SampledPath::new(pts, path.dt, path.kind)
}

/// Split an upcrossing of `A(0, r')` at its first hit of `C_{r_mid}`. The two
/// parts share the junction point; `first.concat(&second)` is the input.
pub fn decompose_upcrossing(path: &SampledPath, r_mid: f64) -> Result<(SampledPath, SampledPath)> {
    let (lo, hi) = (path.first().u, path.last().u);
    if !(r_mid > lo && r_mid < hi) {
        return Err(Error::InvalidArgument(format!(
            "split radius {r_mid} not strictly inside ({lo}, {hi})"
        )));
    }
    let k = path
        .first_reach_above(r_mid)
        .expect("upcrossing reaches its outer circle");
    let first = path.slice(0, k, PathKind::Upcrossing);
    let second = path.slice(k, path.len() - 1, PathKind::Extension);
    Ok((first, second))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_path_ends_on_outer_circle() {
        let p = sample_full_path(1.0, 1e-4, RandomSeed::new(1, 0)).unwrap();
        let (x, y) = p.last().planar();
        let norm = (x * x + y * y).sqrt();
        let e = std::f64::consts::E;
        assert!(norm >= e * (1.0 - 5.0 * 0.01) && norm <= e * (1.0 + 5.0 * 0.01));
        assert_eq!(p.kind, PathKind::FullPath);
        assert!((p.first().u).abs() < 1e-15);
    }

    #[test]
    fn hit_indices_monotone_above_start() {
        let p = sample_full_path(3.0, 1e-3, RandomSeed::new(2, 5)).unwrap();
        let above: Vec<usize> = p.hit_indices.range(0..).map(|(_, &i)| i).collect();
        assert!(above.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(p.hit_index(3.0), Some(p.len() - 1));
    }

    #[test]
    fn upcrossing_stays_in_annulus() {
        let a = AnnulusSpec::new(0.0, 1.0).unwrap();
        let p = sample_upcrossing(a, 1e-4, RandomSeed::new(3, 1)).unwrap();
        assert!((p.first().u - 0.0).abs() <= tol(1e-4));
        assert!((p.last().u - 1.0).abs() <= tol(1e-4));
        assert!(p.points.iter().all(|q| q.u >= -tol(1e-4) && q.u <= 1.0 + tol(1e-4)));
    }

    #[test]
    fn invert_reverse_is_involution() {
        let a = AnnulusSpec::new(0.0, 1.0).unwrap();
        let p = sample_upcrossing(a, 1e-3, RandomSeed::new(4, 0)).unwrap();
        let q = invert_reverse(&p);
        assert!((q.first().u + 1.0).abs() < 1e-12);
        assert!(q.last().u.abs() < 1e-12);
        assert_eq!(invert_reverse(&q).points, p.points);
    }

    #[test]
    fn decompose_round_trips() {
        let a = AnnulusSpec::new(0.0, 2.0).unwrap();
        let p = sample_upcrossing(a, 1e-3, RandomSeed::new(5, 0)).unwrap();
        let (x, y) = decompose_upcrossing(&p, 1.0).unwrap();
        assert_eq!(x.concat(&y).points, p.points);
        assert!(x.last().u >= 1.0);
        assert!(y.points[1..].iter().all(|q| q.u > 0.0));
        assert!(decompose_upcrossing(&p, 2.0).is_err());
    }

    #[test]
    fn degenerate_extension_rejected() {
        let a = AnnulusSpec::new(0.0, 1.0).unwrap();
        let p = sample_upcrossing(a, 1e-3, RandomSeed::new(6, 0)).unwrap();
        assert!(extend_conditioned(&p, 1.0, 1e-3, RandomSeed::new(6, 1)).is_err());
        let e = extend_conditioned(&p, 2.0, 1e-3, RandomSeed::new(6, 1)).unwrap();
        assert!((e.path.last().u - 2.0).abs() < 1e-12);
        assert!(e.path.points.iter().all(|q| q.u > 0.0));
    }

    #[test]
    fn upcrossing_part_starts_on_unit_circle() {
        let p = sample_full_path(2.0, 1e-3, RandomSeed::new(7, 0)).unwrap();
        let b = p.upcrossing_part();
        assert_eq!(b.first().u, 0.0);
        assert!(b.points[1..].iter().all(|q| q.u > 0.0));
        assert_eq!(b.last(), p.last());
    }

    #[test]
    fn bad_annulus_rejected() {
        assert!(AnnulusSpec::new(1.0, 1.0).is_err());
        assert!(AnnulusSpec::new(2.0, 1.0).is_err());
    }
}
