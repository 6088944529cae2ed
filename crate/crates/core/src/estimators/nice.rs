use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{angle_gap, ConfigSample};
use crate::path_sampler::{invert_reverse, SampledPath};

/// Which end of an upcrossing pair a niceness condition refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NiceEnd {
    Begin,
    End,
    Both,
}

/// Finest dyadic scale `2^-k` used for the "all η < δ" conditions.
const FINEST_DYADIC: i32 = 10;

fn dyadic_scales(delta: f64) -> impl Iterator<Item = f64> {
    (1..=FINEST_DYADIC).map(|k| 2f64.powi(-k)).filter(move |&eta| eta < delta)
}

/// Planar distance between two cylinder points, in units of `e^{r0}`.
fn scaled_distance(u1: f64, t1: f64, u2: f64, t2: f64, r0: f64) -> f64 {
    let (a, b) = ((u1 - r0).exp(), (u2 - r0).exp());
    let (x, y) = (a * t1.cos() - b * t2.cos(), a * t1.sin() - b * t2.sin());
    (x * x + y * y).sqrt()
}

fn path_nice_at_start(b: &SampledPath, delta: f64) -> bool {
    let r0 = b.first().u;
    let start = b.first();
    let Some(t1) = b.first_reach_above(r0 + 1.0) else { return false };
    for eta in dyadic_scales(delta) {
        let Some(k) = b.first_reach_above(r0 + eta.sqrt()) else { return false };
        let radius = eta.powf(0.25);
        let confined = b.points[..=k]
            .iter()
            .all(|p| scaled_distance(p.u, p.theta, start.u, start.theta, r0) <= radius);
        if !confined {
            return false;
        }
        if k <= t1 && b.points[k..=t1].iter().any(|p| p.u < r0 + 4.0 * eta) {
            return false;
        }
    }
    b.points[t1..].iter().all(|p| p.u >= r0 + 4.0 * delta)
}

fn pair_nice_at_start(b1: &SampledPath, b2: &SampledPath, l1: f64, delta: f64) -> bool {
    if !l1.is_finite() {
        return false;
    }
    let r0 = b1.first().u;
    let (s1, s2) = (b1.first(), b2.first());
    if scaled_distance(s1.u, s1.theta, s2.u, s2.theta, r0) <= delta.powf(0.125) {
        return false;
    }
    path_nice_at_start(b1, delta) && path_nice_at_start(b2, delta)
}

/// δ-niceness of the configuration at its beginning, end or both. The
/// "for every η < δ" conditions are checked on the dyadic scales
/// `2^-1, …, 2^-10` below δ, so the event shrinks as δ grows.
pub fn classify_nice(config: &ConfigSample, delta: f64, at: NiceEnd) -> bool {
    let (b1, b2) = &config.upcrossings;
    let begin = || pair_nice_at_start(b1, b2, config.l1, delta);
    let end = || pair_nice_at_start(&invert_reverse(b1), &invert_reverse(b2), config.l1, delta);
    match at {
        NiceEnd::Begin => begin(),
        NiceEnd::End => end(),
        NiceEnd::Both => begin() && end(),
    }
}

/// Rotation-invariant part of "very nice at the end": after first reaching
/// `r' - 1/3` the path stays above `r' - 1/2`.
fn tail_stays_high(b: &SampledPath) -> bool {
    let top = b.last().u;
    match b.first_reach_above(top - 1.0 / 3.0) {
        Some(k) => b.points[k..].iter().all(|p| p.u > top - 0.5),
        None => false,
    }
}

/// Rotations `φ` (as an interval of unwrapped angle) that put the tail of
/// `b` into the wedge about `target` and its endpoint within 1/20 of it.
fn admissible_rotations(b: &SampledPath, target: f64) -> Option<(f64, f64)> {
    let top = b.last().u;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in b.points.iter().filter(|p| p.u > top - 0.2) {
        lo = lo.min(p.theta);
        hi = hi.max(p.theta);
    }
    let end = b.last().theta;
    lo = lo.min(end);
    hi = hi.max(end);
    let a = (target - 0.1 - lo).max(target - 0.05 - end);
    let z = (target + 0.1 - hi).min(target + 0.05 - end);
    (a < z).then_some((a, z))
}

/// Very nice at the end: finite `L¹`, tails confined above `r' - 1/2`, the
/// tail of `B¹` in the wedge `|arg z| ≤ 1/10` with endpoint argument within
/// 1/20 of 0, and the same for `B²` about `π`.
pub fn classify_very_nice_end(config: &ConfigSample) -> bool {
    let (b1, b2) = &config.upcrossings;
    if !config.l1.is_finite() || !tail_stays_high(b1) || !tail_stays_high(b2) {
        return false;
    }
    wedge_ok(b1, 0.0) && wedge_ok(b2, PI)
}

fn wedge_ok(b: &SampledPath, target: f64) -> bool {
    let top = b.last().u;
    b.points
        .iter()
        .filter(|p| p.u > top - 0.2)
        .all(|p| angle_gap(p.theta, target) <= 0.1)
        && angle_gap(b.last().theta, target) <= 0.05
}

/// Fraction of rigid rotations of the configuration that are very nice at
/// the end. The configuration law is rotation invariant, so its mean is the
/// probability of the event, with far smaller variance than the indicator.
pub fn very_nice_end_rotation_measure(config: &ConfigSample) -> f64 {
    let (b1, b2) = &config.upcrossings;
    if !config.l1.is_finite() || !tail_stays_high(b1) || !tail_stays_high(b2) {
        return 0.0;
    }
    rotation_overlap(b1, b2) / (2.0 * PI)
}

pub(crate) fn rotation_overlap(b1: &SampledPath, b2: &SampledPath) -> f64 {
    let (Some(i1), Some(i2)) = (admissible_rotations(b1, 0.0), admissible_rotations(b2, PI)) else {
        return 0.0;
    };
    let shift = ((i1.0 - i2.0) / (2.0 * PI)).round();
    (-1..=1)
        .map(|k| {
            let off = 2.0 * PI * (shift + k as f64);
            (i1.1.min(i2.1 + off) - i1.0.max(i2.0 + off)).max(0.0)
        })
        .sum()
}

/// Per-path part of "very nice at the end" for a path ending on its top
/// circle, with the wedge centred on `target`.
pub(crate) fn tail_very_nice(b: &SampledPath, target: f64) -> bool {
    tail_stays_high(b) && wedge_ok(b, target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path_sampler::{CylPoint, PathKind};

    fn radial(theta: f64, r: f64) -> SampledPath {
        let n = 400;
        let pts = (0..=n).map(|k| CylPoint::new(r * k as f64 / n as f64, theta)).collect();
        SampledPath::new(pts, 1e-3, PathKind::Upcrossing)
    }

    fn radial_config(t1: f64, t2: f64) -> ConfigSample {
        ConfigSample::from_upcrossings(radial(t1, 3.0), radial(t2, 3.0), None, 3.0, 0.05).unwrap()
    }

    #[test]
    fn radial_pair_is_nice() {
        let cfg = radial_config(0.0, PI);
        for delta in [0.01, 0.005, 0.001] {
            assert!(classify_nice(&cfg, delta, NiceEnd::Begin));
            assert!(classify_nice(&cfg, delta, NiceEnd::End));
            assert!(classify_nice(&cfg, delta, NiceEnd::Both));
        }
        assert!(classify_very_nice_end(&cfg));
        let m = very_nice_end_rotation_measure(&cfg);
        assert!((m - 0.1 / (2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn endpoint_off_by_a_tenth_fails() {
        assert!(!classify_very_nice_end(&radial_config(0.1, PI)));
        assert!(classify_very_nice_end(&radial_config(0.04, PI)));
    }

    #[test]
    fn coincident_starts_are_not_nice() {
        let cfg = radial_config(0.0, 0.0);
        assert!(!classify_nice(&cfg, 0.01, NiceEnd::Begin));
    }

    #[test]
    fn dyadic_scales_nest() {
        let small: Vec<f64> = dyadic_scales(0.05).collect();
        let large: Vec<f64> = dyadic_scales(0.2).collect();
        assert!(small.iter().all(|e| large.contains(e)));
        assert_eq!(small.first(), Some(&2f64.powi(-5)));
    }
}
