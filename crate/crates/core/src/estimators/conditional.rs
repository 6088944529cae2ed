//! Conditional expectations given the configuration at radius `n`.
//!
//! The unrestricted mean `E[exp(-λL_m) | F_n]` is a plain average over
//! independent conditioned extensions. The restricted mean carries the
//! indicator of "very nice at the end", an event of small probability that
//! depends on where the two endpoints land. It is estimated by importance
//! splitting: extensions advance in stages of a third of a unit of
//! log-radius; after each stage particles are split or rouletted in
//! proportion to the chance that their angles can still reach the target
//! wedges, and weights are corrected so the estimator stays unbiased.

use std::f64::consts::{PI, TAU};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::nice::tail_very_nice;
use super::{angle_gap, build_config, partition, run_trials, ConfigSample};
use crate::error::{Error, Result};
use crate::extremal::weight;
use crate::path_sampler::{extend_with, PathKind, SampledPath};
use crate::rng::{RandomSeed, Rng};
use crate::stats::{median, pairwise_sum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalParams {
    pub n_outer: usize,
    /// Plain extensions for the unrestricted mean.
    pub n_inner: usize,
    /// Splitting particles per stage for the restricted mean.
    pub n_particles: usize,
    pub dt: f64,
    pub h: f64,
    pub seed: u64,
}

/// Restricted-to-unrestricted ratios over the outer configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationSummary {
    pub lambda: f64,
    pub ratios: Vec<f64>,
    pub min: f64,
    pub median: f64,
    pub max: f64,
    /// Outer configurations whose unrestricted mean vanished.
    pub excluded: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RSample {
    pub r: f64,
    pub r_star: f64,
}

/// Which extremal distance enters the weight.
#[derive(Clone, Copy)]
enum Distance {
    First,
    Min,
}

impl Distance {
    fn of(self, cfg: &ConfigSample) -> f64 {
        match self {
            Distance::First => cfg.l1,
            Distance::Min => cfg.l,
        }
    }
}

const THIRD: f64 = 1.0 / 3.0;

/// Distances below the final radius at which the last third is subdivided.
const FINAL_OFFSETS: [f64; 4] = [0.2, 0.1, 0.05, 0.0];

struct Particle {
    ext: SampledPath,
    /// The path since it first reached `m - 1/3`.
    tail: Option<SampledPath>,
    weight: f64,
}

/// Wrapped Cauchy density of the exit angle of a Brownian motion started at
/// distance `d` below the top of a half-infinite cylinder.
#[cfg(test)]
fn exit_density(offset: f64, d: f64) -> f64 {
    let rho = (-d).exp();
    (1.0 - rho * rho) / (TAU * (1.0 + rho * rho - 2.0 * rho * offset.cos()))
}

/// The same exit law on the universal cover: Cauchy with scale `d` in the
/// unwrapped angle.
fn lifted_exit_density(offset: f64, d: f64) -> f64 {
    d / (PI * (d * d + offset * offset))
}

/// Unwrapped targets for the two endpoints that reach angles `0` and `π`
/// without either path sweeping across the other: the counterclockwise gap
/// from `B¹` to `B²` moves continuously to `π`, with the smallest total
/// displacement.
fn target_lifts(a: f64, b: f64) -> (f64, f64) {
    let g = (b - a).rem_euclid(TAU);
    let t1 = TAU * ((a + (a + g) - PI) / 2.0 / TAU).round();
    let shift = b - (a + g);
    (t1, t1 + PI + shift)
}

fn extend_pair(ext: &[SampledPath; 2], to: f64, dt: f64, rng: &mut Rng) -> Result<[SampledPath; 2]> {
    Ok([
        extend_with(&ext[0], to, dt, rng)?.path,
        extend_with(&ext[1], to, dt, rng)?.path,
    ])
}

fn endpoint(b: &SampledPath) -> SampledPath {
    SampledPath::new(vec![b.last()], b.dt, PathKind::Extension)
}

fn full_config(cfg: &ConfigSample, ext: &[SampledPath; 2], m: f64) -> Result<ConfigSample> {
    let (b1, b2) = &cfg.upcrossings;
    ConfigSample::from_upcrossings(b1.concat(&ext[0]), b2.concat(&ext[1]), None, m, cfg.h)
}

/// Stage boundaries: thirds of a unit up to `m - 1/3`, then finer steps
/// through the last third so the terminal conditions can prune and split
/// on the way in.
fn stage_levels(n: f64, m: f64) -> Vec<f64> {
    let k = ((m - n) * 3.0).round() as usize;
    let mut levels: Vec<f64> = (1..k).map(|j| n + j as f64 * THIRD).collect();
    levels.extend(FINAL_OFFSETS.iter().map(|d| m - d));
    levels
}

/// Whether the tail can still become very nice at the end.
fn viable(tail: &SampledPath, target: f64, m: f64) -> bool {
    tail.points
        .iter()
        .all(|p| p.u > m - 0.5 && (p.u <= m - 0.2 || angle_gap(p.theta, target) <= 0.1))
}

/// Extensions of one path from `start` (on `C_n`) to `C_m` whose tail is
/// very nice about `target`, with importance weights; particles are guided
/// toward the unwrapped angle `lift ≡ target`. The weights of all particles,
/// successful or not, sum to one in expectation.
fn split_extensions(
    start: &SampledPath,
    n: f64,
    m: f64,
    target: f64,
    lift: f64,
    n_particles: usize,
    dt: f64,
    rng: &mut Rng,
) -> Result<Vec<(SampledPath, f64)>> {
    let levels = stage_levels(n, m);
    let tail_from_start = n >= m - THIRD - 1e-12;
    let mut particles: Vec<Particle> = (0..n_particles)
        .map(|_| Particle {
            ext: start.clone(),
            tail: tail_from_start.then(|| start.clone()),
            weight: 1.0 / n_particles as f64,
        })
        .collect();
    for (s, &level) in levels.iter().enumerate() {
        if s > 0 {
            particles = resample(particles, target, lift, m - levels[s - 1], m, n_particles, rng);
        }
        for p in &mut particles {
            let step = extend_with(&p.ext, level, dt, rng)?.path;
            p.ext = p.ext.concat(&step);
            p.tail = match p.tail.take() {
                Some(t) => Some(t.concat(&step)),
                None if level >= m - THIRD - 1e-12 => Some(endpoint(&step)),
                None => None,
            };
        }
    }
    Ok(particles
        .into_iter()
        .filter_map(|p| match p.tail {
            Some(t) if tail_very_nice(&t, target) => Some((p.ext, p.weight)),
            _ => None,
        })
        .collect())
}

/// Split or roulette particles in proportion to weight times the chance of
/// exiting near `lift`; particles whose tail already failed get nothing.
fn resample(
    particles: Vec<Particle>,
    target: f64,
    lift: f64,
    d: f64,
    m: f64,
    size: usize,
    rng: &mut Rng,
) -> Vec<Particle> {
    let scores: Vec<f64> = particles
        .iter()
        .map(|p| match &p.tail {
            Some(t) if !viable(t, target, m) => 0.0,
            _ => p.weight * lifted_exit_density(p.ext.last().theta - lift, d),
        })
        .collect();
    let total = pairwise_sum(&scores);
    if !(total > 0.0) {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(size);
    for (p, score) in particles.into_iter().zip(scores) {
        let x = size as f64 * score / total;
        let mut k = x.floor() as usize;
        if rng.random::<f64>() < x - x.floor() {
            k += 1;
        }
        let w = p.weight / x;
        for _ in 0..k {
            out.push(Particle {
                ext: p.ext.clone(),
                tail: p.tail.clone(),
                weight: w,
            });
        }
    }
    out
}

/// Index drawn with probability proportional to `w`.
fn draw(w: &[f64], total: f64, rng: &mut Rng) -> usize {
    let mut x = rng.random::<f64>() * total;
    for (i, &wi) in w.iter().enumerate() {
        x -= wi;
        if x < 0.0 {
            return i;
        }
    }
    w.len() - 1
}

/// `(restricted, unrestricted)` conditional means for each `λ`.
///
/// The two extensions are independent given the configuration, so each is
/// split separately. The restricted mean is `W¹ W² E[f]` with `Wᵏ` the
/// successful weight of path `k` and the expectation over `n_inner` pairs
/// drawn in proportion to their weights.
fn conditional_means(
    cfg: &ConfigSample,
    m: f64,
    lambdas: &[f64],
    n_inner: usize,
    n_particles: usize,
    dist: Distance,
    dt: f64,
    rng: &mut Rng,
) -> Result<Vec<(f64, f64)>> {
    let n = cfg.r;
    let start = [endpoint(&cfg.upcrossings.0), endpoint(&cfg.upcrossings.1)];

    let mut plain = vec![Vec::with_capacity(n_inner); lambdas.len()];
    for _ in 0..n_inner {
        let ext = extend_pair(&start, m, dt, rng)?;
        let full = full_config(cfg, &ext, m)?;
        for (k, &lambda) in lambdas.iter().enumerate() {
            plain[k].push(weight(lambda, dist.of(&full)));
        }
    }

    let (l1, l2) = target_lifts(start[0].last().theta, start[1].last().theta);
    let first = split_extensions(&start[0], n, m, 0.0, l1, n_particles, dt, rng)?;
    let second = split_extensions(&start[1], n, m, PI, l2, n_particles, dt, rng)?;
    let mut restricted = vec![0.0; lambdas.len()];
    if !first.is_empty() && !second.is_empty() {
        let w1: Vec<f64> = first.iter().map(|x| x.1).collect();
        let w2: Vec<f64> = second.iter().map(|x| x.1).collect();
        let (t1, t2) = (pairwise_sum(&w1), pairwise_sum(&w2));
        let mut sums = vec![Vec::with_capacity(n_inner); lambdas.len()];
        for _ in 0..n_inner {
            let (i, j) = (draw(&w1, t1, rng), draw(&w2, t2, rng));
            let full = full_config(cfg, &[first[i].0.clone(), second[j].0.clone()], m)?;
            for (k, &lambda) in lambdas.iter().enumerate() {
                sums[k].push(if full.l1.is_finite() { weight(lambda, dist.of(&full)) } else { 0.0 });
            }
        }
        for (k, s) in sums.iter().enumerate() {
            restricted[k] = t1 * t2 * pairwise_sum(s) / n_inner as f64;
        }
    }
    Ok(lambdas
        .iter()
        .enumerate()
        .map(|(k, _)| (restricted[k], pairwise_sum(&plain[k]) / n_inner as f64))
        .collect())
}

fn check(n: f64, m: f64, params: &ConditionalParams) -> Result<()> {
    if !(n >= 1.0 && m > n) {
        return Err(Error::InvalidArgument(format!("need 1 ≤ n < m, got n = {n}, m = {m}")));
    }
    if ((m - n) * 3.0 - ((m - n) * 3.0).round()).abs() > 1e-9 {
        return Err(Error::InvalidArgument("m - n must be a multiple of 1/3".into()));
    }
    if params.n_outer == 0 || params.n_inner == 0 || params.n_particles == 0 {
        return Err(Error::InvalidArgument("need at least one outer and one inner sample".into()));
    }
    Ok(())
}

/// Conditional means for each outer configuration at radius `n`. With
/// `finite_only`, configurations whose distance is already infinite at `n`
/// yield `None`.
fn per_outer(
    n: f64,
    m: f64,
    lambdas: &[f64],
    dist: Distance,
    finite_only: bool,
    params: &ConditionalParams,
) -> Result<Vec<Option<Vec<(f64, f64)>>>> {
    let results = run_trials(params.n_outer, params.seed, |s: RandomSeed| {
        let cfg = build_config(n, params.dt, params.h, s, false)?;
        if finite_only && !dist.of(&cfg).is_finite() {
            return Ok(None);
        }
        let mut rng = s.fork(0x5E9).rng();
        conditional_means(&cfg, m, lambdas, params.n_inner, params.n_particles, dist, params.dt, &mut rng).map(Some)
    });
    Ok(partition(results)?.0)
}

/// Ratio of `E[1_G exp(-λL¹_{n+1}) | F_n]` to `E[exp(-λL¹_{n+1}) | F_n]` for
/// each outer configuration at radius `n` with `L¹_n < ∞`, where `G` is
/// "very nice at the end" at radius `n + 1`.
pub fn separation_ratio(n: f64, lambdas: &[f64], params: &ConditionalParams) -> Result<Vec<SeparationSummary>> {
    check(n, n + 1.0, params)?;
    let outer = per_outer(n, n + 1.0, lambdas, Distance::First, true, params)?;
    Ok(lambdas
        .iter()
        .enumerate()
        .map(|(k, &lambda)| {
            let mut ratios = Vec::new();
            let mut excluded = 0;
            for means in outer.iter().flatten() {
                let (num, den) = means[k];
                if den > 0.0 {
                    ratios.push(num / den);
                } else {
                    excluded += 1;
                }
            }
            let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            SeparationSummary {
                lambda,
                median: median(&ratios),
                min,
                max,
                ratios,
                excluded,
            }
        })
        .collect())
}

/// Per outer configuration: `R_{n,m} = e^{(m-n)ξ} E[exp(-λL_m) | F_n]` and
/// the same with the indicator of "very nice at the end" at radius `m`.
pub fn estimate_r(n: f64, m: f64, lambda: f64, xi: f64, params: &ConditionalParams) -> Result<Vec<RSample>> {
    check(n, m, params)?;
    let scale = ((m - n) * xi).exp();
    Ok(per_outer(n, m, &[lambda], Distance::Min, false, params)?
        .into_iter()
        .flatten()
        .map(|means| RSample {
            r: scale * means[0].1,
            r_star: scale * means[0].0,
        })
        .collect())
}
