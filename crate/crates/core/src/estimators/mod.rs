//! Monte Carlo estimators assembled from sampled configurations.
//!
//! A configuration is a pair of upcrossings of `A(0, r)` (optionally the full
//! paths they were cut from), the two outer domains they bound and their
//! π-extremal distances. Everything here runs trial-by-trial from
//! `RandomSeed::trial(seed, i)` and aggregates in trial order, so results do
//! not depend on the number of worker threads.

mod conditional;
mod harmonic;
mod multi;
mod nice;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extremal::{pi_extremal_distance, weight, DEFAULT_TOL};
use crate::geometry::{extract_domains, rasterize, winds_in_band, DomainPair};
use crate::path_sampler::{run_in_strip, sample_full_path, sample_upcrossing, AnnulusSpec, CylPoint, SampledPath};
use crate::rng::RandomSeed;
use crate::stats::{mean_stderr, proportion};

pub use conditional::{estimate_r, separation_ratio, ConditionalParams, RSample, SeparationSummary};
pub use harmonic::{
    a_records, estimate_a, estimate_a_hat, estimate_disconnection, estimate_z, full_path_grid, series_sample,
    three_path_oracle, SeriesSample, ZMode,
};
pub use multi::{estimate_multi_packet, gap_probabilities, packet_config, PacketConfig};
pub use nice::{classify_nice, classify_very_nice_end, very_nice_end_rotation_measure, NiceEnd};

/// One Monte Carlo estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub quantity: String,
    pub r: f64,
    pub lambda: f64,
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
    pub seed: u64,
}

impl EstimateRecord {
    pub fn new(quantity: &str, r: f64, lambda: f64, value: f64, stderr: f64, n: usize, seed: u64) -> Self {
        Self {
            quantity: quantity.to_string(),
            r,
            lambda,
            value,
            stderr,
            n,
            seed,
        }
    }
}

/// Indicator applied to each configuration before averaging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EventFilter {
    None,
    /// Neither full path hits `C_{-1}` before `C_n`.
    En,
    /// Neither full path hits `C_{-1+ε}` before `C_n`.
    EnEps(f64),
    /// Neither initial part `Y[T_0, S_n]` closes a loop about 0 in `A(-1,0)`.
    Hn,
    DeltaNice { delta: f64, at: NiceEnd },
    VeryNiceEnd,
    NiceBeginVeryNiceEnd(f64),
}

impl EventFilter {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| {
            Err(Error::InvalidArgument(format!("{what} = {v} outside (0, 1/4)")))
        };
        match *self {
            EventFilter::EnEps(e) if !(e > 0.0 && e < 0.25) => bad("ε", e),
            EventFilter::DeltaNice { delta, .. } | EventFilter::NiceBeginVeryNiceEnd(delta)
                if !(delta > 0.0 && delta < 0.25) =>
            {
                bad("δ", delta)
            }
            _ => Ok(()),
        }
    }

    pub fn needs_full_paths(&self) -> bool {
        matches!(self, EventFilter::En | EventFilter::EnEps(_) | EventFilter::Hn)
    }

    /// Niceness-based filters weight by `L¹` rather than `min(L¹, L²)`.
    pub fn uses_first_domain(&self) -> bool {
        matches!(
            self,
            EventFilter::DeltaNice { .. } | EventFilter::VeryNiceEnd | EventFilter::NiceBeginVeryNiceEnd(_)
        )
    }

    pub fn quantity(&self) -> &'static str {
        match self {
            EventFilter::None => "b",
            EventFilter::En => "b_sharp",
            EventFilter::EnEps(_) => "b_sharp_eps",
            EventFilter::Hn => "b_star",
            EventFilter::DeltaNice { .. } => "b_delta",
            EventFilter::VeryNiceEnd => "b_very_nice_end",
            EventFilter::NiceBeginVeryNiceEnd(_) => "beta_delta",
        }
    }
}

/// Fixed event labels evaluated when a configuration is built.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Flags {
    pub finite: bool,
    pub e_n: Option<bool>,
    pub h_n: Option<bool>,
    pub very_nice_end: bool,
}

#[derive(Debug, Clone)]
pub struct ConfigSample {
    pub full_paths: Option<(SampledPath, SampledPath)>,
    pub upcrossings: (SampledPath, SampledPath),
    pub r: f64,
    pub l1: f64,
    pub l2: f64,
    pub l: f64,
    pub flags: Flags,
    pub domains: DomainPair,
    pub h: f64,
}

impl ConfigSample {
    /// Assemble a configuration from two upcrossings of `A(0, r)`.
    pub fn from_upcrossings(
        b1: SampledPath,
        b2: SampledPath,
        full: Option<(SampledPath, SampledPath)>,
        r: f64,
        h: f64,
    ) -> Result<Self> {
        let grid = rasterize(&[b1.clone(), b2.clone()], 0.0, r, h)?;
        let domains = extract_domains(&grid, b1.last().theta, b2.last().theta)?;
        let l_of = |d: &Option<crate::geometry::PathDomainSpec>| -> Result<f64> {
            match d {
                Some(d) => Ok(pi_extremal_distance(d, DEFAULT_TOL)?.l),
                None => Ok(f64::INFINITY),
            }
        };
        let l1 = l_of(&domains.first)?;
        let l2 = l_of(&domains.second)?;
        let mut cfg = Self {
            full_paths: full,
            upcrossings: (b1, b2),
            r,
            l1,
            l2,
            l: l1.min(l2),
            flags: Flags::default(),
            domains,
            h,
        };
        cfg.flags = Flags {
            finite: cfg.l.is_finite(),
            e_n: cfg.full_paths.as_ref().map(|(y1, y2)| !y1.visits_below(-1.0) && !y2.visits_below(-1.0)),
            h_n: cfg.full_paths.as_ref().map(|(y1, y2)| no_inner_loop(y1) && no_inner_loop(y2)),
            very_nice_end: classify_very_nice_end(&cfg),
        };
        Ok(cfg)
    }

    /// Does the configuration pass `filter`?
    pub fn passes(&self, filter: &EventFilter) -> Result<bool> {
        let need_full = || {
            Error::InvalidArgument("filter needs full paths; build with with_full_paths = true".into())
        };
        Ok(match *filter {
            EventFilter::None => true,
            EventFilter::En => self.flags.e_n.ok_or_else(need_full)?,
            EventFilter::EnEps(eps) => {
                let (y1, y2) = self.full_paths.as_ref().ok_or_else(need_full)?;
                !y1.visits_below(-1.0 + eps) && !y2.visits_below(-1.0 + eps)
            }
            EventFilter::Hn => self.flags.h_n.ok_or_else(need_full)?,
            EventFilter::DeltaNice { delta, at } => classify_nice(self, delta, at),
            EventFilter::VeryNiceEnd => self.flags.very_nice_end,
            EventFilter::NiceBeginVeryNiceEnd(delta) => {
                self.flags.very_nice_end && classify_nice(self, delta, NiceEnd::Begin)
            }
        })
    }

    /// `exp(-λ L)` (or `exp(-λ L¹)`) times the filter indicator.
    pub fn weighted(&self, lambda: f64, filter: &EventFilter) -> Result<f64> {
        if !self.passes(filter)? {
            return Ok(0.0);
        }
        let l = if filter.uses_first_domain() { self.l1 } else { self.l };
        Ok(weight(lambda, l))
    }
}

fn no_inner_loop(y: &SampledPath) -> bool {
    let end = y.last_exit.unwrap_or(y.len() - 1);
    !winds_in_band(&y.points[..=end], -1.0, 0.0)
}

/// Sample a configuration of two independent upcrossings of `A(0, r)`; with
/// `with_full_paths` they are cut from full paths started on `C_0`.
pub fn build_config(r: f64, dt: f64, h: f64, seed: RandomSeed, with_full_paths: bool) -> Result<ConfigSample> {
    if !(r >= 1.0) {
        return Err(Error::InvalidArgument(format!("r must be ≥ 1, got {r}")));
    }
    if with_full_paths {
        let y1 = sample_full_path(r, dt, seed.fork(1))?;
        let y2 = sample_full_path(r, dt, seed.fork(2))?;
        let b1 = y1.upcrossing_part();
        let b2 = y2.upcrossing_part();
        ConfigSample::from_upcrossings(b1, b2, Some((y1, y2)), r, h)
    } else {
        let a = AnnulusSpec::new(0.0, r)?;
        let b1 = sample_upcrossing(a, dt, seed.fork(1))?;
        let b2 = sample_upcrossing(a, dt, seed.fork(2))?;
        ConfigSample::from_upcrossings(b1, b2, None, r, h)
    }
}

/// Run `n` independent trials, keeping trial order.
pub fn run_trials<T, F>(n: usize, seed: u64, f: F) -> Vec<Result<T>>
where
    T: Send,
    F: Fn(RandomSeed) -> Result<T> + Sync + Send,
{
    (0..n as u64)
        .into_par_iter()
        .map(|i| f(RandomSeed::trial(seed, i)))
        .collect()
}

/// Split trial outcomes into successes (in order) and the failure count.
/// Step-cap and solver failures are excluded; other errors propagate.
pub fn partition<T>(results: Vec<Result<T>>) -> Result<(Vec<T>, usize)> {
    let mut ok = Vec::with_capacity(results.len());
    let mut failed = 0;
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(Error::NoConvergence { .. }) | Err(Error::StepCap { .. }) => failed += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((ok, failed))
}

/// Estimates plus the number of trials excluded for solver/step failures.
#[derive(Debug, Clone)]
pub struct Estimates {
    pub records: Vec<EstimateRecord>,
    pub excluded: usize,
}

/// Per-configuration summary kept by the series estimators.
#[derive(Debug, Clone, Copy)]
pub struct ConfigSummary {
    pub l: f64,
    pub l1: f64,
    pub pass: bool,
}

/// `b_r(λ) = r⁻² E[exp(-λ L_r) 1_filter]` for each `λ`.
pub fn estimate_b(
    r: f64,
    lambdas: &[f64],
    n: usize,
    filter: EventFilter,
    dt: f64,
    h: f64,
    seed: u64,
) -> Result<Estimates> {
    filter.validate()?;
    let results = run_trials(n, seed, |s| {
        let cfg = build_config(r, dt, h, s, filter.needs_full_paths())?;
        Ok(ConfigSummary {
            l: cfg.l,
            l1: cfg.l1,
            pass: cfg.passes(&filter)?,
        })
    });
    let (summaries, excluded) = partition(results)?;
    Ok(Estimates {
        records: b_records(&summaries, r, lambdas, filter, seed),
        excluded,
    })
}

/// Records for `b_r` from precomputed configuration summaries.
pub fn b_records(
    summaries: &[ConfigSummary],
    r: f64,
    lambdas: &[f64],
    filter: EventFilter,
    seed: u64,
) -> Vec<EstimateRecord> {
    let scale = r.powi(-2);
    lambdas
        .iter()
        .map(|&lambda| {
            let xs: Vec<f64> = summaries
                .iter()
                .map(|s| {
                    let l = if filter.uses_first_domain() { s.l1 } else { s.l };
                    if s.pass {
                        weight(lambda, l)
                    } else {
                        0.0
                    }
                })
                .collect();
            let (m, se) = mean_stderr(&xs);
            EstimateRecord::new(filter.quantity(), r, lambda, scale * m, scale * se, xs.len(), seed)
        })
        .collect()
}

/// Empirical `P(E_n)`: both full paths reach `C_n` before `C_{-1}`. Only
/// the radial part up to that exit matters, so each path is run in the
/// strip `(-1, n)`.
pub fn estimate_e_n(r: f64, n: usize, dt: f64, seed: u64) -> Result<EstimateRecord> {
    let results = run_trials(n, seed, |s| {
        let mut rng = s.rng();
        let start = CylPoint::new(0.0, 0.0);
        for _ in 0..2 {
            if !run_in_strip(start, -1.0, r, dt, &mut rng)?.exited_high {
                return Ok(false);
            }
        }
        Ok(true)
    });
    let (hits, _) = partition(results)?;
    let k = hits.iter().filter(|&&h| h).count();
    let (p, se) = proportion(k, hits.len());
    Ok(EstimateRecord::new("p_e_n", r, 0.0, p, se, hits.len(), seed))
}

/// Angle helper shared by the classifiers: distance of `a` to `b` on the circle.
pub(crate) fn angle_gap(a: f64, b: f64) -> f64 {
    ((a - b + PI).rem_euclid(2.0 * PI) - PI).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_validation() {
        assert!(EventFilter::EnEps(0.3).validate().is_err());
        assert!(EventFilter::DeltaNice { delta: 0.0, at: NiceEnd::Begin }.validate().is_err());
        assert!(EventFilter::NiceBeginVeryNiceEnd(0.1).validate().is_ok());
    }

    #[test]
    fn config_consistency() {
        let cfg = build_config(2.0, 1e-3, 0.05, RandomSeed::new(11, 0), true).unwrap();
        assert_eq!(cfg.l, cfg.l1.min(cfg.l2));
        let (y1, y2) = cfg.full_paths.as_ref().unwrap();
        let e = !y1.visits_below(-1.0) && !y2.visits_below(-1.0);
        assert_eq!(cfg.flags.e_n, Some(e));
        assert!(cfg.passes(&EventFilter::None).unwrap());
    }

    #[test]
    fn full_path_filters_need_full_paths() {
        let cfg = build_config(2.0, 1e-3, 0.05, RandomSeed::new(12, 0), false).unwrap();
        assert!(cfg.passes(&EventFilter::En).is_err());
    }

    #[test]
    fn lambda_zero_is_finite_indicator() {
        let est = estimate_b(2.0, &[0.0, 1.0], 20, EventFilter::None, 1e-3, 0.05, 3).unwrap();
        let recs = &est.records;
        let finite = run_trials(20, 3, |s| Ok(build_config(2.0, 1e-3, 0.05, s, false)?.l.is_finite()));
        let k = finite.into_iter().filter(|f| *f.as_ref().unwrap()).count();
        assert!((recs[0].value - k as f64 / 20.0 / 4.0).abs() < 1e-12);
        assert!(recs[1].value <= recs[0].value);
    }

    #[test]
    fn angle_gap_wraps() {
        assert!((angle_gap(0.1, 2.0 * PI - 0.1) - 0.2).abs() < 1e-12);
        assert!((angle_gap(0.0, PI) - PI).abs() < 1e-12);
    }
}
