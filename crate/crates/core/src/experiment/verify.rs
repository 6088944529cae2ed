use std::f64::consts::PI;
use std::str::FromStr;

use rayon::prelude::*;

use super::lemma::lemma_suite;
use super::run::Check;
use crate::error::{Error, Result};
use crate::exponents::{u_fn, v_fn, xi_exact, xi_exact_general};
use crate::extremal::{excursion_mass_oracle, excursion_mass_rectangle, pi_extremal_distance, DEFAULT_TOL};
use crate::geometry::PathDomainSpec;
use crate::path_sampler::{
    extend_conditioned, hits_outer_first, sample_full_path, sample_upcrossing, wedge_escape, AnnulusSpec,
};
use crate::rng::RandomSeed;
use crate::stats::{angles_uniform_ks, proportion};

/// Quick self-checks, each a few seconds in an optimized build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Sampler,
    Extremal,
    Lemmas,
    Exponents,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sampler" => Ok(Suite::Sampler),
            "extremal" => Ok(Suite::Extremal),
            "lemmas" => Ok(Suite::Lemmas),
            "exponents" => Ok(Suite::Exponents),
            _ => Err(Error::InvalidArgument(format!(
                "unknown suite {s:?} (expected sampler, extremal, lemmas or exponents)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub checks: Vec<Check>,
}

impl SuiteOutcome {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

const SEED: u64 = 20_240_601;

fn within(name: &str, est: f64, se: f64, target: f64) -> Check {
    Check {
        name: name.into(),
        passed: (est - target).abs() <= 3.0 * se,
        detail: format!("{est:.5} ± {se:.5}, target {target:.5}"),
    }
}

fn sampler() -> Result<Vec<Check>> {
    let dt = 1e-3;
    let mut checks = Vec::new();
    for (a, b) in [(1.0, 2.0), (2.0, 3.0)] {
        let n = 4000;
        let hits: Vec<bool> = (0..n as u64)
            .into_par_iter()
            .map(|i| hits_outer_first(a, b, dt, &mut RandomSeed::new(SEED, i).rng()))
            .collect::<Result<_>>()?;
        let (p, se) = proportion(hits.iter().filter(|&&h| h).count(), n);
        checks.push(within(&format!("gamblers_ruin_{a}_{b}"), p, se, a / b));
    }

    let n = 2000;
    let attempts: Vec<u64> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let s = RandomSeed::new(SEED + 1, i);
            let up = sample_upcrossing(AnnulusSpec::new(0.0, 1.0)?, dt, s)?;
            Ok(extend_conditioned(&up, 2.0, dt, s.fork(1))?.attempts)
        })
        .collect::<Result<_>>()?;
    let total: u64 = attempts.iter().sum();
    let (p, se) = proportion(n, total as usize);
    checks.push(within("extension_acceptance_1_2", p, se, 0.5));

    let ends: Vec<f64> = (0..500u64)
        .into_par_iter()
        .map(|i| Ok(sample_upcrossing(AnnulusSpec::new(0.0, 1.0)?, dt, RandomSeed::new(SEED + 2, i))?.end_angle()))
        .collect::<Result<_>>()?;
    let (d, ok) = angles_uniform_ks(&ends);
    checks.push(Check { name: "upcrossing_end_angle_uniform".into(), passed: ok, detail: format!("KS statistic {d:.4}") });

    let s = RandomSeed::new(SEED, 7);
    let same = sample_full_path(2.0, dt, s)?.points == sample_full_path(2.0, dt, s)?.points;
    checks.push(Check { name: "determinism".into(), passed: same, detail: "repeat of one seed".into() });

    let (eps, alpha) = (0.5, PI / 4.0);
    let n = 4000;
    let esc = (0..n as u64)
        .into_par_iter()
        .filter(|&i| wedge_escape(eps, alpha, dt, &mut RandomSeed::new(SEED + 3, i).rng()))
        .count();
    let (p, se) = proportion(esc, n);
    let bound = eps.powf(PI / (2.0 * alpha));
    checks.push(Check {
        name: "wedge_lower_bound".into(),
        passed: p + 3.0 * se >= bound,
        detail: format!("{p:.4} ± {se:.4}, bound {bound:.4}"),
    });
    Ok(checks)
}

fn extremal() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for l in [1.0, 2.0, 4.0] {
        let got = pi_extremal_distance(&PathDomainSpec::rectangle(l, PI, 0.02), DEFAULT_TOL)?.l;
        checks.push(Check {
            name: format!("rectangle_L_{l}"),
            passed: (got - l).abs() <= 0.02 * l,
            detail: format!("computed {got:.6}"),
        });
    }
    let m = excursion_mass_rectangle(1.0, 0.1, 1e-4, 20_000, SEED)?;
    checks.push(within("excursion_mass_L_1", m.value, m.stderr, excursion_mass_oracle(1.0)));
    Ok(checks)
}

fn lemmas() -> Result<Vec<Check>> {
    let suite = lemma_suite(4.0, 16, 0.1, 1e-3, 0.05, SEED)?;
    Ok([("disk_removal", suite.disk_removal), ("subarc", suite.subarc), ("serial_cut", suite.serial_cut)]
        .into_iter()
        .map(|(name, t)| Check {
            name: name.into(),
            passed: t.checked > 0 && t.violations == 0,
            detail: format!("{} checked, {} violations, {} skipped, max slack {:.3}", t.checked, t.violations, t.skipped, t.max_slack),
        })
        .collect())
}

fn exponents() -> Result<Vec<Check>> {
    let grid: Vec<f64> = (0..100).map(|k| 10.0 * k as f64 / 99.0).collect();
    let xs: Vec<f64> = grid.iter().map(|&l| xi_exact(l)).collect::<Result<_>>()?;
    let mut identity = 0.0f64;
    for (&l, &x) in grid.iter().zip(&xs) {
        identity = identity.max((v_fn(u_fn(2.0)? + u_fn(l)?) - x).abs());
        identity = identity.max((xi_exact_general(&[2], &[l])? - x).abs());
    }
    let increasing = xs.windows(2).all(|w| w[1] > w[0]);
    let concave = xs.windows(3).all(|w| w[0] + w[2] - 2.0 * w[1] <= 1e-12);
    let crude = grid.iter().zip(&xs).all(|(&l, &x)| x <= 2.0 + l);
    Ok(vec![
        Check { name: "closed_form_identity".into(), passed: identity <= 1e-12, detail: format!("max deviation {identity:.2e}") },
        Check { name: "increasing".into(), passed: increasing, detail: "100-point grid on [0, 10]".into() },
        Check { name: "concave".into(), passed: concave, detail: "second differences ≤ 0".into() },
        Check { name: "crude_bound".into(), passed: crude, detail: "xi(λ) ≤ 2 + λ".into() },
        within("xi_at_1", xi_exact(1.0)?, 1e-13, 2.0),
        within("xi_at_0", xi_exact(0.0)?, 1e-13, 2.0 / 3.0),
    ])
}

pub fn verify(suite: Suite) -> Result<SuiteOutcome> {
    let checks = match suite {
        Suite::Sampler => sampler()?,
        Suite::Extremal => extremal()?,
        Suite::Lemmas => lemmas()?,
        Suite::Exponents => exponents()?,
    };
    Ok(SuiteOutcome { suite, checks })
}
