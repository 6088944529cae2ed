use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{build_config, partition, run_trials};
use crate::extremal::{
    serial_bound, subarc_bound, verify_disk_removal, verify_serial_cut, verify_subarc, SubArc,
    DISK_REMOVAL_BOUND, GRID_TOL,
};
use crate::geometry::PathDomainSpec;

/// Outcome counts for one lemma over a batch of sampled domains.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct LemmaTally {
    /// Domains on which the hypotheses held and the check ran.
    pub checked: usize,
    pub violations: usize,
    /// Domains rejected by the hypothesis checks.
    pub skipped: usize,
    pub max_slack: f64,
}

impl LemmaTally {
    pub fn violation_rate(&self) -> f64 {
        if self.checked == 0 {
            0.0
        } else {
            self.violations as f64 / self.checked as f64
        }
    }

    fn add(&mut self, outcome: Option<(bool, f64)>) {
        match outcome {
            None => self.skipped += 1,
            Some((ok, slack)) => {
                self.checked += 1;
                if !ok {
                    self.violations += 1;
                }
                self.max_slack = self.max_slack.max(slack);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct LemmaSuite {
    pub disk_removal: LemmaTally,
    pub subarc: LemmaTally,
    pub serial_cut: LemmaTally,
}

type Outcome = Option<(bool, f64)>;

fn skip_precondition<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Precondition(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// The inner arc of `domain` trimmed by `1.5 δ` at each end.
fn trimmed_inner_arc(domain: &PathDomainSpec, delta: f64) -> Option<SubArc> {
    let (z1, z2) = domain.inner_corners()?;
    let g = domain.geom;
    let span = if g.periodic {
        (z2.theta - z1.theta).rem_euclid(std::f64::consts::TAU)
    } else {
        z2.theta - z1.theta
    };
    let length = span - 3.0 * delta;
    (length >= delta).then(|| SubArc { start: z1.theta + 1.5 * delta, length })
}

/// Cut abscissae at least one unit from both ends, in steps of two cells,
/// starting from the middle and alternating outwards.
fn cut_candidates(domain: &PathDomainSpec) -> Vec<f64> {
    let g = domain.geom;
    let mid = 0.5 * (g.u_min + g.u_max);
    let reach = 0.5 * (g.u_max - g.u_min) - 1.0;
    let step = 2.0 * g.du;
    let mut out = vec![mid];
    let mut k = 1.0;
    while k * step < reach {
        out.push(mid + k * step);
        out.push(mid - k * step);
        k += 1.0;
    }
    out
}

fn check_domain(domain: &PathDomainSpec, delta: f64) -> Result<[Outcome; 3]> {
    let disk = skip_precondition(verify_disk_removal(domain, delta))?
        .map(|d| (d.slack >= -GRID_TOL && d.slack <= DISK_REMOVAL_BOUND, d.slack));
    let sub = match trimmed_inner_arc(domain, delta) {
        Some(v) => skip_precondition(verify_subarc(domain, v, delta))?
            .map(|s| (s.slack >= -GRID_TOL && s.slack <= subarc_bound(delta), s.slack)),
        None => None,
    };
    let mut serial = None;
    for s in cut_candidates(domain) {
        if let Some(c) = skip_precondition(verify_serial_cut(domain, s, delta))? {
            serial = Some((c.slack >= -GRID_TOL && c.slack <= serial_bound(delta), c.slack));
            break;
        }
    }
    Ok([disk, sub, serial])
}

/// Run the three extremal-distance checks on the first outer domain of `n`
/// sampled configurations at radius `r`. Domains with infinite extremal
/// distance count as skipped; the serial cut is tried at the first abscissa
/// where its hypotheses hold.
pub fn lemma_suite(r: f64, n: usize, delta: f64, dt: f64, h: f64, seed: u64) -> Result<LemmaSuite> {
    let results = run_trials(n, seed, |s| {
        let cfg = build_config(r, dt, h, s, false)?;
        match (&cfg.domains.first, cfg.l1.is_finite()) {
            (Some(d), true) => check_domain(d, delta).map(Some),
            _ => Ok(None),
        }
    });
    let (outcomes, failed) = partition(results)?;
    let mut suite = LemmaSuite::default();
    for o in outcomes {
        match o {
            Some([a, b, c]) => {
                suite.disk_removal.add(a);
                suite.subarc.add(b);
                suite.serial_cut.add(c);
            }
            None => {
                suite.disk_removal.skipped += 1;
                suite.subarc.skipped += 1;
                suite.serial_cut.skipped += 1;
            }
        }
    }
    for t in [&mut suite.disk_removal, &mut suite.subarc, &mut suite.serial_cut] {
        t.skipped += failed;
    }
    Ok(suite)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rectangle_passes_everything() {
        let d = PathDomainSpec::rectangle(4.0, PI, 0.05);
        let [a, b, c] = check_domain(&d, 0.1).unwrap();
        assert_eq!(a.map(|x| x.0), Some(true));
        assert_eq!(c.map(|x| x.0), Some(true));
        // The trimmed arc of a rectangle stays away from the sides.
        assert_eq!(b.map(|x| x.0), Some(true));
    }
}
