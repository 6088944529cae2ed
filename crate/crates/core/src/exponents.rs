//! Closed-form exponent values, decay-rate fits and the up-to-constants
//! reports built on them.

use crate::error::{Error, Result};
use crate::estimators::EstimateRecord;

fn nonneg(x: f64, what: &str) -> Result<f64> {
    if x >= 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::InvalidArgument(format!("{what} must be nonnegative, got {x}")))
    }
}

/// `U(x) = (√(24x + 1) − 1) / √24`.
pub fn u_fn(x: f64) -> Result<f64> {
    let x = nonneg(x, "U argument")?;
    Ok(((24.0 * x + 1.0).sqrt() - 1.0) / 24f64.sqrt())
}

/// `V(x) = (6x² − 1) / 12`.
pub fn v_fn(x: f64) -> f64 {
    (6.0 * x * x - 1.0) / 12.0
}

/// `ξ(2, λ) = λ/2 + 11/24 + (5/24)√(24λ + 1)`.
pub fn xi_exact(lambda: f64) -> Result<f64> {
    let l = nonneg(lambda, "λ")?;
    Ok(l / 2.0 + 11.0 / 24.0 + 5.0 / 24.0 * (24.0 * l + 1.0).sqrt())
}

/// Multi-packet exponent `V(Σ U(p_j) + Σ U(λ_j))`.
pub fn xi_exact_general(packets: &[u32], lambdas: &[f64]) -> Result<f64> {
    if packets.is_empty() || packets.contains(&0) {
        return Err(Error::InvalidArgument("packet sizes must be ≥ 1".into()));
    }
    let mut s = 0.0;
    for &p in packets {
        s += u_fn(p as f64)?;
    }
    for &l in lambdas {
        s += u_fn(l)?;
    }
    Ok(v_fn(s))
}

#[derive(Debug, Clone)]
pub struct ExponentFit {
    pub xi_hat: f64,
    pub stderr: f64,
    pub r_range: Vec<f64>,
    /// Log-prefactor: `log value ≈ intercept − ξ r`.
    pub intercept: f64,
}

fn check_positive(records: &[EstimateRecord]) -> Result<()> {
    for rec in records {
        if !(rec.value > 0.0) {
            return Err(Error::NonPositive { r: rec.r });
        }
    }
    Ok(())
}

/// Weighted least squares of `log value` against `r`. Weights are
/// `(value/stderr)²` (delta method); when no record carries a positive
/// stderr the fit is unweighted. The slope error is inflated by the reduced
/// χ² when that exceeds one.
pub fn fit_exponent(records: &[EstimateRecord]) -> Result<ExponentFit> {
    check_positive(records)?;
    let mut radii: Vec<f64> = records.iter().map(|r| r.r).collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    if radii.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 radii, got {}",
            radii.len()
        )));
    }
    let rel_var: Vec<f64> = records.iter().map(|r| (r.stderr / r.value).powi(2)).collect();
    let min_pos = rel_var.iter().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
    let weighted = min_pos.is_finite();
    let w: Vec<f64> = rel_var
        .iter()
        .map(|&v| if !weighted { 1.0 } else { 1.0 / v.max(min_pos) })
        .collect();
    let x: Vec<f64> = records.iter().map(|r| r.r).collect();
    let y: Vec<f64> = records.iter().map(|r| r.value.ln()).collect();
    let sw: f64 = w.iter().sum();
    let xm = w.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() / sw;
    let ym = w.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(&x).map(|(a, b)| a * (b - xm).powi(2)).sum();
    let sxy: f64 = (0..x.len()).map(|i| w[i] * (x[i] - xm) * (y[i] - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let n = x.len() as f64;
    let chi2: f64 = (0..x.len())
        .map(|i| w[i] * (y[i] - intercept - slope * x[i]).powi(2))
        .sum();
    let red = chi2 / (n - 2.0);
    let stderr = if weighted {
        (red.max(1.0) / sxx).sqrt()
    } else {
        (red / sxx).sqrt()
    };
    Ok(ExponentFit {
        xi_hat: -slope,
        stderr,
        r_range: radii,
        intercept,
    })
}

#[derive(Debug, Clone)]
pub struct FlatnessReport {
    /// `(r, e^{rξ}·value)` per record, in input order.
    pub values: Vec<(f64, f64)>,
    pub c_min: f64,
    pub c_max: f64,
}

impl FlatnessReport {
    pub fn band_ratio(&self) -> f64 {
        self.c_max / self.c_min
    }
}

pub fn flatness(records: &[EstimateRecord], xi: f64) -> Result<FlatnessReport> {
    check_positive(records)?;
    if records.is_empty() {
        return Err(Error::InvalidArgument("no records".into()));
    }
    let values: Vec<(f64, f64)> = records.iter().map(|r| (r.r, (r.r * xi).exp() * r.value)).collect();
    let c_min = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let c_max = values.iter().map(|v| v.1).fold(0.0, f64::max);
    Ok(FlatnessReport { values, c_min, c_max })
}

#[derive(Debug, Clone)]
pub struct SubadditivityReport {
    pub max_ratio: f64,
    pub argmax: (u32, u32),
    pub min_ratio: f64,
    pub argmin: (u32, u32),
    /// Every `(m, n, value_{m+n+1} / (value_m value_n))`.
    pub ratios: Vec<(u32, u32, f64)>,
}

/// Ratios `value_{m+n+1} / (value_m·value_n)` over all integer radii pairs
/// `m ≤ n` present in `records` with `m + n + 1` at most the largest radius.
pub fn subadditivity_report(records: &[EstimateRecord]) -> Result<SubadditivityReport> {
    check_positive(records)?;
    let mut by_r: Vec<(u32, f64)> = Vec::new();
    for rec in records {
        if rec.r.fract() != 0.0 || rec.r < 1.0 {
            return Err(Error::InvalidArgument(format!("radius {} is not a positive integer", rec.r)));
        }
        by_r.push((rec.r as u32, rec.value));
    }
    by_r.sort_by_key(|x| x.0);
    by_r.dedup_by_key(|x| x.0);
    if by_r.len() < 2 {
        return Err(Error::InvalidArgument("need at least two radii".into()));
    }
    let max_r = by_r.last().unwrap().0;
    let get = |r: u32| by_r.iter().find(|x| x.0 == r).map(|x| x.1);
    let mut ratios = Vec::new();
    for (i, &(m, vm)) in by_r.iter().enumerate() {
        for &(n, vn) in &by_r[i..] {
            let t = m + n + 1;
            if t > max_r {
                continue;
            }
            let vt = get(t).ok_or(Error::MissingRadius(t as f64))?;
            ratios.push((m, n, vt / (vm * vn)));
        }
    }
    if ratios.is_empty() {
        return Err(Error::InvalidArgument("no admissible (m, n) pair".into()));
    }
    let max = ratios.iter().copied().max_by(|a, b| a.2.total_cmp(&b.2)).unwrap();
    let min = ratios.iter().copied().min_by(|a, b| a.2.total_cmp(&b.2)).unwrap();
    Ok(SubadditivityReport {
        max_ratio: max.2,
        argmax: (max.0, max.1),
        min_ratio: min.2,
        argmin: (min.0, min.1),
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64, radii: &[f64]) -> Vec<EstimateRecord> {
        radii
            .iter()
            .map(|&r| EstimateRecord::new("b", r, 1.0, f(r), 0.0, 1, 0))
            .collect()
    }

    #[test]
    fn exact_values() {
        assert!((xi_exact(1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((xi_exact(0.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(u_fn(-1.0).is_err());
        assert!(xi_exact(-0.1).is_err());
        assert!(xi_exact_general(&[0], &[1.0]).is_err());
    }

    #[test]
    fn exact_series_fit() {
        let f = fit_exponent(&series(|r| (-2.0 * r).exp(), &[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert!((f.xi_hat - 2.0).abs() < 1e-12);
        let f = fit_exponent(&series(|r| 5.0 * (-0.5 * r).exp(), &[1.0, 2.0, 3.0])).unwrap();
        assert!((f.xi_hat - 0.5).abs() < 1e-12);
        assert!((f.intercept - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn fit_errors() {
        assert!(fit_exponent(&series(|r| (-r).exp(), &[1.0, 2.0])).is_err());
        let mut recs = series(|r| (-r).exp(), &[1.0, 2.0, 3.0]);
        recs[1].value = 0.0;
        match fit_exponent(&recs) {
            Err(Error::NonPositive { r }) => assert_eq!(r, 2.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn flatness_bands() {
        let exact = series(|r| (-1.5 * r).exp(), &[1.0, 2.0, 3.0, 4.0]);
        assert!((flatness(&exact, 1.5).unwrap().band_ratio() - 1.0).abs() < 1e-12);
        let wobble = series(
            |r| (-1.5 * r).exp() * if (r as i64) % 2 == 0 { 2.0 } else { 0.5 },
            &[1.0, 2.0, 3.0, 4.0],
        );
        assert!((flatness(&wobble, 1.5).unwrap().band_ratio() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn subadditivity_of_exact_series() {
        let recs = series(|r| (-1.2 * r).exp(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let rep = subadditivity_report(&recs).unwrap();
        for &(_, _, q) in &rep.ratios {
            assert!((q - (-1.2f64).exp()).abs() < 1e-9);
        }
        assert!(subadditivity_report(&series(|r| r, &[3.0])).is_err());
        let gap = series(|r| (-r).exp(), &[1.0, 2.0, 5.0]);
        assert!(matches!(subadditivity_report(&gap), Err(Error::MissingRadius(_))));
    }
}
