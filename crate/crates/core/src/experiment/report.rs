use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use super::csv::{read_csv, ResultRow};
use crate::error::{Error, Result};
use crate::estimators::EstimateRecord;
use crate::exponents::{fit_exponent, flatness, subadditivity_report, xi_exact};

/// Refit of one `(experiment, quantity, λ)` series after pooling.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledFit {
    pub experiment: String,
    pub quantity: String,
    pub lambda: f64,
    pub xi_hat: f64,
    pub stderr: f64,
    pub xi_exact: Option<f64>,
    pub band_ratio: Option<f64>,
    /// Largest `value_{m+n+1} / (value_m value_n)`, when the radii allow it.
    pub c_hat: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct MergedReport {
    /// One pooled record per `(experiment, quantity, r, λ)`, sorted.
    pub pooled: Vec<(String, EstimateRecord)>,
    pub fits: Vec<PooledFit>,
    pub text: String,
}

type Key = (String, String, u64, u64);

/// Quantities decaying like `e^{-ξ(2,λ) r}` with the closed-form exponent.
fn has_exact(quantity: &str) -> bool {
    quantity == "a" || quantity == "p_connected" || quantity.starts_with('b') && !quantity.starts_with("b_multi")
}

/// Pool rows sharing `(experiment, quantity, r, λ)`: the value is the
/// sample-size weighted mean and the standard error `√(Σ n² se²) / Σ n`.
pub fn merge(rows: &[ResultRow]) -> Result<MergedReport> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no result rows to report".into()));
    }
    let mut groups: BTreeMap<Key, Vec<&EstimateRecord>> = BTreeMap::new();
    for row in rows {
        let r = &row.record;
        // Bit patterns of non-negative floats sort like the floats.
        let key = (row.experiment.clone(), r.quantity.clone(), r.r.to_bits(), r.lambda.to_bits());
        groups.entry(key).or_default().push(r);
    }
    let mut pooled = Vec::new();
    for ((experiment, _, _, _), recs) in &groups {
        let total: usize = recs.iter().map(|r| r.n).sum();
        let first = recs[0];
        let rec = if total == 0 {
            first.clone()
        } else {
            let w = |r: &EstimateRecord| r.n as f64 / total as f64;
            let value = recs.iter().map(|r| w(r) * r.value).sum();
            let stderr = recs.iter().map(|r| (w(r) * r.stderr).powi(2)).sum::<f64>().sqrt();
            EstimateRecord::new(&first.quantity, first.r, first.lambda, value, stderr, total, first.seed)
        };
        pooled.push((experiment.clone(), rec));
    }

    let mut series: BTreeMap<(String, String, u64), Vec<EstimateRecord>> = BTreeMap::new();
    for (exp, rec) in &pooled {
        series
            .entry((exp.clone(), rec.quantity.clone(), rec.lambda.to_bits()))
            .or_default()
            .push(rec.clone());
    }
    let mut fits = Vec::new();
    for ((experiment, quantity, lambda), recs) in series {
        let lambda = f64::from_bits(lambda);
        let Ok(fit) = fit_exponent(&recs) else { continue };
        let xi = if has_exact(&quantity) { xi_exact(lambda).ok() } else { None };
        let band = xi.and_then(|x| flatness(&recs, x).ok()).map(|f| f.band_ratio());
        let c_hat = subadditivity_report(&recs).ok().map(|s| s.max_ratio);
        fits.push(PooledFit { experiment, quantity, lambda, xi_hat: fit.xi_hat, stderr: fit.stderr, xi_exact: xi, band_ratio: band, c_hat });
    }
    let text = render(&pooled, &fits);
    Ok(MergedReport { pooled, fits, text })
}

fn render(pooled: &[(String, EstimateRecord)], fits: &[PooledFit]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<14} {:<26} {:>6} {:>7} {:>14} {:>12} {:>9}", "experiment", "quantity", "r", "lambda", "value", "stderr", "n");
    for (e, r) in pooled {
        let _ = writeln!(s, "{:<14} {:<26} {:>6} {:>7} {:>14.6e} {:>12.4e} {:>9}", e, r.quantity, r.r, r.lambda, r.value, r.stderr, r.n);
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<14} {:<26} {:>7} {:>10} {:>9} {:>10} {:>8} {:>8}", "experiment", "quantity", "lambda", "xi_fit", "stderr", "xi_exact", "band", "c_hat");
    let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4}"));
    for f in fits {
        let _ = writeln!(
            s,
            "{:<14} {:<26} {:>7} {:>10.4} {:>9.4} {:>10} {:>8} {:>8}",
            f.experiment, f.quantity, f.lambda, f.xi_hat, f.stderr, opt(f.xi_exact), opt(f.band_ratio), opt(f.c_hat)
        );
    }
    s
}

/// Read and merge the given `results.csv` files.
pub fn report(paths: &[PathBuf]) -> Result<MergedReport> {
    if paths.is_empty() {
        return Err(Error::InvalidArgument("no input files".into()));
    }
    let mut rows = Vec::new();
    for p in paths {
        rows.extend(read_csv(p)?);
    }
    merge(&rows)
}
