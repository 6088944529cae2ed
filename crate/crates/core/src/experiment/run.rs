use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentKind};
use super::csv::{fmt_f64, to_csv, ResultRow};
use super::lemma::{lemma_suite, LemmaTally};
use crate::error::Result;
use crate::estimators::{
    a_records, b_records, build_config, estimate_disconnection, estimate_multi_packet, partition, run_trials,
    separation_ratio, series_sample, ConditionalParams, ConfigSummary, EstimateRecord, EventFilter,
};
use crate::exponents::{fit_exponent, flatness, subadditivity_report, xi_exact, xi_exact_general};
use crate::extremal::{excursion_mass_oracle, excursion_mass_rectangle};
use crate::rng::RandomSeed;

/// Runs with more excluded trials than this fraction are marked failed.
pub const MAX_EXCLUSION_RATE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.to_string(), passed, detail }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSummary {
    pub quantity: String,
    pub lambda: f64,
    pub xi_hat: f64,
    pub stderr: f64,
    pub xi_exact: Option<f64>,
    pub abs_error: Option<f64>,
    pub band_ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub experiment: String,
    pub config_hash: String,
    pub trials: usize,
    pub excluded: usize,
    pub exclusion_rate: f64,
    pub status: String,
    pub fits: Vec<FitSummary>,
    pub checks: Vec<Check>,
    pub wall_time_seconds: f64,
    #[serde(skip)]
    pub rows: Vec<ResultRow>,
    #[serde(skip)]
    pub output_dir: PathBuf,
}

impl RunOutcome {
    pub fn all_passed(&self) -> bool {
        self.status == "PASSED" && self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Default)]
struct Collected {
    records: Vec<EstimateRecord>,
    trials: usize,
    excluded: usize,
    fits: Vec<FitSummary>,
    checks: Vec<Check>,
}

/// Seed for the `k`-th radius of a series.
fn radius_seed(seed: u64, k: usize) -> u64 {
    RandomSeed::new(seed, 1 + k as u64).fork(0x5EED).value
}

/// Fit each λ's series over the configured radii, with flatness against the
/// exact exponent when one is known.
fn fit_series(
    c: &mut Collected,
    quantity: &str,
    lambdas: &[f64],
    exact: impl Fn(f64) -> Option<f64>,
) -> Result<()> {
    for &lambda in lambdas {
        let series: Vec<EstimateRecord> = c
            .records
            .iter()
            .filter(|r| r.quantity == quantity && r.lambda == lambda)
            .cloned()
            .collect();
        if series.len() < 3 || series.iter().any(|r| r.value <= 0.0) {
            c.checks.push(Check::new(
                &format!("{quantity}_fit_lambda_{lambda}"),
                false,
                "fewer than three radii with positive estimates".into(),
            ));
            continue;
        }
        let fit = fit_exponent(&series)?;
        let xi = exact(lambda);
        let band = match xi {
            Some(x) => Some(flatness(&series, x)?.band_ratio()),
            None => None,
        };
        c.fits.push(FitSummary {
            quantity: quantity.to_string(),
            lambda,
            xi_hat: fit.xi_hat,
            stderr: fit.stderr,
            xi_exact: xi,
            abs_error: xi.map(|x| (fit.xi_hat - x).abs()),
            band_ratio: band,
        });
    }
    Ok(())
}

fn b_series(cfg: &ExperimentConfig, c: &mut Collected) -> Result<()> {
    let filter = cfg.event_filter()?;
    let mut halves = Vec::new();
    for (k, &r) in cfg.r_values.iter().enumerate() {
        let results = run_trials(cfg.n_samples, radius_seed(cfg.seed, k), |s| {
            let config = build_config(r, cfg.dt, cfg.h, s, filter.needs_full_paths())?;
            Ok(ConfigSummary { l: config.l, l1: config.l1, pass: config.passes(&filter)? })
        });
        let (summaries, failed) = partition(results)?;
        c.trials += cfg.n_samples;
        c.excluded += failed;
        c.records.extend(b_records(&summaries, r, &cfg.lambda_values, filter, cfg.seed));
        halves.extend(b_records(&summaries[..summaries.len() / 2], r, &cfg.lambda_values, filter, cfg.seed));
    }
    let quantity = filter.quantity();
    fit_series(c, quantity, &cfg.lambda_values, |l| xi_exact(l).ok())?;
    for f in c.fits.clone() {
        c.checks.push(Check::new(
            &format!("xi_fit_lambda_{}", f.lambda),
            f.abs_error.is_some_and(|e| e <= 0.2),
            format!("fit {:.4} ± {:.4}, exact {:?}", f.xi_hat, f.stderr, f.xi_exact),
        ));
        if let Some(b) = f.band_ratio {
            c.checks.push(Check::new(
                &format!("flatness_lambda_{}", f.lambda),
                b < 3.0,
                format!("band ratio {b:.4} (bound 3)"),
            ));
        }
    }
    let integer_radii = cfg.r_values.iter().all(|r| r.fract() == 0.0) && cfg.r_values.first() == Some(&1.0);
    if integer_radii && cfg.r_values.len() >= 3 {
        for &lambda in &cfg.lambda_values {
            let pick = |recs: &[EstimateRecord]| -> Vec<EstimateRecord> {
                recs.iter().filter(|r| r.lambda == lambda).cloned().collect()
            };
            let full = subadditivity_report(&pick(&c.records));
            let half = subadditivity_report(&pick(&halves));
            if let (Ok(full), Ok(half)) = (full, half) {
                let drift = (full.max_ratio / half.max_ratio - 1.0).abs();
                c.checks.push(Check::new(
                    &format!("submultiplicative_constant_lambda_{lambda}"),
                    drift <= 0.25,
                    format!(
                        "c_hat {:.4} at ({}, {}), half-sample c_hat {:.4}, drift {:.3} (bound 0.25)",
                        full.max_ratio, full.argmax.0, full.argmax.1, half.max_ratio, drift
                    ),
                ));
            }
        }
    }
    Ok(())
}

fn a_series(cfg: &ExperimentConfig, c: &mut Collected) -> Result<()> {
    for (k, &r) in cfg.r_values.iter().enumerate() {
        let seed = radius_seed(cfg.seed, k);
        let results = run_trials(cfg.n_samples, seed, |s| series_sample(r, cfg.dt, cfg.h, s));
        let (samples, failed) = partition(results)?;
        c.trials += cfg.n_samples;
        c.excluded += failed;
        let zs: Vec<f64> = samples.iter().map(|s| s.z).collect();
        let summaries: Vec<ConfigSummary> =
            samples.iter().map(|s| ConfigSummary { l: s.l, l1: s.l1, pass: true }).collect();
        c.records.extend(a_records(&zs, r, &cfg.lambda_values, cfg.seed));
        c.records.extend(b_records(&summaries, r, &cfg.lambda_values, EventFilter::None, cfg.seed));
        let open = samples.iter().filter(|s| s.connected).count();
        let (p, se) = crate::stats::proportion(open, samples.len());
        c.records.push(EstimateRecord::new("p_connected", r, 0.0, p, se, samples.len(), cfg.seed));
    }
    fit_series(c, "a", &cfg.lambda_values, |l| xi_exact(l).ok())?;
    fit_series(c, "b", &cfg.lambda_values, |l| xi_exact(l).ok())?;
    fit_series(c, "p_connected", &[0.0], |_| xi_exact(0.0).ok())?;
    for &lambda in &cfg.lambda_values {
        let ratios: Vec<f64> = cfg
            .r_values
            .iter()
            .filter_map(|&r| {
                let get = |q: &str| c.records.iter().find(|x| x.quantity == q && x.r == r && x.lambda == lambda);
                let (a, b) = (get("a")?, get("b")?);
                (a.value > 0.0 && b.value > 0.0).then(|| a.value / b.value)
            })
            .collect();
        let spread = if ratios.len() == cfg.r_values.len() {
            ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                / ratios.iter().cloned().fold(f64::INFINITY, f64::min)
        } else {
            f64::INFINITY
        };
        c.checks.push(Check::new(
            &format!("a_over_b_band_lambda_{lambda}"),
            spread < 4.0,
            format!("ratios {ratios:?}, spread {spread:.4} (bound 4)"),
        ));
    }
    Ok(())
}

fn disconnect(cfg: &ExperimentConfig, c: &mut Collected) -> Result<()> {
    for (k, &r) in cfg.r_values.iter().enumerate() {
        let rec = estimate_disconnection(r, cfg.n_samples, cfg.dt, cfg.h, radius_seed(cfg.seed, k))?;
        c.trials += cfg.n_samples;
        c.excluded += cfg.n_samples - rec.n;
        c.records.push(EstimateRecord { seed: cfg.seed, ..rec });
    }
    fit_series(c, "p_connected", &[0.0], |_| xi_exact(0.0).ok())?;
    if let Some(f) = c.fits.first() {
        c.checks.push(Check::new(
            "disconnection_exponent",
            (0.57..=0.77).contains(&f.xi_hat),
            format!("fit {:.4} ± {:.4}, |fit - 2/3| = {:.4}", f.xi_hat, f.stderr, f.abs_error.unwrap_or(f64::NAN)),
        ));
    }
    Ok(())
}

fn separation(cfg: &ExperimentConfig, c: &mut Collected) -> Result<()> {
    let mut mins: Vec<(f64, f64, f64)> = Vec::new();
    for (k, &n) in cfg.r_values.iter().enumerate() {
        let params = ConditionalParams {
            n_outer: cfg.n_samples,
            n_inner: cfg.n_inner.unwrap_or(32),
            n_particles: cfg.n_particles.unwrap_or(4096),
            dt: cfg.dt,
            h: cfg.h,
            seed: radius_seed(cfg.seed, k),
        };
        let summaries = separation_ratio(n, &cfg.lambda_values, &params)?;
        c.trials += cfg.n_samples;
        for s in summaries {
            c.excluded += s.excluded;
            let used = s.ratios.len();
            c.records.push(EstimateRecord::new("separation_min", n, s.lambda, s.min, 0.0, used, cfg.seed));
            c.records.push(EstimateRecord::new("separation_median", n, s.lambda, s.median, 0.0, used, cfg.seed));
            c.records.push(EstimateRecord::new("separation_max", n, s.lambda, s.max, 0.0, used, cfg.seed));
            mins.push((n, s.lambda, s.min));
        }
    }
    // A vanishing unrestricted mean is a property of the configuration, not
    // a numerical failure.
    c.excluded = 0;
    for &lambda in &cfg.lambda_values {
        let m: Vec<f64> = mins.iter().filter(|x| x.1 == lambda).map(|x| x.2).collect();
        let positive = m.iter().all(|&x| x > 0.0);
        let spread = m.iter().cloned().fold(0.0, f64::max) / m.iter().cloned().fold(f64::INFINITY, f64::min);
        c.checks.push(Check::new(
            &format!("separation_min_positive_lambda_{lambda}"),
            positive,
            format!("minima {m:?}"),
        ));
        c.checks.push(Check::new(
            &format!("separation_min_stable_lambda_{lambda}"),
            positive && spread < 2.0,
            format!("spread across n {spread:.4} (bound 2)"),
        ));
    }
    Ok(())
}

fn lemma_verify(cfg: &ExperimentConfig, c: &mut Collected) -> Result<()> {
    let r = cfg.r_values[0];
    let suite = lemma_suite(r, cfg.n_samples, cfg.delta, cfg.dt, cfg.h, cfg.seed)?;
    c.trials += cfg.n_samples;
    let mut tally = |name: &str, t: LemmaTally| {
        let (p, se) = crate::stats::proportion(t.violations, t.checked);
        c.records.push(EstimateRecord::new(&format!("{name}_violation_rate"), r, 0.0, p, se, t.checked, cfg.seed));
        c.records.push(EstimateRecord::new(&format!("{name}_max_slack"), r, 0.0, t.max_slack, 0.0, t.checked, cfg.seed));
        c.checks.push(Check::new(
            &format!("{name}_violation_rate"),
            t.checked > 0 && t.violation_rate() <= 0.01,
            format!("{} violations in {} checked domains, {} skipped", t.violations, t.checked, t.skipped),
        ));
    };
    tally("disk_removal", suite.disk_removal);
    tally("subarc", suite.subarc);
    tally("serial_cut", suite.serial_cut);
    Ok(())
}

fn multi_packet(cfg: &ExperimentConfig, c: &mut Collected) -> Result<()> {
    let packets = cfg.packets.clone().unwrap_or_default();
    for (k, &r) in cfg.r_values.iter().enumerate() {
        let rec = estimate_multi_packet(&packets, &cfg.lambda_values, r, cfg.n_samples, cfg.dt, cfg.h, radius_seed(cfg.seed, k))?;
        c.trials += cfg.n_samples;
        c.excluded += cfg.n_samples - rec.n;
        c.records.push(EstimateRecord { seed: cfg.seed, ..rec });
    }
    let quantity = c.records[0].quantity.clone();
    let total: f64 = cfg.lambda_values.iter().sum();
    let exact = xi_exact_general(&packets, &cfg.lambda_values).ok();
    fit_series(c, &quantity, &[total], |_| exact)?;
    if let Some(f) = c.fits.first() {
        c.checks.push(Check::new(
            "multi_packet_exponent",
            f.abs_error.is_some_and(|e| e <= 0.2),
            format!("fit {:.4} ± {:.4}, exact {:?}", f.xi_hat, f.stderr, f.xi_exact),
        ));
    }
    Ok(())
}

fn mass_rect(cfg: &ExperimentConfig, c: &mut Collected) -> Result<()> {
    let mut scaled = Vec::new();
    for (k, &l) in cfg.r_values.iter().enumerate() {
        let m = excursion_mass_rectangle(l, cfg.delta, cfg.dt, cfg.n_samples, radius_seed(cfg.seed, k))?;
        let exact = excursion_mass_oracle(l);
        c.trials += cfg.n_samples;
        c.records.push(EstimateRecord::new("mass", l, 0.0, m.value, m.stderr, m.n, cfg.seed));
        c.records.push(EstimateRecord::new("mass_exact", l, 0.0, exact, 0.0, 0, cfg.seed));
        c.checks.push(Check::new(
            &format!("mass_matches_series_L_{l}"),
            (m.value - exact).abs() <= 3.0 * m.stderr,
            format!("estimate {:.6} ± {:.6}, series {:.6}", m.value, m.stderr, exact),
        ));
        scaled.push(l.exp() * m.value);
    }
    if scaled.len() > 1 {
        let band = scaled.iter().cloned().fold(0.0, f64::max) / scaled.iter().cloned().fold(f64::INFINITY, f64::min);
        c.checks.push(Check::new(
            "mass_exponential_band",
            band < 2.0,
            format!("e^L M(L) = {scaled:?}, band {band:.4} (bound 2)"),
        ));
    }
    Ok(())
}

fn run_status(exclusion_rate: f64) -> &'static str {
    if exclusion_rate > MAX_EXCLUSION_RATE {
        "FAILED"
    } else {
        "PASSED"
    }
}

/// Execute the configured experiment without touching the filesystem.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let workers = cfg.effective_workers()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| crate::error::Error::Config(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let mut c = Collected::default();
    pool.install(|| match cfg.experiment {
        ExperimentKind::BSeries => b_series(cfg, &mut c),
        ExperimentKind::ASeries => a_series(cfg, &mut c),
        ExperimentKind::Disconnect => disconnect(cfg, &mut c),
        ExperimentKind::Separation => separation(cfg, &mut c),
        ExperimentKind::LemmaVerify => lemma_verify(cfg, &mut c),
        ExperimentKind::MultiPacket => multi_packet(cfg, &mut c),
        ExperimentKind::MassRect => mass_rect(cfg, &mut c),
    })?;
    let hash = cfg.hash();
    let name = cfg.experiment.name().to_string();
    let exclusion_rate = if c.trials == 0 { 0.0 } else { c.excluded as f64 / c.trials as f64 };
    let rows = c
        .records
        .into_iter()
        .map(|record| ResultRow { experiment: name.clone(), record, config_hash: hash.clone() })
        .collect();
    Ok(RunOutcome {
        experiment: name,
        config_hash: hash,
        trials: c.trials,
        excluded: c.excluded,
        exclusion_rate,
        status: run_status(exclusion_rate).into(),
        fits: c.fits,
        checks: c.checks,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        rows,
        output_dir: cfg.output_dir.clone(),
    })
}

/// Execute and write `results.csv`, `summary.json` and `report.txt` into the
/// configured output directory.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let outcome = execute(cfg)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    std::fs::write(cfg.output_dir.join("results.csv"), to_csv(&outcome.rows))?;
    std::fs::write(cfg.output_dir.join("summary.json"), serde_json::to_string_pretty(&outcome)? + "\n")?;
    std::fs::write(cfg.output_dir.join("report.txt"), render_report(&outcome))?;
    Ok(outcome)
}

pub fn render_report(o: &RunOutcome) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "experiment {}  config {}", o.experiment, o.config_hash);
    let _ = writeln!(
        s,
        "trials {}  excluded {} ({:.3}%)  status {}  wall {:.1}s\n",
        o.trials,
        o.excluded,
        100.0 * o.exclusion_rate,
        o.status,
        o.wall_time_seconds
    );
    let _ = writeln!(s, "{:<28} {:>6} {:>7} {:>24} {:>24} {:>8}", "quantity", "r", "lambda", "value", "stderr", "n");
    for row in &o.rows {
        let r = &row.record;
        let _ = writeln!(
            s,
            "{:<28} {:>6} {:>7} {:>24} {:>24} {:>8}",
            r.quantity,
            r.r,
            r.lambda,
            fmt_f64(r.value),
            fmt_f64(r.stderr),
            r.n
        );
    }
    if !o.fits.is_empty() {
        let _ = writeln!(s, "\n{:<16} {:>7} {:>10} {:>9} {:>10} {:>10}", "fit", "lambda", "xi_hat", "stderr", "xi_exact", "band");
        for f in &o.fits {
            let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4}"));
            let _ = writeln!(
                s,
                "{:<16} {:>7} {:>10.4} {:>9.4} {:>10} {:>10}",
                f.quantity,
                f.lambda,
                f.xi_hat,
                f.stderr,
                opt(f.xi_exact),
                opt(f.band_ratio)
            );
        }
    }
    let _ = writeln!(s);
    for c in &o.checks {
        let _ = writeln!(s, "[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    s
}
