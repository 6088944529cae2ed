//! Configuration-driven experiment runner: schedules trials, writes
//! `results.csv`, `summary.json` and `report.txt`, merges earlier runs and
//! runs the quick verification suites.

mod config;
mod csv;
mod lemma;
mod report;
mod run;
mod verify;

pub use config::{ExperimentConfig, ExperimentKind};
pub use csv::{fmt_f64, parse_csv, read_csv, to_csv, ResultRow, HEADER};
pub use lemma::{lemma_suite, LemmaSuite, LemmaTally};
pub use report::{merge, report, MergedReport, PooledFit};
pub use run::{execute, render_report, run, Check, FitSummary, RunOutcome, MAX_EXCLUSION_RATE};
pub use verify::{verify, Suite, SuiteOutcome};
