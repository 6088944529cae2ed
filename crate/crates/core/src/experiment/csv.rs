use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimators::EstimateRecord;

pub const HEADER: &str = "experiment,quantity,r,lambda,value,stderr,n,seed,config_hash";

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub record: EstimateRecord,
    pub config_hash: String,
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for row in rows {
        let r = &row.record;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            row.experiment,
            r.quantity,
            fmt_f64(r.r),
            fmt_f64(r.lambda),
            fmt_f64(r.value),
            fmt_f64(r.stderr),
            r.n,
            r.seed,
            row.config_hash
        )
        .expect("writing to a String");
    }
    out
}

pub fn parse_csv(text: &str, origin: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == HEADER => {}
        Some(h) => return Err(Error::Schema(format!("{origin}: unexpected header {h:?}"))),
        None => return Err(Error::Schema(format!("{origin}: empty file"))),
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let at = || format!("{origin}:{}", k + 2);
        if f.len() != 9 {
            return Err(Error::Schema(format!("{}: expected 9 fields, found {}", at(), f.len())));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Schema(format!("{}: bad number {s:?}", at())))
        };
        let int = |s: &str| -> Result<u64> {
            s.parse::<u64>().map_err(|_| Error::Schema(format!("{}: bad integer {s:?}", at())))
        };
        rows.push(ResultRow {
            experiment: f[0].to_string(),
            record: EstimateRecord::new(f[1], num(f[2])?, num(f[3])?, num(f[4])?, num(f[5])?, int(f[6])? as usize, int(f[7])?),
            config_hash: f[8].to_string(),
        });
    }
    Ok(rows)
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    parse_csv(&std::fs::read_to_string(path)?, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let rows = vec![ResultRow {
            experiment: "B_SERIES".into(),
            record: EstimateRecord::new("b", 2.0, 1.0, 0.1 + 0.2, 1.0 / 3.0, 10, 42),
            config_hash: "abc".into(),
        }];
        let text = to_csv(&rows);
        assert!(text.starts_with(HEADER));
        assert!(text.contains("3.0000000000000004e-1"));
        assert_eq!(parse_csv(&text, "t").unwrap(), rows);
    }

    #[test]
    fn wrong_header_is_schema_error() {
        assert!(matches!(parse_csv("a,b\n", "t"), Err(Error::Schema(_))));
        assert!(matches!(parse_csv("", "t"), Err(Error::Schema(_))));
    }
}
