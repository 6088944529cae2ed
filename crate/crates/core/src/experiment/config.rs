use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimators::{EventFilter, NiceEnd};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ExperimentKind {
    BSeries,
    ASeries,
    Disconnect,
    Separation,
    LemmaVerify,
    MultiPacket,
    MassRect,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::BSeries => "B_SERIES",
            ExperimentKind::ASeries => "A_SERIES",
            ExperimentKind::Disconnect => "DISCONNECT",
            ExperimentKind::Separation => "SEPARATION",
            ExperimentKind::LemmaVerify => "LEMMA_VERIFY",
            ExperimentKind::MultiPacket => "MULTI_PACKET",
            ExperimentKind::MassRect => "MASS_RECT",
        }
    }
}

fn default_filter() -> String {
    "NONE".into()
}

fn default_delta() -> f64 {
    0.1
}

fn default_workers() -> usize {
    1
}

/// A single experiment, read from one JSON document. Unknown keys are
/// rejected.
///
/// `r_values` are log-radii (rectangle lengths for `MASS_RECT`). `delta` is
/// the niceness scale, the `ε` of `E_n_EPS`, the lemma scale, and the start
/// offset of `MASS_RECT`. `n_inner` is the inner sample count of
/// `SEPARATION` and `n_particles` its splitting population; `packets` the
/// packet sizes of `MULTI_PACKET`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub r_values: Vec<f64>,
    pub lambda_values: Vec<f64>,
    pub n_samples: usize,
    pub dt: f64,
    pub h: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_filter")]
    pub filter: String,
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_inner: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_particles: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub packets: Option<Vec<u32>>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.r_values.is_empty() {
            return bad("r_values is empty".into());
        }
        if self.r_values.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return bad("r_values must be positive".into());
        }
        if self.r_values.windows(2).any(|w| w[0] >= w[1]) {
            return bad("r_values must be sorted ascending without repeats".into());
        }
        if self.lambda_values.iter().any(|&l| !(l >= 0.0 && l.is_finite())) {
            return bad("lambda_values must be finite and ≥ 0".into());
        }
        if self.n_samples == 0 || self.workers == 0 || self.n_inner == Some(0) || self.n_particles == Some(0) {
            return bad("counts must be positive".into());
        }
        if !(self.dt > 0.0) || !(self.h > 0.0) || !(self.delta > 0.0) {
            return bad("dt, h and delta must be positive".into());
        }
        self.event_filter()?.validate()?;
        let needs_lambdas = !matches!(
            self.experiment,
            ExperimentKind::Disconnect | ExperimentKind::LemmaVerify | ExperimentKind::MassRect
        );
        if needs_lambdas && self.lambda_values.is_empty() {
            return bad(format!("{} needs lambda_values", self.experiment.name()));
        }
        if self.experiment == ExperimentKind::MultiPacket {
            match &self.packets {
                Some(p) if p.len() == self.lambda_values.len() => {}
                _ => return bad("MULTI_PACKET needs packets with one size per lambda".into()),
            }
        }
        Ok(())
    }

    pub fn event_filter(&self) -> Result<EventFilter> {
        let d = self.delta;
        Ok(match self.filter.as_str() {
            "NONE" => EventFilter::None,
            "E_n" => EventFilter::En,
            "E_n_EPS" => EventFilter::EnEps(d),
            "H_n" => EventFilter::Hn,
            "DELTA_NICE" => EventFilter::DeltaNice { delta: d, at: NiceEnd::Both },
            "DELTA_NICE_BEGIN" => EventFilter::DeltaNice { delta: d, at: NiceEnd::Begin },
            "DELTA_NICE_END" => EventFilter::DeltaNice { delta: d, at: NiceEnd::End },
            "VERY_NICE_END" => EventFilter::VeryNiceEnd,
            "NICE_BEGIN_VERY_NICE_END" => EventFilter::NiceBeginVeryNiceEnd(d),
            other => return Err(Error::Config(format!("unknown filter {other:?}"))),
        })
    }

    /// Worker count after applying the `BXI_WORKERS` override.
    pub fn effective_workers(&self) -> Result<usize> {
        match std::env::var("BXI_WORKERS") {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(w) if w > 0 => Ok(w),
                _ => Err(Error::Config(format!("BXI_WORKERS must be a positive integer, got {v:?}"))),
            },
            Err(_) => Ok(self.workers),
        }
    }

    /// Hex SHA-256 of the canonical JSON of every field that affects the
    /// numbers (worker count and output directory excluded).
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.workers = 1;
        canon.output_dir = PathBuf::new();
        let json = serde_json::to_string(&canon).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{"experiment":"B_SERIES","r_values":[2,3,4],"lambda_values":[1],
        "n_samples":10,"dt":0.001,"h":0.05,"seed":7,"output_dir":"out"}"#;

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::from_json(BASE).unwrap();
        assert_eq!(c.workers, 1);
        assert_eq!(c.event_filter().unwrap(), EventFilter::None);
    }

    #[test]
    fn unknown_key_rejected() {
        let text = BASE.replace("\"seed\":7", "\"seed\":7,\"sede\":1");
        assert!(matches!(ExperimentConfig::from_json(&text), Err(Error::Config(_))));
    }

    #[test]
    fn unsorted_radii_rejected() {
        let text = BASE.replace("[2,3,4]", "[3,2]");
        assert!(ExperimentConfig::from_json(&text).is_err());
    }

    #[test]
    fn hash_ignores_workers_and_output() {
        let a = ExperimentConfig::from_json(BASE).unwrap();
        let mut b = a.clone();
        b.workers = 8;
        b.output_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.seed = 8;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }
}
