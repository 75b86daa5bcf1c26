//! Experiment reports and their CSV/JSON serializations.
//!
//! Artifacts must be byte-identical for a fixed (config, seed) pair across
//! reruns and worker counts, so nothing time- or machine-dependent goes into
//! them; wall-clock timing is reported on the console only.

use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::stats::SampleStats;

/// A point estimate with its uncertainty and sample count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub reps: u64,
}

impl From<SampleStats> for Estimate {
    fn from(s: SampleStats) -> Self {
        Estimate {
            mean: s.mean(),
            stderr: s.stderr(),
            reps: s.count(),
        }
    }
}

/// One PASS/FAIL line of a configured threshold check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionLine {
    pub id: String,
    pub pass: bool,
    pub detail: String,
}

/// The self-describing result of one experiment run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub seed: u64,
    pub version: String,
    pub config_hash: String,
    /// Full effective configuration echo.
    pub config: serde_json::Value,
    /// Module-specific result table.
    pub payload: serde_json::Value,
    #[serde(default)]
    pub criteria: Vec<CriterionLine>,
}

impl ExperimentReport {
    pub fn new(
        experiment: &str,
        seed: u64,
        config: serde_json::Value,
        payload: serde_json::Value,
    ) -> Self {
        let canonical = serde_json::to_string(&config).unwrap_or_default();
        ExperimentReport {
            experiment: experiment.to_string(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: format!("{:016x}", fnv1a(canonical.as_bytes())),
            config,
            payload,
            criteria: Vec::new(),
        }
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("report serialization");
        bytes.push(b'\n');
        bytes
    }

    pub fn write_json(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.to_json_bytes())
    }

    pub fn overall_pass(&self) -> bool {
        self.criteria.iter().all(|c| c.pass)
    }
}

/// FNV-1a 64-bit hash; stable across platforms and runs.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// RFC 4180 quoting: fields with commas, quotes or newlines are quoted and
/// inner quotes doubled.
pub fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Render rows to CSV bytes (CRLF per RFC 4180).
pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut out = Vec::new();
    let mut write_row = |fields: &[String]| {
        let line = fields
            .iter()
            .map(|f| csv_escape(f))
            .collect::<Vec<_>>()
            .join(",");
        out.extend_from_slice(line.as_bytes());
        out.extend_from_slice(b"\r\n");
    };
    write_row(&header.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    for row in rows {
        write_row(row);
    }
    out
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    std::fs::write(path, csv_bytes(header, rows))
}

/// Raw-sample binary dump: little-endian 64-bit floats in replicate order.
pub fn write_raw_f64_le(path: &Path, samples: &[f64]) -> io::Result<()> {
    let mut w = io::BufWriter::new(std::fs::File::create(path)?);
    for &x in samples {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_escape("plain"), "plain");
        assert_eq!(csv_escape("a,b"), "\"a,b\"");
        assert_eq!(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn csv_layout() {
        let bytes = csv_bytes(
            &["a", "b"],
            &[vec!["1".into(), "x,y".into()]],
        );
        assert_eq!(bytes, b"a,b\r\n1,\"x,y\"\r\n");
    }

    #[test]
    fn report_json_roundtrip_and_hash_stability() {
        let cfg = serde_json::json!({"n": 16, "reps": 2});
        let a = ExperimentReport::new("demo", 7, cfg.clone(), serde_json::json!([1, 2]));
        let b = ExperimentReport::new("demo", 7, cfg, serde_json::json!([1, 2]));
        assert_eq!(a.to_json_bytes(), b.to_json_bytes());
        let parsed: ExperimentReport = serde_json::from_slice(&a.to_json_bytes()).unwrap();
        assert_eq!(parsed.config_hash, a.config_hash);
    }

    #[test]
    fn fnv_distinguishes_inputs() {
        assert_ne!(fnv1a(b"a"), fnv1a(b"b"));
        assert_eq!(fnv1a(b""), 0xcbf2_9ce4_8422_2325);
    }
}
