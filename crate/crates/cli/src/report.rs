//! Structured run reports.
//!
//! Every command prints one JSON report to standard output and a short
//! human summary to standard error. Reports are byte-identical across
//! repeated runs with identical inputs once the trailing `wall_time_ms`
//! field is stripped.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> std::io::Result<FileDigest> {
        let bytes = std::fs::read(path)?;
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        let digest = hasher.finalize();
        let sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        Ok(FileDigest {
            path: path.display().to_string(),
            sha256,
        })
    }
}

#[derive(Serialize)]
pub struct Inputs {
    pub network: Option<FileDigest>,
    pub dataset: Option<FileDigest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

#[derive(Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub inputs: Inputs,
    pub results: serde_json::Value,
    pub wall_time_ms: u128,
}

impl RunReport {
    pub fn emit(
        command: String,
        inputs: Inputs,
        results: serde_json::Value,
        started: Instant,
    ) {
        let report = RunReport {
            tool: "pathgauge",
            version: env!("CARGO_PKG_VERSION"),
            command,
            inputs,
            results,
            wall_time_ms: started.elapsed().as_millis(),
        };
        println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serializes")
        );
    }
}

/// JSON value for a float that may be infinite (JSON has no `inf` literal).
pub fn num(x: f64) -> serde_json::Value {
    if x.is_finite() {
        serde_json::json!(x)
    } else if x > 0.0 {
        serde_json::json!("inf")
    } else {
        serde_json::json!("-inf")
    }
}
