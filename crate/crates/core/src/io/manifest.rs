//! Run manifests: config echo, fingerprints, diagnostics and timings.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::Scheme;
use crate::io::config::config_to_string;
use crate::mesh::io::hex_digest;
use crate::solver::Diagnostics;
use crate::study::{digest_parts, StudyConfig, SweepRow};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveEntry {
    pub scheme: Scheme,
    pub m: f64,
    pub n: f64,
    pub diagnostics: Option<Diagnostics>,
    pub certificate: Option<f64>,
    pub failure: Option<String>,
}

impl From<&SweepRow> for SolveEntry {
    fn from(r: &SweepRow) -> Self {
        SolveEntry {
            scheme: r.scheme,
            m: r.m,
            n: r.n,
            diagnostics: r.diagnostics.clone(),
            certificate: r.certificate,
            failure: r.failure.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub label: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub tool_version: String,
    pub command: String,
    pub config: Option<StudyConfig>,
    /// The configuration rendered in the input format.
    pub config_text: Option<String>,
    pub config_fingerprint: Option<String>,
    pub mesh_fingerprint: Option<String>,
    pub reference_fingerprint: Option<String>,
    pub outputs: Vec<OutputFile>,
    pub solves: Vec<SolveEntry>,
    /// Command-specific results (rate fits, max-law fit, ...).
    pub summary: serde_json::Value,
    pub timings: Vec<Timing>,
}

impl RunManifest {
    /// Manifest whose run id is derived from the command and its inputs.
    pub fn new(command: &str, config: Option<&StudyConfig>, mesh_fingerprint: Option<&str>) -> Self {
        let config_fingerprint = config.map(StudyConfig::fingerprint);
        let run_id = digest_parts(&[
            command,
            config_fingerprint.as_deref().unwrap_or(""),
            mesh_fingerprint.unwrap_or(""),
        ])[..16]
            .to_string();
        RunManifest {
            run_id,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: config.cloned(),
            config_text: config.map(config_to_string),
            config_fingerprint,
            mesh_fingerprint: mesh_fingerprint.map(str::to_string),
            reference_fingerprint: None,
            outputs: Vec::new(),
            solves: Vec::new(),
            summary: serde_json::Value::Null,
            timings: Vec::new(),
        }
    }

    /// Writes `bytes` to `dir/name` and records it.
    pub fn add_output(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.outputs.push(OutputFile {
            path: name.to_string(),
            sha256: hex_digest(bytes),
        });
        Ok(())
    }

    pub fn time(&mut self, label: &str, seconds: f64) {
        self.timings.push(Timing {
            label: label.to_string(),
            seconds,
        });
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Internal(format!("manifest encoding: {e}")))?;
        std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            path,
            message: e.to_string(),
        })
    }

    /// Checks that every listed output exists with the recorded digest.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        for out in &self.outputs {
            let path = dir.join(&out.path);
            let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
            if hex_digest(&bytes) != out.sha256 {
                return Err(Error::Format {
                    path,
                    message: format!("contents do not match run {}", self.run_id),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CaseId;

    #[test]
    fn outputs_verify_and_tampering_is_caught() {
        let dir = tempfile::tempdir().unwrap();
        let config = StudyConfig::new(CaseId::BoxWall);
        let mut m = RunManifest::new("sweep", Some(&config), Some("abc"));
        m.add_output(dir.path(), "a.csv", b"x,y\n").unwrap();
        m.write(dir.path()).unwrap();
        let back = RunManifest::read(dir.path()).unwrap();
        assert_eq!(back, m);
        back.verify(dir.path()).unwrap();
        std::fs::write(dir.path().join("a.csv"), b"x,z\n").unwrap();
        assert!(back.verify(dir.path()).is_err());
    }

    #[test]
    fn run_id_is_deterministic() {
        let config = StudyConfig::new(CaseId::BoxWall);
        let a = RunManifest::new("sweep", Some(&config), Some("abc"));
        let b = RunManifest::new("sweep", Some(&config), Some("abc"));
        assert_eq!(a.run_id, b.run_id);
        assert_ne!(a.run_id, RunManifest::new("contour", Some(&config), Some("abc")).run_id);
    }
}
