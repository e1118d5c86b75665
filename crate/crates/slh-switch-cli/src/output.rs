//! Run outputs: fixed-layout CSV time series, schema-versioned JSON
//! summaries and an append-only manifest with file digests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use slh_switch::model::RateConvention;
use slh_switch::{FluxSample, Scenario, Trajectory};

pub const SUMMARY_SCHEMA: &str = "slh-switch/summary/1";
pub const MANIFEST_SCHEMA: &str = "slh-switch/manifest/1";

/// Fixed CSV header; 12 significant digits per value, `\n` line endings.
pub const CSV_HEADER: &str =
    "t,phi1,phi2,phi3,Phi1,Phi2,Phi3,P2,P1e,P2g,gamma1,gamma2,gamma3";

fn fmt(v: f64) -> String {
    format!("{v:.11e}")
}

pub fn timeseries_csv(samples: &[FluxSample]) -> String {
    let mut out = String::with_capacity(64 * (samples.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in samples {
        let row = [
            s.t,
            s.phi[0],
            s.phi[1],
            s.phi[2],
            s.integrated[0],
            s.integrated[1],
            s.integrated[2],
            s.p2,
            s.p1e,
            s.p2g,
            s.gamma[0],
            s.gamma[1],
            s.gamma[2],
        ];
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            out.push_str(&fmt(v));
            first = false;
        }
        out.push('\n');
    }
    out
}

/// Per-run summary; `phi2_*` fields are filled as applicable to the
/// commands that produced them.
#[derive(Debug, Serialize)]
pub struct Summary {
    pub schema: String,
    pub convention: RateConvention,
    pub dt: f64,
    pub t_end: f64,
    pub kind: String,
    pub phi_integrated: [f64; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi2_on: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi2_control: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi2_signal: Option<f64>,
    pub max_p2: f64,
    pub flux_residual: f64,
    pub residual_threshold: f64,
    pub converged: bool,
    pub steps: usize,
}

impl Summary {
    pub fn for_run(scenario: &Scenario, traj: &Trajectory, convention: RateConvention) -> Self {
        let kind = match (scenario.signal_present(), scenario.control_present()) {
            (true, true) => "on",
            (false, true) => "control-only",
            (true, false) => "signal-only",
            (false, false) => "vacuum",
        };
        Summary {
            schema: SUMMARY_SCHEMA.into(),
            convention,
            dt: scenario.dt,
            t_end: scenario.horizon,
            kind: kind.into(),
            phi_integrated: traj.integrated,
            phi2_on: None,
            phi2_control: None,
            phi2_signal: None,
            max_p2: traj.max_p2,
            flux_residual: traj.residual,
            residual_threshold: scenario.residual_threshold,
            converged: traj.converged,
            steps: traj.steps,
        }
    }
}

pub struct OutDir {
    dir: PathBuf,
    files: Vec<(String, String)>, // (name, sha256)
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        let digest = hex::encode(Sha256::digest(text.as_bytes()));
        self.files.push((name.to_string(), digest));
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_text(name, &text)
    }

    /// Append one manifest entry recording the files written so far.
    pub fn append_manifest(&mut self, command: &str, config_snapshot: serde_json::Value,
                           dt: f64, t_end: f64) -> Result<()> {
        #[derive(Serialize)]
        struct ManifestEntry<'a> {
            schema: &'a str,
            tool_version: &'a str,
            command: &'a str,
            wall_clock_utc: String,
            dt: f64,
            t_end: f64,
            config: serde_json::Value,
            outputs: Vec<serde_json::Value>,
        }
        let entry = ManifestEntry {
            schema: MANIFEST_SCHEMA,
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            wall_clock_utc: unix_timestamp(),
            dt,
            t_end,
            config: config_snapshot,
            outputs: self
                .files
                .iter()
                .map(|(name, sha)| serde_json::json!({"file": name, "sha256": sha}))
                .collect(),
        };
        let line = serde_json::to_string(&entry)?;
        let path = self.dir.join("manifest.jsonl");
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .with_context(|| format!("opening {}", path.display()))?;
        writeln!(f, "{line}")?;
        Ok(())
    }
}

fn unix_timestamp() -> String {
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .unwrap_or_default();
    format!("{}.{:09}", now.as_secs(), now.subsec_nanos())
}

/// Surface CSV for sweeps: axis columns, then the objective and diagnostics.
pub fn surface_csv(result: &slh_switch::sweep::SweepResult) -> String {
    let mut out = String::new();
    for axis in &result.axes {
        out.push_str(axis.param.name());
        out.push(',');
    }
    out.push_str("value,converged,max_p2,phi2_on,phi2_control\n");
    for p in &result.points {
        for v in &p.params {
            out.push_str(&fmt(*v));
            out.push(',');
        }
        out.push_str(&fmt(p.value));
        out.push(',');
        out.push_str(if p.converged { "1" } else { "0" });
        out.push(',');
        out.push_str(&fmt(p.max_p2));
        out.push(',');
        out.push_str(&p.phi2_on.map(fmt).unwrap_or_default());
        out.push(',');
        out.push_str(&p.phi2_control.map(fmt).unwrap_or_default());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_fixed_header_and_digits() {
        let samples = vec![FluxSample {
            t: 0.5,
            phi: [1.0 / 3.0, 0.0, 0.0],
            integrated: [0.1, 0.2, 0.3],
            p2: 0.0,
            p1e: 0.0,
            p2g: 0.0,
            gamma: [3.5, 0.0, 6.0],
        }];
        let csv = timeseries_csv(&samples);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let row = lines.next().unwrap();
        assert!(row.starts_with("5.00000000000e-1,3.33333333333e-1"));
        assert_eq!(row.split(',').count(), 13);
        assert!(csv.ends_with('\n'));
    }
}
