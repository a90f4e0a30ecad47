//! On-disk experiment artifacts.
//!
//! JSON and JSONL artifacts embed the config hash directly. CSV files cannot
//! without breaking their fixed headers, so every file written to an output
//! directory is also listed with its SHA-256 in `manifest.json`, which carries
//! the config hash for all of them.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::harness::{RolloutRecord, SweepRow};
use crate::optimize::OptimizerRun;

pub const TRACE_CSV: &str = "trace.csv";
pub const RUN_JSON: &str = "run.json";
pub const BEST_THETA_JSON: &str = "best_theta.json";
pub const HOLDOUT_JSON: &str = "holdout.json";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const SWEEP_JSON: &str = "sweep.json";
pub const ROLLOUT_JSONL: &str = "rollout.jsonl";
pub const MANIFEST_JSON: &str = "manifest.json";

pub const TRACE_HEADER: [&str; 5] = ["iteration", "best_J", "mean_J", "evals", "wallclock_ms"];
pub const SWEEP_HEADER: [&str; 7] = ["budget", "J_optimized", "J_uniform", "J_greedy", "J_optimistic", "evals", "wallclock_ms"];

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    config_hash: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    /// File name to hex SHA-256 of its contents.
    pub artifacts: BTreeMap<String, String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn wallclock(value: f64, record: bool) -> String {
    if record {
        format!("{value:.3}")
    } else {
        "0".to_string()
    }
}

/// Writes artifacts into one directory and keeps its manifest current.
pub struct ArtifactWriter<'a> {
    dir: &'a Path,
    config_hash: String,
    record_wallclock: bool,
    written: BTreeMap<String, String>,
}

impl<'a> ArtifactWriter<'a> {
    pub fn new(dir: &'a Path, config_hash: impl Into<String>, record_wallclock: bool) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(ArtifactWriter { dir, config_hash: config_hash.into(), record_wallclock, written: BTreeMap::new() })
    }

    fn put(&mut self, name: &str, bytes: Vec<u8>) -> Result<()> {
        fs::write(self.dir.join(name), &bytes)?;
        self.written.insert(name.to_string(), sha256_hex(&bytes));
        self.flush_manifest()
    }

    fn flush_manifest(&self) -> Result<()> {
        let path = self.dir.join(MANIFEST_JSON);
        let mut manifest = match fs::read(&path) {
            Ok(bytes) => serde_json::from_slice::<Manifest>(&bytes)
                .ok()
                .filter(|m| m.config_hash == self.config_hash)
                .unwrap_or_default(),
            Err(_) => Manifest::default(),
        };
        manifest.config_hash = self.config_hash.clone();
        manifest.artifacts.extend(self.written.clone());
        fs::write(path, serde_json::to_vec_pretty(&manifest)?)?;
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, body: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(&Stamped { config_hash: &self.config_hash, body })?;
        bytes.push(b'\n');
        self.put(name, bytes)
    }

    /// `run.json`, with wallclock fields zeroed unless recording is on.
    pub fn run_json(&mut self, run: &OptimizerRun) -> Result<()> {
        if self.record_wallclock {
            return self.json(RUN_JSON, run);
        }
        let mut run = run.clone();
        run.trace.iter_mut().for_each(|r| r.wallclock_ms = 0.0);
        self.json(RUN_JSON, &run)
    }

    /// `sweep.json`, with wallclock fields zeroed unless recording is on.
    pub fn sweep_json(&mut self, rows: &[SweepRow]) -> Result<()> {
        let mut rows = rows.to_vec();
        if !self.record_wallclock {
            rows.iter_mut().for_each(|r| r.wallclock_ms = 0.0);
        }
        self.json(SWEEP_JSON, &serde_json::json!({ "rows": rows }))
    }

    pub fn trace_csv(&mut self, run: &OptimizerRun) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(TRACE_HEADER)?;
        for rec in &run.trace {
            w.write_record([
                rec.iteration.to_string(),
                rec.best_value.to_string(),
                rec.mean_value.to_string(),
                rec.evaluations.to_string(),
                wallclock(rec.wallclock_ms, self.record_wallclock),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        self.put(TRACE_CSV, bytes)
    }

    pub fn sweep_csv(&mut self, rows: &[SweepRow]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(SWEEP_HEADER)?;
        for row in rows {
            w.write_record([
                row.budget.to_string(),
                row.j_optimized.to_string(),
                row.j_uniform.to_string(),
                row.j_greedy.to_string(),
                row.j_optimistic.to_string(),
                row.evaluations.to_string(),
                wallclock(row.wallclock_ms, self.record_wallclock),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        self.put(SWEEP_CSV, bytes)
    }

    /// One record per step: episode, t, state, action, reward, cumulative return.
    pub fn rollout_jsonl(&mut self, rollouts: &[RolloutRecord], discount: f64) -> Result<()> {
        #[derive(Serialize)]
        struct StepLine<'a> {
            config_hash: &'a str,
            episode: usize,
            t: usize,
            state: &'a [f64],
            action: usize,
            reward: f64,
            cumulative_return: f64,
        }
        let mut out = BufWriter::new(Vec::new());
        for (episode, record) in rollouts.iter().enumerate() {
            let mut cumulative = 0.0;
            let mut weight = 1.0;
            for (t, step) in record.steps.iter().enumerate() {
                cumulative += weight * step.reward;
                weight *= discount;
                let line = StepLine {
                    config_hash: &self.config_hash,
                    episode,
                    t,
                    state: &step.state,
                    action: step.action.index(),
                    reward: step.reward,
                    cumulative_return: cumulative,
                };
                serde_json::to_writer(&mut out, &line)?;
                out.write_all(b"\n")?;
            }
        }
        let bytes = out.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        self.put(ROLLOUT_JSONL, bytes)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyReport {
    pub checked: Vec<String>,
    pub problems: Vec<String>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.problems.is_empty()
    }
}

fn embedded_hashes(name: &str, bytes: &[u8]) -> std::result::Result<Vec<String>, String> {
    let values: Vec<serde_json::Value> = if name.ends_with(".jsonl") {
        let text = std::str::from_utf8(bytes).map_err(|e| e.to_string())?;
        text.lines().map(serde_json::from_str).collect::<std::result::Result<_, _>>().map_err(|e| e.to_string())?
    } else if name.ends_with(".json") {
        vec![serde_json::from_slice(bytes).map_err(|e| e.to_string())?]
    } else {
        return Ok(Vec::new());
    };
    values
        .iter()
        .map(|v| {
            v.get("config_hash")
                .and_then(|h| h.as_str())
                .map(str::to_string)
                .ok_or_else(|| "missing config_hash".to_string())
        })
        .collect()
}

/// Checks the manifest, file digests and embedded hashes in `dir` against `config_hash`.
pub fn verify_dir(dir: &Path, config_hash: &str) -> Result<VerifyReport> {
    let manifest: Manifest = serde_json::from_slice(&fs::read(dir.join(MANIFEST_JSON))?)?;
    let mut report = VerifyReport::default();
    if manifest.config_hash != config_hash {
        report.problems.push(format!(
            "{MANIFEST_JSON}: config hash {} does not match {config_hash}",
            manifest.config_hash
        ));
    }
    for (name, digest) in &manifest.artifacts {
        let bytes = match fs::read(dir.join(name)) {
            Ok(b) => b,
            Err(e) => {
                report.problems.push(format!("{name}: {e}"));
                continue;
            }
        };
        if &sha256_hex(&bytes) != digest {
            report.problems.push(format!("{name}: contents changed since it was written"));
        }
        match embedded_hashes(name, &bytes) {
            Ok(hashes) => {
                if hashes.iter().any(|h| h != config_hash) {
                    report.problems.push(format!("{name}: embedded config hash does not match"));
                }
            }
            Err(e) => report.problems.push(format!("{name}: {e}")),
        }
        report.checked.push(name.clone());
    }
    Ok(report)
}
