//! Run bookkeeping: the JSON manifest written around every command and the
//! CSV artifact writer.
//!
//! The manifest is written with `status: "running"` before any work starts
//! and rewritten with the output list, wall-clock duration, and final status
//! afterwards — on failure too, so a divergent run leaves a record.

use momrev_core::{Error, Result};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Serialize)]
struct RunManifest {
    command: String,
    config: serde_json::Value,
    seed: u64,
    code_version: String,
    outputs: Vec<String>,
    wall_clock_seconds: Option<f64>,
    status: String,
}

/// Writes the manifest lifecycle and collects CSV outputs for one command.
pub struct Runner {
    out_dir: PathBuf,
    manifest_path: PathBuf,
    manifest: RunManifest,
    started: Instant,
}

impl Runner {
    /// Creates the output directory and records a `running` manifest.
    pub fn begin(
        command: &str,
        seed: u64,
        config: serde_json::Value,
        out_dir: &Path,
    ) -> Result<Runner> {
        fs::create_dir_all(out_dir)?;
        let manifest = RunManifest {
            command: command.to_string(),
            config,
            seed,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
            wall_clock_seconds: None,
            status: "running".to_string(),
        };
        let runner = Runner {
            out_dir: out_dir.to_path_buf(),
            manifest_path: out_dir.join(format!("{}_manifest.json", command.replace('-', "_"))),
            manifest,
            started: Instant::now(),
        };
        runner.flush_manifest()?;
        Ok(runner)
    }

    fn flush_manifest(&self) -> Result<()> {
        let json = serde_json::to_string_pretty(&self.manifest)
            .map_err(|e| Error::Malformed(format!("manifest serialization: {e}")))?;
        fs::write(&self.manifest_path, json + "\n")?;
        Ok(())
    }

    /// Writes one RFC-4180 CSV (CRLF line endings, header row) and registers
    /// it in the manifest's output list.
    pub fn write_csv<R>(&mut self, name: &str, header: &[&str], rows: R) -> Result<()>
    where
        R: IntoIterator<Item = Vec<String>>,
    {
        let mut text = String::new();
        push_record(&mut text, header.iter().map(|s| s.to_string()));
        for row in rows {
            if row.len() != header.len() {
                return Err(Error::ShapeMismatch(format!(
                    "{name}: row with {} fields under a {}-column header",
                    row.len(),
                    header.len()
                )));
            }
            push_record(&mut text, row);
        }
        fs::write(self.out_dir.join(name), text)?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    /// Finalizes the manifest with status `ok` and the elapsed wall clock.
    pub fn finish(mut self) -> Result<()> {
        self.manifest.wall_clock_seconds = Some(self.started.elapsed().as_secs_f64());
        self.manifest.status = "ok".to_string();
        self.flush_manifest()
    }

    /// Finalizes the manifest with a failure status (best effort) and hands
    /// the error back for exit-code mapping.
    pub fn fail(mut self, err: Error) -> Error {
        self.manifest.wall_clock_seconds = Some(self.started.elapsed().as_secs_f64());
        self.manifest.status = format!("failed: {err}");
        let _ = self.flush_manifest();
        err
    }
}

/// Runs `body`, finalizing the manifest as `ok` or `failed` either way.
pub fn with_manifest(
    command: &str,
    seed: u64,
    config: serde_json::Value,
    out_dir: &Path,
    body: impl FnOnce(&mut Runner) -> Result<()>,
) -> Result<()> {
    let mut runner = Runner::begin(command, seed, config, out_dir)?;
    match body(&mut runner) {
        Ok(()) => runner.finish(),
        Err(e) => Err(runner.fail(e)),
    }
}

fn push_record(text: &mut String, fields: impl IntoIterator<Item = String>) {
    let mut first = true;
    for field in fields {
        if !first {
            text.push(',');
        }
        first = false;
        if field.contains([',', '"', '\r', '\n']) {
            text.push('"');
            text.push_str(&field.replace('"', "\"\""));
            text.push('"');
        } else {
            text.push_str(&field);
        }
    }
    text.push_str("\r\n");
}

/// Shortest-roundtrip decimal rendering (Rust's default float display).
pub fn fmt(v: f64) -> String {
    format!("{v}")
}
