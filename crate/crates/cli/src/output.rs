//! Artifact emission: CSV files with '#'-prefixed metadata, JSON summaries,
//! and a closing manifest that references every file written. All numeric
//! output is deterministic; wall-clock fields live only in the manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};

pub struct Emitter {
    dir: PathBuf,
    outputs: Vec<String>,
    started: Instant,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'static str,
    seed: Option<u64>,
    workers: Option<usize>,
    realizations: Option<usize>,
    config: &'a Map<String, Value>,
    outputs: &'a [String],
    wall_time_s: f64,
    unix_time_s: u64,
}

impl Emitter {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
            started: Instant::now(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn write_csv(
        &mut self,
        name: &str,
        metadata: &[String],
        header: &str,
        rows: &[String],
    ) -> Result<()> {
        let mut text = String::new();
        for line in metadata {
            text.push_str("# ");
            text.push_str(line);
            text.push('\n');
        }
        text.push_str(header);
        text.push('\n');
        for row in rows {
            text.push_str(row);
            text.push('\n');
        }
        self.write(name, text.as_bytes())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).context("serializing summary")?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes manifest.json and consumes the emitter; every previously
    /// written file is listed under `outputs`.
    pub fn finish(
        self,
        command: &str,
        seed: Option<u64>,
        workers: Option<usize>,
        realizations: Option<usize>,
        config: Map<String, Value>,
    ) -> Result<()> {
        let manifest = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            workers,
            realizations,
            config: &config,
            outputs: &self.outputs,
            wall_time_s: self.started.elapsed().as_secs_f64(),
            unix_time_s: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        let mut text = serde_json::to_string_pretty(&manifest).context("serializing manifest")?;
        text.push('\n');
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

/// Inserts `<key>_hz` and `<key>_rad_s` entries for a frequency given in Hz.
pub fn record_frequency(map: &mut Map<String, Value>, key: &str, hz: f64) {
    map.insert(format!("{key}_hz"), Value::from(hz));
    map.insert(
        format!("{key}_rad_s"),
        Value::from(2.0 * std::f64::consts::PI * hz),
    );
}
