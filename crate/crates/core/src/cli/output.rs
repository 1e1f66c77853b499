//! Artifact writing: CSV files with `#` metadata lines and a JSON sidecar.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Result;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Collects artifacts of one run and writes them with a shared preamble.
pub struct Artifacts {
    dir: PathBuf,
    command: String,
    config: Value,
    resolved: Vec<(String, Value)>,
    csv: Vec<(String, String)>,
    json: Vec<(String, Value)>,
    started: Instant,
}

/// CSV body under construction.
pub struct Csv {
    body: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            body: format!("{}\n", header.join(",")),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        let _ = writeln!(self.body, "{}", fields.join(","));
    }
}

/// Shortest round-trip representation, in exponent form for very small or
/// very large magnitudes.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

impl Artifacts {
    pub fn new(dir: &Path, command: &str, config: &impl Serialize) -> Result<Self> {
        Ok(Self {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            config: serde_json::to_value(config)?,
            resolved: Vec::new(),
            csv: Vec::new(),
            json: Vec::new(),
            started: Instant::now(),
        })
    }

    /// A value derived during the run (e.g. an automatically chosen gamma).
    pub fn resolve(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.resolved.push((key.to_string(), serde_json::to_value(value)?));
        Ok(())
    }

    pub fn csv(&mut self, name: &str, csv: Csv) {
        self.csv.push((name.to_string(), csv.body));
    }

    pub fn json(&mut self, name: &str, value: impl Serialize) -> Result<()> {
        self.json.push((name.to_string(), serde_json::to_value(value)?));
        Ok(())
    }

    /// Writes everything and returns the paths written.
    pub fn finish(self) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(&self.dir)?;
        let wall = self.started.elapsed().as_secs_f64();
        let resolved: serde_json::Map<String, Value> = self.resolved.iter().cloned().collect();
        let mut preamble = String::new();
        let _ = writeln!(preamble, "# grf-periodic {VERSION}");
        let _ = writeln!(preamble, "# command: {}", self.command);
        let _ = writeln!(preamble, "# config: {}", self.config);
        let _ = writeln!(preamble, "# resolved: {}", Value::Object(resolved.clone()));
        let _ = writeln!(preamble, "# wall_time_s: {wall:.3}");

        let mut written = Vec::new();
        for (name, body) in &self.csv {
            let path = self.dir.join(name);
            fs::write(&path, format!("{preamble}{body}"))?;
            written.push(path);
        }
        for (name, value) in &self.json {
            let path = self.dir.join(name);
            let doc = json!({
                "meta": {
                    "version": VERSION,
                    "command": self.command,
                    "config": self.config,
                    "resolved": resolved,
                },
                "data": value,
            });
            fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")?;
            written.push(path);
        }
        let sidecar = self.dir.join(format!("{}.run.json", self.command));
        let files: Vec<String> = written
            .iter()
            .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
            .collect();
        let doc = json!({
            "version": VERSION,
            "command": self.command,
            "config": self.config,
            "resolved": resolved,
            "wall_time_s": wall,
            "outputs": files,
        });
        fs::write(&sidecar, serde_json::to_string_pretty(&doc)? + "\n")?;
        written.push(sidecar);
        Ok(written)
    }
}
