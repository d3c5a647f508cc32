use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use stplab::{Result, StreamRng};

use crate::args::{Cli, Format};

/// Artifact sink for one run; skips formats that were not requested.
pub struct Output {
    pub dir: PathBuf,
    pub seed: u64,
    label: String,
    formats: Vec<Format>,
}

impl Output {
    pub fn new(cli: &Cli) -> Result<Self> {
        fs::create_dir_all(&cli.out)?;
        Ok(Self {
            dir: cli.out.clone(),
            seed: cli.seed,
            label: cli.command.path().replace(' ', "/"),
            formats: cli.format.clone(),
        })
    }

    pub fn rng(&self, sub: &str) -> StreamRng {
        StreamRng::for_label(self.seed, &self.stream(sub))
    }

    pub fn derive_seed(&self, sub: &str) -> u64 {
        StreamRng::derive_seed(self.seed, &self.stream(sub))
    }

    fn stream(&self, sub: &str) -> String {
        if sub.is_empty() {
            self.label.clone()
        } else {
            format!("{}/{sub}", self.label)
        }
    }

    fn put(&self, f: Format, name: &str, body: &str) -> Result<()> {
        if self.formats.contains(&f) {
            fs::write(self.dir.join(name), body)?;
        }
        Ok(())
    }

    pub fn csv(&self, name: &str, body: &str) -> Result<()> {
        self.put(Format::Csv, name, body)
    }

    pub fn svg(&self, name: &str, body: &str) -> Result<()> {
        self.put(Format::Svg, name, body)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        self.put(Format::Json, name, &(serde_json::to_string_pretty(value)? + "\n"))
    }

    /// Transcripts are JSON lines.
    pub fn jsonl(&self, name: &str, body: &str) -> Result<()> {
        self.put(Format::Json, name, body)
    }
}

/// Written before the command runs, so failed runs keep their config too.
pub fn write_manifest(cli: &Cli, dir: &Path) -> Result<()> {
    let formats: Vec<Value> = cli.format.iter().map(|f| json!(f)).collect();
    let manifest = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": cli.command.path(),
        "seed": cli.seed,
        "out": cli.out,
        "formats": formats,
        "max_qubits": stplab::qstate::max_qubits(),
        "params": cli.command,
    });
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}
