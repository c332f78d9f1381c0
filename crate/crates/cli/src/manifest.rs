use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one run written next to its outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    /// Every resolved parameter, whatever its source.
    pub params: Value,
    pub seeds: Vec<u64>,
    pub version: String,
    pub started: String,
    pub finished: String,
    pub config_file: Option<String>,
    /// File name to sha256 hex digest.
    pub outputs: BTreeMap<String, String>,
    /// Summary numbers and notes that are not in the output files.
    pub results: Value,
    /// Arguments that repeat this run without flags, environment or config.
    pub replay: Vec<String>,
}

pub fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Everything a command produced, before it is printed or written.
pub struct RunOutput {
    pub command: String,
    pub params: Value,
    pub seeds: Vec<u64>,
    pub replay: Vec<String>,
    /// `(file name, contents)`; the first is the primary output.
    pub files: Vec<(String, String)>,
    pub results: Value,
}

/// Prints the primary output, or writes every file and a manifest into `dir`.
pub fn deliver(
    out: RunOutput,
    dir: Option<&Path>,
    started: String,
    config_file: Option<&PathBuf>,
) -> Result<(), CliError> {
    let Some(dir) = dir else {
        if let Some((_, text)) = out.files.first() {
            print!("{text}");
        }
        return Ok(());
    };
    fs::create_dir_all(dir)?;
    let mut outputs = BTreeMap::new();
    for (name, text) in &out.files {
        fs::write(dir.join(name), text)?;
        outputs.insert(name.clone(), sha256_hex(text.as_bytes()));
        eprintln!("wrote {}", dir.join(name).display());
    }
    let manifest = RunManifest {
        command: out.command,
        argv: std::env::args().collect(),
        params: out.params,
        seeds: out.seeds,
        version: env!("CARGO_PKG_VERSION").to_string(),
        started,
        finished: now(),
        config_file: config_file.map(|p| p.display().to_string()),
        outputs,
        results: out.results,
        replay: out.replay,
    };
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    eprintln!("wrote {}", path.display());
    Ok(())
}
