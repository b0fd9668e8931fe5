//! Byte-stable artifact writing: CSV with a provenance comment line, JSON
//! with sorted keys, and the config hash both carry.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::ExperimentConfig;

pub const ARTIFACT_VERSION: u32 = 1;

/// FNV-1a over the canonical (sorted-key) JSON encoding of the
/// experiment-defining parameters. Execution details (output directory,
/// worker cap, strictness) stay out so reruns hash identically.
pub fn config_hash(config: &ExperimentConfig) -> String {
    #[derive(Serialize)]
    struct Semantic<'a> {
        model: &'a str,
        d: f64,
        n: &'a [usize],
        trials: usize,
        fading: &'a str,
        alpha: f64,
        w: f64,
        gamma_cap: f64,
        k: f64,
        eta: f64,
        p0: f64,
        seed: u64,
    }
    let semantic = Semantic {
        model: &config.model,
        d: config.d,
        n: &config.n,
        trials: config.trials,
        fading: &config.fading,
        alpha: config.alpha,
        w: config.w,
        gamma_cap: config.gamma_cap,
        k: config.k,
        eta: config.eta,
        p0: config.p0,
        seed: config.seed,
    };
    let canonical = serde_json::to_value(&semantic)
        .and_then(|v| serde_json::to_string(&v))
        .unwrap_or_default();
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in canonical.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

/// Writes a CSV artifact: provenance comment, header row, then rows.
pub fn write_csv(
    path: &Path,
    hash: &str,
    header: &str,
    rows: impl IntoIterator<Item = String>,
) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut out = Vec::new();
    writeln!(out, "# config_hash={hash} artifact_version={ARTIFACT_VERSION}")?;
    writeln!(out, "{header}")?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    fs::write(path, out)
}

/// Writes a JSON artifact with sorted keys and the provenance fields mixed in.
pub fn write_json<T: Serialize>(path: &Path, hash: &str, payload: &T) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut value = serde_json::to_value(payload)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
    if let serde_json::Value::Object(map) = &mut value {
        map.insert("config_hash".into(), serde_json::Value::String(hash.to_string()));
        map.insert("artifact_version".into(), serde_json::Value::from(ARTIFACT_VERSION));
    }
    let mut text = serde_json::to_string_pretty(&value)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
    text.push('\n');
    fs::write(path, text)
}
