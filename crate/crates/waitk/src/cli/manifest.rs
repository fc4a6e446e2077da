use super::CliError;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Serialize)]
struct Manifest<'a, T: Serialize> {
    command: &'a str,
    seed: u64,
    version: &'a str,
    created_unix_ms: u128,
    flags: &'a T,
}

/// Every run records its resolved flags and seed. The timestamp is the only
/// field that varies between identical runs.
pub fn write_manifest<T: Serialize>(
    out_dir: &Path,
    command: &str,
    flags: &T,
    seed: u64,
) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(out_dir)?;
    let manifest = Manifest {
        command,
        seed,
        version: env!("CARGO_PKG_VERSION"),
        created_unix_ms: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0),
        flags,
    };
    let path = out_dir.join("manifest.json");
    let text =
        serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Data(e.to_string()))?;
    std::fs::write(&path, text)?;
    Ok(path)
}
