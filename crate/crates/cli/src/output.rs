//! File emission: numeric formatting and atomic writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::CliError;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `contents` next to `path` under a temporary name, then renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Io(format!("{}: not a file path", path.display())))?
        .to_string_lossy()
        .into_owned();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(contents)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io)
}

/// Writes to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, contents: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => write_atomic(p, contents),
        None => std::io::stdout()
            .write_all(contents)
            .map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

pub fn to_json<T: serde::Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(value)
        .map_err(|e| CliError::Io(format!("serializing JSON: {e}")))?;
    out.push(b'\n');
    Ok(out)
}
