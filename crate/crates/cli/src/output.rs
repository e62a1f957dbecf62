use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::commands::Outcome;
use crate::Failure;

/// Writes `contents` to `dir/name` through a temp file in the same
/// directory, so readers never observe a partial file.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    let target = dir.join(name);
    write_atomic_path(&target, contents)?;
    Ok(target)
}

pub fn write_atomic_path(target: &Path, contents: &str) -> Result<(), Failure> {
    let dir = match target.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let io = |e: std::io::Error| Failure::Io(format!("{}: {e}", target.display()));
    std::fs::create_dir_all(&dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(target).map_err(|e| io(e.error))?;
    Ok(())
}

/// Report, side files, and the wall-time sidecar (kept out of the report so
/// reports stay byte-identical across runs).
pub fn emit(dir: &Path, task: &str, outcome: &Outcome, elapsed: Duration) -> Result<PathBuf, Failure> {
    for (name, contents) in &outcome.files {
        write_atomic(dir, name, contents)?;
    }
    let report = write_atomic(dir, &format!("{task}.json"), &chebcent::io::to_json_pretty(&outcome.report))?;
    write_atomic(
        dir,
        &format!("{task}.timing.txt"),
        &format!("wall_seconds={:.6}\n", elapsed.as_secs_f64()),
    )?;
    Ok(report)
}
