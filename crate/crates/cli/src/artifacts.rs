//! Artifact writers. CSV numbers use 17 significant digits of scientific
//! notation so downstream comparisons are lossless; JSON uses serde_json's
//! shortest round-trip float encoding. Identical input, identical bytes.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::CliError;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Numerical(format!("serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| CliError::Numerical(format!("cannot write {}: {e}", path.display())))
}

pub fn write_csv(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<(), CliError> {
    let file = std::fs::File::create(path)
        .map_err(|e| CliError::Numerical(format!("cannot create {}: {e}", path.display())))?;
    let mut w = std::io::BufWriter::new(file);
    let io_err = |e: std::io::Error| CliError::Numerical(format!("cannot write {}: {e}", path.display()));
    writeln!(w, "{header}").map_err(io_err)?;
    for row in rows {
        let line = row
            .iter()
            .map(|v| format!("{v:.16e}"))
            .collect::<Vec<_>>()
            .join(",");
        writeln!(w, "{line}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Numerical(format!("cannot write {}: {e}", path.display())))
}
