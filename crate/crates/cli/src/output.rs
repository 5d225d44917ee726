//! `#`-prefixed provenance header and CSV writing.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::config::SCHEMA;
use crate::CliError;

pub fn config_hash(canonical: &str) -> String {
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Header lines, without timestamps so repeated runs are byte-identical.
pub fn header(command: &str, canonical: &str, extra: &[(&str, String)]) -> Vec<String> {
    let mut lines = vec![
        format!("# goldenrate {} {command}", env!("CARGO_PKG_VERSION")),
        format!("# schema={SCHEMA}"),
        format!("# config_sha256={}", config_hash(canonical)),
    ];
    for (k, v) in extra {
        lines.push(format!("# {k}={v}"));
    }
    lines
}

pub fn open(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

/// Prints to stdout; a closed pipe is not an error.
pub fn print(text: &str) -> Result<(), CliError> {
    let mut out = io::stdout().lock();
    match writeln!(out, "{text}").and_then(|_| out.flush()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(CliError::Io(e.to_string())),
        _ => Ok(()),
    }
}

pub fn write_table(
    out: &mut dyn Write,
    header: &[String],
    columns: &[&str],
    rows: &[Vec<String>],
) -> Result<(), CliError> {
    match write_all(out, header, columns, rows) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(CliError::Io(e.to_string())),
        _ => Ok(()),
    }
}

fn write_all(out: &mut dyn Write, header: &[String], columns: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    for line in header {
        writeln!(out, "{line}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(columns)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()
}

/// Shortest round-trip representation.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}
