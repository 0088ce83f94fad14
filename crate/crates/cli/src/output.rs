//! CSV files with a `#` manifest header.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::CliError;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("output {}: {e}", path.display()))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// Writes `manifest`, then a header row and one row per record.
pub fn write_csv<R, I>(path: &Path, manifest: &str, header: &[&str], rows: I) -> Result<(), CliError>
where
    R: AsRef<[f64]>,
    I: IntoIterator<Item = R>,
{
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut buf = BufWriter::new(file);
    buf.write_all(manifest.as_bytes()).map_err(|e| io_err(path, e))?;
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(row.as_ref().iter().map(|x| format!("{x:e}"))).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Like [`write_csv`] for rows of preformatted fields.
pub fn write_records<I>(path: &Path, manifest: &str, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut buf = BufWriter::new(file);
    buf.write_all(manifest.as_bytes()).map_err(|e| io_err(path, e))?;
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// `<dir>/<stem>_mu<mu>[_state<k>].csv`
pub fn entry_path(dir: &Path, stem: &str, mu: f64, state: Option<usize>) -> PathBuf {
    match state {
        Some(k) => dir.join(format!("{stem}_mu{mu}_state{k}.csv")),
        None => dir.join(format!("{stem}_mu{mu}.csv")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_then_header_then_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        write_csv(&p, "# a = 1\n", &["t", "v"], [[0.0, 1.5], [0.1, -2.0]]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "# a = 1");
        assert_eq!(lines[1], "t,v");
        assert_eq!(lines[2], "0e0,1.5e0");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn entry_names() {
        let p = entry_path(Path::new("o"), "trajectory", 0.5, Some(2));
        assert_eq!(p, Path::new("o/trajectory_mu0.5_state2.csv"));
    }
}
