//! File emission and CSV ingestion. All output files are written atomically
//! (temp file in the target directory, then rename).

use std::io::Write;
use std::path::Path;

use pacekit::{SampleStream, TrafficCurve};

use crate::CliError;

pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::Io(format!("cannot create temp file in {}: {e}", dir.display())))?;
    tmp.write_all(contents.as_bytes())
        .map_err(|e| CliError::Io(format!("write failed: {e}")))?;
    tmp.persist(path)
        .map_err(|e| CliError::Io(format!("cannot move output into {}: {e}", path.display())))?;
    Ok(())
}

fn read_csv_rows(path: &Path, expected_header: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| CliError::Config(format!("{}: empty file", path.display())))?;
    if header.trim() != expected_header {
        return Err(CliError::Config(format!(
            "{}: expected header `{expected_header}`, found `{header}`",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let mut parts = line.split(',');
        let parse = |s: Option<&str>| -> Result<f64, CliError> {
            s.ok_or_else(|| CliError::Config(format!("{}: row {}: missing field", path.display(), i + 2)))?
                .trim()
                .parse::<f64>()
                .map_err(|e| CliError::Config(format!("{}: row {}: {e}", path.display(), i + 2)))
        };
        let a = parse(parts.next())?;
        let b = parse(parts.next())?;
        rows.push((a, b));
    }
    Ok(rows)
}

pub const TRAFFIC_HEADER: &str = "time_s,intensity";
pub const SAMPLE_STREAM_HEADER: &str = "timestamp_s,spend_velocity";

/// Load a uniform `time_s,intensity` curve; non-uniform spacing is rejected
/// (regularize such data first).
pub fn load_traffic_csv(path: &Path) -> Result<TrafficCurve, CliError> {
    let rows = read_csv_rows(path, TRAFFIC_HEADER)?;
    if rows.len() < 2 {
        return Err(CliError::Config(format!(
            "{}: need at least 2 traffic samples",
            path.display()
        )));
    }
    let step = rows[1].0 - rows[0].0;
    if step <= 0.0 {
        return Err(CliError::Config(format!("{}: times must increase", path.display())));
    }
    for w in rows.windows(2) {
        let d = w[1].0 - w[0].0;
        if ((d - step) / step).abs() > 1e-6 {
            return Err(CliError::Numerical(format!(
                "{}: non-uniform sample spacing ({d} vs {step}); regularize first",
                path.display()
            )));
        }
    }
    TrafficCurve::from_intensities(step, rows.into_iter().map(|(_, v)| v).collect())
        .map_err(CliError::from)
}

/// Load an irregular `timestamp_s,spend_velocity` stream.
pub fn load_sample_stream_csv(path: &Path) -> Result<SampleStream, CliError> {
    let rows = read_csv_rows(path, SAMPLE_STREAM_HEADER)?;
    let (ts, vs): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    SampleStream::new(ts, vs).map_err(CliError::from)
}

/// Peek at a CSV header line.
pub fn csv_header(path: &Path) -> Result<String, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    Ok(text
        .lines()
        .find(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .unwrap_or_default()
        .trim()
        .to_string())
}
