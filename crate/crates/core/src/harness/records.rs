//! Coincidence records and their CSV exchange format.
//!
//! Counts are written as plain CSV with a fixed header so scans can be
//! plotted or diffed directly. Floats use the shortest representation that
//! round-trips, which keeps re-parsed records bit-identical.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "sweep_value,detector_pair,coincidences,shots";

/// Counts for one detector pair at one sweep setting.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceRecord {
    /// Analyzer angle in degrees or prism offset in micrometers.
    pub sweep_value: f64,
    /// Coincidence label, e.g. "D4I-D3". Must not contain commas.
    pub detector_pair: String,
    pub coincidences: u64,
    pub shots: u64,
}

impl CoincidenceRecord {
    pub fn rate(&self) -> f64 {
        self.coincidences as f64 / self.shots as f64
    }
}

/// Renders records in grid order under the fixed header.
pub fn to_csv(records: &[CoincidenceRecord]) -> String {
    let mut out = String::with_capacity(32 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        debug_assert!(!r.detector_pair.contains(',') && !r.detector_pair.contains('\n'));
        writeln!(
            out,
            "{},{},{},{}",
            r.sweep_value, r.detector_pair, r.coincidences, r.shots
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// Parses CSV produced by [`to_csv`], validating the header, field counts,
/// and the coincidences <= shots invariant.
pub fn parse_csv(text: &str) -> Result<Vec<CoincidenceRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == CSV_HEADER => {}
        Some((_, header)) => {
            return Err(Error::CsvFormat {
                line: 1,
                message: format!("expected header {CSV_HEADER:?}, got {header:?}"),
            })
        }
        None => {
            return Err(Error::CsvFormat {
                line: 1,
                message: "empty input".to_string(),
            })
        }
    }
    let mut records = Vec::new();
    for (idx, raw) in lines {
        let lineno = idx + 1;
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::CsvFormat {
                line: lineno,
                message: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let sweep_value: f64 = fields[0].parse().map_err(|e| Error::CsvFormat {
            line: lineno,
            message: format!("sweep_value {:?}: {e}", fields[0]),
        })?;
        if !sweep_value.is_finite() {
            return Err(Error::CsvFormat {
                line: lineno,
                message: format!("sweep_value {sweep_value} is not finite"),
            });
        }
        let detector_pair = fields[1].to_string();
        if detector_pair.is_empty() {
            return Err(Error::CsvFormat {
                line: lineno,
                message: "empty detector_pair".to_string(),
            });
        }
        let coincidences: u64 = fields[2].parse().map_err(|e| Error::CsvFormat {
            line: lineno,
            message: format!("coincidences {:?}: {e}", fields[2]),
        })?;
        let shots: u64 = fields[3].parse().map_err(|e| Error::CsvFormat {
            line: lineno,
            message: format!("shots {:?}: {e}", fields[3]),
        })?;
        if shots == 0 {
            return Err(Error::CsvFormat {
                line: lineno,
                message: "shots must be at least 1".to_string(),
            });
        }
        if coincidences > shots {
            return Err(Error::CsvFormat {
                line: lineno,
                message: format!("coincidences {coincidences} exceed shots {shots}"),
            });
        }
        records.push(CoincidenceRecord {
            sweep_value,
            detector_pair,
            coincidences,
            shots,
        });
    }
    Ok(records)
}

pub fn write_csv(path: &Path, records: &[CoincidenceRecord]) -> std::io::Result<()> {
    std::fs::write(path, to_csv(records))
}

/// Records for one detector pair, in input order.
pub fn filter_pair(records: &[CoincidenceRecord], pair: &str) -> Vec<CoincidenceRecord> {
    records
        .iter()
        .filter(|r| r.detector_pair == pair)
        .cloned()
        .collect()
}
