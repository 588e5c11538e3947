//! CSV writers for simulator and estimator outputs.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::Result;

/// Write serializable rows with a header taken from the first row's fields.
pub fn write_rows<W: Write, R: Serialize>(out: W, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Same as [`write_rows`], but writes `header` even when `rows` is empty.
pub fn write_rows_with_header<W: Write, R: Serialize>(out: W, header: &[&str], rows: &[R]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rows_to<R: Serialize>(path: &Path, header: &[&str], rows: &[R]) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_rows_with_header(std::io::BufWriter::new(f), header, rows)
}

pub fn rows_to_string<R: Serialize>(header: &[&str], rows: &[R]) -> Result<String> {
    let mut buf = Vec::new();
    write_rows_with_header(&mut buf, header, rows)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub const STATS_HEADER: [&str; 5] = ["policy", "schedule_length", "critical_path", "utilization", "drops"];
pub const GANTT_HEADER: [&str; 5] = ["braid", "op", "open", "close", "links"];
pub const WINDOW_HEADER: [&str; 4] = ["W", "epr_high_water", "schedule_length", "stall_cycles"];
pub const ESTIMATES_HEADER: [&str; 5] = ["encoding", "d", "qubits", "seconds", "spacetime"];
pub const CROSSOVER_HEADER: [&str; 3] = ["family", "p_P", "op_count"];
