//! Result rows and their CSV form.
//!
//! `results.csv` holds only fields that are pure functions of the config
//! and seed, so repeated runs are byte-identical regardless of worker
//! count; measured wall time stays in memory (`runtime_ms`) and in the
//! run summary printed by the CLI.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// One (hierarchy, model, subset size, replication, method) outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub hierarchy: String,
    pub generating_model: String,
    pub method: String,
    pub l_h: usize,
    pub subset_size: usize,
    /// `subset_size / l_h`.
    pub proportion: f64,
    pub replication: usize,
    /// None when the method failed on this cell (see `flags`).
    pub ari: Option<f64>,
    pub clusters_found: Option<usize>,
    pub profile_accuracy: Option<f64>,
    /// Measured wall time; diagnostic only, never written to results.csv.
    pub runtime_ms: u64,
    /// Semicolon-joined markers: degenerate_ari, vertex_tie,
    /// vertex_collision, unlabeled_cluster, error:<message>.
    pub flags: String,
}

pub const CSV_HEADER: [&str; 11] = [
    "hierarchy",
    "generating_model",
    "method",
    "l_h",
    "subset_size",
    "proportion",
    "replication",
    "ari",
    "clusters_found",
    "profile_accuracy",
    "flags",
];

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn fmt_opt_usize(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Write rows as CSV with a fixed column order and floats at six decimal
/// places.
pub fn write_csv_to<W: Write>(rows: &[ResultRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(CSV_HEADER)?;
    for row in rows {
        wtr.write_record(&[
            row.hierarchy.clone(),
            row.generating_model.clone(),
            row.method.clone(),
            row.l_h.to_string(),
            row.subset_size.to_string(),
            format!("{:.6}", row.proportion),
            row.replication.to_string(),
            fmt_opt_f64(row.ari),
            fmt_opt_usize(row.clusters_found),
            fmt_opt_f64(row.profile_accuracy),
            row.flags.clone(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("results csv", e))?;
    Ok(())
}

pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let file =
        std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    write_csv_to(rows, file)
}

pub fn csv_bytes(rows: &[ResultRow]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_csv_to(rows, &mut buf)?;
    Ok(buf)
}

fn parse_opt_f64(cell: &str, what: &str) -> Result<Option<f64>> {
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse::<f64>()
        .map(Some)
        .map_err(|_| Error::InvalidArgument(format!("{what} cell '{cell}' is not a number")))
}

/// Read rows back from CSV (`runtime_ms` is not stored and reads as 0).
pub fn read_csv_from<R: std::io::Read>(r: R) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    {
        let headers = rdr.headers()?;
        if headers.len() != CSV_HEADER.len() {
            return Err(Error::InvalidArgument(format!(
                "results csv has {} columns, expected {}",
                headers.len(),
                CSV_HEADER.len()
            )));
        }
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let get = |i: usize| record.get(i).unwrap_or("").to_string();
        let parse_usize = |i: usize, what: &str| -> Result<usize> {
            record
                .get(i)
                .unwrap_or("")
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("{what} cell is not an integer")))
        };
        rows.push(ResultRow {
            hierarchy: get(0),
            generating_model: get(1),
            method: get(2),
            l_h: parse_usize(3, "l_h")?,
            subset_size: parse_usize(4, "subset_size")?,
            proportion: record
                .get(5)
                .unwrap_or("")
                .parse()
                .map_err(|_| Error::InvalidArgument("proportion cell is not a number".into()))?,
            replication: parse_usize(6, "replication")?,
            ari: parse_opt_f64(record.get(7).unwrap_or(""), "ari")?,
            clusters_found: if record.get(8).unwrap_or("").is_empty() {
                None
            } else {
                Some(parse_usize(8, "clusters_found")?)
            },
            profile_accuracy: parse_opt_f64(record.get(9).unwrap_or(""), "profile_accuracy")?,
            runtime_ms: 0,
            flags: get(10),
        });
    }
    Ok(rows)
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let file =
        std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    read_csv_from(file)
}
