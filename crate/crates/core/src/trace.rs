//! CSV formats: simulation traces, sampled atoms, and matching-pursuit
//! signals/decompositions. Floats are written in Rust's shortest round-trip
//! form, so reading a file back yields the identical bits.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::dictionary::{Dictionary, COVERAGE_STEP, PERIOD};
use crate::error::{Error, Result};
use crate::matching_pursuit::MpResult;
use crate::simulation::TraceRow;

/// Trace column order.
pub const TRACE_HEADER: [&str; 13] = [
    "k",
    "t",
    "r",
    "ym",
    "y",
    "u",
    "f_true",
    "f_hat",
    "eta",
    "e",
    "selected_index",
    "a",
    "applied",
];

fn csv_err(e: csv::Error) -> Error {
    Error::Csv(e.to_string())
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))
}

pub fn write_trace<W: Write>(out: W, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.k.to_string(),
            r.t.to_string(),
            r.r.to_string(),
            r.ym.to_string(),
            r.y.to_string(),
            r.u.to_string(),
            r.f_true.to_string(),
            r.f_hat.to_string(),
            r.eta.to_string(),
            r.e.to_string(),
            r.selected_index.map(|i| i.to_string()).unwrap_or_default(),
            r.a.to_string(),
            r.applied.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("writing trace", e))
}

pub fn write_trace_file(path: &Path, rows: &[TraceRow]) -> Result<()> {
    write_trace(create(path)?, rows)
}

fn field(rec: &csv::StringRecord, i: usize, line: u64) -> Result<&str> {
    rec.get(i)
        .ok_or_else(|| Error::Csv(format!("line {line}: missing column {}", TRACE_HEADER[i])))
}

fn parse<T: std::str::FromStr>(text: &str, name: &str, line: u64) -> Result<T> {
    text.parse()
        .map_err(|_| Error::Csv(format!("line {line}: bad {name} value `{text}`")))
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(csv_err)?;
    if header.iter().ne(TRACE_HEADER.iter().copied()) {
        return Err(Error::Csv(format!(
            "unexpected trace header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64> { parse(field(&rec, i, line)?, TRACE_HEADER[i], line) };
        let selected = field(&rec, 10, line)?;
        rows.push(TraceRow {
            k: parse(field(&rec, 0, line)?, "k", line)?,
            t: num(1)?,
            r: num(2)?,
            ym: num(3)?,
            y: num(4)?,
            u: num(5)?,
            f_true: num(6)?,
            f_hat: num(7)?,
            eta: num(8)?,
            e: num(9)?,
            selected_index: if selected.is_empty() {
                None
            } else {
                Some(parse(selected, "selected_index", line)?)
            },
            a: num(11)?,
            applied: parse(field(&rec, 12, line)?, "applied", line)?,
        });
    }
    Ok(rows)
}

pub fn read_trace_file(path: &Path) -> Result<Vec<TraceRow>> {
    read_trace(open(path)?)
}

/// Grid used for atom export: `0, 0.01, ..., 9.99`.
pub fn atom_grid() -> Vec<f64> {
    let n = (PERIOD / COVERAGE_STEP).round() as usize;
    (0..n).map(|i| i as f64 * COVERAGE_STEP).collect()
}

/// One row per grid point: `x,atom_0,atom_1,...`.
pub fn write_atoms<W: Write>(out: W, dict: &Dictionary) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = std::iter::once("x".to_string())
        .chain((0..dict.len()).map(|i| format!("atom_{i}")))
        .collect();
    w.write_record(&header).map_err(csv_err)?;
    for x in atom_grid() {
        let row: Vec<String> = std::iter::once(x)
            .chain(dict.atoms().iter().map(|a| a.eval(x)))
            .map(|v| v.to_string())
            .collect();
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("writing atoms", e))
}

pub fn write_atoms_file(path: &Path, dict: &Dictionary) -> Result<()> {
    write_atoms(create(path)?, dict)
}

/// Reads a signal for decomposition: the first column of a CSV, with an
/// optional non-numeric header line.
pub fn read_signal<R: Read>(input: R) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let text = rec.get(0).unwrap_or("").trim();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(_) => return Err(Error::NonFiniteInput("signal sample")),
            Err(_) if i == 0 => {}
            Err(_) => return Err(Error::Csv(format!("line {}: bad sample `{text}`", i + 1))),
        }
    }
    if values.is_empty() {
        return Err(Error::Empty("signal"));
    }
    Ok(values)
}

pub fn read_signal_file(path: &Path) -> Result<Vec<f64>> {
    read_signal(open(path)?)
}

/// `iteration,index,coefficient,residual_norm`; row 0 holds `||f||` with
/// empty pick columns.
pub fn write_decomposition<W: Write>(out: W, result: &MpResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "index", "coefficient", "residual_norm"])
        .map_err(csv_err)?;
    w.write_record(["0", "", "", &result.residual_norms[0].to_string()])
        .map_err(csv_err)?;
    for (i, ((index, c), norm)) in result
        .picks
        .iter()
        .zip(&result.residual_norms[1..])
        .enumerate()
    {
        w.write_record([
            (i + 1).to_string(),
            index.to_string(),
            c.to_string(),
            norm.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("writing decomposition", e))
}

pub fn write_decomposition_file(path: &Path, result: &MpResult) -> Result<()> {
    write_decomposition(create(path)?, result)
}
