//! CSV files exchanged by the command-line tool.
//!
//! All files have a header row, `,` separators and LF line endings. Reals
//! are written in scientific notation with 17 significant digits, which
//! parses back to the identical `f64`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Terminator, Writer, WriterBuilder};

use crate::error::{format_err, Error, Result};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn writer(path: &Path, header: &[&str]) -> Result<Writer<BufWriter<File>>> {
    let file = BufWriter::new(File::create(path)?);
    let mut w = WriterBuilder::new()
        .terminator(Terminator::Any(b'\n'))
        .from_writer(file);
    w.write_record(header)?;
    Ok(w)
}

pub fn finish<W: Write>(w: Writer<W>) -> Result<()> {
    w.into_inner().map_err(|e| Error::Io(e.into_error()))?.flush()?;
    Ok(())
}

struct Table {
    path: String,
    header: StringRecord,
    rows: Vec<StringRecord>,
}

impl Table {
    fn read(path: &Path) -> Result<Table> {
        let mut r = ReaderBuilder::new().from_path(path)?;
        let header = r.headers()?.clone();
        let rows = r.records().collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Table {
            path: path.display().to_string(),
            header,
            rows,
        })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| format_err!("{}: missing column {name:?}", self.path))
    }

    fn get<T: std::str::FromStr>(&self, row: usize, col: usize) -> Result<T> {
        let raw = self.rows[row].get(col).unwrap_or("").trim();
        raw.parse()
            .map_err(|_| format_err!("{}: row {}: cannot parse {raw:?}", self.path, row + 2))
    }
}

/// Contents of `data.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct DataFile {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

pub fn write_data(path: &Path, x: &[f64], y: &[f64]) -> Result<()> {
    let mut w = writer(path, &["t", "x", "y"])?;
    for (t, (xv, yv)) in x.iter().zip(y).enumerate() {
        w.write_record([t.to_string(), fmt_f64(*xv), fmt_f64(*yv)])?;
    }
    finish(w)
}

fn check_time_column(table: &Table, tc: usize) -> Result<()> {
    for i in 0..table.rows.len() {
        let t: usize = table.get(i, tc)?;
        if t != i {
            return Err(format_err!(
                "{}: expected t = {i} on row {}, found {t}",
                table.path,
                i + 2
            ));
        }
    }
    Ok(())
}

pub fn read_data(path: &Path) -> Result<DataFile> {
    let table = Table::read(path)?;
    let (tc, xc, yc) = (table.column("t")?, table.column("x")?, table.column("y")?);
    check_time_column(&table, tc)?;
    let mut out = DataFile { x: vec![], y: vec![] };
    for i in 0..table.rows.len() {
        out.x.push(table.get(i, xc)?);
        out.y.push(table.get(i, yc)?);
    }
    Ok(out)
}

/// Read the `x` column of any CSV with a `t,x` layout (used for `--init file=`).
pub fn read_states(path: &Path) -> Result<Vec<f64>> {
    let table = Table::read(path)?;
    let xc = table.column("x")?;
    if let Ok(tc) = table.column("t") {
        check_time_column(&table, tc)?;
    }
    (0..table.rows.len()).map(|i| table.get(i, xc)).collect()
}

/// Stored samples keyed by iteration, from long-format `iter,t,x`.
pub fn read_samples(path: &Path) -> Result<BTreeMap<usize, Vec<f64>>> {
    let table = Table::read(path)?;
    let (ic, tc, xc) = (table.column("iter")?, table.column("t")?, table.column("x")?);
    let mut out: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for i in 0..table.rows.len() {
        let iter: usize = table.get(i, ic)?;
        let t: usize = table.get(i, tc)?;
        let seq = out.entry(iter).or_default();
        if t != seq.len() {
            return Err(format_err!(
                "{}: iteration {iter} rows out of order at t = {t}",
                table.path
            ));
        }
        seq.push(table.get(i, xc)?);
    }
    Ok(out)
}

/// One row of `oracle.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleRow {
    pub p_positive: f64,
    pub mean: f64,
    pub sd: f64,
}

pub fn read_oracle(path: &Path) -> Result<Vec<OracleRow>> {
    let table = Table::read(path)?;
    let (tc, pc, mc, sc) = (
        table.column("t")?,
        table.column("p_positive")?,
        table.column("mean")?,
        table.column("sd")?,
    );
    check_time_column(&table, tc)?;
    (0..table.rows.len())
        .map(|i| {
            Ok(OracleRow {
                p_positive: table.get(i, pc)?,
                mean: table.get(i, mc)?,
                sd: table.get(i, sc)?,
            })
        })
        .collect()
}
