//! Plain-text matrix files and trace CSV.
//!
//! Matrix files: first line `rows cols`, then `rows` lines of `cols`
//! whitespace-separated decimal floats. Values are written with Rust's
//! shortest round-trip formatting, so write-then-read is lossless.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::soup::{LearnTrace, TraceRow};

pub const TRACE_HEADER: [&str; 6] = [
    "iter",
    "objective",
    "nsre",
    "sparsity_factor",
    "delta_dict",
    "delta_codes",
];

pub fn format_matrix(m: &DenseMatrix) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} {}", m.rows(), m.cols());
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            if c > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{}", m.get(r, c));
        }
        s.push('\n');
    }
    s
}

pub fn parse_matrix(text: &str) -> Result<DenseMatrix> {
    let mut tokens = text.split_ascii_whitespace();
    let mut dim = |name: &str| -> Result<usize> {
        let t = tokens
            .next()
            .ok_or_else(|| Error::parse("matrix file", format!("missing {name}")))?;
        t.parse()
            .map_err(|_| Error::parse("matrix file", format!("bad {name} {t:?}")))
    };
    let rows = dim("row count")?;
    let cols = dim("column count")?;
    let values = tokens
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::parse("matrix file", format!("bad value {t:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.len() != rows * cols {
        return Err(Error::parse(
            "matrix file",
            format!(
                "header says {rows}x{cols} but {} values follow",
                values.len()
            ),
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::parse("matrix file", "non-finite value"));
    }
    DenseMatrix::from_row_major(rows, cols, &values)
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        action: "read",
        path: path.to_path_buf(),
        source,
    })?;
    parse_matrix(&text)
}

pub fn write_matrix(m: &DenseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_matrix(m)).map_err(|source| Error::Io {
        action: "write",
        path: path.to_path_buf(),
        source,
    })
}

fn csv_err(e: csv::Error) -> Error {
    Error::parse("CSV", e.to_string())
}

pub fn write_trace_to<W: Write>(trace: &LearnTrace, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRACE_HEADER).map_err(csv_err)?;
    for r in &trace.rows {
        out.write_record([
            r.iter.to_string(),
            r.objective.to_string(),
            r.nsre.to_string(),
            r.sparsity_factor.to_string(),
            r.delta_dict.to_string(),
            r.delta_codes.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::parse("CSV", e.to_string()))
}

pub fn read_trace_from<R: Read>(r: R) -> Result<LearnTrace> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>() != TRACE_HEADER {
        return Err(Error::parse(
            "trace CSV",
            format!("unexpected header {header:?}"),
        ));
    }
    let mut trace = LearnTrace::default();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let f = |k: usize| -> Result<f64> {
            rec[k]
                .parse()
                .map_err(|_| Error::parse("trace CSV", format!("bad number {:?}", &rec[k])))
        };
        trace.rows.push(TraceRow {
            iter: rec[0]
                .parse()
                .map_err(|_| Error::parse("trace CSV", format!("bad iter {:?}", &rec[0])))?,
            objective: f(1)?,
            nsre: f(2)?,
            sparsity_factor: f(3)?,
            delta_dict: f(4)?,
            delta_codes: f(5)?,
        });
    }
    Ok(trace)
}

pub fn write_trace(trace: &LearnTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|source| Error::Io {
        action: "create",
        path: path.to_path_buf(),
        source,
    })?;
    write_trace_to(trace, file)
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<LearnTrace> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        action: "open",
        path: path.to_path_buf(),
        source,
    })?;
    read_trace_from(file)
}

/// Generic CSV table: a header plus rows of already-formatted cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k].as_str()).collect())
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            out.write_record(r).map_err(csv_err)?;
        }
        out.flush().map_err(|e| Error::parse("CSV", e.to_string()))
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = rdr
            .records()
            .map(|rec| {
                rec.map(|r| r.iter().map(str::to_string).collect())
                    .map_err(csv_err)
            })
            .collect::<Result<_>>()?;
        Ok(Self { header, rows })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|source| Error::Io {
            action: "create",
            path: path.to_path_buf(),
            source,
        })?;
        self.write_to(file)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            action: "open",
            path: path.to_path_buf(),
            source,
        })?;
        Self::read_from(file)
    }
}
