//! Result tables as CSV.

use std::path::Path;

use crate::error::{Error, Result};
use crate::fem::Scheme;
use crate::metrics::ErrorRecord;
use crate::study::SweepRow;

pub const CSV_HEADER: [&str; 11] = [
    "scheme",
    "m",
    "n",
    "err_L2_Omega",
    "err_H1semi_Omega",
    "err_L2_OmegaF",
    "err_H1semi_OmegaF",
    "norm_L2_OmegaS",
    "norm_H1semi_OmegaS",
    "newton_iters",
    "converged",
];

/// Nine significant digits in scientific notation.
pub fn format_float(x: f64) -> String {
    format!("{x:.8e}")
}

/// One parsed CSV line; `record` is `None` on failure rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub scheme: Scheme,
    pub m: f64,
    pub n: f64,
    pub record: Option<ErrorRecord>,
}

fn row_fields<'a>(rows: impl IntoIterator<Item = &'a SweepRow>) -> Vec<Vec<String>> {
    rows.into_iter()
        .map(|r| {
            let mut f = vec![r.scheme.as_str().to_string(), format_float(r.m), format_float(r.n)];
            match &r.record {
                Some(rec) => {
                    f.extend(crate::metrics::Metric::ALL.iter().map(|&m| format_float(rec.get(m))));
                    f.push(rec.newton_iterations.to_string());
                    f.push("true".into());
                }
                None => {
                    f.extend(std::iter::repeat_n(String::new(), 7));
                    f.push("false".into());
                }
            }
            f
        })
        .collect()
}

pub fn csv_bytes<'a>(rows: impl IntoIterator<Item = &'a SweepRow>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let internal = |e: csv::Error| Error::Internal(format!("csv encoding: {e}"));
    w.write_record(CSV_HEADER).map_err(internal)?;
    for f in row_fields(rows) {
        w.write_record(&f).map_err(internal)?;
    }
    w.into_inner().map_err(|e| Error::Internal(format!("csv encoding: {e}")))
}

/// Writes rows in the given order.
pub fn write_csv<'a>(rows: impl IntoIterator<Item = &'a SweepRow>, path: &Path) -> Result<()> {
    let bytes = csv_bytes(rows)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn parse_csv(text: &str, origin: &Path) -> Result<Vec<CsvRow>> {
    let fmt = |message: String| Error::Format {
        path: origin.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| fmt(e.to_string()))?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(fmt(format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut out = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| fmt(format!("line {line}: {e}")))?;
        let float = |i: usize| {
            rec[i]
                .parse::<f64>()
                .map_err(|_| fmt(format!("line {line}: column {} is not a number: `{}`", CSV_HEADER[i], &rec[i])))
        };
        let scheme: Scheme = rec[0].parse().map_err(|e: Error| fmt(format!("line {line}: {e}")))?;
        let (m, n) = (float(1)?, float(2)?);
        let record = match &rec[10] {
            "true" => Some(ErrorRecord {
                scheme,
                m,
                n,
                err_L2_Omega: float(3)?,
                err_H1semi_Omega: float(4)?,
                err_L2_OmegaF: float(5)?,
                err_H1semi_OmegaF: float(6)?,
                norm_L2_OmegaS: float(7)?,
                norm_H1semi_OmegaS: float(8)?,
                newton_iterations: rec[9]
                    .parse()
                    .map_err(|_| fmt(format!("line {line}: bad newton_iters `{}`", &rec[9])))?,
            }),
            "false" => None,
            other => return Err(fmt(format!("line {line}: converged must be true or false, got `{other}`"))),
        };
        out.push(CsvRow { scheme, m, n, record });
    }
    Ok(out)
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, path)
}
