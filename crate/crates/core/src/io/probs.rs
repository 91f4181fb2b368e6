use std::path::Path;

use crate::classic::ProbMatrix;
use crate::{Error, Result};

const ROW_SUM_TOLERANCE: f64 = 1e-6;

pub fn write_probabilities(path: &Path, probs: &ProbMatrix) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["row".to_string()];
    header.extend((0..probs.classes()).map(|c| format!("class_{c}")));
    w.write_record(&header).map_err(csv_err)?;
    for (r, row) in probs.iter_rows().enumerate() {
        let mut rec = vec![r.to_string()];
        rec.extend(row.iter().map(|p| format!("{p:.9e}")));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        }
    } else {
        Error::Format(e.to_string())
    }
}

/// Reads a probability CSV produced by any backend. Rows within `1e-6` of
/// summing to one are renormalized; any other row is rejected by index.
pub fn import_probabilities(path: &Path, rows: usize, classes: usize) -> Result<ProbMatrix> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?.clone();
    let expected: Vec<String> = std::iter::once("row".to_string())
        .chain((0..classes).map(|c| format!("class_{c}")))
        .collect();
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::Format(format!(
            "probability header must be `{}`",
            expected.join(",")
        )));
    }
    let mut data = Vec::with_capacity(rows * classes);
    let mut seen = 0;
    for (r, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.get(0).and_then(|s| s.trim().parse::<usize>().ok()) != Some(r) {
            return Err(Error::Format(format!("row {r}: index column must be {r}")));
        }
        let values = rec
            .iter()
            .skip(1)
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite() && *v >= 0.0)
                    .ok_or_else(|| Error::Format(format!("row {r}: bad probability `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(Error::RowSum { row: r, sum });
        }
        data.extend(values.into_iter().map(|v| v / sum));
        seen += 1;
    }
    if seen != rows {
        return Err(Error::Shape(format!(
            "expected {rows} probability rows, found {seen}"
        )));
    }
    ProbMatrix::new(rows, classes, data)
}
