use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::Dataset;
use crate::error::{Error, Result};

const LABEL_COLUMN: &str = "label";

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file)
}

/// Parses a header-first CSV with one integer `label` column; every other
/// column becomes a feature in header order. Row numbers in errors are file
/// line numbers.
pub fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let label_col = headers
        .iter()
        .position(|h| h == LABEL_COLUMN)
        .ok_or(Error::MissingLabelColumn)?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_col)
        .map(|(_, h)| h.to_string())
        .collect();
    let width = headers.len();

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let row = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != width {
            return Err(Error::RaggedRow {
                row,
                expected: width,
                found: record.len(),
            });
        }
        for (column, cell) in record.iter().enumerate() {
            let bad = || Error::NonNumeric {
                row,
                column: column + 1,
                name: headers[column].to_string(),
                value: cell.to_string(),
            };
            if column == label_col {
                labels.push(cell.parse::<i64>().map_err(|_| bad())?);
            } else {
                let v = cell.parse::<f64>().map_err(|_| bad())?;
                if !v.is_finite() {
                    return Err(bad());
                }
                values.push(v);
            }
        }
    }
    let samples = Array2::from_shape_vec((labels.len(), feature_names.len()), values)
        .expect("row widths validated above");
    Dataset::new(samples, labels, feature_names)
}

/// Writes features in column order followed by the `label` column.
pub fn write_csv<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = ds.feature_names().iter().map(String::as_str).collect();
    header.push(LABEL_COLUMN);
    wtr.write_record(&header)?;
    for (row, label) in ds.samples().rows().into_iter().zip(ds.labels()) {
        let mut cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        cells.push(label.to_string());
        wtr.write_record(&cells)?;
    }
    wtr.flush().map_err(|source| Error::Io {
        path: "<csv writer>".into(),
        source,
    })?;
    Ok(())
}
