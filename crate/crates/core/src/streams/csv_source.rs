use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::LabelledStream;
use crate::error::{Error, Result};
use crate::learners::{Example, Label};
use crate::marline::StreamId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

/// Keeps rows whose `column` compares to `value` under `op`. Values are
/// compared numerically when both sides parse as numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowFilter {
    pub column: String,
    pub op: FilterOp,
    pub value: String,
}

impl RowFilter {
    fn matches(&self, cell: &str) -> std::result::Result<bool, String> {
        let cell = cell.trim();
        let value = self.value.trim();
        match (cell.parse::<f64>(), value.parse::<f64>()) {
            (Ok(a), Ok(b)) => Ok(match self.op {
                FilterOp::Eq => a == b,
                FilterOp::Ne => a != b,
                FilterOp::Lt => a < b,
                FilterOp::Le => a <= b,
                FilterOp::Gt => a > b,
                FilterOp::Ge => a >= b,
            }),
            _ => match self.op {
                FilterOp::Eq => Ok(cell == value),
                FilterOp::Ne => Ok(cell != value),
                _ => Err(format!(
                    "filter on {:?} needs numeric values, got {cell:?} vs {value:?}",
                    self.column
                )),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvStreamSpec {
    pub path: PathBuf,
    pub feature_columns: Vec<String>,
    pub target_column: String,
    #[serde(default)]
    pub filters: Vec<RowFilter>,
}

/// Median of a nonempty sample (mean of the two middle values for even n).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn column_index(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::config(format!("{}: missing column {name:?}", path.display())))
}

/// Reads a headed CSV, keeps rows passing every filter and labels each row
/// `Pos` iff its target value exceeds the median over the kept rows.
pub fn ingest_csv(id: StreamId, spec: &CsvStreamSpec) -> Result<LabelledStream> {
    let path = spec.path.as_path();
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::config(format!("cannot read {}: {e}", path.display())),
            _ => csv_err(e),
        })?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    if spec.feature_columns.is_empty() {
        return Err(Error::config("at least one feature column is required"));
    }
    let features: Vec<usize> = spec
        .feature_columns
        .iter()
        .map(|c| column_index(&headers, c, path))
        .collect::<Result<_>>()?;
    let target = column_index(&headers, &spec.target_column, path)?;
    let filters: Vec<(usize, &RowFilter)> = spec
        .filters
        .iter()
        .map(|f| Ok((column_index(&headers, &f.column, path)?, f)))
        .collect::<Result<_>>()?;

    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // header is line 1
        let line = i + 2;
        let record = record.map_err(csv_err)?;
        let data_err = |message: String| Error::Data {
            path: path.to_path_buf(),
            row: line,
            message,
        };
        let cell = |idx: usize| record.get(idx).unwrap_or("");
        let mut keep = true;
        for (idx, f) in &filters {
            if !f.matches(cell(*idx)).map_err(&data_err)? {
                keep = false;
                break;
            }
        }
        if !keep {
            continue;
        }
        let numeric = |idx: usize| -> Result<f64> {
            let raw = cell(idx);
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(data_err(format!("column {:?}: non-numeric value {raw:?}", &headers[idx]))),
            }
        };
        let x = features.iter().map(|&c| numeric(c)).collect::<Result<Vec<_>>>()?;
        rows.push((x, numeric(target)?));
    }
    if rows.is_empty() {
        return Err(Error::config(format!("{}: no rows left after filtering", path.display())));
    }
    let targets: Vec<f64> = rows.iter().map(|(_, y)| *y).collect();
    let threshold = median(&targets);
    let examples = rows
        .into_iter()
        .map(|(features, y)| Example {
            features,
            label: if y > threshold { Label::Pos } else { Label::Neg },
        })
        .collect();
    Ok(LabelledStream {
        id,
        examples,
        drift_marks: Vec::new(),
    })
}
