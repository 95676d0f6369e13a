//! Per-user behavioral and social variables.

mod extract;
mod pca;
mod preprocess;
pub mod records;

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use extract::{
    extract_features, raw_column_names, DayPart, DaySplit, ExtractOptions, Extraction, ObservationWindow,
    RAW_COLUMN_COUNT,
};
pub use pca::{pca, PcaResult};
pub use preprocess::{log_transform, preprocess, quantile, skew_report, write_skew_csv, SkewRow, LOG_PREFIX, SCALED_PREFIX};
pub use records::{read_cdr_csv, read_sms_csv, write_cdr_csv, write_sms_csv, CdrRecord, Direction, SmsRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Raw,
    Log,
    Rescaled,
}

impl ColumnKind {
    /// Kind implied by a column name's prefix.
    pub fn of_name(name: &str) -> ColumnKind {
        if name.starts_with(SCALED_PREFIX) {
            ColumnKind::Rescaled
        } else if name.starts_with(LOG_PREFIX) {
            ColumnKind::Log
        } else {
            ColumnKind::Raw
        }
    }
}

/// Dense user × column matrix, row-major. Rows are ordered by user id.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    user_ids: Vec<String>,
    column_names: Vec<String>,
    column_kinds: Vec<ColumnKind>,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(
        user_ids: Vec<String>,
        column_names: Vec<String>,
        column_kinds: Vec<ColumnKind>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if column_names.len() != column_kinds.len() {
            return Err(Error::Dimension("column names and kinds differ in length".into()));
        }
        if values.len() != user_ids.len() * column_names.len() {
            return Err(Error::Dimension(format!(
                "{} values for {} rows x {} columns",
                values.len(),
                user_ids.len(),
                column_names.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for name in &column_names {
            if !seen.insert(name) {
                return Err(Error::invalid(format!("duplicate column {name:?}")));
            }
        }
        Ok(FeatureMatrix {
            user_ids,
            column_names,
            column_kinds,
            values,
        })
    }

    /// Like [`FeatureMatrix::new`] with kinds inferred by [`ColumnKind::of_name`].
    pub fn with_inferred_kinds(user_ids: Vec<String>, column_names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let kinds = column_names.iter().map(|n| ColumnKind::of_name(n)).collect();
        FeatureMatrix::new(user_ids, column_names, kinds, values)
    }

    pub fn n_rows(&self) -> usize {
        self.user_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn column_kinds(&self) -> &[ColumnKind] {
        &self.column_kinds
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_cols();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.value(i, j)).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    pub fn columns_of_kind(&self, kind: ColumnKind) -> Vec<usize> {
        (0..self.n_cols()).filter(|&j| self.column_kinds[j] == kind).collect()
    }

    pub fn row_index(&self) -> HashMap<&str, usize> {
        self.user_ids.iter().enumerate().map(|(i, u)| (u.as_str(), i)).collect()
    }

    /// Submatrix with the given rows and columns, in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows {
            let r = self.row(i);
            values.extend(cols.iter().map(|&j| r[j]));
        }
        FeatureMatrix {
            user_ids: rows.iter().map(|&i| self.user_ids[i].clone()).collect(),
            column_names: cols.iter().map(|&j| self.column_names[j].clone()).collect(),
            column_kinds: cols.iter().map(|&j| self.column_kinds[j]).collect(),
            values,
        }
    }

    /// CSV with header `user_id,<column names...>`. A column's kind is
    /// encoded by its name prefix (`log-`, `scaled:`).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["user_id".to_owned()];
        header.extend(self.column_names.iter().cloned());
        wtr.write_record(&header)?;
        let mut rec = Vec::with_capacity(self.n_cols() + 1);
        for i in 0..self.n_rows() {
            rec.clear();
            rec.push(self.user_ids[i].clone());
            rec.extend(self.row(i).iter().map(|v| v.to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<FeatureMatrix> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers()?.clone();
        if header.get(0) != Some("user_id") {
            return Err(Error::row(1, "first column must be `user_id`"));
        }
        let column_names: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
        let column_kinds = column_names.iter().map(|n| ColumnKind::of_name(n)).collect();
        let mut user_ids = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            user_ids.push(rec[0].to_owned());
            for v in rec.iter().skip(1) {
                values.push(
                    v.parse::<f64>()
                        .map_err(|e| Error::row(line, format!("bad value {v:?}: {e}")))?,
                );
            }
        }
        FeatureMatrix::new(user_ids, column_names, column_kinds, values)
    }
}
