use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{ColumnKind, FeatureMatrix};
use crate::error::{Error, Result};

pub const LOG_PREFIX: &str = "log-";
pub const SCALED_PREFIX: &str = "scaled:";

/// `log10(x + 1)`.
#[inline]
pub fn log_transform(x: f64) -> f64 {
    (x + 1.0).log10()
}

/// Append `log-<name>` for every raw column, then `scaled:<name>` min-max
/// rescaled copies of both the raw and the log columns. Raw values are kept.
/// Output column order: raw, log, scaled raw, scaled log.
pub fn preprocess(m: &FeatureMatrix) -> Result<FeatureMatrix> {
    let raw = m.columns_of_kind(ColumnKind::Raw);
    if raw.is_empty() {
        return Err(Error::invalid("preprocess needs at least one raw column"));
    }
    let n = m.n_rows();
    let mut columns: Vec<(String, ColumnKind, Vec<f64>)> = Vec::with_capacity(raw.len() * 4);
    for &j in &raw {
        columns.push((m.column_names()[j].clone(), ColumnKind::Raw, m.column(j)));
    }
    for &j in &raw {
        let logs = m.column(j).into_iter().map(log_transform).collect();
        columns.push((format!("{LOG_PREFIX}{}", m.column_names()[j]), ColumnKind::Log, logs));
    }
    let unscaled = columns.len();
    for c in 0..unscaled {
        let scaled = rescale(&columns[c].2);
        let name = format!("{SCALED_PREFIX}{}", columns[c].0);
        columns.push((name, ColumnKind::Rescaled, scaled));
    }

    let p = columns.len();
    let mut values = vec![0.0; n * p];
    for (j, (_, _, col)) in columns.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            values[i * p + j] = *v;
        }
    }
    let (names, kinds): (Vec<String>, Vec<ColumnKind>) = columns.into_iter().map(|(n, k, _)| (n, k)).unzip();
    FeatureMatrix::new(m.user_ids().to_vec(), names, kinds, values)
}

/// Min-max rescale to `[0, 1]`; a constant column maps to 0.
fn rescale(col: &[f64]) -> Vec<f64> {
    let min = col.iter().copied().fold(f64::INFINITY, f64::min);
    let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if range.is_nan() || range <= 0.0 {
        return vec![0.0; col.len()];
    }
    col.iter().map(|v| ((v - min) / range).clamp(0.0, 1.0)).collect()
}

/// Quantile of sorted data by linear interpolation between order
/// statistics (type 7): position `p * (n - 1)`.
pub fn quantile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// Summary statistics for one column. Fields are `None` when undefined
/// (empty column, or `iqr_over_q2` with a zero median).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkewRow {
    pub column: String,
    pub count: usize,
    pub mean: Option<f64>,
    /// Sample standard deviation (n - 1 denominator).
    pub std: Option<f64>,
    pub min: Option<f64>,
    pub q1: Option<f64>,
    pub q2: Option<f64>,
    pub q3: Option<f64>,
    pub max: Option<f64>,
    pub iqr_over_q2: Option<f64>,
}

fn summarize(name: &str, mut col: Vec<f64>) -> SkewRow {
    let count = col.len();
    if count == 0 {
        return SkewRow {
            column: name.to_owned(),
            count,
            mean: None,
            std: None,
            min: None,
            q1: None,
            q2: None,
            q3: None,
            max: None,
            iqr_over_q2: None,
        };
    }
    col.sort_by(f64::total_cmp);
    let mean = col.iter().sum::<f64>() / count as f64;
    let std = (count > 1).then(|| {
        let ss: f64 = col.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (count - 1) as f64).sqrt()
    });
    let q1 = quantile(&col, 0.25).unwrap();
    let q2 = quantile(&col, 0.5).unwrap();
    let q3 = quantile(&col, 0.75).unwrap();
    let iqr_over_q2 = if q2 != 0.0 {
        Some((q3 - q1) / q2)
    } else if q3 == q1 {
        Some(0.0)
    } else {
        None
    };
    SkewRow {
        column: name.to_owned(),
        count,
        mean: Some(mean),
        std,
        min: Some(col[0]),
        q1: Some(q1),
        q2: Some(q2),
        q3: Some(q3),
        max: Some(col[count - 1]),
        iqr_over_q2,
    }
}

/// Per-column skewness diagnostics; `IQR / Q2` well above 1 flags a
/// right-skewed column.
pub fn skew_report(m: &FeatureMatrix) -> Vec<SkewRow> {
    (0..m.n_cols())
        .map(|j| summarize(&m.column_names()[j], m.column(j)))
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// CSV header `column,count,mean,std,min,25%,50%,75%,max,iqr_over_q2`;
/// values with six decimals, undefined cells empty.
pub fn write_skew_csv<W: Write>(rows: &[SkewRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["column", "count", "mean", "std", "min", "25%", "50%", "75%", "max", "iqr_over_q2"])?;
    for r in rows {
        wtr.write_record([
            r.column.clone(),
            r.count.to_string(),
            fmt_opt(r.mean),
            fmt_opt(r.std),
            fmt_opt(r.min),
            fmt_opt(r.q1),
            fmt_opt(r.q2),
            fmt_opt(r.q3),
            fmt_opt(r.max),
            fmt_opt(r.iqr_over_q2),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_column(name: &str, vals: &[f64]) -> FeatureMatrix {
        FeatureMatrix::new(
            (0..vals.len()).map(|i| format!("u{i}")).collect(),
            vec![name.into()],
            vec![ColumnKind::Raw],
            vals.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn log_transform_fixed_points() {
        assert_eq!(log_transform(0.0), 0.0);
        assert_eq!(log_transform(999.0), 3.0);
    }

    #[test]
    fn constant_column_summary() {
        let r = &skew_report(&one_column("c", &[5.0; 4]))[0];
        assert_eq!(r.std, Some(0.0));
        assert_eq!(r.iqr_over_q2, Some(0.0));
    }

    #[test]
    fn median_of_ranks() {
        let vals: Vec<f64> = (0..=100).map(f64::from).collect();
        assert_eq!(skew_report(&one_column("r", &vals))[0].q2, Some(50.0));
    }

    #[test]
    fn empty_column_is_all_null() {
        let r = &skew_report(&one_column("e", &[]))[0];
        assert_eq!(r.count, 0);
        assert!(r.mean.is_none() && r.q2.is_none() && r.iqr_over_q2.is_none());
    }

    #[test]
    fn preprocess_layout() {
        let m = one_column("x", &[0.0, 9.0, 99.0]);
        let p = preprocess(&m).unwrap();
        assert_eq!(p.column_names(), &["x", "log-x", "scaled:x", "scaled:log-x"]);
        assert_eq!(p.column(1), vec![0.0, 1.0, 2.0]);
        assert_eq!(p.column(3), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn constant_column_rescales_to_zero() {
        let p = preprocess(&one_column("x", &[4.0, 4.0])).unwrap();
        assert_eq!(p.column(2), vec![0.0, 0.0]);
    }

    #[test]
    fn skew_csv_format() {
        let rows = skew_report(&one_column("x", &[1.0, 2.0, 3.0, 4.0]));
        let mut buf = Vec::new();
        write_skew_csv(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "column,count,mean,std,min,25%,50%,75%,max,iqr_over_q2\n\
             x,4,2.500000,1.290994,1.000000,1.750000,2.500000,3.250000,4.000000,0.600000\n"
        );
    }
}
