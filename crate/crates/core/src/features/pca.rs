use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    pub columns: Vec<String>,
    /// Top-k covariance eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// One unit-norm row per eigenvalue, over `columns`. The entry of largest
    /// magnitude in each row is positive.
    pub eigenvectors: Vec<Vec<f64>>,
    /// Eigenvalue over total variance.
    pub explained_variance_ratio: Vec<f64>,
    pub total_variance: f64,
}

/// Principal components of the selected columns (sample covariance of the
/// centered data).
pub fn pca(m: &FeatureMatrix, columns: &[usize], k: usize) -> Result<PcaResult> {
    let n = m.n_rows();
    let p = columns.len();
    if n < 2 {
        return Err(Error::invalid("pca needs at least two rows"));
    }
    if p == 0 || k == 0 || k > p {
        return Err(Error::invalid(format!("pca: k = {k} with {p} selected columns")));
    }
    if let Some(&bad) = columns.iter().find(|&&j| j >= m.n_cols()) {
        return Err(Error::invalid(format!("pca: column index {bad} out of range")));
    }

    let means: Vec<f64> = columns
        .iter()
        .map(|&j| (0..n).map(|i| m.value(i, j)).sum::<f64>() / n as f64)
        .collect();
    let centered = DMatrix::from_fn(n, p, |i, c| m.value(i, columns[c]) - means[c]);
    let cov = (centered.transpose() * &centered) / (n - 1) as f64;

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let total_variance: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();

    let mut eigenvalues = Vec::with_capacity(k);
    let mut eigenvectors = Vec::with_capacity(k);
    let mut ratios = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let value = eig.eigenvalues[idx].max(0.0);
        let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        let pivot = v
            .iter()
            .copied()
            .fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        if pivot < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        eigenvalues.push(value);
        eigenvectors.push(v);
        ratios.push(if total_variance > 0.0 { value / total_variance } else { 0.0 });
    }

    Ok(PcaResult {
        columns: columns.iter().map(|&j| m.column_names()[j].clone()).collect(),
        eigenvalues,
        eigenvectors,
        explained_variance_ratio: ratios,
        total_variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::ColumnKind;

    fn matrix(rows: &[[f64; 2]]) -> FeatureMatrix {
        FeatureMatrix::new(
            (0..rows.len()).map(|i| i.to_string()).collect(),
            vec!["a".into(), "b".into()],
            vec![ColumnKind::Raw; 2],
            rows.iter().flatten().copied().collect(),
        )
        .unwrap()
    }

    #[test]
    fn rank_one_data() {
        let m = matrix(&[[1.0, 3.0], [2.0, 6.0], [4.0, 12.0], [7.0, 21.0]]);
        let r = pca(&m, &[0, 1], 2).unwrap();
        assert!((r.explained_variance_ratio[0] - 1.0).abs() < 1e-12);
        assert!(r.eigenvalues[1].abs() < 1e-9);
        let v = &r.eigenvectors[0];
        assert!((v[1] / v[0] - 3.0).abs() < 1e-9);
        assert!(v[1] > 0.0);
    }

    #[test]
    fn too_few_rows() {
        let m = matrix(&[[1.0, 2.0]]);
        assert!(pca(&m, &[0, 1], 1).is_err());
        let m = matrix(&[[1.0, 2.0], [2.0, 1.0]]);
        assert!(pca(&m, &[0, 1], 3).is_err());
    }
}
