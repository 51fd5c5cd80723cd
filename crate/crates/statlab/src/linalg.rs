use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{StatError, StatResult};

/// Relative threshold on the pivoted-QR diagonal below which a column is
/// treated as linearly dependent on the others.
const RANK_TOL: f64 = 1e-10;

/// Named-column design matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    names: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl DesignMatrix {
    pub fn from_rows(names: Vec<String>, rows: Vec<Vec<f64>>) -> StatResult<Self> {
        if names.is_empty() {
            return Err(StatError::InvalidArgument("design has no columns".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != names.len() {
                return Err(StatError::InvalidArgument(format!(
                    "row {i} has {} entries, expected {}",
                    row.len(),
                    names.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(StatError::InvalidArgument(format!(
                    "row {i} contains a non-finite value"
                )));
            }
        }
        Ok(Self { names, rows })
    }

    /// Builds `[1, c₁, c₂, ...]` with an `(Intercept)` column first.
    pub fn with_intercept<S: Into<String>>(
        columns: impl IntoIterator<Item = (S, Vec<f64>)>,
    ) -> StatResult<Self> {
        let columns: Vec<(String, Vec<f64>)> =
            columns.into_iter().map(|(n, v)| (n.into(), v)).collect();
        let n = columns.first().map(|(_, v)| v.len());
        let n = match n {
            Some(n) => n,
            None => {
                return Err(StatError::InvalidArgument(
                    "with_intercept needs at least one column; use intercept_only".into(),
                ))
            }
        };
        if let Some((name, _)) = columns.iter().find(|(_, v)| v.len() != n) {
            return Err(StatError::InvalidArgument(format!(
                "column {name:?} length differs from {n}"
            )));
        }
        let mut names = vec!["(Intercept)".to_string()];
        names.extend(columns.iter().map(|(n, _)| n.clone()));
        let rows = (0..n)
            .map(|i| {
                std::iter::once(1.0)
                    .chain(columns.iter().map(|(_, v)| v[i]))
                    .collect()
            })
            .collect();
        Self::from_rows(names, rows)
    }

    pub fn intercept_only(n: usize) -> Self {
        Self {
            names: vec!["(Intercept)".to_string()],
            rows: vec![vec![1.0]; n],
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.names.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Row-permuted copy; `order[i]` is the source row of output row `i`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            names: self.names.clone(),
            rows: order.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub(crate) fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.nrows(), self.ncols(), |i, j| self.rows[i][j])
    }
}

pub(crate) struct LeastSquares {
    pub beta: DVector<f64>,
    /// `(XᵀX)⁻¹` of the (possibly weighted) design.
    pub xtx_inv: DMatrix<f64>,
    pub rss: f64,
}

/// Numerical rank from column-pivoted QR.
pub(crate) fn rank(x: &DMatrix<f64>) -> usize {
    let qr = x.clone().col_piv_qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..r.nrows().min(r.ncols())).map(|i| r[(i, i)].abs()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    diag.iter().filter(|d| **d > RANK_TOL * max).count()
}

/// Ordinary least squares through a thin QR factorization.
pub(crate) fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> StatResult<LeastSquares> {
    let (n, p) = x.shape();
    if n < p {
        return Err(StatError::SingularDesign(format!(
            "{n} rows cannot identify {p} coefficients"
        )));
    }
    let r_found = rank(x);
    if r_found < p {
        return Err(StatError::SingularDesign(format!(
            "design rank {r_found} < {p} columns"
        )));
    }
    let qr = x.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let qty = q.transpose() * y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| StatError::SingularDesign("triangular solve failed".into()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| StatError::SingularDesign("triangular inverse failed".into()))?;
    let xtx_inv = &r_inv * r_inv.transpose();
    let resid = y - x * &beta;
    Ok(LeastSquares {
        beta,
        xtx_inv,
        rss: resid.dot(&resid),
    })
}
