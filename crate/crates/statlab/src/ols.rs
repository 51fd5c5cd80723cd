use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dist::Distribution;
use crate::linalg::{least_squares, DesignMatrix};
use crate::{StatError, StatResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsCoefficient {
    pub name: String,
    pub beta: f64,
    pub se: f64,
    pub t: f64,
    pub p_value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub coefficients: Vec<OlsCoefficient>,
    pub residual_df: f64,
    pub residual_sum_sq: f64,
    pub r_squared: f64,
    pub n: usize,
}

impl OlsFit {
    pub fn coefficient(&self, name: &str) -> Option<&OlsCoefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

/// Least-squares fit with classical standard errors and 95% t intervals.
pub fn ols_regression(y: &[f64], design: &DesignMatrix) -> StatResult<OlsFit> {
    let n = y.len();
    let p = design.ncols();
    if n != design.nrows() {
        return Err(StatError::InvalidArgument(format!(
            "response has {n} values, design has {} rows",
            design.nrows()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(StatError::InvalidArgument("non-finite response".into()));
    }
    if n <= p {
        return Err(StatError::SingularDesign(format!(
            "{n} observations cannot estimate {p} coefficients with residual df"
        )));
    }
    let yv = DVector::from_column_slice(y);
    let ls = least_squares(&design.to_matrix(), &yv)?;
    let df = (n - p) as f64;
    let sigma2 = ls.rss / df;
    let t_dist = Distribution::StudentT { df };
    let t_crit = t_dist.quantile(0.975);
    let coefficients = design
        .names()
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let beta = ls.beta[j];
            let se = (sigma2 * ls.xtx_inv[(j, j)]).max(0.0).sqrt();
            let (t, p_value) = if se > 0.0 {
                let t = beta / se;
                (t, (2.0 * t_dist.sf(t.abs())).clamp(0.0, 1.0))
            } else if beta == 0.0 {
                (0.0, 1.0)
            } else {
                (beta.signum() * f64::INFINITY, 0.0)
            };
            OlsCoefficient {
                name: name.clone(),
                beta,
                se,
                t,
                p_value,
                ci_low: beta - t_crit * se,
                ci_high: beta + t_crit * se,
            }
        })
        .collect();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    Ok(OlsFit {
        coefficients,
        residual_df: df,
        residual_sum_sq: ls.rss,
        r_squared: if sst > 0.0 { 1.0 - ls.rss / sst } else { 1.0 },
        n,
    })
}
