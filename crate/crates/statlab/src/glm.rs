//! Poisson regression with log link, fitted by iteratively reweighted
//! least squares.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dist::Distribution;
use crate::linalg::{least_squares, rank, DesignMatrix};
use crate::{StatError, StatResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrlsControl {
    /// Convergence when `|D_t − D_{t−1}| / (|D_t| + 0.1)` drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for IrlsControl {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmCoefficient {
    pub name: String,
    pub beta: f64,
    pub se: f64,
    pub z: f64,
    pub p_value: f64,
    /// Incidence-rate ratio `exp(beta)`.
    pub irr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmFit {
    pub coefficients: Vec<GlmCoefficient>,
    pub deviance: f64,
    pub null_deviance: f64,
    pub iterations: usize,
    pub n: usize,
}

impl GlmFit {
    pub fn coefficient(&self, name: &str) -> Option<&GlmCoefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

fn deviance(y: &[f64], mu: &DVector<f64>) -> f64 {
    2.0 * y
        .iter()
        .zip(mu.iter())
        .map(|(&yi, &mi)| {
            let term = if yi > 0.0 { yi * (yi / mi).ln() } else { 0.0 };
            term - (yi - mi)
        })
        .sum::<f64>()
}

pub fn poisson_glm(y: &[u32], design: &DesignMatrix) -> StatResult<GlmFit> {
    poisson_glm_with(y, design, IrlsControl::default())
}

pub fn poisson_glm_with(y: &[u32], design: &DesignMatrix, control: IrlsControl) -> StatResult<GlmFit> {
    let n = y.len();
    if n != design.nrows() {
        return Err(StatError::InvalidArgument(format!(
            "response has {n} values, design has {} rows",
            design.nrows()
        )));
    }
    let p = design.ncols();
    let x = design.to_matrix();
    if rank(&x) < p || n < p {
        return Err(StatError::SingularDesign(format!(
            "design with {p} columns is not of full column rank"
        )));
    }
    let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
    let mut mu = DVector::from_iterator(n, yf.iter().map(|v| v + 0.1));
    let mut eta = mu.map(f64::ln);
    let mut dev_old = deviance(&yf, &mu);
    let mut trace = vec![dev_old];
    let mut beta = DVector::zeros(p);
    let mut converged_at = None;

    for iter in 1..=control.max_iterations {
        let sqrt_w = mu.map(f64::sqrt);
        let z = DVector::from_iterator(
            n,
            (0..n).map(|i| eta[i] + (yf[i] - mu[i]) / mu[i]),
        );
        let xw = DMatrix::from_fn(n, p, |i, j| x[(i, j)] * sqrt_w[i]);
        let zw = z.component_mul(&sqrt_w);
        beta = least_squares(&xw, &zw)?.beta;
        eta = &x * &beta;
        mu = eta.map(f64::exp);
        let dev = deviance(&yf, &mu);
        trace.push(dev);
        if !dev.is_finite() {
            break;
        }
        if (dev - dev_old).abs() / (dev.abs() + 0.1) < control.tolerance {
            converged_at = Some(iter);
            break;
        }
        dev_old = dev;
    }
    let iterations = match converged_at {
        Some(i) => i,
        None => {
            return Err(StatError::NonConvergence {
                iterations: trace.len() - 1,
                trace,
            })
        }
    };

    let sqrt_w = mu.map(f64::sqrt);
    let xw = DMatrix::from_fn(n, p, |i, j| x[(i, j)] * sqrt_w[i]);
    let cov = least_squares(&xw, &DVector::zeros(n))?.xtx_inv;
    let normal = Distribution::Normal;
    let coefficients = design
        .names()
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let se = cov[(j, j)].max(0.0).sqrt();
            let z = beta[j] / se;
            GlmCoefficient {
                name: name.clone(),
                beta: beta[j],
                se,
                z,
                p_value: (2.0 * normal.sf(z.abs())).clamp(0.0, 1.0),
                irr: beta[j].exp(),
            }
        })
        .collect();

    let ybar = yf.iter().sum::<f64>() / n as f64;
    let null_deviance = deviance(&yf, &DVector::from_element(n, ybar));
    Ok(GlmFit {
        coefficients,
        deviance: *trace.last().unwrap_or(&f64::NAN),
        null_deviance,
        iterations,
        n,
    })
}
