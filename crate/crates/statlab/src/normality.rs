//! Shapiro-Wilk W with Royston's (1992/1995) coefficient and p-value
//! approximations, valid for 3 ≤ n ≤ 5000.

use std::f64::consts::PI;

use crate::describe::mean;
use crate::special::{norm_quantile, norm_sf};
use crate::{StatError, StatResult, TestOutcome};

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Royston's approximations to the W coefficients for the lower half of
/// the order statistics. Returned values are positive and pair with
/// `x[n-1-i] - x[i]`.
fn coefficients(n: usize) -> Vec<f64> {
    const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
    const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
    let half = n / 2;
    if n == 3 {
        return vec![std::f64::consts::FRAC_1_SQRT_2];
    }
    let an25 = n as f64 + 0.25;
    let m: Vec<f64> = (1..=half)
        .map(|i| norm_quantile((i as f64 - 0.375) / an25))
        .collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / (n as f64).sqrt();
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;
    let mut a = vec![0.0; half];
    a[0] = a1;
    let (start, fac) = if n > 5 {
        let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
        a[1] = a2;
        let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1])
            / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2))
            .sqrt();
        (2, fac)
    } else {
        let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
        (1, fac)
    };
    for i in start..half {
        a[i] = -m[i] / fac;
    }
    a
}

/// Shapiro-Wilk normality test. `statistic` is W.
pub fn shapiro_wilk(values: &[f64]) -> StatResult<TestOutcome> {
    let n = values.len();
    if !(3..=5000).contains(&n) {
        return Err(StatError::InvalidArgument(format!(
            "Shapiro-Wilk requires 3 ≤ n ≤ 5000, got n = {n}"
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatError::InvalidArgument("non-finite value".into()));
    }
    let mut x = values.to_vec();
    x.sort_by(f64::total_cmp);
    let range = x[n - 1] - x[0];
    if range <= 0.0 {
        return Err(StatError::DegenerateInput("all values identical".into()));
    }
    let m = mean(&x);
    let ssq: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    let a = coefficients(n);
    let num: f64 = a
        .iter()
        .enumerate()
        .map(|(i, ai)| ai * (x[n - 1 - i] - x[i]))
        .sum();
    let w = (num * num / ssq).min(1.0);
    Ok(TestOutcome::new(w, n as f64, None, p_value(w, n)))
}

fn p_value(w: f64, n: usize) -> f64 {
    const G: [f64; 2] = [-2.273, 0.459];
    const C3: [f64; 4] = [0.5440, -0.39978, 0.025054, -6.714e-4];
    const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
    const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
    const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];

    if n == 3 {
        let p = 6.0 / PI * (w.sqrt().asin() - (0.75_f64).sqrt().asin());
        return p.clamp(0.0, 1.0);
    }
    if w >= 1.0 {
        return 1.0;
    }
    let an = n as f64;
    let mut y = (1.0 - w).ln();
    let (mu, sigma) = if n <= 11 {
        let gamma = poly(&G, an);
        if y >= gamma {
            return 0.0;
        }
        y = -(gamma - y).ln();
        (poly(&C3, an), poly(&C4, an).exp())
    } else {
        let xx = an.ln();
        (poly(&C5, xx), poly(&C6, xx).exp())
    };
    norm_sf((y - mu) / sigma)
}
