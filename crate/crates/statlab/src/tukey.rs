use serde::{Deserialize, Serialize};

use crate::describe::{mean, sum_sq_dev};
use crate::dist::Distribution;
use crate::{GroupedSample, StatError, StatResult};

/// One pairwise comparison; `mean_diff` is `mean(group1) − mean(group2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TukeyRow {
    pub group1: String,
    pub group2: String,
    pub mean_diff: f64,
    /// Studentized range statistic `|mean_diff| / SE`.
    pub q: f64,
    pub adj_p: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Tukey's honestly significant difference (Tukey-Kramer for unequal n)
/// using the pooled within-group variance.
///
/// Rows cover every unordered pair `(i, j)` with `i < j` in the sample's
/// group order.
pub fn tukey_hsd(sample: &GroupedSample, alpha: f64) -> StatResult<Vec<TukeyRow>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatError::InvalidArgument(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    sample.require_variance_groups()?;
    let groups = sample.groups();
    let k = groups.len();
    let n_total = sample.total_count();
    let df = (n_total - k) as f64;
    let mse = groups.iter().map(|(_, v)| sum_sq_dev(v)).sum::<f64>() / df;
    let dist = Distribution::studentized_range(k as f64, df)?;
    let q_crit = dist.quantile(1.0 - alpha);

    let mut rows = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in (i + 1)..k {
            let (gi, vi) = &groups[i];
            let (gj, vj) = &groups[j];
            let diff = mean(vi) - mean(vj);
            let se = (0.5 * mse * (1.0 / vi.len() as f64 + 1.0 / vj.len() as f64)).sqrt();
            let q = diff.abs() / se;
            rows.push(TukeyRow {
                group1: gi.clone(),
                group2: gj.clone(),
                mean_diff: diff,
                q,
                adj_p: dist.sf(q),
                ci_low: diff - q_crit * se,
                ci_high: diff + q_crit * se,
            });
        }
    }
    Ok(rows)
}
