use serde::{Deserialize, Serialize};

use crate::describe::midranks;
use crate::special::norm_sf;
use crate::{StatError, StatResult, TestOutcome};

/// Largest `n_a · n_b` for which the permutation distribution is computed
/// exactly.
pub const EXACT_PAIR_LIMIT: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// `statistic` is `min(U_a, U_b)`; `df1`/`df2` carry `n_a`/`n_b`; the
    /// effect size is the rank-biserial `r = 1 − 2U/(n_a n_b)`.
    pub outcome: TestOutcome,
    /// Number of (a, b) pairs with `a > b`, ties counting one half.
    pub u_a: f64,
    pub u_b: f64,
    pub exact: bool,
}

impl MannWhitney {
    /// True when values from `a` tend to exceed values from `b`.
    pub fn favors_a(&self) -> bool {
        self.u_a > self.u_b
    }
}

/// Two-sided Mann-Whitney U test.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> StatResult<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(StatError::InvalidArgument(
            "both samples must be non-empty".into(),
        ));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(StatError::InvalidArgument("non-finite value".into()));
    }
    let (na, nb) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let rank_sum_a: f64 = ranks[..na].iter().sum();
    let u_a = rank_sum_a - (na * (na + 1)) as f64 / 2.0;
    let pairs = (na * nb) as f64;
    let u_b = pairs - u_a;
    let u = u_a.min(u_b);

    let exact = na * nb <= EXACT_PAIR_LIMIT;
    let p = if exact {
        exact_p(&ranks, na, rank_sum_a)
    } else {
        normal_p(&pooled, na, nb, u_a)
    };
    let r = 1.0 - 2.0 * u / pairs;
    let outcome = TestOutcome::new(u, na as f64, Some(nb as f64), p).with_effect("rank_biserial_r", r);
    Ok(MannWhitney {
        outcome,
        u_a,
        u_b,
        exact,
    })
}

/// Exact two-sided permutation p-value of the rank sum of `a`, counting
/// subsets of size `n_a` by their (doubled, hence integral) midrank sum.
fn exact_p(ranks: &[f64], na: usize, rank_sum_a: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    let mut counts = vec![vec![0.0_f64; max_sum + 1]; na + 1];
    counts[0][0] = 1.0;
    for (seen, &w) in doubled.iter().enumerate() {
        let top = na.min(seen + 1);
        for j in (1..=top).rev() {
            let (lower, upper) = counts.split_at_mut(j);
            let prev = &lower[j - 1];
            let cur = &mut upper[0];
            for s in (w..=max_sum).rev() {
                let c = prev[s - w];
                if c != 0.0 {
                    cur[s] += c;
                }
            }
        }
    }
    let n = ranks.len();
    let expected2 = (na * (n + 1)) as i64;
    let observed2 = (2.0 * rank_sum_a).round() as i64;
    let dev = (observed2 - expected2).abs();
    let total: f64 = counts[na].iter().sum();
    let extreme: f64 = counts[na]
        .iter()
        .enumerate()
        .filter(|(s, _)| (*s as i64 - expected2).abs() >= dev)
        .map(|(_, c)| c)
        .sum();
    (extreme / total).clamp(0.0, 1.0)
}

/// Normal approximation with tie-corrected variance and a 0.5 continuity
/// correction.
fn normal_p(pooled: &[f64], na: usize, nb: usize, u_a: f64) -> f64 {
    let n = (na + nb) as f64;
    let mut sorted = pooled.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let pairs = (na * nb) as f64;
    let mu = pairs / 2.0;
    let var = pairs / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u_a - mu).abs() - 0.5).max(0.0) / var.sqrt();
    (2.0 * norm_sf(z)).min(1.0)
}
