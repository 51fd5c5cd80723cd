//! One-way (classical and Welch), Levene/Brown-Forsythe and two-way
//! factorial ANOVA.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::describe::{mean, median, sample_variance, sum_sq_dev};
use crate::dist::Distribution;
use crate::linalg::least_squares;
use crate::{GroupedSample, StatError, StatResult, TestOutcome};

fn between_total_ss(sample: &GroupedSample) -> (f64, f64) {
    let all: Vec<f64> = sample
        .groups()
        .iter()
        .flat_map(|(_, v)| v.iter().copied())
        .collect();
    let grand = mean(&all);
    let ssb = sample
        .groups()
        .iter()
        .map(|(_, v)| v.len() as f64 * (mean(v) - grand).powi(2))
        .sum();
    (ssb, sum_sq_dev(&all))
}

/// Welch's heteroscedastic one-way ANOVA. The effect size is η² computed
/// on the raw data as SS_between / SS_total.
pub fn welch_anova(sample: &GroupedSample) -> StatResult<TestOutcome> {
    sample.require_variance_groups()?;
    let k = sample.len() as f64;
    let stats: Vec<(f64, f64, f64)> = sample
        .groups()
        .iter()
        .map(|(_, v)| {
            let n = v.len() as f64;
            (n, mean(v), n / sample_variance(v))
        })
        .collect();
    let w_sum: f64 = stats.iter().map(|s| s.2).sum();
    let weighted_mean = stats.iter().map(|s| s.2 * s.1).sum::<f64>() / w_sum;
    let a = stats
        .iter()
        .map(|s| s.2 * (s.1 - weighted_mean).powi(2))
        .sum::<f64>()
        / (k - 1.0);
    let lambda: f64 = stats
        .iter()
        .map(|s| (1.0 - s.2 / w_sum).powi(2) / (s.0 - 1.0))
        .sum();
    let b = 1.0 + 2.0 * (k - 2.0) / (k * k - 1.0) * lambda;
    let f = a / b;
    let df1 = k - 1.0;
    let df2 = (k * k - 1.0) / (3.0 * lambda);
    let p = Distribution::FisherF { df1, df2 }.sf(f);
    let (ssb, sst) = between_total_ss(sample);
    Ok(TestOutcome::new(f, df1, Some(df2), p).with_effect("eta_squared", ssb / sst))
}

/// Classical equal-variance one-way ANOVA with η².
pub fn one_way_anova(sample: &GroupedSample) -> StatResult<TestOutcome> {
    if sample.len() < 2 {
        return Err(StatError::InvalidArgument(format!(
            "need at least 2 groups, got {}",
            sample.len()
        )));
    }
    if let Some((label, _)) = sample.groups().iter().find(|(_, v)| v.is_empty()) {
        return Err(StatError::InvalidArgument(format!("group {label:?} is empty")));
    }
    let n = sample.total_count() as f64;
    let k = sample.len() as f64;
    if n <= k {
        return Err(StatError::InvalidArgument(format!(
            "{n} observations leave no within-group degrees of freedom for {k} groups"
        )));
    }
    let (ssb, sst) = between_total_ss(sample);
    let ssw: f64 = sample.groups().iter().map(|(_, v)| sum_sq_dev(v)).sum();
    let df1 = k - 1.0;
    let df2 = n - k;
    if ssb <= 1e-12 * sst || sst == 0.0 {
        return Ok(TestOutcome::new(0.0, df1, Some(df2), 1.0).with_effect("eta_squared", 0.0));
    }
    if ssw <= 1e-14 * sst {
        return Err(StatError::DegenerateInput(
            "no within-group variation".into(),
        ));
    }
    let f = (ssb / df1) / (ssw / df2);
    let p = Distribution::FisherF { df1, df2 }.sf(f);
    Ok(TestOutcome::new(f, df1, Some(df2), p).with_effect("eta_squared", ssb / sst))
}

/// Levene's test in the Brown-Forsythe form: one-way ANOVA on absolute
/// deviations from each group's median. The statistic is reported as W.
pub fn levene(sample: &GroupedSample) -> StatResult<TestOutcome> {
    sample.require_variance_groups()?;
    let deviations = GroupedSample::new(sample.groups().iter().map(|(label, v)| {
        let med = median(v);
        (label.clone(), v.iter().map(|x| (x - med).abs()).collect())
    }))?;
    let mut out = one_way_anova(&deviations)?;
    out.effect_size = None;
    Ok(out)
}

/// One effect row of a factorial ANOVA table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaEffect {
    pub sum_sq: f64,
    /// F test with `df1` = effect df and `df2` = residual df; effect size is
    /// partial η².
    pub outcome: TestOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoWayAnova {
    pub factor_a: Option<AnovaEffect>,
    pub factor_b: Option<AnovaEffect>,
    pub interaction: Option<AnovaEffect>,
    pub residual_sum_sq: f64,
    pub residual_df: f64,
    pub n: usize,
}

fn level_index<L: AsRef<str>>(labels: &[L]) -> (Vec<usize>, usize) {
    let mut levels: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        let next = levels.len();
        levels.entry(l.as_ref()).or_insert(next);
    }
    // re-number in sorted order so the coding is independent of row order
    let sorted: BTreeMap<&str, usize> = levels
        .keys()
        .enumerate()
        .map(|(i, k)| (*k, i))
        .collect();
    (
        labels.iter().map(|l| sorted[l.as_ref()]).collect(),
        sorted.len(),
    )
}

/// Which terms a sub-model includes: A, B, A×B.
#[derive(Clone, Copy)]
struct Terms(bool, bool, bool);

fn rss_for(
    y: &DVector<f64>,
    (a, levels_a): (&[usize], usize),
    (b, levels_b): (&[usize], usize),
    Terms(use_a, use_b, use_ab): Terms,
) -> StatResult<f64> {
    let mut cols: Vec<Vec<f64>> = vec![vec![1.0; y.len()]];
    if use_a {
        for lvl in 1..levels_a {
            cols.push(a.iter().map(|&x| (x == lvl) as u8 as f64).collect());
        }
    }
    if use_b {
        for lvl in 1..levels_b {
            cols.push(b.iter().map(|&x| (x == lvl) as u8 as f64).collect());
        }
    }
    if use_ab {
        for la in 1..levels_a {
            for lb in 1..levels_b {
                cols.push(
                    a.iter()
                        .zip(b)
                        .map(|(&x, &z)| ((x == la) && (z == lb)) as u8 as f64)
                        .collect(),
                );
            }
        }
    }
    let x = DMatrix::from_fn(y.len(), cols.len(), |i, j| cols[j][i]);
    Ok(least_squares(&x, y)?.rss)
}

/// Between-subjects two-way factorial ANOVA with Type-II sums of squares
/// and the A×B interaction. Every (A, B) cell must be populated.
///
/// A factor with a single level contributes no effect row (its effect and
/// the interaction have zero degrees of freedom); the remaining factor then
/// reduces to one-way ANOVA.
pub fn two_way_anova<L: AsRef<str>>(
    y: &[f64],
    factor_a: &[L],
    factor_b: &[L],
) -> StatResult<TwoWayAnova> {
    let n = y.len();
    if factor_a.len() != n || factor_b.len() != n {
        return Err(StatError::InvalidArgument(format!(
            "response has {n} values but factors have {} and {}",
            factor_a.len(),
            factor_b.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(StatError::InvalidArgument("non-finite response".into()));
    }
    let (a, la) = level_index(factor_a);
    let (b, lb) = level_index(factor_b);
    let mut cell_counts = vec![0usize; la * lb];
    for (&x, &z) in a.iter().zip(&b) {
        cell_counts[x * lb + z] += 1;
    }
    if let Some(empty) = cell_counts.iter().position(|&c| c == 0) {
        return Err(StatError::InvalidDesign(format!(
            "cell (A level #{}, B level #{}) is empty; interaction is not estimable",
            empty / lb,
            empty % lb
        )));
    }
    let cells = la * lb;
    if n <= cells {
        return Err(StatError::InvalidDesign(format!(
            "{n} observations leave no residual degrees of freedom for {cells} cells"
        )));
    }
    let residual_df = (n - cells) as f64;
    let df_a = (la - 1) as f64;
    let df_b = (lb - 1) as f64;
    let df_ab = df_a * df_b;

    let constant = y.iter().all(|v| *v == y[0]);
    let yv = DVector::from_column_slice(y);
    let (ss_a, ss_b, ss_ab, rss_full) = if constant {
        (0.0, 0.0, 0.0, 0.0)
    } else {
        let rss_add = rss_for(&yv, (&a, la), (&b, lb), Terms(true, true, false))?;
        let rss_only_b = rss_for(&yv, (&a, la), (&b, lb), Terms(false, true, false))?;
        let rss_only_a = rss_for(&yv, (&a, la), (&b, lb), Terms(true, false, false))?;
        let rss_full = rss_for(&yv, (&a, la), (&b, lb), Terms(true, true, true))?;
        (
            (rss_only_b - rss_add).max(0.0),
            (rss_only_a - rss_add).max(0.0),
            (rss_add - rss_full).max(0.0),
            rss_full.max(0.0),
        )
    };
    let sst = sum_sq_dev(y);
    let ms_res = rss_full / residual_df;
    if !constant && rss_full <= 1e-14 * sst {
        return Err(StatError::DegenerateInput(
            "no within-cell variation; F ratios are undefined".into(),
        ));
    }
    let effect = |ss: f64, df: f64| -> Option<AnovaEffect> {
        if df == 0.0 {
            return None;
        }
        let ss = if ss <= 1e-12 * sst { 0.0 } else { ss };
        let outcome = if ss == 0.0 {
            TestOutcome::new(0.0, df, Some(residual_df), 1.0).with_effect("partial_eta_squared", 0.0)
        } else {
            let f = (ss / df) / ms_res;
            let p = Distribution::FisherF {
                df1: df,
                df2: residual_df,
            }
            .sf(f);
            TestOutcome::new(f, df, Some(residual_df), p)
                .with_effect("partial_eta_squared", ss / (ss + rss_full))
        };
        Some(AnovaEffect {
            sum_sq: ss,
            outcome,
        })
    };
    Ok(TwoWayAnova {
        factor_a: effect(ss_a, df_a),
        factor_b: effect(ss_b, df_b),
        interaction: effect(ss_ab, df_ab),
        residual_sum_sq: rss_full,
        residual_df,
        n,
    })
}
