use crate::describe::{mean, sample_variance};
use crate::dist::Distribution;
use crate::special::norm_quantile;
use crate::{StatError, StatResult, TestOutcome};

/// Welch's unequal-variance t test of `mean(a) − mean(b)`.
///
/// The effect size is Cohen's d with the pooled standard deviation; the
/// confidence interval is the 95% normal-approximation interval on d.
pub fn welch_t(a: &[f64], b: &[f64]) -> StatResult<TestOutcome> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatError::InvalidArgument(format!(
            "each sample needs at least 2 values (got {} and {})",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(StatError::InvalidArgument("non-finite value".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (sample_variance(a), sample_variance(b));
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    if se2 <= 0.0 {
        return Err(StatError::DegenerateInput(
            "both samples have zero variance".into(),
        ));
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let p = 2.0 * Distribution::StudentT { df }.sf(t.abs());

    let pooled = (((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0)).sqrt();
    let d = (ma - mb) / pooled;
    let se_d = ((na + nb) / (na * nb) + d * d / (2.0 * (na + nb))).sqrt();
    let z = norm_quantile(0.975);
    Ok(TestOutcome::new(t, df, None, p)
        .with_effect("cohens_d", d)
        .with_ci(d - z * se_d, d + z * se_d))
}
