//! Hypothesis tests and regression models for comparing prompt
//! configurations: Welch and classical ANOVA, Levene (Brown-Forsythe),
//! Shapiro-Wilk, Tukey HSD, Welch's t, Mann-Whitney U, Poisson GLM,
//! two-way factorial ANOVA and OLS regression.
//!
//! Everything here is deterministic. No procedure draws random numbers.

mod anova;
mod describe;
mod dist;
mod glm;
mod linalg;
mod nonparam;
mod normality;
mod ols;
pub mod special;
mod ttest;
mod tukey;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use anova::{levene, one_way_anova, two_way_anova, welch_anova, AnovaEffect, TwoWayAnova};
pub use describe::{mean, median, midranks, sample_variance};
pub use dist::{distribution_cdf, Distribution};
pub use glm::{poisson_glm, poisson_glm_with, GlmCoefficient, GlmFit, IrlsControl};
pub use linalg::DesignMatrix;
pub use nonparam::{mann_whitney_u, MannWhitney, EXACT_PAIR_LIMIT};
pub use normality::shapiro_wilk;
pub use ols::{ols_regression, OlsCoefficient, OlsFit};
pub use ttest::welch_t;
pub use tukey::{tukey_hsd, TukeyRow};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("singular design matrix: {0}")]
    SingularDesign(String),
    #[error("invalid design: {0}")]
    InvalidDesign(String),
    #[error("IRLS did not converge after {iterations} iterations; deviance trace {trace:?}")]
    NonConvergence { iterations: usize, trace: Vec<f64> },
}

pub type StatResult<T> = Result<T, StatError>;

/// Named effect size attached to a test outcome (η², Cohen's d, r, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectSize {
    pub name: String,
    pub value: f64,
}

impl EffectSize {
    pub fn new(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
        }
    }
}

/// Common result shape for a single hypothesis test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub df1: f64,
    pub df2: Option<f64>,
    pub p_value: f64,
    pub effect_size: Option<EffectSize>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

impl TestOutcome {
    pub(crate) fn new(statistic: f64, df1: f64, df2: Option<f64>, p_value: f64) -> Self {
        Self {
            statistic,
            df1,
            df2,
            p_value: p_value.clamp(0.0, 1.0),
            effect_size: None,
            ci_low: None,
            ci_high: None,
        }
    }

    pub(crate) fn with_effect(mut self, name: &str, value: f64) -> Self {
        self.effect_size = Some(EffectSize::new(name, value));
        self
    }

    pub(crate) fn with_ci(mut self, low: f64, high: f64) -> Self {
        self.ci_low = Some(low);
        self.ci_high = Some(high);
        self
    }
}

/// Labeled groups of observations for the k-sample tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedSample {
    groups: Vec<(String, Vec<f64>)>,
}

impl GroupedSample {
    pub fn new<L: Into<String>>(groups: impl IntoIterator<Item = (L, Vec<f64>)>) -> StatResult<Self> {
        let groups: Vec<(String, Vec<f64>)> =
            groups.into_iter().map(|(l, v)| (l.into(), v)).collect();
        for (i, (label, values)) in groups.iter().enumerate() {
            if groups[..i].iter().any(|(other, _)| other == label) {
                return Err(StatError::InvalidArgument(format!(
                    "duplicate group label {label:?}"
                )));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(StatError::InvalidArgument(format!(
                    "group {label:?} contains a non-finite value"
                )));
            }
        }
        Ok(Self { groups })
    }

    pub fn groups(&self) -> &[(String, Vec<f64>)] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn total_count(&self) -> usize {
        self.groups.iter().map(|(_, v)| v.len()).sum()
    }

    /// Same groups with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            groups: self
                .groups
                .iter()
                .map(|(l, v)| (l.clone(), v.iter().map(|x| x * factor).collect()))
                .collect(),
        }
    }

    /// Checks the preconditions shared by the variance-based k-sample tests:
    /// at least two groups, each with two or more values and nonzero variance.
    pub(crate) fn require_variance_groups(&self) -> StatResult<()> {
        if self.groups.len() < 2 {
            return Err(StatError::InvalidArgument(format!(
                "need at least 2 groups, got {}",
                self.groups.len()
            )));
        }
        for (label, values) in &self.groups {
            if values.len() < 2 {
                return Err(StatError::InvalidArgument(format!(
                    "group {label:?} has {} value(s); at least 2 required",
                    values.len()
                )));
            }
            if sample_variance(values) <= 0.0 {
                return Err(StatError::DegenerateInput(format!(
                    "group {label:?} has zero variance"
                )));
            }
        }
        Ok(())
    }
}
