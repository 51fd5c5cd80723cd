//! Hypothesis tests over a results file. Each table is computed
//! independently; one that lacks data is marked insufficient and the rest
//! still run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use kidscaffold::grid::{CaseResult, Configuration};
use kidscaffold::recipe::Mode;
use serde::{Deserialize, Serialize};
use statlab::{
    levene, mann_whitney_u, mean, ols_regression, one_way_anova, poisson_glm, sample_variance, shapiro_wilk,
    tukey_hsd, two_way_anova, welch_anova, welch_t, AnovaEffect, DesignMatrix, GlmCoefficient, GroupedSample,
    MannWhitney, OlsFit, StatError, TestOutcome, TukeyRow,
};

use crate::runner::read_rows;
use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum Section<T> {
    Ready(T),
    Insufficient(String),
}

impl<T> Section<T> {
    pub fn ready(&self) -> Option<&T> {
        match self {
            Section::Ready(t) => Some(t),
            Section::Insufficient(_) => None,
        }
    }
}

fn section<T>(r: Result<T, String>) -> Section<T> {
    r.map_or_else(Section::Insufficient, Section::Ready)
}

fn stat_msg(e: StatError) -> String {
    e.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub label: String,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeOmnibus {
    pub groups: Vec<GroupSummary>,
    /// Welch's F, or the classical F when a group has zero variance.
    pub anova: TestOutcome,
    pub classical_fallback: bool,
    pub levene: Option<TestOutcome>,
    /// Shapiro-Wilk on residuals from the grade means.
    pub shapiro_residuals: Option<TestOutcome>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmRow {
    pub metric: String,
    pub formula: String,
    /// The Vanilla-vs-Recipe coefficient.
    pub config: GlmCoefficient,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthRow {
    pub test: MannWhitney,
    pub favors_recipe: bool,
    pub n_recipe: usize,
    pub n_vanilla: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorialTable {
    pub config: Option<AnovaEffect>,
    pub temperature: Option<AnovaEffect>,
    pub interaction: Option<AnovaEffect>,
    pub residual_df: f64,
    pub temperature_levels: usize,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelchRow {
    pub outcome: TestOutcome,
    pub mean_recipe: f64,
    pub mean_vanilla: f64,
    pub n_recipe: usize,
    pub n_vanilla: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTable {
    pub fit: OlsFit,
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub by_config: Vec<GroupSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub rows_total: usize,
    pub rows_failed: usize,
    pub h1_omnibus: Section<GradeOmnibus>,
    pub h1_tukey: Section<Vec<TukeyRow>>,
    pub h2_count: Section<GlmRow>,
    pub h2_depth: Section<DepthRow>,
    pub h2_diversity: Section<GlmRow>,
    pub h3_anova: Section<FactorialTable>,
    pub h3_welch: Section<WelchRow>,
    /// Temperature rows of the factorial model (same fit as `h3_anova`).
    pub h4_anova: Section<FactorialTable>,
    pub h4_regression: Section<RegressionTable>,
    pub latency: Section<LatencySummary>,
    pub footnotes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    /// Group H1 over both configurations instead of Recipe rows only.
    pub h1_both_configs: bool,
    pub tukey_alpha: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            h1_both_configs: false,
            tukey_alpha: 0.05,
        }
    }
}

/// A successfully measured row, flattened for the tests.
struct Obs {
    config: Configuration,
    mode: Mode,
    grade: u8,
    temperature: f64,
    similarity: f64,
    fk_grade: Option<f64>,
    q_count: u32,
    q_depth: u32,
    q_diversity: u32,
    latency: f64,
}

fn summarize(label: String, v: &[f64]) -> GroupSummary {
    GroupSummary {
        label,
        n: v.len(),
        mean: mean(v),
        sd: if v.len() > 1 { sample_variance(v).sqrt() } else { 0.0 },
    }
}

fn temperature_label(t: f64) -> String {
    format!("{t}")
}

fn grade_groups(obs: &[&Obs]) -> Vec<(String, Vec<f64>)> {
    let mut by_grade: BTreeMap<u8, Vec<f64>> = BTreeMap::new();
    for o in obs {
        by_grade.entry(o.grade).or_default().push(o.similarity);
    }
    by_grade.into_iter().map(|(g, v)| (g.to_string(), v)).collect()
}

fn h1(obs: &[&Obs], alpha: f64) -> (Section<GradeOmnibus>, Section<Vec<TukeyRow>>) {
    let groups = grade_groups(obs);
    if groups.len() < 2 || groups.iter().any(|(_, v)| v.len() < 2) {
        let why = format!(
            "need at least 2 grades with 2 or more rows each; have {}",
            groups.iter().map(|(g, v)| format!("grade {g}: {}", v.len())).collect::<Vec<_>>().join(", ")
        );
        return (Section::Insufficient(why.clone()), Section::Insufficient(why));
    }
    let sample = match GroupedSample::new(groups.clone()) {
        Ok(s) => s,
        Err(e) => return (Section::Insufficient(stat_msg(e.clone())), Section::Insufficient(stat_msg(e))),
    };
    let omnibus = (|| {
        let (anova, classical_fallback) = match welch_anova(&sample) {
            Ok(o) => (o, false),
            Err(StatError::DegenerateInput(_)) => (one_way_anova(&sample).map_err(stat_msg)?, true),
            Err(e) => return Err(stat_msg(e)),
        };
        let residuals: Vec<f64> = groups
            .iter()
            .flat_map(|(_, v)| {
                let m = mean(v);
                v.iter().map(move |x| x - m)
            })
            .collect();
        Ok(GradeOmnibus {
            groups: groups.iter().map(|(g, v)| summarize(g.clone(), v)).collect(),
            anova,
            classical_fallback,
            levene: levene(&sample).ok(),
            shapiro_residuals: shapiro_wilk(&residuals).ok(),
            n: sample.total_count(),
        })
    })();
    (section(omnibus), section(tukey_hsd(&sample, alpha).map_err(stat_msg)))
}

fn split_config<'a>(obs: &[&'a Obs]) -> (Vec<&'a Obs>, Vec<&'a Obs>) {
    obs.iter().partition(|o| o.config == Configuration::Recipe)
}

fn both_configs(obs: &[&Obs]) -> Result<(), String> {
    let (r, v) = split_config(obs);
    if r.is_empty() || v.is_empty() {
        Err(format!(
            "needs both configurations; have {} recipe and {} vanilla rows",
            r.len(),
            v.len()
        ))
    } else {
        Ok(())
    }
}

fn glm(obs: &[&Obs], metric: &str, y: impl Fn(&Obs) -> u32) -> Result<GlmRow, String> {
    both_configs(obs)?;
    let mut cols: Vec<(String, Vec<f64>)> = vec![(
        "config[vanilla]".into(),
        obs.iter().map(|o| (o.config == Configuration::Vanilla) as u8 as f64).collect(),
    )];
    let present: Vec<Mode> = Mode::ALL.into_iter().filter(|m| obs.iter().any(|o| o.mode == *m)).collect();
    for m in present.iter().skip(1) {
        cols.push((format!("mode[{m}]"), obs.iter().map(|o| (o.mode == *m) as u8 as f64).collect()));
    }
    let mut terms = vec!["config"];
    if present.len() > 1 {
        terms.push("mode");
    }
    if obs.iter().any(|o| o.grade != obs[0].grade) {
        cols.push(("grade".into(), obs.iter().map(|o| o.grade as f64).collect()));
        terms.push("grade");
    }
    let design = DesignMatrix::with_intercept(cols).map_err(stat_msg)?;
    let counts: Vec<u32> = obs.iter().map(|o| y(o)).collect();
    let fit = poisson_glm(&counts, &design).map_err(stat_msg)?;
    let config = fit
        .coefficients
        .iter()
        .find(|c| c.name == "config[vanilla]")
        .cloned()
        .ok_or("configuration coefficient missing from the fit")?;
    Ok(GlmRow {
        metric: metric.into(),
        formula: format!("{metric} ~ {}", terms.join(" + ")),
        config,
        n: fit.n,
    })
}

fn depth(obs: &[&Obs]) -> Result<DepthRow, String> {
    both_configs(obs)?;
    let (r, v) = split_config(obs);
    let a: Vec<f64> = r.iter().map(|o| o.q_depth as f64).collect();
    let b: Vec<f64> = v.iter().map(|o| o.q_depth as f64).collect();
    let test = mann_whitney_u(&a, &b).map_err(stat_msg)?;
    Ok(DepthRow {
        favors_recipe: test.favors_a(),
        test,
        n_recipe: a.len(),
        n_vanilla: b.len(),
    })
}

fn factorial(obs: &[&Obs]) -> Result<FactorialTable, String> {
    both_configs(obs)?;
    let y: Vec<f64> = obs.iter().map(|o| o.similarity).collect();
    let config: Vec<&str> = obs.iter().map(|o| o.config.as_str()).collect();
    let temps: Vec<String> = obs.iter().map(|o| temperature_label(o.temperature)).collect();
    let temperature_levels = {
        let mut t = temps.clone();
        t.sort();
        t.dedup();
        t.len()
    };
    let temp_refs: Vec<&str> = temps.iter().map(String::as_str).collect();
    let fit = two_way_anova(&y, &config, &temp_refs).map_err(stat_msg)?;
    Ok(FactorialTable {
        config: fit.factor_a,
        temperature: fit.factor_b,
        interaction: fit.interaction,
        residual_df: fit.residual_df,
        temperature_levels,
        n: fit.n,
    })
}

fn welch_by_config(obs: &[&Obs]) -> Result<WelchRow, String> {
    both_configs(obs)?;
    let (r, v) = split_config(obs);
    let a: Vec<f64> = r.iter().map(|o| o.similarity).collect();
    let b: Vec<f64> = v.iter().map(|o| o.similarity).collect();
    Ok(WelchRow {
        outcome: welch_t(&a, &b).map_err(stat_msg)?,
        mean_recipe: mean(&a),
        mean_vanilla: mean(&b),
        n_recipe: a.len(),
        n_vanilla: b.len(),
    })
}

fn regression(obs: &[&Obs]) -> Result<RegressionTable, String> {
    let used: Vec<&&Obs> = obs.iter().filter(|o| o.fk_grade.is_some()).collect();
    if used.len() < 5 {
        return Err(format!("{} rows with a defined grade level; need at least 5", used.len()));
    }
    let col = |f: &dyn Fn(&Obs) -> f64| used.iter().map(|o| f(o)).collect::<Vec<f64>>();
    let design = DesignMatrix::with_intercept([
        ("fk_grade_level", col(&|o| o.fk_grade.unwrap_or_default())),
        ("grade", col(&|o| o.grade as f64)),
        ("temperature", col(&|o| o.temperature)),
    ])
    .map_err(stat_msg)?;
    let y = col(&|o| o.similarity);
    Ok(RegressionTable {
        fit: ols_regression(&y, &design).map_err(stat_msg)?,
        dropped: obs.len() - used.len(),
    })
}

fn latency(obs: &[&Obs]) -> Result<LatencySummary, String> {
    if obs.is_empty() {
        return Err("no successful rows".into());
    }
    let zero = obs.iter().filter(|o| o.latency == 0.0).count();
    if zero > 0 {
        return Err(format!(
            "{zero} rows carry a 0.0 s latency from hand-authored fixtures; latency is not reported"
        ));
    }
    let mut by: BTreeMap<Configuration, Vec<f64>> = BTreeMap::new();
    for o in obs {
        by.entry(o.config).or_default().push(o.latency);
    }
    Ok(LatencySummary {
        by_config: by.into_iter().map(|(c, v)| summarize(c.to_string(), &v)).collect(),
    })
}

pub fn analyze(rows: &[CaseResult], options: &AnalysisOptions) -> StatReport {
    let obs: Vec<Obs> = rows
        .iter()
        .filter(|r| r.succeeded())
        .filter_map(|r| {
            let m = r.metrics.as_ref()?;
            Some(Obs {
                config: r.configuration,
                mode: r.mode,
                grade: r.grade.value(),
                temperature: r.temperature,
                similarity: m.similarity,
                fk_grade: m.fk_grade_level,
                q_count: m.q_count,
                q_depth: m.q_depth,
                q_diversity: m.q_diversity,
                latency: m.latency_seconds,
            })
        })
        .collect();
    let all: Vec<&Obs> = obs.iter().collect();
    let h1_rows: Vec<&Obs> = all
        .iter()
        .copied()
        .filter(|o| options.h1_both_configs || o.config == Configuration::Recipe)
        .collect();
    let (h1_omnibus, h1_tukey) = h1(&h1_rows, options.tukey_alpha);
    let anova = section(factorial(&all));

    let mut notes = vec![format!(
        "Results file: {} rows, {} succeeded; {} failed rows are excluded from every test.",
        rows.len(),
        obs.len(),
        rows.len() - obs.len()
    )];
    let h1_scope = if options.h1_both_configs { "rows from both configurations" } else { "recipe-configuration rows" };
    notes.push(format!(
        "H1 groups {} {h1_scope} (all modes) by grade.",
        h1_rows.len()
    ));
    if let Section::Ready(o) = &h1_omnibus {
        if o.classical_fallback {
            notes.push(
                "Welch's F is undefined when a grade group has zero variance; the classical one-way F is shown instead."
                    .into(),
            );
        }
    }
    notes.push(format!(
        "Tukey HSD uses the pooled-variance studentized range (family-wise alpha {}) even when Levene's test rejects equal variances.",
        options.tukey_alpha
    ));
    let (rec, van) = split_config(&all);
    notes.push(format!(
        "H2 uses {} rows ({} recipe, {} vanilla). Poisson GLMs take Recipe and School as reference levels with grade numeric, so IRR < 1 means Vanilla replies ask fewer questions. Mann-Whitney r is the rank-biserial correlation.",
        all.len(),
        rec.len(),
        van.len()
    ));
    if let Section::Ready(t) = &anova {
        notes.push(format!(
            "Configuration and temperature both vary between cases, so the config x temperature model is a between-subjects two-way ANOVA (Type II sums of squares) rather than a mixed design. Temperature is categorical with {} levels; n = {}.",
            t.temperature_levels, t.n
        ));
    }
    notes.push("Cohen's d uses the pooled standard deviation; its 95% CI is the normal approximation.".into());
    let reg = section(regression(&all));
    if let Section::Ready(r) = &reg {
        notes.push(format!(
            "Regression: similarity ~ fk_grade_level + grade + temperature, all numeric; n = {} ({} rows without a defined grade level dropped).",
            r.fit.n, r.dropped
        ));
    }
    let lat = section(latency(&all));
    if let Section::Insufficient(why) = &lat {
        notes.push(format!("Latency: {why}."));
    }

    StatReport {
        rows_total: rows.len(),
        rows_failed: rows.len() - obs.len(),
        h1_omnibus,
        h1_tukey,
        h2_count: section(glm(&all, "q_count", |o| o.q_count)),
        h2_depth: section(depth(&all)),
        h2_diversity: section(glm(&all, "q_diversity", |o| o.q_diversity)),
        h3_welch: section(welch_by_config(&all)),
        h4_anova: anova.clone(),
        h3_anova: anova,
        h4_regression: reg,
        latency: lat,
        footnotes: notes,
    }
}

pub fn load_results(path: &Path) -> Result<Vec<CaseResult>, HarnessError> {
    read_rows(path)
}

/// Analyzes `results` and writes the markdown report, its CSV twins and a
/// JSON copy of the report into `out_dir`.
pub fn analyze_file(
    results: &Path,
    out_dir: &Path,
    options: &AnalysisOptions,
) -> Result<(StatReport, Vec<PathBuf>), HarnessError> {
    let rows = load_results(results)?;
    let report = analyze(&rows, options);
    let files = crate::report::write_report(&report, out_dir)?;
    Ok((report, files))
}
