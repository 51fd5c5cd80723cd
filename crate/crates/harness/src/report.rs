//! Markdown rendering of a [`StatReport`] plus one CSV per table.

use std::path::{Path, PathBuf};

use statlab::{AnovaEffect, TestOutcome};

use crate::analysis::{FactorialTable, GlmRow, Section, StatReport};
use crate::{io_err, HarnessError};

/// Fixed-precision number without a negative zero.
pub fn num(x: f64, precision: usize) -> String {
    let s = format!("{x:.precision$}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

pub fn fmt_p(p: f64) -> String {
    if p < 0.001 {
        "<.001".into()
    } else {
        num(p, 3)
    }
}

fn fmt_df(df: f64) -> String {
    if (df - df.round()).abs() < 1e-9 {
        format!("{}", df.round() as i64)
    } else {
        num(df, 1)
    }
}

fn fmt_small(x: f64) -> String {
    if x != 0.0 && x.abs() < 0.001 {
        format!("{x:.2e}")
    } else {
        num(x, 3)
    }
}

fn raw(x: f64) -> String {
    format!("{x}")
}

fn raw_opt(x: Option<f64>) -> String {
    x.map(raw).unwrap_or_default()
}

pub struct Table {
    pub slug: &'static str,
    pub title: String,
    pub header: Vec<&'static str>,
    /// Display cells.
    pub rows: Vec<Vec<String>>,
    /// Full-precision cells for the CSV twin.
    pub csv: Vec<Vec<String>>,
    pub insufficient: Option<String>,
}

impl Table {
    fn new(slug: &'static str, title: &str, header: Vec<&'static str>) -> Self {
        Self {
            slug,
            title: title.into(),
            header,
            rows: Vec::new(),
            csv: Vec::new(),
            insufficient: None,
        }
    }

    fn push(&mut self, shown: Vec<String>, full: Vec<String>) {
        self.rows.push(shown);
        self.csv.push(full);
    }

    fn fill_from<T>(mut self, s: &Section<T>, fill: impl FnOnce(&mut Table, &T)) -> Self {
        match s {
            Section::Ready(v) => fill(&mut self, v),
            Section::Insufficient(why) => self.insufficient = Some(why.clone()),
        }
        self
    }

    pub fn markdown(&self) -> String {
        let mut out = format!("### {}\n\n", self.title);
        if let Some(why) = &self.insufficient {
            out.push_str(&format!("_Insufficient data: {why}_\n"));
            return out;
        }
        out.push_str(&format!("| {} |\n", self.header.join(" | ")));
        out.push_str(&format!("|{}\n", "---|".repeat(self.header.len())));
        for r in &self.rows {
            out.push_str(&format!("| {} |\n", r.join(" | ")));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        if let Some(why) = &self.insufficient {
            w.write_record(["status", "reason"]).expect("in-memory write");
            w.write_record(["insufficient data", why.as_str()]).expect("in-memory write");
        } else {
            w.write_record(&self.header).expect("in-memory write");
            for r in &self.csv {
                w.write_record(r).expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }
}

fn outcome_row(t: &mut Table, name: &str, stat: &str, o: &TestOutcome, effect: bool) {
    let eff = o.effect_size.as_ref().filter(|_| effect);
    t.push(
        vec![
            name.into(),
            format!("{stat} = {}", num(o.statistic, 2)),
            fmt_df(o.df1),
            o.df2.map(fmt_df).unwrap_or_default(),
            fmt_p(o.p_value),
            eff.map(|e| num(e.value, 3)).unwrap_or_default(),
        ],
        vec![
            name.into(),
            raw(o.statistic),
            raw(o.df1),
            raw_opt(o.df2),
            raw(o.p_value),
            raw_opt(eff.map(|e| e.value)),
        ],
    );
}

fn effect_row(t: &mut Table, name: &str, e: &Option<AnovaEffect>) {
    let Some(e) = e else {
        t.push(
            vec![name.into(), "0".into(), String::new(), "n/a".into(), "n/a".into(), String::new()],
            vec![name.into(), "0".into(), String::new(), String::new(), String::new(), String::new()],
        );
        return;
    };
    let o = &e.outcome;
    let eta = o.effect_size.as_ref().map(|x| x.value);
    t.push(
        vec![
            name.into(),
            fmt_df(o.df1),
            o.df2.map(fmt_df).unwrap_or_default(),
            num(o.statistic, 2),
            fmt_p(o.p_value),
            eta.map(|v| num(v, 3)).unwrap_or_default(),
        ],
        vec![name.into(), raw(o.df1), raw_opt(o.df2), raw(o.statistic), raw(o.p_value), raw_opt(eta)],
    );
}

fn glm_row(t: &mut Table, label: &str, s: &Section<GlmRow>) {
    match s {
        Section::Ready(g) => {
            let c = &g.config;
            t.push(
                vec![
                    label.into(),
                    format!("Poisson GLM: {}", g.formula),
                    format!("z = {}", num(c.z, 2)),
                    fmt_p(c.p_value),
                    format!("IRR = {}", fmt_small(c.irr)),
                ],
                vec![label.into(), format!("Poisson GLM: {}", g.formula), raw(c.z), raw(c.p_value), raw(c.irr)],
            );
        }
        Section::Insufficient(why) => {
            let cell = format!("insufficient data: {why}");
            t.push(
                vec![label.into(), cell.clone(), String::new(), String::new(), String::new()],
                vec![label.into(), cell, String::new(), String::new(), String::new()],
            );
        }
    }
}

fn anova_table(slug: &'static str, title: &str, s: &Section<FactorialTable>, with_config: bool) -> Table {
    Table::new(slug, title, vec!["Effect", "df1", "df2", "F", "p", "partial η²"]).fill_from(s, |t, a| {
        if with_config {
            effect_row(t, "Configuration", &a.config);
        }
        effect_row(t, "Temperature", &a.temperature);
        effect_row(t, "Config × Temperature", &a.interaction);
    })
}

pub fn tables(r: &StatReport) -> Vec<Table> {
    let mut out = Vec::new();
    out.push(
        Table::new(
            "h1_grade_omnibus",
            "H1. Similarity by grade level",
            vec!["Test", "Statistic", "df1", "df2", "p", "η²"],
        )
        .fill_from(&r.h1_omnibus, |t, o| {
            let name = if o.classical_fallback { "One-way ANOVA (classical)" } else { "Welch's ANOVA" };
            outcome_row(t, name, "F", &o.anova, true);
            if let Some(l) = &o.levene {
                outcome_row(t, "Levene (median)", "W", l, false);
            }
            if let Some(s) = &o.shapiro_residuals {
                outcome_row(t, "Shapiro-Wilk (residuals)", "W", s, false);
            }
        }),
    );
    out.push(
        Table::new("h1_grade_groups", "H1. Similarity by grade: group summary", vec!["Grade", "n", "Mean", "SD"])
            .fill_from(&r.h1_omnibus, |t, o| {
                for g in &o.groups {
                    t.push(
                        vec![g.label.clone(), g.n.to_string(), num(g.mean, 4), num(g.sd, 4)],
                        vec![g.label.clone(), g.n.to_string(), raw(g.mean), raw(g.sd)],
                    );
                }
            }),
    );
    out.push(
        Table::new(
            "h1_tukey",
            "H1. Tukey HSD pairwise comparisons of similarity across grade levels",
            vec!["Group 1", "Group 2", "Mean Diff.", "Adj. p-value", "Lower CI", "Upper CI"],
        )
        .fill_from(&r.h1_tukey, |t, rows| {
            for row in rows {
                let p = if row.adj_p < 0.001 { "<0.001".into() } else { num(row.adj_p, 4) };
                t.push(
                    vec![
                        row.group1.clone(),
                        row.group2.clone(),
                        num(row.mean_diff, 4),
                        p,
                        num(row.ci_low, 4),
                        num(row.ci_high, 4),
                    ],
                    vec![
                        row.group1.clone(),
                        row.group2.clone(),
                        raw(row.mean_diff),
                        raw(row.adj_p),
                        raw(row.ci_low),
                        raw(row.ci_high),
                    ],
                );
            }
        }),
    );

    let mut h2 = Table::new(
        "h2_question_scaffolding",
        "H2. Question-scaffolding metrics by configuration",
        vec!["Metric", "Test (model)", "Statistic", "p-value", "Effect size"],
    );
    glm_row(&mut h2, "Question count", &r.h2_count);
    match &r.h2_depth {
        Section::Ready(d) => {
            let o = &d.test.outcome;
            let r_eff = o.effect_size.as_ref().map_or(0.0, |e| e.value);
            let test = "Mann-Whitney U on q_depth by config".to_string();
            h2.push(
                vec![
                    "Question depth".into(),
                    test.clone(),
                    format!("U = {}", num(o.statistic, 1)),
                    fmt_p(o.p_value),
                    format!("r = {}", num(r_eff, 3)),
                ],
                vec!["Question depth".into(), test, raw(o.statistic), raw(o.p_value), raw(r_eff)],
            );
        }
        Section::Insufficient(why) => {
            let cell = format!("insufficient data: {why}");
            h2.push(
                vec!["Question depth".into(), cell.clone(), String::new(), String::new(), String::new()],
                vec!["Question depth".into(), cell, String::new(), String::new(), String::new()],
            );
        }
    }
    glm_row(&mut h2, "Question diversity", &r.h2_diversity);
    out.push(h2);

    out.push(anova_table(
        "h3_config_temperature_anova",
        "H3. Two-way ANOVA of similarity (config × temperature)",
        &r.h3_anova,
        true,
    ));
    out.push(
        Table::new(
            "h3_welch_t",
            "H3. Welch's t-test comparing similarity by configuration",
            vec!["Comparison", "t", "df", "p", "Cohen's d", "95% CI"],
        )
        .fill_from(&r.h3_welch, |t, w| {
            let o = &w.outcome;
            let d = o.effect_size.as_ref().map_or(f64::NAN, |e| e.value);
            let (lo, hi) = (o.ci_low.unwrap_or(f64::NAN), o.ci_high.unwrap_or(f64::NAN));
            t.push(
                vec![
                    "Recipe vs. Vanilla".into(),
                    num(o.statistic, 2),
                    fmt_df(o.df1),
                    fmt_p(o.p_value),
                    num(d, 3),
                    format!("[{}, {}]", num(lo, 3), num(hi, 3)),
                ],
                vec![
                    "Recipe vs. Vanilla".into(),
                    raw(o.statistic),
                    raw(o.df1),
                    raw(o.p_value),
                    raw(d),
                    format!("[{}, {}]", raw(lo), raw(hi)),
                ],
            );
        }),
    );
    out.push(anova_table(
        "h4_temperature_anova",
        "H4. Temperature effects on similarity",
        &r.h4_anova,
        false,
    ));
    out.push(
        Table::new(
            "h4_regression",
            "H4. Regression coefficients predicting similarity",
            vec!["Predictor", "β", "SE", "t", "p", "95% CI"],
        )
        .fill_from(&r.h4_regression, |t, reg| {
            for c in &reg.fit.coefficients {
                t.push(
                    vec![
                        c.name.clone(),
                        num(c.beta, 3),
                        num(c.se, 3),
                        num(c.t, 3),
                        fmt_p(c.p_value),
                        format!("[{}, {}]", num(c.ci_low, 3), num(c.ci_high, 3)),
                    ],
                    vec![
                        c.name.clone(),
                        raw(c.beta),
                        raw(c.se),
                        raw(c.t),
                        raw(c.p_value),
                        format!("[{}, {}]", raw(c.ci_low), raw(c.ci_high)),
                    ],
                );
            }
        }),
    );
    out.push(
        Table::new("latency", "Response latency by configuration", vec!["Configuration", "n", "Mean (s)", "SD (s)"])
            .fill_from(&r.latency, |t, l| {
                for g in &l.by_config {
                    t.push(
                        vec![g.label.clone(), g.n.to_string(), num(g.mean, 3), num(g.sd, 3)],
                        vec![g.label.clone(), g.n.to_string(), raw(g.mean), raw(g.sd)],
                    );
                }
            }),
    );
    out
}

pub fn render_markdown(r: &StatReport) -> String {
    let mut out = String::from("# Recipe vs. Vanilla evaluation report\n\n");
    out.push_str(&format!(
        "{} result rows, {} failed.\n\n",
        r.rows_total, r.rows_failed
    ));
    for t in tables(r) {
        out.push_str(&t.markdown());
        out.push('\n');
    }
    out.push_str("### Notes\n\n");
    for (i, n) in r.footnotes.iter().enumerate() {
        out.push_str(&format!("{}. {n}\n", i + 1));
    }
    out
}

/// Writes `report.md`, `report.json` and one CSV per table.
pub fn write_report(r: &StatReport, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut files = Vec::new();
    let mut put = |name: String, body: String| -> Result<(), HarnessError> {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(io_err(&path))?;
        files.push(path);
        Ok(())
    };
    put("report.md".into(), render_markdown(r))?;
    put("report.json".into(), serde_json::to_string_pretty(r).expect("report serializes") + "\n")?;
    for t in tables(r) {
        put(format!("{}.csv", t.slug), t.to_csv())?;
    }
    Ok(files)
}
