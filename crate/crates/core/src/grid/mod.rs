//! The stimulus grid: gold corpus loading, test-case generation and the
//! result-row schema.

mod corpus;
mod result;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use corpus::{cell_name, load_gold_corpus, parse_gold_corpus, CellKey, ChildReply, CorpusRow, GoldCorpus};
pub use result::{aggregate_exchanges, CaseResult, Exchange};

use crate::recipe::{GradeLevel, KnowledgeLevel, Mode};

/// Grades sampled by the grid.
pub const GRID_GRADES: [u8; 4] = [1, 5, 9, 12];
/// Prompts per (mode, subject, grade) in School and Discovery.
pub const SLOTS: u8 = 5;
/// Puzzles per grade in Entertainment.
pub const ENTERTAINMENT_SLOTS: u8 = 5;
pub const DEFAULT_TEMPERATURES: [f64; 3] = [0.2, 0.7, 1.2];

#[derive(Debug, Error)]
pub enum GridError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("schema error: {0}")]
    Schema(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subject {
    Math,
    Science,
    BrazilianSocialSciences,
}

impl Subject {
    pub const ALL: [Subject; 3] = [Subject::Math, Subject::Science, Subject::BrazilianSocialSciences];

    pub fn as_str(self) -> &'static str {
        match self {
            Subject::Math => "math",
            Subject::Science => "science",
            Subject::BrazilianSocialSciences => "brazilian_social_sciences",
        }
    }
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Subject {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Subject::ALL
            .into_iter()
            .find(|x| x.as_str() == s.trim())
            .ok_or_else(|| format!("unknown subject {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Configuration {
    Recipe,
    Vanilla,
}

impl Configuration {
    pub const ALL: [Configuration; 2] = [Configuration::Recipe, Configuration::Vanilla];

    pub fn as_str(self) -> &'static str {
        match self {
            Configuration::Recipe => "recipe",
            Configuration::Vanilla => "vanilla",
        }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Configuration {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Configuration::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown configuration {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub case_id: String,
    pub configuration: Configuration,
    pub mode: Mode,
    pub grade: GradeLevel,
    pub subject: Option<Subject>,
    pub slot: u8,
    pub prompt_text: String,
    pub gold_text: String,
    pub reinforce_text: Option<String>,
    pub knowledge: Option<KnowledgeLevel>,
    pub temperature: f64,
    /// Index of `temperature` in the configured list.
    pub temperature_index: usize,
    pub child_replies: Option<Vec<ChildReply>>,
}

fn case_id(
    config: Configuration,
    row: &CorpusRow,
    knowledge: Option<KnowledgeLevel>,
    t_idx: usize,
) -> String {
    let mut id = format!("{config}-{}-g{:02}", row.mode, row.grade.value());
    if let Some(s) = row.subject {
        id.push_str(&format!("-{s}"));
    }
    id.push_str(&format!("-s{}", row.slot));
    if let Some(k) = knowledge {
        id.push_str(&format!("-{k}"));
    }
    id.push_str(&format!("-t{t_idx}"));
    id
}

/// Expected case count per configuration for each mode.
pub fn expected_cases(mode: Mode) -> usize {
    match mode {
        Mode::School | Mode::Discovery => 540,
        Mode::Entertainment => 60,
    }
}

/// Expands the corpus into test cases: School and Discovery prompts cross
/// knowledge levels and temperatures, puzzles cross temperatures only.
pub fn build_grid(
    corpus: &GoldCorpus,
    temperatures: &[f64],
    configurations: &[Configuration],
) -> Result<Vec<TestCase>, GridError> {
    build_grid_for_modes(corpus, temperatures, configurations, &Mode::ALL)
}

/// As [`build_grid`], restricted to `modes`.
pub fn build_grid_for_modes(
    corpus: &GoldCorpus,
    temperatures: &[f64],
    configurations: &[Configuration],
    modes: &[Mode],
) -> Result<Vec<TestCase>, GridError> {
    if temperatures.len() != 3 {
        return Err(GridError::Schema(format!(
            "expected 3 temperatures, got {}",
            temperatures.len()
        )));
    }
    if let Some(t) = temperatures.iter().find(|t| !(0.0..=2.0).contains(*t)) {
        return Err(GridError::Schema(format!("temperature {t} outside [0, 2]")));
    }
    if configurations.is_empty() {
        return Err(GridError::Schema("no configurations requested".into()));
    }
    for (i, c) in configurations.iter().enumerate() {
        if configurations[..i].contains(c) {
            return Err(GridError::Schema(format!("configuration {c} listed twice")));
        }
    }
    if let Some(missing) = corpus.missing_cells().first() {
        return Err(GridError::Schema(format!("missing cell {}", cell_name(missing))));
    }

    let mut cases = Vec::new();
    for &config in configurations {
        for mode in Mode::ALL.into_iter().filter(|m| modes.contains(m)) {
            let before = cases.len();
            for row in corpus.rows_for(mode) {
                let levels: Vec<Option<KnowledgeLevel>> = if mode.scaffolds() {
                    KnowledgeLevel::ALL.into_iter().map(Some).collect()
                } else {
                    vec![None]
                };
                for knowledge in levels {
                    for (t_idx, &temperature) in temperatures.iter().enumerate() {
                        cases.push(TestCase {
                            case_id: case_id(config, row, knowledge, t_idx),
                            configuration: config,
                            mode,
                            grade: row.grade,
                            subject: row.subject,
                            slot: row.slot,
                            prompt_text: row.prompt_text.clone(),
                            gold_text: row.gold_text.clone(),
                            reinforce_text: row.reinforce_text.clone(),
                            knowledge,
                            temperature,
                            temperature_index: t_idx,
                            child_replies: row.child_replies.clone(),
                        });
                    }
                }
            }
            let built = cases.len() - before;
            if built != expected_cases(mode) {
                return Err(GridError::Schema(format!(
                    "{config}/{mode}: built {built} cases, expected {}",
                    expected_cases(mode)
                )));
            }
        }
    }
    Ok(cases)
}

/// Case counts keyed by (configuration, mode).
pub fn summarize(cases: &[TestCase]) -> BTreeMap<(Configuration, Mode), usize> {
    let mut out = BTreeMap::new();
    for c in cases {
        *out.entry((c.configuration, c.mode)).or_insert(0) += 1;
    }
    out
}
