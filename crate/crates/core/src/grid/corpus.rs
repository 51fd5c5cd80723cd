use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GridError, Subject, ENTERTAINMENT_SLOTS, GRID_GRADES, SLOTS};
use crate::recipe::{GradeLevel, Mode};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChildReply {
    pub text: String,
    pub correct: bool,
}

/// One stimulus cell of the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRow {
    pub mode: Mode,
    pub grade: GradeLevel,
    pub subject: Option<Subject>,
    pub slot: u8,
    pub prompt_text: String,
    /// Scaffolded gold answer; for puzzles, the gold hint.
    pub gold_text: String,
    /// Gold reinforcement for correct puzzle answers.
    pub reinforce_text: Option<String>,
    pub child_replies: Option<Vec<ChildReply>>,
}

/// Cell coordinates: (mode, grade, subject, slot).
pub type CellKey = (Mode, u8, Option<Subject>, u8);

pub fn cell_name(key: &CellKey) -> String {
    let (mode, grade, subject, slot) = key;
    match subject {
        Some(s) => format!("{mode}/grade {grade}/{s}/slot {slot}"),
        None => format!("{mode}/grade {grade}/slot {slot}"),
    }
}

/// A complete, validated stimulus corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldCorpus {
    rows: BTreeMap<CellKey, CorpusRow>,
    pub digest: String,
}

impl GoldCorpus {
    /// Validates completeness: every grid cell present exactly once.
    pub fn new(rows: Vec<CorpusRow>, digest: String) -> Result<Self, GridError> {
        let mut map = BTreeMap::new();
        for row in rows {
            let key = (row.mode, row.grade.value(), row.subject, row.slot);
            if map.insert(key, row).is_some() {
                return Err(GridError::Schema(format!("duplicate cell {}", cell_name(&key))));
            }
        }
        let corpus = Self { rows: map, digest };
        if let Some(missing) = corpus.missing_cells().first() {
            return Err(GridError::Schema(format!("missing cell {}", cell_name(missing))));
        }
        Ok(corpus)
    }

    /// Every cell the grid needs, in canonical order.
    pub fn expected_cells() -> Vec<CellKey> {
        let mut cells = Vec::new();
        for mode in [Mode::School, Mode::Discovery] {
            for subject in Subject::ALL {
                for grade in GRID_GRADES {
                    for slot in 1..=SLOTS {
                        cells.push((mode, grade, Some(subject), slot));
                    }
                }
            }
        }
        for grade in GRID_GRADES {
            for slot in 1..=ENTERTAINMENT_SLOTS {
                cells.push((Mode::Entertainment, grade, None, slot));
            }
        }
        cells
    }

    pub fn missing_cells(&self) -> Vec<CellKey> {
        Self::expected_cells()
            .into_iter()
            .filter(|k| !self.rows.contains_key(k))
            .collect()
    }

    pub fn get(&self, key: &CellKey) -> Option<&CorpusRow> {
        self.rows.get(key)
    }

    pub fn rows(&self) -> impl Iterator<Item = &CorpusRow> {
        self.rows.values()
    }

    pub fn rows_for(&self, mode: Mode) -> impl Iterator<Item = &CorpusRow> {
        self.rows.values().filter(move |r| r.mode == mode)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Deserialize)]
struct RawRow {
    mode: String,
    grade: String,
    subject: String,
    slot: String,
    prompt_text: String,
    gold_text: String,
    #[serde(default)]
    reinforce_text: String,
    reply_1: String,
    reply_2: String,
    reply_3: String,
    reply_4: String,
    reply_5: String,
    label_1: String,
    label_2: String,
    label_3: String,
    label_4: String,
    label_5: String,
}

fn parse_label(s: &str) -> Result<bool, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "correct" | "true" | "1" => Ok(true),
        "incorrect" | "false" | "0" => Ok(false),
        other => Err(format!("bad label {other:?}; expected correct or incorrect")),
    }
}

fn convert(raw: RawRow) -> Result<CorpusRow, String> {
    let mode: Mode = raw.mode.parse().map_err(|e| format!("{e}"))?;
    let grade_n: u8 = raw.grade.trim().parse().map_err(|_| format!("bad grade {:?}", raw.grade))?;
    if !GRID_GRADES.contains(&grade_n) {
        return Err(format!("grade {grade_n} is not one of {GRID_GRADES:?}"));
    }
    let grade = GradeLevel::new(grade_n).map_err(|e| e.to_string())?;
    let slot: u8 = raw.slot.trim().parse().map_err(|_| format!("bad slot {:?}", raw.slot))?;
    let subject_text = raw.subject.trim();
    let subject = if subject_text.is_empty() {
        None
    } else {
        Some(subject_text.parse::<Subject>()?)
    };
    if mode.scaffolds() != subject.is_some() {
        return Err(format!("{mode} rows {} a subject", if mode.scaffolds() { "need" } else { "must not have" }));
    }
    let max_slot = if mode.scaffolds() { SLOTS } else { ENTERTAINMENT_SLOTS };
    if !(1..=max_slot).contains(&slot) {
        return Err(format!("slot {slot} outside 1..={max_slot}"));
    }
    if raw.prompt_text.trim().is_empty() || raw.gold_text.trim().is_empty() {
        return Err("prompt_text and gold_text must be non-empty".into());
    }
    let replies = [raw.reply_1, raw.reply_2, raw.reply_3, raw.reply_4, raw.reply_5];
    let labels = [raw.label_1, raw.label_2, raw.label_3, raw.label_4, raw.label_5];
    let reinforce = raw.reinforce_text.trim().to_string();
    let (child_replies, reinforce_text) = if mode == Mode::Entertainment {
        let mut out = Vec::with_capacity(5);
        for (text, label) in replies.into_iter().zip(labels) {
            if text.trim().is_empty() {
                return Err("puzzle rows need 5 non-empty replies".into());
            }
            out.push(ChildReply {
                text,
                correct: parse_label(&label)?,
            });
        }
        let right = out.iter().filter(|r| r.correct).count();
        if right != 2 {
            return Err(format!("puzzle rows need exactly 2 correct replies, found {right}"));
        }
        if reinforce.is_empty() {
            return Err("puzzle rows need reinforce_text".into());
        }
        (Some(out), Some(reinforce))
    } else {
        if replies.iter().chain(labels.iter()).any(|s| !s.trim().is_empty()) || !reinforce.is_empty() {
            return Err(format!("{mode} rows carry no child replies or reinforcement"));
        }
        (None, None)
    };
    Ok(CorpusRow {
        mode,
        grade,
        subject,
        slot,
        prompt_text: raw.prompt_text,
        gold_text: raw.gold_text,
        reinforce_text,
        child_replies,
    })
}

/// Parses corpus CSV bytes. `digest` is computed over the bytes as given.
pub fn parse_gold_corpus(bytes: &[u8]) -> Result<GoldCorpus, GridError> {
    let csv_error = |e: csv::Error| GridError::Parse {
        line: e.position().map_or(0, |p| p.line()),
        message: e.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new().from_reader(bytes);
    let headers = reader.headers().map_err(csv_error)?.clone();
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        let raw: RawRow = rec
            .deserialize(Some(&headers))
            .map_err(|e| GridError::Parse { line, message: e.to_string() })?;
        rows.push(convert(raw).map_err(|message| GridError::Parse { line, message })?);
    }
    GoldCorpus::new(rows, crate::sha256_hex(bytes))
}

pub fn load_gold_corpus(path: &Path) -> Result<GoldCorpus, GridError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|source| GridError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    parse_gold_corpus(&bytes)
}
