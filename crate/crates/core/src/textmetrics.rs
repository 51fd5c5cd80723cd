//! Reply measurements: sentence segmentation, Flesch readability, question
//! scaffolding counts and bag-of-words cosine similarity to a gold answer.
//!
//! Everything here is a pure function of its input text and the embedded
//! asset file.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normalize;

const ASSET_TEXT: &str = include_str!("../assets/textmetrics.toml");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("no letters in {0:?}; cannot count syllables")]
    NoLetters(String),
    #[error("undefined metric: text contains no words")]
    UndefinedMetric,
    #[error("bad text-metrics asset: {0}")]
    Asset(String),
}

#[derive(Debug, Deserialize)]
struct RawAssets {
    version: String,
    abbreviations: Vec<String>,
    depth: Vec<RawCategory>,
    other: RawOther,
}

#[derive(Debug, Deserialize)]
struct RawCategory {
    category: String,
    weight: u32,
    patterns: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct RawOther {
    category: String,
    weight: u32,
}

/// Parsed abbreviation list and question-depth taxonomy.
#[derive(Debug, Clone)]
pub struct TextMetricsAssets {
    pub version: String,
    pub digest: String,
    abbreviations: HashSet<String>,
    /// (category, weight, pattern words)
    patterns: Vec<(String, u32, Vec<String>)>,
    other: (String, u32),
}

impl TextMetricsAssets {
    pub fn from_toml(text: &str) -> Result<Self, MetricError> {
        let raw: RawAssets = toml::from_str(text).map_err(|e| MetricError::Asset(e.to_string()))?;
        let mut patterns = Vec::new();
        for cat in &raw.depth {
            if cat.weight == 0 {
                return Err(MetricError::Asset(format!(
                    "category {} has weight 0; weights must be positive",
                    cat.category
                )));
            }
            for p in &cat.patterns {
                let words = normalize::words(p);
                if words.is_empty() {
                    return Err(MetricError::Asset(format!("empty pattern in {}", cat.category)));
                }
                patterns.push((cat.category.clone(), cat.weight, words));
            }
        }
        if raw.other.weight == 0 {
            return Err(MetricError::Asset("fallback category weight must be positive".into()));
        }
        Ok(Self {
            version: raw.version,
            digest: crate::sha256_hex(text),
            abbreviations: raw.abbreviations.iter().map(|a| a.to_lowercase()).collect(),
            patterns,
            other: (raw.other.category, raw.other.weight),
        })
    }

    /// Number of distinct categories, including the fallback one.
    pub fn category_count(&self) -> usize {
        let mut cats: BTreeSet<&str> = self.patterns.iter().map(|p| p.0.as_str()).collect();
        cats.insert(&self.other.0);
        cats.len()
    }

    /// Category and weight of a question by its first interrogative form.
    pub fn classify_question(&self, question: &str) -> (&str, u32) {
        let words = normalize::words(question);
        for i in 0..words.len() {
            let best = self
                .patterns
                .iter()
                .filter(|(_, _, p)| words[i..].starts_with(p))
                .max_by_key(|(_, _, p)| p.len());
            if let Some((cat, w, _)) = best {
                return (cat, *w);
            }
        }
        (&self.other.0, self.other.1)
    }
}

/// The shipped assets.
pub fn assets() -> &'static TextMetricsAssets {
    static ASSETS: OnceLock<TextMetricsAssets> = OnceLock::new();
    ASSETS.get_or_init(|| TextMetricsAssets::from_toml(ASSET_TEXT).expect("shipped textmetrics asset parses"))
}

/// Byte range of one sentence in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceSpan {
    pub start: usize,
    pub end: usize,
    /// The terminating punctuation run contains `?`.
    pub question: bool,
}

impl SentenceSpan {
    pub fn text<'a>(&self, source: &'a str) -> &'a str {
        &source[self.start..self.end]
    }
}

const CLOSERS: &[char] = &['"', '\'', ')', ']', '}', '\u{201d}', '\u{2019}', '*', '_'];
const OPENERS: &[char] = &['"', '\'', '(', '[', '{', '\u{201c}', '\u{2018}', '*', '_'];

fn tokens(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split_whitespace()
        .map(move |tok| (tok.as_ptr() as usize - text.as_ptr() as usize, tok))
}

pub fn segment_sentences(text: &str) -> Vec<SentenceSpan> {
    segment_sentences_with(assets(), text)
}

pub fn segment_sentences_with(assets: &TextMetricsAssets, text: &str) -> Vec<SentenceSpan> {
    let mut spans = Vec::new();
    let mut start = None;
    let mut last_end = 0;
    for (offset, tok) in tokens(text) {
        let begin = *start.get_or_insert(offset);
        last_end = offset + tok.len();
        let core = tok.trim_end_matches(CLOSERS);
        let run: String = core
            .chars()
            .rev()
            .take_while(|c| matches!(c, '.' | '!' | '?'))
            .collect();
        if run.is_empty() {
            continue;
        }
        let bare = core.trim_start_matches(OPENERS).to_lowercase();
        if run == "." && assets.abbreviations.contains(&bare) {
            continue;
        }
        spans.push(SentenceSpan {
            start: begin,
            end: last_end,
            question: run.contains('?'),
        });
        start = None;
    }
    if let Some(begin) = start {
        spans.push(SentenceSpan {
            start: begin,
            end: last_end,
            question: false,
        });
    }
    spans
}

fn is_word(token: &str) -> bool {
    token.chars().any(char::is_alphabetic)
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Vowel-group syllable estimate with silent-e handling; never below 1.
pub fn count_syllables(word: &str) -> Result<u32, MetricError> {
    let letters: Vec<char> = word
        .chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    if letters.is_empty() {
        return Err(MetricError::NoLetters(word.to_string()));
    }
    let mut groups = 0u32;
    let mut prev_vowel = false;
    for &c in &letters {
        let v = is_vowel(c);
        if v && !prev_vowel {
            groups += 1;
        }
        prev_vowel = v;
    }
    let n = letters.len();
    if letters[n - 1] == 'e' {
        let consonant_le = n >= 3 && letters[n - 2] == 'l' && !is_vowel(letters[n - 3]);
        if !consonant_le {
            groups = groups.saturating_sub(1);
        }
    }
    Ok(groups.max(1))
}

/// Word, sentence and syllable totals feeding the Flesch formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadabilityCounts {
    pub words: u32,
    pub sentences: u32,
    pub syllables: u32,
}

pub fn readability_counts(text: &str) -> ReadabilityCounts {
    let mut counts = ReadabilityCounts {
        words: 0,
        sentences: 0,
        syllables: 0,
    };
    for span in segment_sentences(text) {
        let mut has_word = false;
        for tok in span.text(text).split_whitespace().filter(|t| is_word(t)) {
            has_word = true;
            counts.words += 1;
            counts.syllables += count_syllables(tok).unwrap_or(1);
        }
        if has_word {
            counts.sentences += 1;
        }
    }
    counts
}

fn ratios(text: &str) -> Result<(f64, f64), MetricError> {
    let c = readability_counts(text);
    if c.words == 0 {
        return Err(MetricError::UndefinedMetric);
    }
    let w = c.words as f64;
    Ok((w / c.sentences as f64, c.syllables as f64 / w))
}

/// 206.835 − 1.015·(words/sentences) − 84.6·(syllables/words), unclamped.
pub fn flesch_reading_ease(text: &str) -> Result<f64, MetricError> {
    let (wps, spw) = ratios(text)?;
    Ok(206.835 - 1.015 * wps - 84.6 * spw)
}

/// 0.39·(words/sentences) + 11.8·(syllables/words) − 15.59.
pub fn fk_grade_level(text: &str) -> Result<f64, MetricError> {
    let (wps, spw) = ratios(text)?;
    Ok(0.39 * wps + 11.8 * spw - 15.59)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionMetrics {
    pub q_count: u32,
    /// Highest depth weight among the questions; 0 without questions.
    pub q_depth: u32,
    /// Distinct interrogative categories present.
    pub q_diversity: u32,
    /// Mean depth weight; 0 without questions.
    pub q_depth_mean: f64,
}

pub fn question_metrics(text: &str) -> QuestionMetrics {
    question_metrics_with(assets(), text)
}

pub fn question_metrics_with(assets: &TextMetricsAssets, text: &str) -> QuestionMetrics {
    let mut count = 0u32;
    let mut depth = 0u32;
    let mut total = 0u32;
    let mut categories = BTreeSet::new();
    for span in segment_sentences_with(assets, text).iter().filter(|s| s.question) {
        let (cat, w) = assets.classify_question(span.text(text));
        count += 1;
        depth = depth.max(w);
        total += w;
        categories.insert(cat.to_string());
    }
    QuestionMetrics {
        q_count: count,
        q_depth: depth,
        q_diversity: categories.len() as u32,
        q_depth_mean: if count == 0 { 0.0 } else { total as f64 / count as f64 },
    }
}

/// L2-normalized unigram term frequencies. The empty map is the zero vector.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TermVector {
    pub weights: BTreeMap<String, f64>,
}

impl TermVector {
    pub fn is_zero(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.weights.values().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// Dot product summed over shared terms in sorted order, so that
    /// `a.dot(b)` and `b.dot(a)` are bit-identical.
    pub fn dot(&self, other: &TermVector) -> f64 {
        let (small, large) = if self.weights.len() <= other.weights.len() {
            (self, other)
        } else {
            (other, self)
        };
        let shared: BTreeMap<&String, f64> = small
            .weights
            .iter()
            .filter_map(|(t, w)| large.weights.get(t).map(|v| (t, w * v)))
            .collect();
        shared.values().sum()
    }
}

pub fn vectorize(text: &str) -> TermVector {
    let mut counts: BTreeMap<String, f64> = BTreeMap::new();
    for w in normalize::words(text) {
        *counts.entry(w).or_default() += 1.0;
    }
    let norm = counts.values().map(|c| c * c).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in counts.values_mut() {
            *v /= norm;
        }
    }
    TermVector { weights: counts }
}

/// Cosine similarity of the two term vectors, in [0, 1]; 0 when either
/// side has no terms.
pub fn similarity(reply: &str, gold: &str) -> f64 {
    let (a, b) = (vectorize(reply), vectorize(gold));
    if a.is_zero() || b.is_zero() {
        return 0.0;
    }
    a.dot(&b).clamp(0.0, 1.0)
}

/// Per-reply measurement bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub similarity: f64,
    /// `None` when the reply has no words.
    pub fk_reading_ease: Option<f64>,
    pub fk_grade_level: Option<f64>,
    pub q_count: u32,
    pub q_depth: u32,
    pub q_diversity: u32,
    pub q_depth_mean: f64,
    pub latency_seconds: f64,
}

pub fn measure(reply: &str, gold: &str, latency_seconds: f64) -> MetricVector {
    let q = question_metrics(reply);
    MetricVector {
        similarity: similarity(reply, gold),
        fk_reading_ease: flesch_reading_ease(reply).ok(),
        fk_grade_level: fk_grade_level(reply).ok(),
        q_count: q.q_count,
        q_depth: q.q_depth,
        q_diversity: q.q_diversity,
        q_depth_mean: q.q_depth_mean,
        latency_seconds,
    }
}
