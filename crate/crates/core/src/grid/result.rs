use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Configuration, Subject};
use crate::recipe::{GradeLevel, KnowledgeLevel, Mode};
use crate::textmetrics::MetricVector;

/// One measured puzzle exchange: the child's reply and the agent's answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub child_reply: String,
    pub correct: bool,
    pub reply_text: String,
    pub metrics: MetricVector,
}

/// One result row per executed test case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case_id: String,
    pub configuration: Configuration,
    pub mode: Mode,
    pub grade: GradeLevel,
    pub subject: Option<Subject>,
    pub knowledge: Option<KnowledgeLevel>,
    pub temperature: f64,
    pub reply_text: String,
    /// `None` when the case failed.
    pub metrics: Option<MetricVector>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exchanges: Vec<Exchange>,
    pub run_timestamp: String,
    pub asset_digests: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CaseResult {
    pub fn succeeded(&self) -> bool {
        self.error.is_none() && self.metrics.is_some()
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, s) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    (n > 0).then(|| s / n as f64)
}

/// Averages per-exchange metrics into one case-level vector. Counts are
/// rounded means, clamped so the metric invariants keep holding.
pub fn aggregate_exchanges(parts: &[MetricVector]) -> Option<MetricVector> {
    if parts.is_empty() {
        return None;
    }
    let round = |f: fn(&MetricVector) -> u32| {
        mean(parts.iter().map(|m| f(m) as f64)).unwrap_or(0.0).round() as u32
    };
    let q_count = round(|m| m.q_count);
    let q_diversity = round(|m| m.q_diversity).min(q_count);
    let q_depth = if q_count == 0 { 0 } else { round(|m| m.q_depth).clamp(1, 3) };
    Some(MetricVector {
        similarity: mean(parts.iter().map(|m| m.similarity)).unwrap_or(0.0),
        fk_reading_ease: mean(parts.iter().filter_map(|m| m.fk_reading_ease)),
        fk_grade_level: mean(parts.iter().filter_map(|m| m.fk_grade_level)),
        q_count,
        q_depth,
        q_diversity,
        q_depth_mean: mean(parts.iter().map(|m| m.q_depth_mean)).unwrap_or(0.0),
        latency_seconds: mean(parts.iter().map(|m| m.latency_seconds)).unwrap_or(0.0),
    })
}
