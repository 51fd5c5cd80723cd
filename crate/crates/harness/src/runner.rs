//! Grid execution: one provider exchange per School/Discovery case, one per
//! child reply for puzzles, with resume and a serialized results sink.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use futures::stream::{self, StreamExt};
use kidscaffold::grid::{aggregate_exchanges, build_grid, load_gold_corpus, CaseResult, Configuration, Exchange, TestCase};
use kidscaffold::provider::{ChatBackend, ChatMessage, ChatRequest};
use kidscaffold::recipe::{assemble_system_prompt, Mode};
use kidscaffold::textmetrics::measure;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::{io_err, HarnessError};

/// One request of a case, with the text its reply is scored against.
#[derive(Debug, Clone)]
pub struct PlannedRequest {
    pub request: ChatRequest,
    pub gold: String,
    pub child_reply: Option<(String, bool)>,
}

/// Builds the provider requests for `case`. Recipe cases carry the
/// assembled system prompt; Vanilla cases send the bare conversation.
pub fn plan_requests(case: &TestCase, model_id: &str, max_output_tokens: u32) -> Result<Vec<PlannedRequest>, HarnessError> {
    let system_text = match case.configuration {
        Configuration::Recipe => Some(assemble_system_prompt(case.mode, case.grade, case.knowledge)?.system_text),
        Configuration::Vanilla => None,
    };
    let request = |messages: Vec<ChatMessage>, exchange: usize| {
        let mut r = ChatRequest {
            system_text: system_text.clone(),
            messages,
            temperature: case.temperature,
            model_id: model_id.to_string(),
            max_output_tokens,
            provider_meta: Default::default(),
        };
        r.provider_meta.insert("case_id".into(), case.case_id.clone().into());
        r.provider_meta.insert("exchange".into(), exchange.into());
        r
    };
    match (&case.child_replies, case.mode) {
        (Some(replies), Mode::Entertainment) => {
            let reinforce = case.reinforce_text.clone().unwrap_or_default();
            Ok(replies
                .iter()
                .enumerate()
                .map(|(i, reply)| PlannedRequest {
                    request: request(
                        vec![ChatMessage::assistant(&case.prompt_text), ChatMessage::user(&reply.text)],
                        i,
                    ),
                    gold: if reply.correct { reinforce.clone() } else { case.gold_text.clone() },
                    child_reply: Some((reply.text.clone(), reply.correct)),
                })
                .collect())
        }
        _ => Ok(vec![PlannedRequest {
            request: request(vec![ChatMessage::user(&case.prompt_text)], 0),
            gold: case.gold_text.clone(),
            child_reply: None,
        }]),
    }
}

#[derive(Serialize)]
struct LoggedRequest<'a> {
    case_id: &'a str,
    digest: String,
    #[serde(flatten)]
    request: &'a ChatRequest,
}

/// Append-only JSON-lines file shared by concurrent case tasks.
struct Sink {
    path: std::path::PathBuf,
    file: Mutex<File>,
}

impl Sink {
    fn open(path: &Path) -> Result<Self, HarnessError> {
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(io_err(path))?;
        Ok(Self {
            path: path.to_path_buf(),
            file: Mutex::new(file),
        })
    }

    fn write<T: Serialize>(&self, value: &T) -> Result<(), HarnessError> {
        let mut line = serde_json::to_vec(value).expect("row serializes");
        line.push(b'\n');
        let mut f = self.file.lock().unwrap_or_else(|p| p.into_inner());
        f.write_all(&line).and_then(|_| f.flush()).map_err(io_err(&self.path))
    }
}

struct CaseContext {
    backend: Arc<dyn ChatBackend>,
    requests: Sink,
    model_id: String,
    max_output_tokens: u32,
    run_timestamp: String,
    asset_digests: BTreeMap<String, String>,
    calls: AtomicUsize,
}

impl CaseContext {
    async fn execute(&self, case: &TestCase) -> Result<CaseResult, HarnessError> {
        let mut row = CaseResult {
            case_id: case.case_id.clone(),
            configuration: case.configuration,
            mode: case.mode,
            grade: case.grade,
            subject: case.subject,
            knowledge: case.knowledge,
            temperature: case.temperature,
            reply_text: String::new(),
            metrics: None,
            exchanges: Vec::new(),
            run_timestamp: self.run_timestamp.clone(),
            asset_digests: self.asset_digests.clone(),
            error: None,
        };
        let planned = plan_requests(case, &self.model_id, self.max_output_tokens)?;
        let mut measured = Vec::with_capacity(planned.len());
        for p in &planned {
            self.requests.write(&LoggedRequest {
                case_id: &case.case_id,
                digest: p.request.digest(),
                request: &p.request,
            })?;
            self.calls.fetch_add(1, Ordering::Relaxed);
            match self.backend.complete(&p.request).await {
                Ok(resp) => measured.push((p, resp)),
                Err(e) => {
                    tracing::warn!(case = %case.case_id, error = %e, "case failed");
                    row.error = Some(e.to_string());
                    return Ok(row);
                }
            }
        }
        let vectors: Vec<_> = measured
            .iter()
            .map(|(p, resp)| measure(&resp.text, &p.gold, resp.latency_seconds))
            .collect();
        if case.mode == Mode::Entertainment {
            row.exchanges = measured
                .iter()
                .zip(&vectors)
                .map(|((p, resp), m)| {
                    let (child_reply, correct) = p.child_reply.clone().unwrap_or_default();
                    Exchange {
                        child_reply,
                        correct,
                        reply_text: resp.text.clone(),
                        metrics: m.clone(),
                    }
                })
                .collect();
            row.reply_text = measured.iter().map(|(_, r)| r.text.as_str()).collect::<Vec<_>>().join("\n\n");
            row.metrics = aggregate_exchanges(&vectors);
        } else {
            row.reply_text = measured[0].1.text.clone();
            row.metrics = vectors.into_iter().next();
        }
        Ok(row)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_timestamp: String,
    pub total_cases: usize,
    pub executed: usize,
    pub skipped: usize,
    pub failed: usize,
    /// More than 10% of cases carry an error.
    pub degraded: bool,
    pub provider_calls: usize,
    /// SHA-256 over the sorted results with `run_timestamp` blanked.
    pub determinism_digest: String,
    pub counts: BTreeMap<String, usize>,
    pub asset_digests: BTreeMap<String, String>,
    pub model_id: String,
    pub seed_note: String,
}

/// Reads a results file. A torn final line (an interrupted write) is
/// dropped with a warning; malformed lines elsewhere are errors.
pub fn read_rows(path: &Path) -> Result<Vec<CaseResult>, HarnessError> {
    let file = File::open(path).map_err(io_err(path))?;
    let lines: Vec<String> = BufReader::new(file).lines().collect::<Result<_, _>>().map_err(io_err(path))?;
    let last = lines.iter().rposition(|l| !l.trim().is_empty());
    let mut rows = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<CaseResult>(line) {
            Ok(r) => rows.push(r),
            Err(e) if Some(i) == last => {
                tracing::warn!(path = %path.display(), line = i + 1, error = %e, "dropping torn final results line");
            }
            Err(e) => {
                return Err(HarnessError::Results {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(rows)
}

pub fn determinism_digest(rows: &[CaseResult]) -> String {
    let mut body = Vec::new();
    for r in rows {
        let mut r = r.clone();
        r.run_timestamp.clear();
        serde_json::to_writer(&mut body, &r).expect("row serializes");
        body.push(b'\n');
    }
    kidscaffold::sha256_hex(&body)
}

fn write_rows_atomically(path: &Path, rows: &[CaseResult]) -> Result<(), HarnessError> {
    let tmp = path.with_extension("jsonl.tmp");
    let mut body = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut body, r).expect("row serializes");
        body.push(b'\n');
    }
    std::fs::write(&tmp, body).map_err(io_err(&tmp))?;
    std::fs::rename(&tmp, path).map_err(io_err(path))
}

const CSV_HEADER: [&str; 18] = [
    "case_id",
    "configuration",
    "mode",
    "grade",
    "subject",
    "knowledge",
    "temperature",
    "similarity",
    "fk_reading_ease",
    "fk_grade_level",
    "q_count",
    "q_depth",
    "q_diversity",
    "q_depth_mean",
    "latency_seconds",
    "exchanges",
    "run_timestamp",
    "error",
];

/// Flat CSV export of `rows`, one line per case; metric cells are empty for
/// failed cases and undefined readability.
pub fn write_results_csv(path: &Path, rows: &[CaseResult]) -> Result<(), HarnessError> {
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in rows {
        let m = r.metrics.as_ref();
        w.write_record([
            r.case_id.clone(),
            r.configuration.to_string(),
            r.mode.to_string(),
            r.grade.value().to_string(),
            r.subject.map(|s| s.to_string()).unwrap_or_default(),
            r.knowledge.map(|k| k.to_string()).unwrap_or_default(),
            r.temperature.to_string(),
            opt(m.map(|m| m.similarity)),
            opt(m.and_then(|m| m.fk_reading_ease)),
            opt(m.and_then(|m| m.fk_grade_level)),
            opt(m.map(|m| m.q_count as f64)),
            opt(m.map(|m| m.q_depth as f64)),
            opt(m.map(|m| m.q_diversity as f64)),
            opt(m.map(|m| m.q_depth_mean)),
            opt(m.map(|m| m.latency_seconds)),
            r.exchanges.len().to_string(),
            r.run_timestamp.clone(),
            r.error.clone().unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    let body = w.into_inner().expect("in-memory flush");
    std::fs::write(path, body).map_err(io_err(path))
}

/// Runs every grid case not already in the results file and returns the
/// run summary, which is also written next to the results.
pub async fn run_experiment(config: &RunConfig, backend: Arc<dyn ChatBackend>) -> Result<RunSummary, HarnessError> {
    config.validate()?;
    std::fs::create_dir_all(&config.output_dir).map_err(io_err(&config.output_dir))?;
    let corpus = load_gold_corpus(&config.corpus_path)?;
    let cases = build_grid(&corpus, &config.temperatures, &config.configurations)?;

    let results_path = config.results_path();
    let existing = if results_path.exists() { read_rows(&results_path)? } else { Vec::new() };
    let done: HashMap<String, CaseResult> = existing.into_iter().map(|r| (r.case_id.clone(), r)).collect();
    let pending: Vec<&TestCase> = cases.iter().filter(|c| !done.contains_key(&c.case_id)).collect();
    tracing::info!(total = cases.len(), pending = pending.len(), "starting run");

    // Rewrite what survived so a torn line does not linger before new rows.
    let mut kept: Vec<CaseResult> = done.values().cloned().collect();
    kept.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    write_rows_atomically(&results_path, &kept)?;

    let asset_digests: BTreeMap<String, String> = [
        ("corpus", corpus.digest.clone()),
        ("recipe", kidscaffold::recipe::assets().digest.clone()),
        ("textmetrics", kidscaffold::textmetrics::assets().digest.clone()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    let ctx = CaseContext {
        backend,
        requests: Sink::open(&config.requests_path())?,
        model_id: config.model_id.clone(),
        max_output_tokens: config.max_output_tokens,
        run_timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        asset_digests: asset_digests.clone(),
        calls: AtomicUsize::new(0),
    };
    let results = Sink::open(&results_path)?;
    let mut new_rows = Vec::with_capacity(pending.len());
    let mut executions = stream::iter(pending.iter().copied())
        .map(|case| ctx.execute(case))
        .buffer_unordered(config.parallelism);
    while let Some(row) = executions.next().await {
        let row = row?;
        results.write(&row)?;
        new_rows.push(row);
    }
    drop(executions);

    let mut by_id: HashMap<String, CaseResult> = done;
    let executed = new_rows.len();
    for r in new_rows {
        by_id.insert(r.case_id.clone(), r);
    }
    let mut rows: Vec<CaseResult> = cases.iter().filter_map(|c| by_id.remove(&c.case_id)).collect();
    if !by_id.is_empty() {
        tracing::warn!(count = by_id.len(), "results file holds cases outside the configured grid; keeping them");
        let mut extra: Vec<CaseResult> = by_id.into_values().collect();
        extra.sort_by(|a, b| a.case_id.cmp(&b.case_id));
        rows.extend(extra);
    }
    write_rows_atomically(&results_path, &rows)?;
    write_results_csv(&config.results_csv_path(), &rows)?;

    let failed = rows.iter().filter(|r| !r.succeeded()).count();
    let mut counts = BTreeMap::new();
    for r in &rows {
        *counts.entry(format!("{}/{}", r.configuration, r.mode)).or_insert(0) += 1;
    }
    let summary = RunSummary {
        run_timestamp: ctx.run_timestamp.clone(),
        total_cases: rows.len(),
        executed,
        skipped: cases.len() - pending.len(),
        failed,
        degraded: failed * 10 > rows.len(),
        provider_calls: ctx.calls.load(Ordering::Relaxed),
        determinism_digest: determinism_digest(&rows),
        counts,
        asset_digests,
        model_id: config.model_id.clone(),
        seed_note: config.seed_note.clone(),
    };
    if summary.degraded {
        tracing::warn!(failed, total = rows.len(), "run degraded: more than 10% of cases failed");
    }
    let summary_path = config.summary_path();
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(&summary_path, text + "\n").map_err(io_err(&summary_path))?;
    Ok(summary)
}
