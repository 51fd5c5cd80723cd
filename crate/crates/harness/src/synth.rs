//! Hand-authored scripted fixtures for the whole grid. Recipe replies model
//! the gold answer and ask scaffolding questions; Vanilla replies answer
//! directly. Replies are drawn from an RNG seeded by the request digest, so
//! nothing depends on the sampling temperature beyond that seed.

use std::collections::HashSet;
use std::path::Path;

use kidscaffold::grid::{build_grid, load_gold_corpus, Configuration, TestCase};
use kidscaffold::provider::{ChatResponse, FixtureRecord, FixtureWriter};
use kidscaffold::recipe::Mode;
use kidscaffold::textmetrics::segment_sentences;
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};

use crate::config::RunConfig;
use crate::runner::plan_requests;
use crate::{io_err, HarnessError};

const OPENERS: &[&str] = &[
    "Good question, let's work on it together.",
    "Let's take this one step at a time.",
    "Nice, this is a fun one to think about.",
    "Okay, let's look at it closely.",
];

const FOLLOW_UPS: &[&str] = &[
    "Why do you think that step works?",
    "How would you check your answer?",
    "What if the numbers were different?",
    "What do you notice first?",
    "Who could you ask to compare ideas?",
    "How come the first step matters so much?",
    "Which part feels the hardest right now?",
];

const DIRECT: &[&str] = &[
    "Here is the answer.",
    "The solution is straightforward.",
    "This is how it works.",
    "Short answer below.",
];

const FILLER: &[&str] = &[
    "This follows from the usual rule.",
    "Many textbooks describe it the same way.",
    "That is the standard result.",
    "You can write that down as the final answer.",
];

fn rng_for(digest: &str) -> StdRng {
    let mut seed = [0u8; 32];
    for (i, b) in digest.as_bytes().iter().enumerate() {
        seed[i % 32] ^= b;
    }
    StdRng::from_seed(seed)
}

fn statements(text: &str) -> Vec<&str> {
    segment_sentences(text)
        .into_iter()
        .filter(|s| !s.question)
        .map(|s| s.text(text).trim())
        .filter(|s| !s.is_empty())
        .collect()
}

fn recipe_reply(rng: &mut StdRng, gold: &str) -> String {
    let mut parts = vec![OPENERS.choose(rng).unwrap().to_string(), gold.to_string()];
    let extra = rng.random_range(0..=2);
    for q in FOLLOW_UPS.choose_multiple(rng, extra) {
        parts.push(q.to_string());
    }
    parts.join(" ")
}

fn vanilla_reply(rng: &mut StdRng, gold: &str) -> String {
    let mut parts = vec![DIRECT.choose(rng).unwrap().to_string()];
    for s in statements(gold) {
        if rng.random_bool(0.5) {
            parts.push(s.to_string());
        }
    }
    parts.push(FILLER.choose(rng).unwrap().to_string());
    if rng.random_bool(0.05) {
        parts.push("Does that help?".into());
    }
    parts.join(" ")
}

fn puzzle_reply(rng: &mut StdRng, config: Configuration, gold: &str, correct: bool) -> String {
    match (config, correct) {
        (Configuration::Recipe, true) => format!("{gold} {}", FOLLOW_UPS.choose(rng).unwrap()),
        (Configuration::Recipe, false) => format!("{gold} What could you try next?"),
        (Configuration::Vanilla, true) => "Correct! Well done.".into(),
        (Configuration::Vanilla, false) => format!("Not quite. {}", FILLER.choose(rng).unwrap()),
    }
}

pub fn synth_reply(case: &TestCase, gold: &str, correct: Option<bool>, digest: &str) -> String {
    let mut rng = rng_for(digest);
    match (case.mode, correct) {
        (Mode::Entertainment, Some(c)) => puzzle_reply(&mut rng, case.configuration, gold, c),
        _ => match case.configuration {
            Configuration::Recipe => recipe_reply(&mut rng, gold),
            Configuration::Vanilla => vanilla_reply(&mut rng, gold),
        },
    }
}

/// Writes one fixture per distinct request of the configured grid and
/// returns the number written. Latency is 0.0, marking the fixtures as
/// hand-authored.
pub fn synth_fixtures(config: &RunConfig, path: &Path) -> Result<usize, HarnessError> {
    let corpus = load_gold_corpus(&config.corpus_path)?;
    let cases = build_grid(&corpus, &config.temperatures, &config.configurations)?;
    if path.exists() {
        std::fs::remove_file(path).map_err(io_err(path))?;
    }
    let writer = FixtureWriter::open(path)?;
    let mut seen = HashSet::new();
    for case in &cases {
        for p in plan_requests(case, &config.model_id, config.max_output_tokens)? {
            let digest = p.request.digest();
            if !seen.insert(digest.clone()) {
                continue;
            }
            let text = synth_reply(case, &p.gold, p.child_reply.as_ref().map(|c| c.1), &digest);
            let response = ChatResponse {
                text,
                latency_seconds: 0.0,
                provider_meta: Default::default(),
            };
            writer.append(&FixtureRecord::new(&p.request, &response))?;
        }
    }
    Ok(seen.len())
}
