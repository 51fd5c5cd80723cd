//! Grid checks shared by the crate tests and the acceptance target.

use std::collections::HashSet;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use kidscaffold::grid::{
    build_grid, build_grid_for_modes, load_gold_corpus, parse_gold_corpus, Configuration, GridError, GoldCorpus,
    Subject, DEFAULT_TEMPERATURES,
};
use kidscaffold::recipe::Mode;

pub type Check = Result<(), String>;
pub type Named = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl Into<String>) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

pub fn corpus_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/gold_corpus.csv")
}

fn corpus() -> Result<GoldCorpus, String> {
    load_gold_corpus(&corpus_path()).map_err(|e| e.to_string())
}

/// Exact per-mode counts for both configurations, built within 1 s.
pub fn grid_exactness() -> Check {
    let started = Instant::now();
    let corpus = corpus()?;
    let cases = build_grid(&corpus, &DEFAULT_TEMPERATURES, &Configuration::ALL).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    for config in Configuration::ALL {
        for (mode, want) in [(Mode::School, 540), (Mode::Discovery, 540), (Mode::Entertainment, 60)] {
            let got = cases.iter().filter(|c| c.configuration == config && c.mode == mode).count();
            ensure(got == want, format!("{config}/{mode}: {got} cases, want {want}"))?;
        }
    }
    ensure(cases.len() == 2280, format!("{} cases in total", cases.len()))?;
    ensure(elapsed < Duration::from_secs(1), format!("grid took {elapsed:?}"))
}

pub fn grid_shape() -> Check {
    let corpus = corpus()?;
    let school = build_grid_for_modes(&corpus, &DEFAULT_TEMPERATURES, &[Configuration::Recipe], &[Mode::School])
        .map_err(|e| e.to_string())?;
    ensure(school.len() == 540, format!("School-only grid has {} cases", school.len()))?;
    for temps in [&[0.2, 0.7][..], &[0.2, 0.7, 1.2, 1.5][..], &[][..]] {
        ensure(
            matches!(build_grid(&corpus, temps, &Configuration::ALL), Err(GridError::Schema(_))),
            format!("{} temperatures must be a schema error", temps.len()),
        )?;
    }
    let a = build_grid(&corpus, &DEFAULT_TEMPERATURES, &Configuration::ALL).unwrap();
    let b = build_grid(&corpus, &DEFAULT_TEMPERATURES, &Configuration::ALL).unwrap();
    ensure(a == b, "grid is not deterministic")?;
    let ids: HashSet<&str> = a.iter().map(|c| c.case_id.as_str()).collect();
    ensure(ids.len() == a.len(), "case ids are not unique")?;
    for c in &a {
        ensure(c.subject.is_some() == c.mode.scaffolds(), format!("{}: subject presence", c.case_id))?;
        ensure(c.knowledge.is_some() == c.mode.scaffolds(), format!("{}: knowledge presence", c.case_id))?;
        match &c.child_replies {
            Some(r) => {
                ensure(c.mode == Mode::Entertainment, format!("{}: replies outside puzzles", c.case_id))?;
                let right = r.iter().filter(|x| x.correct).count();
                ensure(r.len() == 5 && right == 2, format!("{}: {right}/{} correct replies", c.case_id, r.len()))?;
            }
            None => ensure(c.mode != Mode::Entertainment, format!("{}: puzzle without replies", c.case_id))?,
        }
    }
    Ok(())
}

pub fn exemplar_rows() -> Check {
    let corpus = corpus()?;
    let row = corpus
        .get(&(Mode::School, 1, Some(Subject::Math), 1))
        .ok_or("School/1/math/1 missing")?;
    ensure(row.prompt_text == "Solve for x: 2x + 3 = 7", "School exemplar prompt")?;
    ensure(row.gold_text.starts_with("First, let's isolate the term with x."), "School exemplar gold")?;
    ensure(
        corpus
            .rows_for(Mode::Discovery)
            .any(|r| r.grade.value() == 5 && r.prompt_text == "What is celebrated during June Festival in Brazil?"),
        "Discovery exemplar missing",
    )?;
    let puzzle = corpus.rows_for(Mode::Entertainment).any(|r| {
        r.grade.value() == 12 && r.prompt_text.contains("two ropes") && r.gold_text.contains("light one rope from both ends")
    });
    ensure(puzzle, "Entertainment exemplar missing")
}

pub fn missing_cell_is_named() -> Check {
    let text = std::fs::read_to_string(corpus_path()).map_err(|e| e.to_string())?;
    let dropped: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with("school,9,science,3,"))
        .collect();
    ensure(dropped.len() + 1 == text.lines().count(), "expected to drop one row")?;
    match parse_gold_corpus(dropped.join("\n").as_bytes()) {
        Err(GridError::Schema(msg)) => ensure(msg.contains("school/grade 9/science/slot 3"), format!("message {msg:?}")),
        other => Err(format!("59 School prompts loaded as {other:?}")),
    }
}

pub fn malformed_rows() -> Check {
    let text = std::fs::read_to_string(corpus_path()).map_err(|e| e.to_string())?;
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines[3] = lines[3].replacen("school,1,", "school,seven,", 1);
    match parse_gold_corpus(lines.join("\n").as_bytes()) {
        Err(GridError::Parse { line, .. }) => ensure(line == 4, format!("reported line {line}, want 4")),
        other => Err(format!("bad grade loaded as {other:?}")),
    }?;
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let dup = lines[1].clone();
    lines.push(dup);
    ensure(
        matches!(parse_gold_corpus(lines.join("\n").as_bytes()), Err(GridError::Schema(m)) if m.contains("duplicate")),
        "duplicate cell must be a schema error",
    )
}

pub fn all() -> Vec<Named> {
    vec![
        ("grid_exactness", grid_exactness),
        ("grid_shape", grid_shape),
        ("exemplar_rows", exemplar_rows),
        ("missing_cell_is_named", missing_cell_is_named),
        ("malformed_rows", malformed_rows),
    ]
}
