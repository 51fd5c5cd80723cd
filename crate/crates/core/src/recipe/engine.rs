use super::assets::assets;
use super::{EngineAction, GradeLevel, KnowledgeLevel, Mode, Phase, RecipeError, SessionState, Speaker};
use crate::normalize::words;

/// True when the utterance contains a fallback cue after case-folding and
/// punctuation stripping.
pub fn detect_fallback(utterance: &str) -> bool {
    assets().cues.fallback.matches(&words(utterance))
}

fn ordinal_digits(w: &str) -> &str {
    for suffix in ["st", "nd", "rd", "th"] {
        if let Some(d) = w.strip_suffix(suffix) {
            if !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()) {
                return d;
            }
        }
    }
    w
}

/// First integer token in 1..=12 (ordinals like "5th" included); failing
/// that, the first number word from the lexicon.
pub fn extract_grade(utterance: &str) -> Option<GradeLevel> {
    let ws = words(utterance);
    let numeric = ws.iter().find_map(|w| {
        let d = ordinal_digits(w);
        if d.is_empty() || d.len() > 2 || !d.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        GradeLevel::new(d.parse().ok()?).ok()
    });
    numeric.or_else(|| {
        let lex = &assets().lexicon.grade_words;
        ws.iter().find_map(|w| lex.get(w.as_str()).and_then(|&g| GradeLevel::new(g).ok()))
    })
}

fn detect_mode(ws: &[String]) -> Option<Mode> {
    let mut hits = assets().cues.modes.iter().filter(|(_, set)| set.matches(ws));
    match (hits.next(), hits.next()) {
        (Some((m, _)), None) => Some(*m),
        _ => None,
    }
}

fn detect_knowledge(ws: &[String]) -> Option<KnowledgeLevel> {
    assets()
        .cues
        .knowledge
        .iter()
        .find(|(_, set)| set.matches(ws))
        .map(|(k, _)| *k)
}

fn closed_error() -> RecipeError {
    RecipeError::InvalidState("session is closed".into())
}

/// Assessment outcome. Does not touch the transcript.
pub fn quiz_cycle(state: &SessionState, answer_correct: bool) -> Result<(EngineAction, SessionState), RecipeError> {
    if state.phase != Phase::Assessment {
        return Err(RecipeError::InvalidState(format!("quiz answer in {:?}", state.phase)));
    }
    let mut next = state.clone();
    let action = if answer_correct {
        next.phase = Phase::AwaitTaskOrTopic;
        EngineAction::Reinforce
    } else {
        next.phase = Phase::Scaffolding;
        EngineAction::ReScaffold
    };
    Ok((action, next))
}

/// Puzzle outcome: a wrong answer earns a hint, a right one earns praise and
/// a new game offer. Does not touch the transcript.
pub fn game_reply(state: &SessionState, answer_correct: bool) -> Result<(EngineAction, SessionState), RecipeError> {
    if state.phase != Phase::GamePlay {
        return Err(RecipeError::InvalidState(format!("puzzle answer in {:?}", state.phase)));
    }
    let mut next = state.clone();
    let action = if answer_correct {
        next.phase = Phase::GameOffer;
        EngineAction::Reinforce
    } else {
        EngineAction::GiveHint
    };
    Ok((action, next))
}

/// One child turn. `judgement` is the correctness of a quiz or puzzle answer
/// and is only consulted in Assessment and GamePlay, where a plain answer
/// without it is an error. The child turn is appended, tagged with the
/// action it triggered.
pub fn step(
    state: &SessionState,
    utterance: &str,
    judgement: Option<bool>,
    now_ms: u64,
) -> Result<(EngineAction, SessionState), RecipeError> {
    if state.phase == Phase::Closed {
        return Err(closed_error());
    }
    let cues = &assets().cues;
    let ws = words(utterance);
    let mut next = state.clone();

    let action = if cues.fallback.matches(&ws) {
        next.fallback_count += 1;
        if next.phase == Phase::Assessment {
            next.phase = Phase::Scaffolding;
        }
        EngineAction::ReduceComplexity
    } else if cues.close.matches(&ws) {
        next.phase = Phase::Closed;
        EngineAction::Close
    } else {
        match state.phase {
            Phase::AwaitGrade => match extract_grade(utterance) {
                Some(g) => {
                    next.grade = Some(g);
                    next.phase = Phase::AwaitMode;
                    EngineAction::AskMode
                }
                None => EngineAction::AskGrade,
            },
            Phase::AwaitMode => match detect_mode(&ws) {
                Some(Mode::Entertainment) => {
                    next.mode = Some(Mode::Entertainment);
                    next.phase = Phase::GameOffer;
                    EngineAction::OfferGame
                }
                Some(m) => {
                    next.mode = Some(m);
                    next.phase = Phase::AwaitKnowledgeLevel;
                    EngineAction::AskKnowledgeLevel
                }
                None => EngineAction::AskMode,
            },
            Phase::AwaitKnowledgeLevel => match detect_knowledge(&ws) {
                Some(k) => {
                    next.knowledge = Some(k);
                    next.phase = Phase::AwaitTaskOrTopic;
                    EngineAction::AskTaskOrTopic
                }
                None => EngineAction::AskKnowledgeLevel,
            },
            Phase::AwaitTaskOrTopic if ws.is_empty() => EngineAction::AskTaskOrTopic,
            Phase::AwaitTaskOrTopic => {
                next.task = Some(utterance.trim().to_string());
                next.phase = Phase::Scaffolding;
                EngineAction::ScaffoldTurn
            }
            Phase::Scaffolding if cues.completion.matches(&ws) => {
                next.phase = Phase::Assessment;
                EngineAction::QuizChild
            }
            Phase::Scaffolding => EngineAction::ScaffoldTurn,
            Phase::GameOffer if cues.negative.matches(&ws) => {
                next.phase = Phase::Closed;
                EngineAction::Close
            }
            Phase::GameOffer if cues.affirmative.matches(&ws) => {
                next.phase = Phase::GamePlay;
                EngineAction::PresentGame
            }
            Phase::GameOffer => EngineAction::OfferGame,
            Phase::Assessment | Phase::GamePlay => {
                let correct = judgement.ok_or(RecipeError::JudgementRequired(state.phase))?;
                let (action, judged) = if state.phase == Phase::Assessment {
                    quiz_cycle(state, correct)?
                } else {
                    game_reply(state, correct)?
                };
                next = judged;
                action
            }
            Phase::Closed => return Err(closed_error()),
        }
    };
    next.push_turn(Speaker::Child, utterance.to_string(), action, now_ms);
    Ok((action, next))
}

/// Advances the session by one child utterance, stamped with the session's
/// latest timestamp.
pub fn next_action(state: &SessionState, utterance: &str) -> Result<(EngineAction, SessionState), RecipeError> {
    step(state, utterance, None, state.last_timestamp())
}

/// As [`next_action`], stamped at `now_ms` (clamped so the transcript
/// stays non-decreasing).
pub fn next_action_at(
    state: &SessionState,
    utterance: &str,
    now_ms: u64,
) -> Result<(EngineAction, SessionState), RecipeError> {
    step(state, utterance, None, now_ms)
}
