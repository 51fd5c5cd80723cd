use super::{
    assets, EngineAction, GameTemplate, GradeLevel, KnowledgeLevel, Mode, Phase, RecipeError,
    RecipePrompt, SessionState, Speaker, ToneProfile,
};

pub fn tone_profile(mode: Mode, grade: GradeLevel) -> ToneProfile {
    let a = assets();
    ToneProfile {
        mode,
        grade,
        role_name: a.role(mode).to_string(),
        profile_text: a.tone_text(mode, grade).to_string(),
    }
}

pub fn game_template(grade: GradeLevel) -> GameTemplate {
    let raw = &assets().game_templates[grade.value() as usize - 1];
    GameTemplate {
        grade,
        template_text: raw.replace("{grade}", &grade.to_string()),
    }
}

fn quoted_list(items: &[String]) -> String {
    items
        .iter()
        .map(|c| format!("\"{c}\""))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Builds the recipe system prompt. Knowledge is required for School and
/// Discovery and rejected for Entertainment.
pub fn assemble_system_prompt(
    mode: Mode,
    grade: GradeLevel,
    knowledge: Option<KnowledgeLevel>,
) -> Result<RecipePrompt, RecipeError> {
    match (mode.scaffolds(), knowledge) {
        (true, None) => {
            return Err(RecipeError::InvalidArgument(format!("{mode} mode needs a knowledge level")))
        }
        (false, Some(k)) => {
            return Err(RecipeError::InvalidArgument(format!(
                "knowledge level {k} given for {mode} mode"
            )))
        }
        _ => {}
    }
    let a = assets();
    let sys = &a.system;
    let tone = tone_profile(mode, grade);
    let g = grade.value();
    let mut parts = vec![
        sys.grade_and_mode.clone(),
        sys.context.clone(),
        sys.scaffolding.clone(),
        sys.session
            .replace("{grade}", &grade.to_string())
            .replace("{mode}", mode.as_str())
            .replace("{role}", &tone.role_name),
        tone.profile_text.clone(),
        sys.readability
            .replace("{low}", &g.saturating_sub(1).max(1).to_string())
            .replace("{high}", &(g + 1).to_string()),
    ];
    match knowledge {
        Some(k) => parts.push(a.knowledge_text(k).replace("{label}", a.task_label(mode))),
        None => parts.push(format!("{}\n{}", sys.game_heading, game_template(grade).template_text)),
    }
    let examples: Vec<String> = a
        .examples_for(mode)
        .map(|e| format!("[{}]\n{}", e.pattern, e.text))
        .collect();
    parts.push(format!("{}\n\n{}", sys.examples_heading, examples.join("\n\n")));
    parts.push(sys.fallback.replace("{cues}", &quoted_list(&a.lexicon.fallback)));

    Ok(RecipePrompt {
        system_text: parts.join("\n\n"),
        mode,
        grade,
        knowledge,
        scaffold_examples: examples,
        fallback_lexicon: a.lexicon.fallback.clone(),
    })
}

/// How the agent produces its text for an action.
#[derive(Debug, Clone, PartialEq)]
pub enum AgentReply {
    /// Fixed text from the asset file; no provider call.
    Canned(String),
    /// Ask the provider, conditioned on this system text and the transcript.
    Provider { system_text: String },
}

fn state_prompt(state: &SessionState) -> Result<RecipePrompt, RecipeError> {
    let (Some(mode), Some(grade)) = (state.mode, state.effective_grade()) else {
        return Err(RecipeError::InvalidState(format!(
            "{:?} has no grade and mode for a prompt",
            state.phase
        )));
    };
    assemble_system_prompt(mode, grade, state.knowledge)
}

fn with_directive(state: &SessionState, directive: &str) -> Result<String, RecipeError> {
    let a = assets();
    let mut text = state_prompt(state)?.system_text;
    text.push_str("\n\n");
    text.push_str(&a.directives.heading);
    text.push('\n');
    if let (Some(mode), Some(task)) = (state.mode, &state.task) {
        text.push_str(&format!("The child's {}: {}\n", a.task_label(mode), task));
    }
    text.push_str(directive);
    Ok(text)
}

/// Decides how to voice `action` given the state the engine moved to.
pub fn plan_reply(state: &SessionState, action: EngineAction) -> Result<AgentReply, RecipeError> {
    use EngineAction::*;
    let a = assets();
    let c = &a.canned;
    let d = &a.directives;
    let school = state.mode == Some(Mode::School);
    let label = state.mode.map_or("topic", |m| a.task_label(m));
    let canned = |s: &String| Ok(AgentReply::Canned(s.clone()));
    let provider = |directive: String| {
        Ok(AgentReply::Provider {
            system_text: with_directive(state, &directive)?,
        })
    };
    match action {
        AskGrade => {
            let asked = state
                .transcript
                .iter()
                .any(|t| t.speaker == Speaker::Agent && t.action == AskGrade);
            canned(if asked { &c.reask_grade } else { &c.ask_grade })
        }
        AskMode => canned(&c.ask_mode),
        AskKnowledgeLevel => canned(&c.ask_knowledge_level),
        AskTaskOrTopic => canned(match (school, state.task.is_some()) {
            (true, false) => &c.ask_task,
            (true, true) => &c.ask_task_again,
            (false, false) => &c.ask_topic,
            (false, true) => &c.ask_topic_again,
        }),
        OfferGame => canned(&c.offer_game),
        Close => canned(&c.close),
        ReduceComplexity => match state.phase {
            Phase::AwaitGrade => canned(&c.reduce_grade),
            Phase::AwaitMode => canned(&c.reduce_mode),
            Phase::AwaitKnowledgeLevel => canned(&c.reduce_knowledge),
            Phase::AwaitTaskOrTopic if school => canned(&c.reduce_task),
            Phase::AwaitTaskOrTopic => canned(&c.reduce_topic),
            Phase::GameOffer => canned(&c.reduce_offer),
            _ => provider(d.reduce_complexity.clone()),
        },
        ScaffoldTurn => provider(d.scaffold_turn.replace("{label}", label)),
        QuizChild => provider(d.quiz_child.replace("{label}", label)),
        Reinforce if state.mode == Some(Mode::Entertainment) => provider(d.reinforce_game.clone()),
        Reinforce => provider(d.reinforce.replace("{label}", label)),
        ReScaffold => provider(d.re_scaffold.clone()),
        PresentGame => provider(d.present_game.clone()),
        GiveHint => provider(d.give_hint.clone()),
    }
}

/// System text for answering a quiz or puzzle reply before its correctness
/// is known: the provider judges, tags its reply and continues with the
/// matching branch.
pub fn judging_system_text(state: &SessionState) -> Result<String, RecipeError> {
    let a = assets();
    let d = &a.directives;
    let label = state.mode.map_or("topic", |m| a.task_label(m));
    let (right, wrong) = match state.phase {
        Phase::Assessment => (d.reinforce.replace("{label}", label), d.re_scaffold.clone()),
        Phase::GamePlay => (d.reinforce_game.clone(), d.give_hint.clone()),
        other => {
            return Err(RecipeError::InvalidState(format!("nothing to judge in {other:?}")));
        }
    };
    with_directive(
        state,
        &format!("{}\nIf [CORRECT]: {right}\nIf [INCORRECT]: {wrong}", d.judge),
    )
}

/// Splits a provider reply into its correctness tag and the text the child
/// should see. The first tag found wins; a reply with no tag yields `None`.
pub fn parse_judgement(text: &str) -> (Option<bool>, String) {
    let upper = text.to_ascii_uppercase();
    let found = [("[INCORRECT]", false), ("[CORRECT]", true)]
        .into_iter()
        .filter_map(|(tag, v)| upper.find(tag).map(|i| (i, tag.len(), v)))
        .min_by_key(|&(i, _, _)| i);
    match found {
        Some((i, len, v)) => {
            let mut rest = String::with_capacity(text.len());
            rest.push_str(&text[..i]);
            rest.push_str(&text[i + len..]);
            (Some(v), rest.trim().to_string())
        }
        _ => (None, text.trim().to_string()),
    }
}
