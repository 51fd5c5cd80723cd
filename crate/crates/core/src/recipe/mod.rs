//! The conversation-tree recipe: session types, the versioned prompt assets,
//! system-prompt assembly and the turn-by-turn state machine.

mod assets;
mod engine;
mod prompt;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use assets::{assets, RecipeAssets, ScaffoldExample};
pub use engine::{
    detect_fallback, extract_grade, game_reply, next_action, next_action_at, quiz_cycle, step,
};
pub use prompt::{
    assemble_system_prompt, game_template, judging_system_text, parse_judgement, plan_reply, tone_profile, AgentReply,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecipeError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("the child's answer in {0:?} must be judged before the session can advance")]
    JudgementRequired(Phase),
    #[error("bad recipe asset: {0}")]
    Asset(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    School,
    Discovery,
    Entertainment,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::School, Mode::Discovery, Mode::Entertainment];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::School => "school",
            Mode::Discovery => "discovery",
            Mode::Entertainment => "entertainment",
        }
    }

    /// School and Discovery collect a knowledge level and a task or topic.
    pub fn scaffolds(self) -> bool {
        self != Mode::Entertainment
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = RecipeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| RecipeError::InvalidArgument(format!("unknown mode {s:?}")))
    }
}

/// School grade, 1 through 12.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct GradeLevel(u8);

impl GradeLevel {
    pub fn new(value: u8) -> Result<Self, RecipeError> {
        if (1..=12).contains(&value) {
            Ok(Self(value))
        } else {
            Err(RecipeError::InvalidArgument(format!("grade {value} outside 1..=12")))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = GradeLevel> {
        (1..=12).map(GradeLevel)
    }

    /// Grade lowered by `steps`, never below 1.
    pub fn lowered(self, steps: u32) -> GradeLevel {
        GradeLevel((self.0 as i64 - steps as i64).max(1) as u8)
    }
}

impl TryFrom<u8> for GradeLevel {
    type Error = RecipeError;
    fn try_from(v: u8) -> Result<Self, Self::Error> {
        GradeLevel::new(v)
    }
}

impl From<GradeLevel> for u8 {
    fn from(g: GradeLevel) -> u8 {
        g.0
    }
}

impl fmt::Display for GradeLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KnowledgeLevel {
    Little,
    Some,
    ALot,
}

impl KnowledgeLevel {
    pub const ALL: [KnowledgeLevel; 3] =
        [KnowledgeLevel::Little, KnowledgeLevel::Some, KnowledgeLevel::ALot];

    pub fn as_str(self) -> &'static str {
        match self {
            KnowledgeLevel::Little => "little",
            KnowledgeLevel::Some => "some",
            KnowledgeLevel::ALot => "a_lot",
        }
    }
}

impl fmt::Display for KnowledgeLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for KnowledgeLevel {
    type Err = RecipeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        KnowledgeLevel::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| RecipeError::InvalidArgument(format!("unknown knowledge level {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    AwaitGrade,
    AwaitMode,
    AwaitKnowledgeLevel,
    AwaitTaskOrTopic,
    Scaffolding,
    Assessment,
    GameOffer,
    GamePlay,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EngineAction {
    AskGrade,
    AskMode,
    AskKnowledgeLevel,
    AskTaskOrTopic,
    ScaffoldTurn,
    ReduceComplexity,
    QuizChild,
    Reinforce,
    ReScaffold,
    OfferGame,
    PresentGame,
    GiveHint,
    Close,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Speaker {
    Child,
    Agent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub speaker: Speaker,
    pub text: String,
    /// Milliseconds on the session's monotonic clock.
    pub timestamp: u64,
    /// For a child turn, the action it triggered; for an agent turn, the
    /// action it carried out.
    pub action: EngineAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToneProfile {
    pub mode: Mode,
    pub grade: GradeLevel,
    pub role_name: String,
    pub profile_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameTemplate {
    pub grade: GradeLevel,
    pub template_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecipePrompt {
    pub system_text: String,
    pub mode: Mode,
    pub grade: GradeLevel,
    pub knowledge: Option<KnowledgeLevel>,
    pub scaffold_examples: Vec<String>,
    pub fallback_lexicon: Vec<String>,
}

/// A session's position in the conversation tree. Values are immutable in
/// practice: every engine operation returns a new state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub phase: Phase,
    pub mode: Option<Mode>,
    pub grade: Option<GradeLevel>,
    pub knowledge: Option<KnowledgeLevel>,
    /// Current School task or Discovery topic, as the child stated it.
    pub task: Option<String>,
    pub transcript: Vec<TurnRecord>,
    pub fallback_count: u32,
}

impl Default for SessionState {
    fn default() -> Self {
        Self::new()
    }
}

impl SessionState {
    pub fn new() -> Self {
        Self {
            phase: Phase::AwaitGrade,
            mode: None,
            grade: None,
            knowledge: None,
            task: None,
            transcript: Vec::new(),
            fallback_count: 0,
        }
    }

    /// A new session whose transcript opens with the agent asking for the
    /// child's grade.
    pub fn opened(now_ms: u64) -> Self {
        let text = assets().canned.ask_grade.clone();
        Self::new().with_agent_turn(text, EngineAction::AskGrade, now_ms)
    }

    pub fn last_timestamp(&self) -> u64 {
        self.transcript.last().map_or(0, |t| t.timestamp)
    }

    pub fn with_agent_turn(&self, text: impl Into<String>, action: EngineAction, now_ms: u64) -> Self {
        let mut next = self.clone();
        next.push_turn(Speaker::Agent, text.into(), action, now_ms);
        next
    }

    pub(crate) fn push_turn(&mut self, speaker: Speaker, text: String, action: EngineAction, now_ms: u64) {
        let timestamp = now_ms.max(self.last_timestamp());
        self.transcript.push(TurnRecord {
            speaker,
            text,
            timestamp,
            action,
        });
    }

    /// Grade whose tone profile drives prompts: each fallback lowers the
    /// session grade by two, never below 1.
    pub fn effective_grade(&self) -> Option<GradeLevel> {
        self.grade.map(|g| g.lowered(self.fallback_count.saturating_mul(2)))
    }

    /// Checks the structural invariants of a session value.
    pub fn check_invariants(&self) -> Result<(), String> {
        use Phase::*;
        let needs_setup = matches!(self.phase, AwaitKnowledgeLevel | AwaitTaskOrTopic | Scaffolding | Assessment | GameOffer | GamePlay);
        if needs_setup && (self.grade.is_none() || self.mode.is_none()) {
            return Err(format!("{:?} without grade and mode", self.phase));
        }
        if matches!(self.phase, AwaitMode) && self.grade.is_none() {
            return Err("AwaitMode without grade".into());
        }
        let scaffolds = self.mode.is_some_and(Mode::scaffolds);
        if matches!(self.phase, AwaitTaskOrTopic | Scaffolding | Assessment) {
            if !scaffolds {
                return Err(format!("{:?} outside School/Discovery", self.phase));
            }
            if self.knowledge.is_none() {
                return Err(format!("{:?} without knowledge level", self.phase));
            }
        }
        if matches!(self.phase, Scaffolding | Assessment) && self.task.is_none() {
            return Err(format!("{:?} without task or topic", self.phase));
        }
        if matches!(self.phase, AwaitKnowledgeLevel) && !scaffolds {
            return Err("knowledge requested outside School/Discovery".into());
        }
        if matches!(self.phase, GameOffer | GamePlay) && self.mode != Some(Mode::Entertainment) {
            return Err(format!("{:?} outside Entertainment", self.phase));
        }
        if self.mode == Some(Mode::Entertainment) && self.knowledge.is_some() {
            return Err("knowledge level collected in Entertainment".into());
        }
        if self.transcript.windows(2).any(|w| w[1].timestamp < w[0].timestamp) {
            return Err("transcript timestamps decrease".into());
        }
        Ok(())
    }
}
