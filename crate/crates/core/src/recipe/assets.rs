use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::Deserialize;

use super::{GradeLevel, KnowledgeLevel, Mode, RecipeError};
use crate::normalize::PhraseSet;

const ASSET_TEXT: &str = include_str!("../../assets/recipe.toml");

#[derive(Debug, Clone, Deserialize)]
pub struct SystemText {
    pub grade_and_mode: String,
    pub context: String,
    pub scaffolding: String,
    pub readability: String,
    pub fallback: String,
    pub examples_heading: String,
    pub game_heading: String,
    pub task_label_school: String,
    pub task_label_discovery: String,
    pub session: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Roles {
    pub school: String,
    pub discovery: String,
    pub entertainment: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct KnowledgeText {
    pub little: String,
    pub some: String,
    pub a_lot: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Tone {
    pub school: Vec<String>,
    pub discovery: Vec<String>,
    pub entertainment: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
struct Games {
    templates: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Lexicon {
    pub fallback: Vec<String>,
    pub close: Vec<String>,
    pub completion: Vec<String>,
    pub affirmative: Vec<String>,
    pub negative: Vec<String>,
    pub mode_school: Vec<String>,
    pub mode_discovery: Vec<String>,
    pub mode_entertainment: Vec<String>,
    pub knowledge_a_lot: Vec<String>,
    pub knowledge_little: Vec<String>,
    pub knowledge_some: Vec<String>,
    pub grade_words: BTreeMap<String, u8>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ScaffoldExample {
    pub mode: String,
    pub pattern: String,
    pub text: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Directives {
    pub heading: String,
    pub scaffold_turn: String,
    pub reduce_complexity: String,
    pub quiz_child: String,
    pub reinforce: String,
    pub reinforce_game: String,
    pub re_scaffold: String,
    pub present_game: String,
    pub give_hint: String,
    pub judge: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Canned {
    pub ask_grade: String,
    pub reask_grade: String,
    pub ask_mode: String,
    pub ask_knowledge_level: String,
    pub ask_task: String,
    pub ask_topic: String,
    pub ask_task_again: String,
    pub ask_topic_again: String,
    pub offer_game: String,
    pub close: String,
    pub reduce_grade: String,
    pub reduce_mode: String,
    pub reduce_knowledge: String,
    pub reduce_task: String,
    pub reduce_topic: String,
    pub reduce_offer: String,
}

#[derive(Debug, Deserialize)]
struct RawRecipe {
    version: String,
    system: SystemText,
    roles: Roles,
    knowledge: KnowledgeText,
    tone: Tone,
    games: Games,
    lexicon: Lexicon,
    examples: Vec<ScaffoldExample>,
    directives: Directives,
    canned: Canned,
}

/// Compiled cue matchers.
#[derive(Debug, Clone)]
pub(crate) struct Cues {
    pub fallback: PhraseSet,
    pub close: PhraseSet,
    pub completion: PhraseSet,
    pub affirmative: PhraseSet,
    pub negative: PhraseSet,
    pub modes: [(Mode, PhraseSet); 3],
    /// In match priority order.
    pub knowledge: [(KnowledgeLevel, PhraseSet); 3],
}

/// The parsed recipe asset file.
#[derive(Debug, Clone)]
pub struct RecipeAssets {
    pub version: String,
    pub digest: String,
    pub system: SystemText,
    pub roles: Roles,
    pub knowledge: KnowledgeText,
    pub tone: Tone,
    pub game_templates: Vec<String>,
    pub lexicon: Lexicon,
    pub examples: Vec<ScaffoldExample>,
    pub directives: Directives,
    pub canned: Canned,
    pub(crate) cues: Cues,
}

impl RecipeAssets {
    pub fn from_toml(text: &str) -> Result<Self, RecipeError> {
        let raw: RawRecipe = toml::from_str(text).map_err(|e| RecipeError::Asset(e.to_string()))?;
        for (name, list) in [
            ("school", &raw.tone.school),
            ("discovery", &raw.tone.discovery),
            ("entertainment", &raw.tone.entertainment),
            ("games", &raw.games.templates),
        ] {
            if list.len() != 12 || list.iter().any(|t| t.trim().is_empty()) {
                return Err(RecipeError::Asset(format!("{name} needs 12 non-empty entries")));
            }
        }
        for mode in Mode::ALL {
            if !raw.examples.iter().any(|e| e.mode == mode.as_str()) {
                return Err(RecipeError::Asset(format!("no scaffold examples for {mode}")));
            }
        }
        let lx = &raw.lexicon;
        let cues = Cues {
            fallback: PhraseSet::new(&lx.fallback),
            close: PhraseSet::new(&lx.close),
            completion: PhraseSet::new(&lx.completion),
            affirmative: PhraseSet::new(&lx.affirmative),
            negative: PhraseSet::new(&lx.negative),
            modes: [
                (Mode::School, PhraseSet::new(&lx.mode_school)),
                (Mode::Discovery, PhraseSet::new(&lx.mode_discovery)),
                (Mode::Entertainment, PhraseSet::new(&lx.mode_entertainment)),
            ],
            knowledge: [
                (KnowledgeLevel::ALot, PhraseSet::new(&lx.knowledge_a_lot)),
                (KnowledgeLevel::Little, PhraseSet::new(&lx.knowledge_little)),
                (KnowledgeLevel::Some, PhraseSet::new(&lx.knowledge_some)),
            ],
        };
        Ok(Self {
            version: raw.version,
            digest: crate::sha256_hex(text),
            system: raw.system,
            roles: raw.roles,
            knowledge: raw.knowledge,
            tone: raw.tone,
            game_templates: raw.games.templates,
            lexicon: raw.lexicon,
            examples: raw.examples,
            directives: raw.directives,
            canned: raw.canned,
            cues,
        })
    }

    pub fn role(&self, mode: Mode) -> &str {
        match mode {
            Mode::School => &self.roles.school,
            Mode::Discovery => &self.roles.discovery,
            Mode::Entertainment => &self.roles.entertainment,
        }
    }

    pub fn tone_text(&self, mode: Mode, grade: GradeLevel) -> &str {
        let list = match mode {
            Mode::School => &self.tone.school,
            Mode::Discovery => &self.tone.discovery,
            Mode::Entertainment => &self.tone.entertainment,
        };
        &list[grade.value() as usize - 1]
    }

    pub fn knowledge_text(&self, level: KnowledgeLevel) -> &str {
        match level {
            KnowledgeLevel::Little => &self.knowledge.little,
            KnowledgeLevel::Some => &self.knowledge.some,
            KnowledgeLevel::ALot => &self.knowledge.a_lot,
        }
    }

    /// "task" for School, "topic" for Discovery and Entertainment.
    pub fn task_label(&self, mode: Mode) -> &str {
        match mode {
            Mode::School => &self.system.task_label_school,
            _ => &self.system.task_label_discovery,
        }
    }

    pub fn examples_for(&self, mode: Mode) -> impl Iterator<Item = &ScaffoldExample> {
        self.examples.iter().filter(move |e| e.mode == mode.as_str())
    }
}

/// The shipped recipe assets.
pub fn assets() -> &'static RecipeAssets {
    static ASSETS: OnceLock<RecipeAssets> = OnceLock::new();
    ASSETS.get_or_init(|| RecipeAssets::from_toml(ASSET_TEXT).expect("shipped recipe asset parses"))
}
