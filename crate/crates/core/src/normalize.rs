//! Case-folding and punctuation stripping shared by cue detection and term
//! vectors.

/// Lower-cases `text`, deletes apostrophes (so "don't" becomes "dont") and
/// splits on every other non-alphanumeric character.
pub(crate) fn words(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch == '\'' || ch == '\u{2019}' || ch == '\u{2018}' {
            continue;
        }
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// True when `phrase` occurs as a contiguous run of whole words in `words`.
pub(crate) fn contains_phrase(words: &[String], phrase: &[String]) -> bool {
    !phrase.is_empty() && words.windows(phrase.len()).any(|w| w == phrase)
}

/// A lexicon whose entries are pre-normalized into word sequences.
#[derive(Debug, Clone, Default)]
pub(crate) struct PhraseSet {
    phrases: Vec<Vec<String>>,
}

impl PhraseSet {
    pub(crate) fn new<S: AsRef<str>>(entries: &[S]) -> Self {
        Self {
            phrases: entries
                .iter()
                .map(|e| words(e.as_ref()))
                .filter(|w| !w.is_empty())
                .collect(),
        }
    }

    pub(crate) fn matches(&self, words: &[String]) -> bool {
        self.phrases.iter().any(|p| contains_phrase(words, p))
    }
}
