//! Small text utilities shared across the pipeline.
//!
//! All offsets exposed by this crate are counted in Unicode scalar values
//! (`char`s), not bytes, so they line up with string indexing on the
//! model-server side.

use std::collections::{BTreeSet, HashMap, HashSet};

/// Lowercases one char, keeping it unchanged when its lowercase form is not a
/// single char. This keeps folded text the same length as the input.
pub fn fold_char(c: char) -> char {
    let mut lower = c.to_lowercase();
    match (lower.next(), lower.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

/// Case-folds a string char by char.
pub fn fold(s: &str) -> String {
    s.chars().map(fold_char).collect()
}

pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Slices `s` by char offsets. Out-of-range bounds are clamped.
pub fn char_slice(s: &str, start: usize, end: usize) -> &str {
    let mut indices = s.char_indices().map(|(i, _)| i).chain(std::iter::once(s.len()));
    let begin = indices.nth(start).unwrap_or(s.len());
    let finish = if end > start {
        indices.nth(end - start - 1).unwrap_or(s.len())
    } else {
        begin
    };
    &s[begin..finish.max(begin)]
}

/// Whitespace-delimited token count.
pub fn word_count(s: &str) -> usize {
    s.split_whitespace().count()
}

/// Case-folded alphanumeric tokens.
pub fn tokens(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(fold)
        .collect()
}

/// Lowercases, drops punctuation and symbols, and collapses whitespace.
/// Idempotent.
pub fn normalize_answer(s: &str) -> String {
    let stripped: String = s
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .map(fold_char)
        .collect();
    stripped.split_whitespace().collect::<Vec<_>>().join(" ")
}

const ENGLISH_STOPWORDS: &[&str] = &[
    "a",
    "about",
    "above",
    "after",
    "again",
    "against",
    "all",
    "am",
    "an",
    "and",
    "any",
    "are",
    "as",
    "at",
    "be",
    "because",
    "been",
    "before",
    "being",
    "below",
    "between",
    "both",
    "but",
    "by",
    "can",
    "could",
    "did",
    "do",
    "does",
    "doing",
    "down",
    "during",
    "each",
    "few",
    "for",
    "from",
    "further",
    "had",
    "has",
    "have",
    "having",
    "he",
    "her",
    "here",
    "hers",
    "herself",
    "him",
    "himself",
    "his",
    "how",
    "i",
    "if",
    "in",
    "into",
    "is",
    "it",
    "its",
    "itself",
    "me",
    "more",
    "most",
    "my",
    "myself",
    "no",
    "nor",
    "not",
    "of",
    "off",
    "on",
    "once",
    "only",
    "or",
    "other",
    "our",
    "ours",
    "ourselves",
    "out",
    "over",
    "own",
    "s",
    "same",
    "she",
    "should",
    "so",
    "some",
    "such",
    "than",
    "that",
    "the",
    "their",
    "theirs",
    "them",
    "themselves",
    "then",
    "there",
    "these",
    "they",
    "this",
    "those",
    "through",
    "to",
    "too",
    "under",
    "until",
    "up",
    "very",
    "was",
    "we",
    "were",
    "what",
    "when",
    "where",
    "which",
    "while",
    "who",
    "whom",
    "why",
    "will",
    "with",
    "would",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
];

/// Per-language stopword lists. English is built in; other languages start
/// empty and can be extended from configuration.
#[derive(Debug, Clone)]
pub struct Stopwords {
    by_language: HashMap<String, HashSet<String>>,
}

impl Default for Stopwords {
    fn default() -> Self {
        let mut by_language = HashMap::new();
        by_language.insert(
            "en".to_string(),
            ENGLISH_STOPWORDS.iter().map(|w| w.to_string()).collect(),
        );
        Stopwords { by_language }
    }
}

impl Stopwords {
    pub fn extend<I, S>(&mut self, language: &str, words: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let entry = self.by_language.entry(primary_subtag(language)).or_default();
        entry.extend(words.into_iter().map(|w| fold(w.as_ref())));
    }

    pub fn is_stopword(&self, language: &str, token: &str) -> bool {
        self.by_language
            .get(&primary_subtag(language))
            .is_some_and(|set| set.contains(token))
    }

    /// Distinct non-stopword tokens of `text`.
    pub fn content_words(&self, language: &str, text: &str) -> BTreeSet<String> {
        tokens(text)
            .into_iter()
            .filter(|t| !self.is_stopword(language, t))
            .collect()
    }
}

/// `pt-BR` / `pt_BR` -> `pt`.
fn primary_subtag(tag: &str) -> String {
    tag.split(['-', '_']).next().unwrap_or("").to_ascii_lowercase()
}
