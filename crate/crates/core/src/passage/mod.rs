//! Passage assembly: order sentences by similarity to the question, trim to
//! a word budget, and ground each mentioned KB object to a span of the final
//! text.

pub mod fuzzy;
pub mod similarity;

use crate::eval::Question;
use crate::kb::KbObject;
use crate::remote::RemoteError;
use crate::text::{char_len, char_slice, word_count};
use crate::verbalizer::VerbalizedUnit;
use crate::Score;
use serde::{Deserialize, Serialize};
use similarity::SimilarityBackend;
use std::collections::HashSet;
use thiserror::Error;

pub use fuzzy::{fuzzy_find, FuzzyMatch};

pub const DEFAULT_BUDGET_WORDS: usize = 750;
pub const DEFAULT_FUZZY_THRESHOLD: Score = 85.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PassageError {
    #[error("no candidate spans survived grounding")]
    NoCandidates,
    #[error("no sentences to build a passage from")]
    NoUnits,
    #[error("question text is empty")]
    EmptyQuestion,
    #[error(transparent)]
    Remote(#[from] RemoteError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSpan {
    /// Index into [`Passage::sentences`].
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
    pub object: KbObject,
    pub surface: String,
    #[serde(rename = "score")]
    pub match_score: Score,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassageSentence {
    pub unit: VerbalizedUnit,
    /// Char offset of the sentence in the passage text.
    pub start: usize,
    pub similarity: Score,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassageDiagnostics {
    pub duplicates_removed: usize,
    pub sentences_dropped: usize,
    pub ungrounded_objects: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Passage {
    pub question_id: String,
    pub text: String,
    pub sentences: Vec<PassageSentence>,
    pub spans: Vec<CandidateSpan>,
    pub word_count: usize,
    #[serde(default)]
    pub diagnostics: PassageDiagnostics,
}

impl Passage {
    /// Text of the sentence containing `span`.
    pub fn sentence_text(&self, span: &CandidateSpan) -> &str {
        &self.sentences[span.sentence].unit.text
    }

    pub fn span_text(&self, span: &CandidateSpan) -> &str {
        char_slice(&self.text, span.start, span.end)
    }

    pub fn contains_object(&self, object: &KbObject) -> bool {
        self.spans.iter().any(|s| &s.object == object)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassageOptions {
    pub budget_words: usize,
    pub threshold: Score,
}

impl Default for PassageOptions {
    fn default() -> Self {
        PassageOptions {
            budget_words: DEFAULT_BUDGET_WORDS,
            threshold: DEFAULT_FUZZY_THRESHOLD,
        }
    }
}

/// Similarity of one sentence to the question, in `[0, 1]` for the lexical
/// backend.
pub fn similarity(question: &str, sentence: &str, backend: &SimilarityBackend) -> Result<Score, PassageError> {
    if question.is_empty() || sentence.is_empty() {
        return Err(PassageError::EmptyQuestion);
    }
    Ok(backend.score_all(question, &[sentence])?[0])
}

/// Builds the passage for `question`:
///
/// 1. drop units whose text repeats an earlier unit;
/// 2. score each unit against the question and stable-sort by descending
///    score;
/// 3. take sentences in that order while the running whitespace-token count
///    stays within the budget;
/// 4. ground each included unit's objects inside its own sentence and shift
///    the offsets into passage coordinates.
pub fn build(
    question: &Question,
    units: &[VerbalizedUnit],
    options: &PassageOptions,
    backend: &SimilarityBackend,
) -> Result<Passage, PassageError> {
    if question.text.trim().is_empty() {
        return Err(PassageError::EmptyQuestion);
    }
    if units.is_empty() {
        return Err(PassageError::NoUnits);
    }
    let mut seen = HashSet::new();
    let unique: Vec<&VerbalizedUnit> = units.iter().filter(|u| seen.insert(u.text.as_str())).collect();
    let duplicates_removed = units.len() - unique.len();

    let texts: Vec<&str> = unique.iter().map(|u| u.text.as_str()).collect();
    let scores = backend.score_all(&question.text, &texts)?;
    let mut ranked: Vec<(usize, Score)> = scores.into_iter().enumerate().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut words = 0usize;
    let mut chosen = Vec::new();
    for &(i, score) in &ranked {
        let w = word_count(&unique[i].text);
        if words + w > options.budget_words {
            break;
        }
        words += w;
        chosen.push((unique[i].clone(), score));
    }
    let sentences_dropped = unique.len() - chosen.len();

    let mut passage = assemble(&question.id, chosen, options.threshold);
    passage.diagnostics.duplicates_removed = duplicates_removed;
    passage.diagnostics.sentences_dropped = sentences_dropped;
    if passage.spans.is_empty() {
        return Err(PassageError::NoCandidates);
    }
    Ok(passage)
}

/// Joins sentences in the given order with single spaces and grounds their
/// objects. No reordering or trimming happens here.
pub fn assemble(question_id: &str, sentences: Vec<(VerbalizedUnit, Score)>, threshold: Score) -> Passage {
    let mut text = String::new();
    let mut offset = 0usize;
    let mut placed = Vec::with_capacity(sentences.len());
    let mut spans = Vec::new();
    let mut ungrounded = 0usize;
    for (idx, (unit, similarity)) in sentences.into_iter().enumerate() {
        if idx > 0 {
            text.push(' ');
            offset += 1;
        }
        text.push_str(&unit.text);
        for m in &unit.objects {
            if m.surface.is_empty() {
                ungrounded += 1;
                continue;
            }
            match fuzzy_find(&m.surface, &unit.text, threshold) {
                Ok(Some(found)) => spans.push(CandidateSpan {
                    sentence: idx,
                    start: offset + found.start,
                    end: offset + found.end,
                    object: m.object.clone(),
                    surface: char_slice(&unit.text, found.start, found.end).to_string(),
                    match_score: found.score,
                }),
                _ => ungrounded += 1,
            }
        }
        let len = char_len(&unit.text);
        placed.push(PassageSentence {
            unit,
            start: offset,
            similarity,
        });
        offset += len;
    }
    Passage {
        question_id: question_id.to_string(),
        word_count: word_count(&text),
        text,
        sentences: placed,
        spans,
        diagnostics: PassageDiagnostics {
            ungrounded_objects: ungrounded,
            ..Default::default()
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{KbObject, Triple};
    use crate::verbalizer::ObjectMention;

    fn unit(text: &str, objects: &[(&str, &str)]) -> VerbalizedUnit {
        VerbalizedUnit {
            text: text.to_string(),
            sources: vec![Triple::new("m.x", "r.s", KbObject::entity("m.y"))],
            objects: objects
                .iter()
                .map(|(id, s)| ObjectMention {
                    object: KbObject::entity(id),
                    surface: s.to_string(),
                })
                .collect(),
        }
    }

    fn question(text: &str) -> Question {
        Question::new("q1", text, "en")
    }

    #[test]
    fn ford_fixture_offsets() {
        let units = [
            unit(
                "David Gergen was appointed as the White House Communications Director by President Gerald Ford .",
                &[("m.gergen", "David Gergen")],
            ),
            unit(
                "The vice president of Gerald Ford was Nelson Rockefeller .",
                &[("m.rockefeller", "Nelson Rockefeller")],
            ),
        ];
        let p = build(
            &question("Who was the vice president of Gerald Ford?"),
            &units,
            &PassageOptions::default(),
            &SimilarityBackend::Lexical,
        )
        .unwrap();
        // The Rockefeller sentence is more similar, so it comes first.
        assert!(p.text.starts_with("The vice president"));
        for s in &p.spans {
            assert_eq!(p.span_text(s), s.surface);
            assert_eq!(s.match_score, 100.0);
            // Independent check: locate the surface by plain substring search.
            let byte = p.text.find(&s.surface).unwrap();
            assert_eq!(p.text[..byte].chars().count(), s.start);
        }
        let gergen = p.spans.iter().find(|s| s.surface == "David Gergen").unwrap();
        assert_eq!((gergen.start, gergen.end), (59, 71));
        let rock = p.spans.iter().find(|s| s.surface == "Nelson Rockefeller").unwrap();
        assert_eq!((rock.start, rock.end), (38, 56));
    }

    #[test]
    fn budget_drops_least_similar() {
        let q = question("alpha beta gamma");
        let units: Vec<VerbalizedUnit> = (0..80)
            .map(|i| {
                let filler = if i % 2 == 0 { "alpha beta gamma" } else { "zzz yyy xxx" };
                let text = format!("{filler} w{i} {} Obj{i} .", ["pad"; 4].join(" "));
                unit(&text, &[("m.o", &format!("Obj{i}"))])
            })
            .collect();
        let total: usize = units.iter().map(|u| word_count(&u.text)).sum();
        assert_eq!(total, 800);
        let p = build(&q, &units, &PassageOptions::default(), &SimilarityBackend::Lexical).unwrap();
        assert!(p.word_count <= 750);
        assert_eq!(p.word_count, 750);
        assert_eq!(p.diagnostics.sentences_dropped, 5);
        for w in p.sentences.windows(2) {
            assert!(w[0].similarity >= w[1].similarity);
        }
    }

    #[test]
    fn single_short_unit() {
        let u = unit(
            "The industry of Walmart is Retail-Store.",
            &[("m.retail", "Retail-Store")],
        );
        let p = build(
            &question("What industry?"),
            std::slice::from_ref(&u),
            &PassageOptions::default(),
            &SimilarityBackend::Lexical,
        )
        .unwrap();
        assert_eq!(p.text, u.text);
        assert_eq!(p.spans.len(), 1);
        assert_eq!((p.spans[0].start, p.spans[0].end), (27, 39));
    }

    #[test]
    fn duplicates_removed_and_ties_keep_order() {
        let a = unit("same words here A .", &[("m.a", "A")]);
        let b = unit("same words here B .", &[("m.b", "B")]);
        let p = build(
            &question("unrelated"),
            &[a.clone(), b.clone(), a.clone()],
            &PassageOptions::default(),
            &SimilarityBackend::Lexical,
        )
        .unwrap();
        assert_eq!(p.diagnostics.duplicates_removed, 1);
        assert_eq!(p.sentences.len(), 2);
        assert_eq!(p.sentences[0].unit.text, a.text);
    }

    #[test]
    fn no_candidates_when_nothing_grounds() {
        let u = unit("Nothing to see here .", &[("m.a", "Rockefeller")]);
        let err = build(
            &question("q"),
            &[u],
            &PassageOptions::default(),
            &SimilarityBackend::Lexical,
        );
        assert_eq!(err, Err(PassageError::NoCandidates));
        assert_eq!(
            build(
                &question("q"),
                &[],
                &PassageOptions::default(),
                &SimilarityBackend::Lexical
            ),
            Err(PassageError::NoUnits)
        );
    }

    #[test]
    fn similarity_contract() {
        let s = similarity("abc def", "abc def", &SimilarityBackend::Lexical).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
        assert_eq!(
            similarity("", "x", &SimilarityBackend::Lexical),
            Err(PassageError::EmptyQuestion)
        );
    }
}
