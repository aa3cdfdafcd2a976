//! Candidate-span readers.
//!
//! A reader assigns one score per candidate span of a [`Passage`]; scores
//! are aggregated per KB object by max and the objects ranked. The answer is
//! always one of the passage's grounded objects.
//!
//! Ranking order, shared by all readers: score (desc), similarity of the
//! containing sentence (desc), offset inside that sentence (asc), sentence
//! text, object key. None of these depend on where a sentence sits in the
//! passage, so reordering sentences does not change the ranking.

use crate::eval::Question;
use crate::kb::KbObject;
use crate::passage::{CandidateSpan, Passage};
use crate::remote::{CandidateOffsets, ModelClient, ReadRequest, RemoteError};
use crate::text::{tokens, Stopwords};
use crate::Score;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReadError {
    #[error("passage has no candidate spans")]
    NoCandidates,
    #[error(transparent)]
    Remote(#[from] RemoteError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpanScore {
    /// Index into [`Passage::spans`].
    pub span: usize,
    pub score: Score,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedAnswer {
    pub object: KbObject,
    pub surface: String,
    pub score: Score,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub question_id: String,
    pub ranked: Vec<RankedAnswer>,
    pub top: KbObject,
}

impl Prediction {
    pub fn top_answer(&self) -> &RankedAnswer {
        &self.ranked[0]
    }

    pub fn objects(&self) -> impl Iterator<Item = &KbObject> {
        self.ranked.iter().map(|r| &r.object)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReaderMode {
    Lexical,
    Remote,
}

impl FromStr for ReaderMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lexical" => Ok(ReaderMode::Lexical),
            "remote" => Ok(ReaderMode::Remote),
            other => Err(format!("unknown reader mode '{other}'")),
        }
    }
}

impl fmt::Display for ReaderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReaderMode::Lexical => "lexical",
            ReaderMode::Remote => "remote",
        })
    }
}

#[derive(Debug, Clone)]
pub enum Reader {
    Lexical(Stopwords),
    Remote(ModelClient),
}

impl Reader {
    pub fn read(&self, question: &Question, passage: &Passage) -> Result<Prediction, ReadError> {
        match self {
            Reader::Lexical(sw) => read_lexical(question, passage, sw),
            Reader::Remote(client) => read_remote(question, passage, client),
        }
    }
}

/// Overlap between the question's content words and the span's sentence,
/// not counting the span's own tokens.
pub fn lexical_span_scores(question: &Question, passage: &Passage, stopwords: &Stopwords) -> Vec<SpanScore> {
    let q = stopwords.content_words(&question.language, &question.text);
    let mut sentence_tokens: HashMap<usize, BTreeSet<String>> = HashMap::new();
    passage
        .spans
        .iter()
        .enumerate()
        .map(|(i, span)| {
            let sent = sentence_tokens
                .entry(span.sentence)
                .or_insert_with(|| tokens(passage.sentence_text(span)).into_iter().collect());
            let own: BTreeSet<String> = tokens(&span.surface).into_iter().collect();
            let overlap = q.iter().filter(|w| sent.contains(*w) && !own.contains(*w)).count();
            SpanScore {
                span: i,
                score: overlap as Score,
            }
        })
        .collect()
}

pub fn read_lexical(question: &Question, passage: &Passage, stopwords: &Stopwords) -> Result<Prediction, ReadError> {
    if passage.spans.is_empty() {
        return Err(ReadError::NoCandidates);
    }
    rank(passage, &lexical_span_scores(question, passage, stopwords))
}

pub fn read_remote(question: &Question, passage: &Passage, client: &ModelClient) -> Result<Prediction, ReadError> {
    if passage.spans.is_empty() {
        return Err(ReadError::NoCandidates);
    }
    let req = ReadRequest {
        question: question.text.clone(),
        passage: passage.text.clone(),
        candidates: passage
            .spans
            .iter()
            .map(|s| CandidateOffsets {
                start: s.start,
                end: s.end,
            })
            .collect(),
    };
    let resp = client.read(&req)?;
    let scores: Vec<SpanScore> = resp
        .scores
        .into_iter()
        .enumerate()
        .map(|(span, score)| SpanScore { span, score })
        .collect();
    rank(passage, &scores)
}

fn occurrence_order(passage: &Passage, a: (&CandidateSpan, Score), b: (&CandidateSpan, Score)) -> Ordering {
    let (sa, sb) = (&passage.sentences[a.0.sentence], &passage.sentences[b.0.sentence]);
    b.1.total_cmp(&a.1)
        .then(sb.similarity.total_cmp(&sa.similarity))
        .then((a.0.start - sa.start).cmp(&(b.0.start - sb.start)))
        .then(sa.unit.text.cmp(&sb.unit.text))
        .then(a.0.object.key().cmp(&b.0.object.key()))
}

/// Aggregates span scores per object by max and ranks the objects.
pub fn rank(passage: &Passage, scores: &[SpanScore]) -> Result<Prediction, ReadError> {
    let mut best: HashMap<&KbObject, (&CandidateSpan, Score)> = HashMap::new();
    for s in scores {
        let span = &passage.spans[s.span];
        let entry = best.entry(&span.object).or_insert((span, s.score));
        if occurrence_order(passage, (span, s.score), *entry) == Ordering::Less {
            *entry = (span, s.score);
        }
    }
    let mut ranked: Vec<(&CandidateSpan, Score)> = best.into_values().collect();
    if ranked.is_empty() {
        return Err(ReadError::NoCandidates);
    }
    ranked.sort_by(|a, b| occurrence_order(passage, *a, *b));
    let ranked: Vec<RankedAnswer> = ranked
        .into_iter()
        .map(|(span, score)| RankedAnswer {
            object: span.object.clone(),
            surface: span.surface.clone(),
            score,
        })
        .collect();
    Ok(Prediction {
        question_id: passage.question_id.clone(),
        top: ranked[0].object.clone(),
        ranked,
    })
}
