//! Datasets, answer matching and hits@1, plus the configured pipeline
//! runner.

mod config;
mod runner;

pub use config::{ablation_configs, PipelineConfig, SimilarityMode, ABLATIONS};
pub use runner::{
    assemble_report, run_ablations, run_config, score_outcome, AblationRow, Diagnostics, EvalReport, Failure,
    FailureKind, Outcome, Pipeline, ReportRow, StageError, ABLATION_REFERENCE,
};

use crate::kb::{KbId, KbObject};
use crate::num::Real;
use crate::reader::Prediction;
use crate::text::normalize_answer;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("record {index}: {message}")]
    Schema { index: usize, message: String },
    #[error("prediction for unknown or repeated question id {0}")]
    IdMismatch(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntityRef {
    pub id: KbId,
    #[serde(default)]
    pub name: String,
}

impl EntityRef {
    pub fn new(id: &str, name: &str) -> Self {
        EntityRef {
            id: KbId::new(id),
            name: name.to_string(),
        }
    }
}

/// A gold answer: a KB entity (id and name) or a bare surface form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnswerRef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<KbId>,
    pub name: String,
}

impl AnswerRef {
    pub fn entity(id: &str, name: &str) -> Self {
        AnswerRef {
            id: Some(KbId::new(id)),
            name: name.to_string(),
        }
    }

    pub fn surface(name: &str) -> Self {
        AnswerRef {
            id: None,
            name: name.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    #[serde(rename = "question")]
    pub text: String,
    pub language: String,
    #[serde(default)]
    pub topic_entities: Vec<EntityRef>,
    #[serde(default)]
    pub answers: Vec<AnswerRef>,
}

impl Question {
    pub fn new(id: &str, text: &str, language: &str) -> Self {
        Question {
            id: id.to_string(),
            text: text.to_string(),
            language: language.to_string(),
            topic_entities: Vec::new(),
            answers: Vec::new(),
        }
    }

    pub fn topic_ids(&self) -> Vec<KbId> {
        self.topic_entities.iter().map(|e| e.id.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DatasetFormat {
    WebQspZh,
    QaldM,
}

impl FromStr for DatasetFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "webqspzh" => Ok(DatasetFormat::WebQspZh),
            "qaldm" | "qald" => Ok(DatasetFormat::QaldM),
            _ => Err(format!("unknown dataset format '{s}'")),
        }
    }
}

/// The QALD-M language splits.
pub const QALD_LANGUAGES: [&str; 11] = ["fa", "de", "ro", "it", "ru", "fr", "nl", "es", "hi_IN", "pt", "pt_BR"];

/// Canonical QALD-M code for `tag`, accepting `-` or `_` and any case.
pub fn qald_language(tag: &str) -> Option<&'static str> {
    let norm = tag.replace('-', "_").to_ascii_lowercase();
    QALD_LANGUAGES.iter().copied().find(|l| l.to_ascii_lowercase() == norm)
}

#[derive(Deserialize)]
struct Record {
    id: serde_json::Value,
    question: String,
    #[serde(default)]
    language: Option<String>,
    #[serde(default)]
    topic_entities: Vec<EntityRef>,
    answers: Vec<AnswerRef>,
}

/// Reads a JSON Lines dataset. Blank lines are skipped; `index` in errors is
/// the zero-based record number.
pub fn read_dataset<R: BufRead>(reader: R, format: DatasetFormat) -> Result<Vec<Question>, EvalError> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let index = out.len();
        let schema = |message: String| EvalError::Schema { index, message };
        let rec: Record = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
        let id = match rec.id {
            serde_json::Value::String(s) => s,
            serde_json::Value::Number(n) => n.to_string(),
            other => return Err(schema(format!("id must be a string or number, got {other}"))),
        };
        if rec.question.trim().is_empty() {
            return Err(schema("empty question text".into()));
        }
        let language = match format {
            DatasetFormat::WebQspZh => {
                let lang = rec.language.unwrap_or_else(|| "zh".into());
                if !lang.to_ascii_lowercase().starts_with("zh") {
                    return Err(schema(format!("WebQSP-zh record with language '{lang}'")));
                }
                lang
            }
            DatasetFormat::QaldM => {
                let lang = rec.language.ok_or_else(|| schema("missing field `language`".into()))?;
                qald_language(&lang)
                    .ok_or_else(|| schema(format!("'{lang}' is not a QALD-M language")))?
                    .to_string()
            }
        };
        out.push(Question {
            id,
            text: rec.question,
            language,
            topic_entities: rec.topic_entities,
            answers: rec.answers,
        });
    }
    Ok(out)
}

pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<Vec<Question>, EvalError> {
    read_dataset(std::io::BufReader::new(std::fs::File::open(path)?), format)
}

/// Whether a predicted object (shown as `surface`) matches a gold answer:
/// by id when both carry one, otherwise by normalized surface.
pub fn answer_matches(object: &KbObject, surface: &str, gold: &AnswerRef) -> bool {
    match (object.as_entity(), &gold.id) {
        (Some(pred), Some(g)) => pred == g,
        _ => {
            let s = normalize_answer(surface);
            !s.is_empty() && s == normalize_answer(&gold.name)
        }
    }
}

pub fn prediction_correct(prediction: &Prediction, question: &Question) -> bool {
    let top = prediction.top_answer();
    question
        .answers
        .iter()
        .any(|a| answer_matches(&top.object, &top.surface, a))
}

/// hits@1 over `gold`. Questions without a prediction count as wrong; a
/// prediction whose id is unknown or repeated is an error.
pub fn hits_at_1<S: Real>(predictions: &[Prediction], gold: &[Question]) -> Result<S, EvalError> {
    let by_id: HashMap<&str, &Question> = gold.iter().map(|q| (q.id.as_str(), q)).collect();
    let mut seen = std::collections::HashSet::new();
    let mut correct = 0usize;
    for p in predictions {
        let q = by_id
            .get(p.question_id.as_str())
            .filter(|_| seen.insert(p.question_id.as_str()))
            .ok_or_else(|| EvalError::IdMismatch(p.question_id.clone()))?;
        if prediction_correct(p, q) {
            correct += 1;
        }
    }
    Ok(crate::num::ratio(correct, gold.len()))
}
