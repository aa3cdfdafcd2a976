//! Topic entity linking: gold passthrough, fuzzy surface matching against KB
//! aliases, and a loader for precomputed link files.

use crate::eval::Question;
use crate::kb::{KbId, KnowledgeBase};
use crate::num::Real;
use crate::passage::fuzzy::fuzzy_find;
use crate::Score;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

pub const DEFAULT_K: usize = 5;
pub const DEFAULT_THRESHOLD: Score = 85.0;

#[derive(Debug, Error)]
pub enum LinkError {
    #[error("question {0} has no topic entity annotation")]
    MissingGold(String),
    #[error("no gold record for question {0}")]
    GoldMismatch(String),
    #[error("links file line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("question {0} missing from links file")]
    MissingLinks(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkCandidate {
    pub entity: KbId,
    /// Char offsets of the matched question span; `(0, 0)` when the entity
    /// did not come from matching question text.
    #[serde(default)]
    pub start: usize,
    #[serde(default)]
    pub end: usize,
    pub score: Score,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkResult {
    pub question_id: String,
    pub candidates: Vec<LinkCandidate>,
}

impl LinkResult {
    pub fn entities(&self) -> Vec<KbId> {
        self.candidates.iter().map(|c| c.entity.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkerMode {
    Golden,
    Surface,
    Precomputed,
}

impl FromStr for LinkerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "golden" | "gold" => Ok(LinkerMode::Golden),
            "surface" => Ok(LinkerMode::Surface),
            "precomputed" => Ok(LinkerMode::Precomputed),
            other => Err(format!("unknown linker mode '{other}'")),
        }
    }
}

impl fmt::Display for LinkerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkerMode::Golden => "golden",
            LinkerMode::Surface => "surface",
            LinkerMode::Precomputed => "precomputed",
        })
    }
}

/// Returns the annotated topic entities in their original order.
pub fn link_golden(question: &Question) -> Result<LinkResult, LinkError> {
    if question.topic_entities.is_empty() {
        return Err(LinkError::MissingGold(question.id.clone()));
    }
    let mut seen = HashSet::new();
    let candidates = question
        .topic_entities
        .iter()
        .filter(|t| seen.insert(t.id.clone()))
        .map(|t| LinkCandidate {
            entity: t.id.clone(),
            start: 0,
            end: 0,
            score: 100.0,
        })
        .collect();
    Ok(LinkResult {
        question_id: question.id.clone(),
        candidates,
    })
}

fn candidate_order(a: &LinkCandidate, b: &LinkCandidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then((b.end - b.start).cmp(&(a.end - a.start)))
        .then(a.entity.cmp(&b.entity))
}

/// Fuzzy-matches every KB surface form against the question and keeps the
/// best match per entity. Candidates are ordered by score, then longer
/// match, then entity id; at most `k` are returned.
pub fn link_surface(question_text: &str, kb: &KnowledgeBase, k: usize, threshold: Score) -> Vec<LinkCandidate> {
    let mut best: HashMap<&KbId, LinkCandidate> = HashMap::new();
    for (surface, ids) in kb.aliases() {
        let Ok(Some(m)) = fuzzy_find(surface, question_text, threshold) else {
            continue;
        };
        for id in ids {
            let cand = LinkCandidate {
                entity: id.clone(),
                start: m.start,
                end: m.end,
                score: m.score,
            };
            match best.get(id) {
                Some(prev) if candidate_order(&cand, prev) != Ordering::Less => {}
                _ => {
                    best.insert(id, cand);
                }
            }
        }
    }
    let mut out: Vec<LinkCandidate> = best.into_values().collect();
    out.sort_by(candidate_order);
    out.truncate(k);
    out
}

/// Fraction of results whose top `k` candidates contain a gold entity. Zero
/// for an empty result list.
pub fn recall_at_k<S: Real>(
    results: &[LinkResult],
    gold: &BTreeMap<String, HashSet<KbId>>,
    k: usize,
) -> Result<S, LinkError> {
    let mut hits = 0usize;
    for r in results {
        let g = gold
            .get(&r.question_id)
            .ok_or_else(|| LinkError::GoldMismatch(r.question_id.clone()))?;
        if r.candidates.iter().take(k).any(|c| g.contains(&c.entity)) {
            hits += 1;
        }
    }
    Ok(crate::num::ratio(hits, results.len()))
}

#[derive(Deserialize)]
struct LinksRecord {
    id: String,
    candidates: Vec<LinksEntry>,
}

#[derive(Deserialize)]
struct LinksEntry {
    entity: KbId,
    score: Score,
}

/// Parses a precomputed links file: one `{"id", "candidates": [{"entity",
/// "score"}]}` object per line. Candidates are re-sorted by descending
/// score, keeping file order among equal scores.
pub fn read_links<R: BufRead>(reader: R) -> Result<BTreeMap<String, LinkResult>, LinkError> {
    let mut out = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LinksRecord = serde_json::from_str(&line).map_err(|e| LinkError::Schema {
            line: i + 1,
            message: e.to_string(),
        })?;
        let mut candidates: Vec<LinkCandidate> = rec
            .candidates
            .into_iter()
            .map(|c| LinkCandidate {
                entity: c.entity,
                start: 0,
                end: 0,
                score: c.score,
            })
            .collect();
        candidates.sort_by(|a, b| b.score.total_cmp(&a.score));
        let mut seen = HashSet::new();
        candidates.retain(|c| seen.insert(c.entity.clone()));
        out.insert(
            rec.id.clone(),
            LinkResult {
                question_id: rec.id,
                candidates,
            },
        );
    }
    Ok(out)
}

pub fn load_links(path: &Path) -> Result<BTreeMap<String, LinkResult>, LinkError> {
    read_links(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// A configured linker.
#[derive(Debug, Clone)]
pub enum Linker {
    Golden,
    Surface {
        k: usize,
        threshold: Score,
    },
    Precomputed {
        links: BTreeMap<String, LinkResult>,
        k: usize,
    },
}

impl Linker {
    pub fn mode(&self) -> LinkerMode {
        match self {
            Linker::Golden => LinkerMode::Golden,
            Linker::Surface { .. } => LinkerMode::Surface,
            Linker::Precomputed { .. } => LinkerMode::Precomputed,
        }
    }

    pub fn link(&self, question: &Question, kb: &KnowledgeBase) -> Result<LinkResult, LinkError> {
        match self {
            Linker::Golden => link_golden(question),
            Linker::Surface { k, threshold } => Ok(LinkResult {
                question_id: question.id.clone(),
                candidates: link_surface(&question.text, kb, *k, *threshold),
            }),
            Linker::Precomputed { links, k } => {
                let mut r = links
                    .get(&question.id)
                    .cloned()
                    .ok_or_else(|| LinkError::MissingLinks(question.id.clone()))?;
                r.candidates.truncate(*k);
                Ok(r)
            }
        }
    }
}
