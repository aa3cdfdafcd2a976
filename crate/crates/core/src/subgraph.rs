//! Question-specific subgraph extraction.
//!
//! Breadth-first expansion over both edge directions from the topic
//! entities. A CVT-marked node reached from an ordinary node is not expanded
//! like other nodes; instead its outgoing triples are pulled in as one
//! [`EventFact`] in the same step, so the values behind the event are
//! available one hop earlier than a plain BFS would reach them. Events do
//! not chain: a CVT found among an event's fields is not opened.
//!
//! Distances: an ordinary node reached over an edge from a node at distance
//! `d` sits at `d + 1`; the event pivot sits at `d + 1` and the event's field
//! values at `d + 2`. Only ordinary nodes at distance `< hops` are expanded.

use crate::kb::{Direction, KbError, KbId, KnowledgeBase, Triple};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use thiserror::Error;

pub const DEFAULT_MAX_TRIPLES: usize = 2000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SubgraphError {
    #[error("unknown entity {0}")]
    UnknownEntity(KbId),
    #[error("no topic entities given")]
    EmptyTopics,
    #[error("hop limit must be positive")]
    ZeroHops,
}

/// A CVT node with the edge that reached it and its outgoing triples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventFact {
    pub pivot: KbId,
    pub incoming: Triple,
    pub fields: Vec<Triple>,
}

impl EventFact {
    /// The non-pivot endpoint of the incoming edge.
    pub fn anchor(&self) -> &KbId {
        if self.incoming.head == self.pivot {
            self.incoming.tail.as_entity().unwrap_or(&self.incoming.head)
        } else {
            &self.incoming.head
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subgraph {
    pub topics: Vec<KbId>,
    pub plain_triples: Vec<Triple>,
    pub events: Vec<EventFact>,
    pub hop_limit: usize,
}

impl Subgraph {
    /// Plain triples, plus each event's fields and incoming edge.
    pub fn triple_count(&self) -> usize {
        self.plain_triples.len() + self.events.iter().map(|e| e.fields.len() + 1).sum::<usize>()
    }

    pub fn all_triples(&self) -> impl Iterator<Item = &Triple> {
        self.plain_triples.iter().chain(
            self.events
                .iter()
                .flat_map(|e| std::iter::once(&e.incoming).chain(e.fields.iter())),
        )
    }

    pub fn is_empty(&self) -> bool {
        self.plain_triples.is_empty() && self.events.is_empty()
    }
}

fn relax(id: &KbId, d: usize, dist: &mut HashMap<KbId, usize>, order: &mut Vec<KbId>) {
    match dist.get_mut(id) {
        Some(old) => *old = (*old).min(d),
        None => {
            dist.insert(id.clone(), d);
            order.push(id.clone());
        }
    }
}

pub fn extract(
    kb: &KnowledgeBase,
    topics: &[KbId],
    hops: usize,
    max_triples: usize,
) -> Result<Subgraph, SubgraphError> {
    if topics.is_empty() {
        return Err(SubgraphError::EmptyTopics);
    }
    if hops == 0 {
        return Err(SubgraphError::ZeroHops);
    }
    let mut unique_topics = Vec::new();
    for t in topics {
        if !kb.contains(t) {
            return Err(SubgraphError::UnknownEntity(t.clone()));
        }
        if !unique_topics.contains(t) {
            unique_topics.push(t.clone());
        }
    }
    let topic_set: HashSet<&KbId> = unique_topics.iter().collect();
    let is_pivot = |id: &KbId| kb.is_cvt(id) && !topic_set.contains(id);

    let mut sg = Subgraph {
        topics: unique_topics.clone(),
        plain_triples: Vec::new(),
        events: Vec::new(),
        hop_limit: hops,
    };
    let mut dist: HashMap<KbId, usize> = HashMap::new();
    let mut order: Vec<KbId> = Vec::new();
    for t in &unique_topics {
        relax(t, 0, &mut dist, &mut order);
    }

    let mut emitted: HashSet<&Triple> = HashSet::new();
    let mut pivots_seen: HashSet<KbId> = HashSet::new();
    let mut count = 0usize;

    for layer in 0..hops {
        let frontier: Vec<KbId> = order.iter().filter(|id| dist[*id] == layer).cloned().collect();
        for node in &frontier {
            for t in neighbors(kb, node) {
                let other = t.other_end(node);
                match other {
                    Some(y) if is_pivot(y) => {
                        if pivots_seen.insert(y.clone()) {
                            let fields: Vec<&Triple> = neighbors_out(kb, y)
                                .into_iter()
                                .filter(|f| *f != t && !emitted.contains(f))
                                .collect();
                            if fields.is_empty() {
                                if !emitted.contains(t) {
                                    if count + 1 > max_triples {
                                        return Ok(sg);
                                    }
                                    emitted.insert(t);
                                    sg.plain_triples.push(t.clone());
                                    count += 1;
                                }
                                continue;
                            }
                            if count + 1 + fields.len() > max_triples {
                                return Ok(sg);
                            }
                            emitted.insert(t);
                            emitted.extend(fields.iter().copied());
                            count += 1 + fields.len();
                            for f in &fields {
                                if let Some(z) = f.tail.as_entity() {
                                    if !is_pivot(z) {
                                        relax(z, layer + 2, &mut dist, &mut order);
                                    }
                                }
                            }
                            sg.events.push(EventFact {
                                pivot: y.clone(),
                                incoming: t.clone(),
                                fields: fields.into_iter().cloned().collect(),
                            });
                        } else if !emitted.contains(t) {
                            if count + 1 > max_triples {
                                return Ok(sg);
                            }
                            emitted.insert(t);
                            sg.plain_triples.push(t.clone());
                            count += 1;
                        }
                    }
                    _ => {
                        if !emitted.contains(t) {
                            if count + 1 > max_triples {
                                return Ok(sg);
                            }
                            emitted.insert(t);
                            sg.plain_triples.push(t.clone());
                            count += 1;
                        }
                        if let Some(y) = other {
                            relax(y, layer + 1, &mut dist, &mut order);
                        }
                    }
                }
            }
        }
    }
    Ok(sg)
}

fn neighbors<'a>(kb: &'a KnowledgeBase, id: &KbId) -> Vec<&'a Triple> {
    kb.neighbors(id, Direction::Both)
        .unwrap_or_else(|e: KbError| unreachable!("frontier nodes come from the kb: {e}"))
}

fn neighbors_out<'a>(kb: &'a KnowledgeBase, id: &KbId) -> Vec<&'a Triple> {
    kb.neighbors(id, Direction::Out).unwrap_or_default()
}
