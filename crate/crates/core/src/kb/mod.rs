//! Immutable triple store with head/tail adjacency, names, aliases and CVT
//! markers.
//!
//! A [`KnowledgeBase`] is built once (from an N-Triples dump, a snapshot, or
//! the [`KbBuilder`]) and is read-only afterwards, so it can be shared across
//! worker threads freely.

mod load;
pub mod ntriples;
pub mod snapshot;
mod types;

pub use load::{load_ntriples, load_reader, LoadReport, PreprocessFilter};
pub use types::{KbId, KbObject, Literal, Relation, Triple};

use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KbError {
    #[error("malformed N-Triples at line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("unknown entity {0}")]
    UnknownEntity(KbId),
    #[error("no triple survives pruning")]
    EmptyResult,
    #[error("invalid snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Out,
    In,
    Both,
}

/// How CVT (compound value type) nodes are recognised.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CvtPolicy {
    /// Entity tails of these relations are CVT nodes.
    Relations(BTreeSet<Relation>),
    /// Unnamed entities with at least `min_out` outgoing triples.
    UnnamedFanout { min_out: usize },
}

impl Default for CvtPolicy {
    fn default() -> Self {
        CvtPolicy::UnnamedFanout { min_out: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KbStats {
    pub triples: usize,
    pub entities: usize,
    pub relations: usize,
    pub literal_triples: usize,
    pub names: usize,
    pub surface_forms: usize,
    pub cvt_nodes: usize,
}

#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    triples: Vec<Triple>,
    /// Buckets hold indices into `triples`, pre-sorted in neighbor order.
    by_head: HashMap<KbId, Vec<usize>>,
    by_tail: HashMap<KbId, Vec<usize>>,
    names: BTreeMap<KbId, String>,
    aliases: BTreeMap<String, BTreeSet<KbId>>,
    cvt_markers: BTreeSet<KbId>,
    entities: HashSet<KbId>,
}

impl KnowledgeBase {
    pub fn builder() -> KbBuilder {
        KbBuilder::default()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn contains(&self, id: &KbId) -> bool {
        self.entities.contains(id)
    }

    pub fn entities(&self) -> impl Iterator<Item = &KbId> {
        self.entities.iter()
    }

    pub fn name(&self, id: &KbId) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }

    pub fn names(&self) -> &BTreeMap<KbId, String> {
        &self.names
    }

    /// Surface form -> entities carrying it (names included).
    pub fn aliases(&self) -> &BTreeMap<String, BTreeSet<KbId>> {
        &self.aliases
    }

    pub fn cvt_markers(&self) -> &BTreeSet<KbId> {
        &self.cvt_markers
    }

    pub fn is_cvt(&self, id: &KbId) -> bool {
        self.cvt_markers.contains(id)
    }

    pub fn relations(&self) -> BTreeSet<Relation> {
        self.triples.iter().map(|t| t.relation.clone()).collect()
    }

    /// Display text of a tail: the entity name (falling back to the id) or
    /// the literal's lexical form.
    pub fn object_surface<'a>(&'a self, obj: &'a KbObject) -> &'a str {
        match obj {
            KbObject::Entity { id } => self.name(id).unwrap_or(id.as_str()),
            KbObject::Literal(lit) => &lit.text,
        }
    }

    /// Triples touching `id`, ordered by relation id then tail surface form.
    pub fn neighbors(&self, id: &KbId, direction: Direction) -> Result<Vec<&Triple>, KbError> {
        if !self.contains(id) {
            return Err(KbError::UnknownEntity(id.clone()));
        }
        let empty = Vec::new();
        let out = self.by_head.get(id).unwrap_or(&empty);
        let inc = self.by_tail.get(id).unwrap_or(&empty);
        let indices: Vec<usize> = match direction {
            Direction::Out => out.clone(),
            Direction::In => inc.clone(),
            Direction::Both => {
                // Both buckets are sorted by the same key; merge and drop
                // self-loops seen on both sides.
                let mut merged = Vec::with_capacity(out.len() + inc.len());
                let (mut i, mut j) = (0, 0);
                while i < out.len() || j < inc.len() {
                    let take_out = match (out.get(i), inc.get(j)) {
                        (Some(&a), Some(&b)) => self.order_key(a) <= self.order_key(b),
                        (Some(_), None) => true,
                        _ => false,
                    };
                    let next = if take_out {
                        i += 1;
                        out[i - 1]
                    } else {
                        j += 1;
                        inc[j - 1]
                    };
                    if merged.last() != Some(&next) {
                        merged.push(next);
                    }
                }
                merged
            }
        };
        Ok(indices.into_iter().map(|i| &self.triples[i]).collect())
    }

    fn order_key(&self, idx: usize) -> (&str, &str, &str, &str, usize) {
        let t = &self.triples[idx];
        (
            t.relation.as_str(),
            self.object_surface(&t.tail),
            self.name(&t.head).unwrap_or(t.head.as_str()),
            t.head.as_str(),
            idx,
        )
    }

    /// Keeps only triples whose relation is in `keep`.
    pub fn prune_to_relations(&self, keep: &BTreeSet<Relation>) -> Result<KnowledgeBase, KbError> {
        let triples: Vec<Triple> = self
            .triples
            .iter()
            .filter(|t| keep.contains(&t.relation))
            .cloned()
            .collect();
        if triples.is_empty() {
            return Err(KbError::EmptyResult);
        }
        Ok(KnowledgeBase::from_parts(
            triples,
            self.names.clone(),
            self.aliases.clone(),
            self.cvt_markers.clone(),
        ))
    }

    /// Adds CVT markers according to `policy`. Markers only land on nodes that
    /// head at least one triple; applying the same policy twice is a no-op.
    pub fn mark_cvt(mut self, policy: &CvtPolicy) -> KnowledgeBase {
        let found: Vec<KbId> = match policy {
            CvtPolicy::Relations(rels) => self
                .triples
                .iter()
                .filter(|t| rels.contains(&t.relation))
                .filter_map(|t| t.tail.as_entity())
                .filter(|id| self.by_head.contains_key(*id))
                .cloned()
                .collect(),
            CvtPolicy::UnnamedFanout { min_out } => self
                .by_head
                .iter()
                .filter(|(id, bucket)| bucket.len() >= *min_out && !self.names.contains_key(*id))
                .map(|(id, _)| id.clone())
                .collect(),
        };
        self.cvt_markers.extend(found);
        self
    }

    pub fn stats(&self) -> KbStats {
        KbStats {
            triples: self.triples.len(),
            entities: self.entities.len(),
            relations: self.relations().len(),
            literal_triples: self
                .triples
                .iter()
                .filter(|t| matches!(t.tail, KbObject::Literal(_)))
                .count(),
            names: self.names.len(),
            surface_forms: self.aliases.len(),
            cvt_nodes: self.cvt_markers.len(),
        }
    }

    pub(crate) fn from_parts(
        triples: Vec<Triple>,
        names: BTreeMap<KbId, String>,
        aliases: BTreeMap<String, BTreeSet<KbId>>,
        cvt_markers: BTreeSet<KbId>,
    ) -> KnowledgeBase {
        let mut kb = KnowledgeBase {
            triples,
            names,
            aliases,
            ..Default::default()
        };
        for (idx, t) in kb.triples.iter().enumerate() {
            kb.by_head.entry(t.head.clone()).or_default().push(idx);
            if let Some(tail) = t.tail.as_entity() {
                kb.by_tail.entry(tail.clone()).or_default().push(idx);
            }
        }
        kb.entities = kb
            .by_head
            .keys()
            .chain(kb.by_tail.keys())
            .chain(kb.names.keys())
            .chain(kb.aliases.values().flatten())
            .cloned()
            .collect();
        kb.cvt_markers = cvt_markers
            .into_iter()
            .filter(|id| kb.by_head.contains_key(id))
            .collect();

        let mut by_head = std::mem::take(&mut kb.by_head);
        let mut by_tail = std::mem::take(&mut kb.by_tail);
        for bucket in by_head.values_mut().chain(by_tail.values_mut()) {
            bucket.sort_by(|&a, &b| kb.order_key(a).cmp(&kb.order_key(b)));
        }
        kb.by_head = by_head;
        kb.by_tail = by_tail;
        kb
    }
}

/// Incremental construction of a [`KnowledgeBase`]. Duplicate triples are
/// dropped; names also register as aliases.
#[derive(Debug, Default)]
pub struct KbBuilder {
    triples: Vec<Triple>,
    seen: HashSet<Triple>,
    names: BTreeMap<KbId, String>,
    aliases: BTreeMap<String, BTreeSet<KbId>>,
    cvt_markers: BTreeSet<KbId>,
}

impl KbBuilder {
    pub fn triple(&mut self, t: Triple) -> &mut Self {
        if self.seen.insert(t.clone()) {
            self.triples.push(t);
        }
        self
    }

    pub fn entity_triple(&mut self, head: &str, relation: &str, tail: &str) -> &mut Self {
        self.triple(Triple::new(head, relation, KbObject::entity(tail)))
    }

    pub fn literal_triple(&mut self, head: &str, relation: &str, lit: Literal) -> &mut Self {
        self.triple(Triple::new(head, relation, KbObject::Literal(lit)))
    }

    /// Sets the preferred surface form. The first name given for an entity
    /// wins.
    pub fn name(&mut self, id: &str, name: &str) -> &mut Self {
        let id = KbId::new(id);
        self.aliases.entry(name.to_string()).or_default().insert(id.clone());
        self.names.entry(id).or_insert_with(|| name.to_string());
        self
    }

    pub fn alias(&mut self, id: &str, surface: &str) -> &mut Self {
        self.aliases
            .entry(surface.to_string())
            .or_default()
            .insert(KbId::new(id));
        self
    }

    pub fn cvt(&mut self, id: &str) -> &mut Self {
        self.cvt_markers.insert(KbId::new(id));
        self
    }

    pub fn build(&mut self) -> KnowledgeBase {
        let b = std::mem::take(self);
        KnowledgeBase::from_parts(b.triples, b.names, b.aliases, b.cvt_markers)
    }
}
