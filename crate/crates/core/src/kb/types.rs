use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

/// Opaque KB identifier (a Freebase MID, a DBpedia IRI, a blank node label).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KbId(Arc<str>);

impl KbId {
    pub fn new(id: impl AsRef<str>) -> Self {
        KbId(Arc::from(id.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for KbId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KbId({})", self.0)
    }
}

impl fmt::Display for KbId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for KbId {
    fn from(s: &str) -> Self {
        KbId::new(s)
    }
}

/// A literal value. `text` is the raw lexical form; `datatype` is the local
/// name of the datatype IRI (`date` for `xsd:date`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datatype: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
}

impl Literal {
    pub fn plain(text: impl Into<String>) -> Self {
        Literal {
            text: text.into(),
            datatype: None,
            lang: None,
        }
    }

    pub fn typed(text: impl Into<String>, datatype: impl Into<String>) -> Self {
        Literal {
            text: text.into(),
            datatype: Some(datatype.into()),
            lang: None,
        }
    }
}

/// Tail position of a triple: an entity or a literal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KbObject {
    Entity { id: KbId },
    Literal(Literal),
}

impl KbObject {
    pub fn entity(id: impl AsRef<str>) -> Self {
        KbObject::Entity { id: KbId::new(id) }
    }

    pub fn as_entity(&self) -> Option<&KbId> {
        match self {
            KbObject::Entity { id } => Some(id),
            KbObject::Literal(_) => None,
        }
    }

    /// Stable textual key, used for deterministic tie-breaking.
    pub fn key(&self) -> String {
        match self {
            KbObject::Entity { id } => format!("e:{id}"),
            KbObject::Literal(lit) => format!("l:{}", lit.text),
        }
    }
}

impl From<KbId> for KbObject {
    fn from(id: KbId) -> Self {
        KbObject::Entity { id }
    }
}

/// A relation identified by its dotted or slashed path, e.g. `film.actor.film`.
///
/// Equality, ordering and hashing consider only `id`.
#[derive(Clone)]
pub struct Relation {
    id: Arc<str>,
    pub label: Option<String>,
}

impl Relation {
    pub fn new(id: impl AsRef<str>) -> Self {
        Relation {
            id: Arc::from(id.as_ref()),
            label: None,
        }
    }

    pub fn as_str(&self) -> &str {
        &self.id
    }

    /// Path segments split on `.`, `/` and `#`.
    pub fn segments(&self) -> impl Iterator<Item = &str> {
        self.id.split(['.', '/', '#']).filter(|s| !s.is_empty())
    }
}

impl PartialEq for Relation {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for Relation {}

impl Hash for Relation {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.id.hash(state)
    }
}

impl PartialOrd for Relation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Relation {
    fn cmp(&self, other: &Self) -> Ordering {
        self.id.cmp(&other.id)
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Relation({})", self.id)
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id)
    }
}

impl From<&str> for Relation {
    fn from(s: &str) -> Self {
        Relation::new(s)
    }
}

impl Serialize for Relation {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.id)
    }
}

impl<'de> Deserialize<'de> for Relation {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let id = String::deserialize(deserializer)?;
        if id.is_empty() {
            return Err(serde::de::Error::custom("empty relation id"));
        }
        Ok(Relation::new(id))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub head: KbId,
    pub relation: Relation,
    pub tail: KbObject,
}

impl Triple {
    pub fn new(head: impl AsRef<str>, relation: impl AsRef<str>, tail: KbObject) -> Self {
        Triple {
            head: KbId::new(head),
            relation: Relation::new(relation),
            tail,
        }
    }

    /// The endpoint that is not `node`, if it is an entity. For self-loops
    /// returns `node` itself.
    pub fn other_end(&self, node: &KbId) -> Option<&KbId> {
        if &self.head == node {
            self.tail.as_entity()
        } else if self.tail.as_entity() == Some(node) {
            Some(&self.head)
        } else {
            None
        }
    }
}
