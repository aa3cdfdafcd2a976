//! Turns subgraph facts into sentences.
//!
//! Three modes produce the same [`VerbalizedUnit`] contract:
//!
//! * `Concat` joins head, humanized relation and tail ("Walmart industry
//!   Retail-Store .").
//! * `Template` merges triples sharing a head and relation into one sentence
//!   ("The industry of Walmart is Retail-Store, Variety Stores and Department
//!   Stores.") and renders events as "Kellan Lutz: film Twilight; character
//!   Emmett Cullen.".
//! * `Remote` asks the model server's `/verbalize` endpoint and keeps a
//!   generated sentence only if every expected object can still be found in
//!   it; otherwise the template sentence is used for that unit.
//!
//! Every object mention's `surface` occurs verbatim in the unit text.

use crate::kb::{KbId, KbObject, KnowledgeBase, Relation, Triple};
use crate::passage::fuzzy::fuzzy_find;
use crate::remote::{ModelClient, RemoteError, WireTriple, WireUnit};
use crate::subgraph::{EventFact, Subgraph};
use crate::text::char_slice;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerbalizeError {
    #[error("no surface form for {0}")]
    MissingSurface(KbId),
    #[error(transparent)]
    Remote(#[from] RemoteError),
}

/// A KB object mentioned in a sentence, with the exact text used for it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectMention {
    pub object: KbObject,
    pub surface: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerbalizedUnit {
    pub text: String,
    pub sources: Vec<Triple>,
    pub objects: Vec<ObjectMention>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerbalizerMode {
    Concat,
    Template,
    Remote,
}

impl FromStr for VerbalizerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "concat" => Ok(VerbalizerMode::Concat),
            "template" => Ok(VerbalizerMode::Template),
            "remote" => Ok(VerbalizerMode::Remote),
            other => Err(format!("unknown verbalizer mode '{other}'")),
        }
    }
}

impl fmt::Display for VerbalizerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerbalizerMode::Concat => "concat",
            VerbalizerMode::Template => "template",
            VerbalizerMode::Remote => "remote",
        })
    }
}

/// Preferred surface forms of entities.
pub trait SurfaceLookup {
    fn entity_surface(&self, id: &KbId) -> Option<&str>;
}

impl SurfaceLookup for KnowledgeBase {
    fn entity_surface(&self, id: &KbId) -> Option<&str> {
        self.name(id)
    }
}

impl SurfaceLookup for HashMap<KbId, String> {
    fn entity_surface(&self, id: &KbId) -> Option<&str> {
        self.get(id).map(String::as_str)
    }
}

impl SurfaceLookup for BTreeMap<KbId, String> {
    fn entity_surface(&self, id: &KbId) -> Option<&str> {
        self.get(id).map(String::as_str)
    }
}

/// Last path segment, with underscores and camelCase humps turned into
/// spaces, lowercased: `government.government_position_held.office_holder`
/// becomes "office holder".
pub fn humanize_relation(rel: &Relation) -> String {
    let last = rel.segments().last().unwrap_or(rel.as_str());
    let mut out = String::with_capacity(last.len() + 4);
    let mut prev: Option<char> = None;
    for c in last.chars() {
        if c == '_' || c == '-' {
            out.push(' ');
        } else {
            if c.is_uppercase() && prev.is_some_and(|p| p.is_lowercase() || p.is_ascii_digit()) {
                out.push(' ');
            }
            out.extend(c.to_lowercase());
        }
        prev = Some(c);
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn surface_of<'a, L: SurfaceLookup + ?Sized>(obj: &'a KbObject, names: &'a L) -> Result<&'a str, VerbalizeError> {
    match obj {
        KbObject::Entity { id } => names
            .entity_surface(id)
            .ok_or_else(|| VerbalizeError::MissingSurface(id.clone())),
        KbObject::Literal(lit) => Ok(&lit.text),
    }
}

fn entity_surface<'a, L: SurfaceLookup + ?Sized>(id: &KbId, names: &'a L) -> Result<&'a str, VerbalizeError> {
    names
        .entity_surface(id)
        .ok_or_else(|| VerbalizeError::MissingSurface(id.clone()))
}

fn push_mention(objects: &mut Vec<ObjectMention>, object: KbObject, surface: &str) {
    if !objects.iter().any(|m| m.object == object) {
        objects.push(ObjectMention {
            object,
            surface: surface.to_string(),
        });
    }
}

/// "a", "a and b", "a, b and c".
fn join_list(items: &[&str]) -> String {
    match items {
        [] => String::new(),
        [one] => one.to_string(),
        [init @ .., last] => format!("{} and {}", init.join(", "), last),
    }
}

/// A unit of verbalization input: one or more triples sharing head and
/// relation, or an event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FactGroup {
    Facts(Vec<Triple>),
    Event(EventFact),
}

impl FactGroup {
    pub fn sources(&self) -> Vec<Triple> {
        match self {
            FactGroup::Facts(ts) => ts.clone(),
            FactGroup::Event(ev) => std::iter::once(ev.incoming.clone())
                .chain(ev.fields.iter().cloned())
                .collect(),
        }
    }
}

/// Groups plain triples by `(head, relation)` in first-appearance order,
/// followed by the events.
pub fn group_facts(sg: &Subgraph) -> Vec<FactGroup> {
    let mut groups: Vec<Vec<Triple>> = Vec::new();
    let mut index: HashMap<(&KbId, &Relation), usize> = HashMap::new();
    for t in &sg.plain_triples {
        match index.get(&(&t.head, &t.relation)) {
            Some(&i) => groups[i].push(t.clone()),
            None => {
                index.insert((&t.head, &t.relation), groups.len());
                groups.push(vec![t.clone()]);
            }
        }
    }
    groups
        .into_iter()
        .map(FactGroup::Facts)
        .chain(sg.events.iter().cloned().map(FactGroup::Event))
        .collect()
}

/// "<head> <relation> <tail> ."
pub fn verbalize_concat<L: SurfaceLookup + ?Sized>(t: &Triple, names: &L) -> Result<VerbalizedUnit, VerbalizeError> {
    let head = entity_surface(&t.head, names)?;
    let tail = surface_of(&t.tail, names)?;
    let mut objects = Vec::new();
    push_mention(&mut objects, t.head.clone().into(), head);
    push_mention(&mut objects, t.tail.clone(), tail);
    Ok(VerbalizedUnit {
        text: format!("{head} {} {tail} .", humanize_relation(&t.relation)),
        sources: vec![t.clone()],
        objects,
    })
}

/// Concatenation for an event: anchor, incoming relation, then each field's
/// relation and value.
pub fn verbalize_event_concat<L: SurfaceLookup + ?Sized>(
    ev: &EventFact,
    names: &L,
) -> Result<VerbalizedUnit, VerbalizeError> {
    let anchor = ev.anchor();
    let anchor_surface = entity_surface(anchor, names)?;
    let mut objects = Vec::new();
    push_mention(&mut objects, anchor.clone().into(), anchor_surface);
    let mut parts = vec![anchor_surface.to_string(), humanize_relation(&ev.incoming.relation)];
    for f in &ev.fields {
        let value = surface_of(&f.tail, names)?;
        parts.push(humanize_relation(&f.relation));
        parts.push(value.to_string());
        push_mention(&mut objects, f.tail.clone(), value);
    }
    parts.push(".".into());
    Ok(VerbalizedUnit {
        text: parts.join(" "),
        sources: FactGroup::Event(ev.clone()).sources(),
        objects,
    })
}

/// "The <relation> of <head> is <t1>, <t2> and <t3>." for triples sharing a
/// head and relation.
pub fn verbalize_facts_template<L: SurfaceLookup + ?Sized>(
    triples: &[Triple],
    names: &L,
) -> Result<VerbalizedUnit, VerbalizeError> {
    let first = triples.first().expect("fact group is never empty");
    debug_assert!(triples
        .iter()
        .all(|t| t.head == first.head && t.relation == first.relation));
    let head = entity_surface(&first.head, names)?;
    let mut objects = Vec::new();
    push_mention(&mut objects, first.head.clone().into(), head);
    let mut tails = Vec::with_capacity(triples.len());
    for t in triples {
        let s = surface_of(&t.tail, names)?;
        tails.push(s);
        push_mention(&mut objects, t.tail.clone(), s);
    }
    Ok(VerbalizedUnit {
        text: format!(
            "The {} of {head} is {}.",
            humanize_relation(&first.relation),
            join_list(&tails)
        ),
        sources: triples.to_vec(),
        objects,
    })
}

/// "<anchor>: <field relation> <value>; <field relation> <value>."
pub fn verbalize_event_template<L: SurfaceLookup + ?Sized>(
    ev: &EventFact,
    names: &L,
) -> Result<VerbalizedUnit, VerbalizeError> {
    let anchor = ev.anchor();
    let anchor_surface = entity_surface(anchor, names)?;
    let mut objects = Vec::new();
    push_mention(&mut objects, anchor.clone().into(), anchor_surface);
    let mut fields = Vec::with_capacity(ev.fields.len());
    for f in &ev.fields {
        let value = surface_of(&f.tail, names)?;
        fields.push(format!("{} {value}", humanize_relation(&f.relation)));
        push_mention(&mut objects, f.tail.clone(), value);
    }
    Ok(VerbalizedUnit {
        text: format!("{anchor_surface}: {}.", fields.join("; ")),
        sources: FactGroup::Event(ev.clone()).sources(),
        objects,
    })
}

pub fn verbalize_template<L: SurfaceLookup + ?Sized>(
    group: &FactGroup,
    names: &L,
) -> Result<VerbalizedUnit, VerbalizeError> {
    match group {
        FactGroup::Facts(ts) => verbalize_facts_template(ts, names),
        FactGroup::Event(ev) => verbalize_event_template(ev, names),
    }
}

fn wire_unit<L: SurfaceLookup + ?Sized>(group: &FactGroup, names: &L) -> WireUnit {
    let render = |t: &Triple| WireTriple {
        head: names.entity_surface(&t.head).unwrap_or(t.head.as_str()).to_string(),
        relation: t.relation.to_string(),
        tail: match &t.tail {
            KbObject::Entity { id } => names.entity_surface(id).unwrap_or(id.as_str()).to_string(),
            KbObject::Literal(lit) => lit.text.clone(),
        },
        tail_is_literal: matches!(t.tail, KbObject::Literal(_)),
    };
    match group {
        FactGroup::Facts(ts) => WireUnit {
            triples: ts.iter().map(render).collect(),
            pivot: None,
        },
        FactGroup::Event(ev) => WireUnit {
            triples: group.sources().iter().map(render).collect(),
            pivot: Some(ev.pivot.to_string()),
        },
    }
}

/// Accepts `sentence` for `expected` when every object surface can be found
/// in it at `threshold`; mentions are rewritten to the text actually found.
pub fn validate_generated(
    sentence: &str,
    expected: &VerbalizedUnit,
    threshold: crate::Score,
) -> Option<VerbalizedUnit> {
    if sentence.trim().is_empty() {
        return None;
    }
    let mut objects = Vec::with_capacity(expected.objects.len());
    for m in &expected.objects {
        let found = fuzzy_find(&m.surface, sentence, threshold).ok()??;
        objects.push(ObjectMention {
            object: m.object.clone(),
            surface: char_slice(sentence, found.start, found.end).to_string(),
        });
    }
    Some(VerbalizedUnit {
        text: sentence.to_string(),
        sources: expected.sources.clone(),
        objects,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerbalizeStats {
    /// Groups dropped because an entity had no surface form.
    pub skipped: usize,
    /// Remote sentences replaced by the template sentence.
    pub fallbacks: usize,
}

#[derive(Debug, Clone)]
pub enum Verbalizer {
    Concat,
    Template,
    Remote {
        client: ModelClient,
        threshold: crate::Score,
    },
}

impl Verbalizer {
    pub fn mode(&self) -> VerbalizerMode {
        match self {
            Verbalizer::Concat => VerbalizerMode::Concat,
            Verbalizer::Template => VerbalizerMode::Template,
            Verbalizer::Remote { .. } => VerbalizerMode::Remote,
        }
    }

    /// Verbalizes a whole subgraph. Groups with missing surface forms are
    /// skipped and counted rather than failing the question.
    pub fn verbalize_subgraph<L: SurfaceLookup + ?Sized>(
        &self,
        sg: &Subgraph,
        names: &L,
    ) -> Result<(Vec<VerbalizedUnit>, VerbalizeStats), VerbalizeError> {
        let mut stats = VerbalizeStats::default();
        let mut units = Vec::new();
        match self {
            Verbalizer::Concat => {
                for t in &sg.plain_triples {
                    match verbalize_concat(t, names) {
                        Ok(u) => units.push(u),
                        Err(_) => stats.skipped += 1,
                    }
                }
                for ev in &sg.events {
                    match verbalize_event_concat(ev, names) {
                        Ok(u) => units.push(u),
                        Err(_) => stats.skipped += 1,
                    }
                }
            }
            Verbalizer::Template => {
                for g in group_facts(sg) {
                    match verbalize_template(&g, names) {
                        Ok(u) => units.push(u),
                        Err(_) => stats.skipped += 1,
                    }
                }
            }
            Verbalizer::Remote { client, threshold } => {
                let mut groups = Vec::new();
                let mut fallbacks = Vec::new();
                for g in group_facts(sg) {
                    match verbalize_template(&g, names) {
                        Ok(u) => {
                            groups.push(g);
                            fallbacks.push(u);
                        }
                        Err(_) => stats.skipped += 1,
                    }
                }
                let (remote_units, fb) = verbalize_remote(&groups, &fallbacks, names, client, *threshold)?;
                stats.fallbacks = fb;
                units = remote_units;
            }
        }
        Ok((units, stats))
    }
}

/// Sends `groups` to `/verbalize` and validates each sentence against the
/// matching template unit in `templates`. Returns the units and the number
/// of template fallbacks.
pub fn verbalize_remote<L: SurfaceLookup + ?Sized>(
    groups: &[FactGroup],
    templates: &[VerbalizedUnit],
    names: &L,
    client: &ModelClient,
    threshold: crate::Score,
) -> Result<(Vec<VerbalizedUnit>, usize), VerbalizeError> {
    assert_eq!(groups.len(), templates.len());
    if groups.is_empty() {
        return Ok((Vec::new(), 0));
    }
    let wire: Vec<WireUnit> = groups.iter().map(|g| wire_unit(g, names)).collect();
    let sentences = client.verbalize(&wire)?;
    let mut fallbacks = 0;
    let units = sentences
        .iter()
        .zip(templates)
        .map(|(s, tmpl)| {
            validate_generated(s, tmpl, threshold).unwrap_or_else(|| {
                fallbacks += 1;
                tmpl.clone()
            })
        })
        .collect();
    Ok((units, fallbacks))
}
