use super::ntriples::{parse_line, Term};
use super::{KbBuilder, KbError, KbObject, KnowledgeBase, Literal, Triple};
use flate2::read::MultiGzDecoder;
use serde::Serialize;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

/// Which statements of a dump become triples, names or aliases.
///
/// Relation patterns are prefixes matched against the relation id after
/// `strip_prefixes` has been applied. Name and alias relations are matched
/// first and never reach the triple set.
#[derive(Debug, Clone, Default)]
pub struct PreprocessFilter {
    pub deny: Vec<String>,
    /// When non-empty, a relation must match one of these prefixes.
    pub allow: Vec<String>,
    pub name_relation: Option<String>,
    pub alias_relations: Vec<String>,
    /// Language tags accepted for names and aliases; empty accepts all.
    pub name_languages: Vec<String>,
    /// Leading IRI text removed from every id (first match wins).
    pub strip_prefixes: Vec<String>,
    /// Drop triples whose tail is a literal.
    pub object_properties_only: bool,
    /// Fail on the first malformed line instead of skipping it.
    pub strict: bool,
}

impl PreprocessFilter {
    /// Freebase-style dump: `ns:` ids, `type.object.name` names,
    /// `common.topic.alias` aliases, bookkeeping relations removed.
    pub fn freebase() -> Self {
        PreprocessFilter {
            deny: [
                "type.object.key",
                "type.object.type",
                "type.type.instance",
                "common.topic.description",
                "common.topic.topic_equivalent_webpage",
                "common.topic.webpage",
                "common.topic.image",
                "common.document",
                "freebase.",
                "dataworld.",
                "user.",
            ]
            .map(String::from)
            .to_vec(),
            name_relation: Some("type.object.name".into()),
            alias_relations: vec!["common.topic.alias".into()],
            name_languages: vec!["en".into()],
            strip_prefixes: ["http://rdf.freebase.com/ns/", "ns:", "fb:"].map(String::from).to_vec(),
            ..Default::default()
        }
    }

    /// DBpedia-style dump: article categories and ontology object properties,
    /// without page ids and revision bookkeeping.
    pub fn dbpedia() -> Self {
        PreprocessFilter {
            allow: ["http://dbpedia.org/ontology/", "http://purl.org/dc/terms/subject"]
                .map(String::from)
                .to_vec(),
            deny: [
                "http://dbpedia.org/ontology/wikiPage",
                "http://dbpedia.org/ontology/abstract",
                "http://dbpedia.org/ontology/thumbnail",
            ]
            .map(String::from)
            .to_vec(),
            name_relation: Some("http://www.w3.org/2000/01/rdf-schema#label".into()),
            alias_relations: vec!["http://xmlns.com/foaf/0.1/name".into()],
            name_languages: vec!["en".into()],
            strip_prefixes: vec!["http://dbpedia.org/resource/".into()],
            object_properties_only: true,
            ..Default::default()
        }
    }

    fn strip<'a>(&self, id: &'a str) -> &'a str {
        self.strip_prefixes
            .iter()
            .find_map(|p| id.strip_prefix(p.as_str()).filter(|rest| !rest.is_empty()))
            .unwrap_or(id)
    }

    fn keeps_relation(&self, rel: &str) -> bool {
        if self.deny.iter().any(|p| rel.starts_with(p.as_str())) {
            return false;
        }
        self.allow.is_empty() || self.allow.iter().any(|p| rel.starts_with(p.as_str()))
    }

    fn accepts_language(&self, lit: &Literal) -> bool {
        match &lit.lang {
            Some(tag) if !self.name_languages.is_empty() => self.name_languages.iter().any(|l| {
                tag.eq_ignore_ascii_case(l)
                    || tag
                        .to_ascii_lowercase()
                        .starts_with(&format!("{}-", l.to_ascii_lowercase()))
            }),
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub lines: usize,
    pub statements: usize,
    pub malformed: usize,
    pub filtered: usize,
    pub names: usize,
    pub aliases: usize,
    pub duplicates: usize,
}

/// Loads an N-Triples file (plain or gzip-compressed).
pub fn load_ntriples(
    path: impl AsRef<Path>,
    filter: &PreprocessFilter,
) -> Result<(KnowledgeBase, LoadReport), KbError> {
    let mut reader = BufReader::new(File::open(path)?);
    let gz = reader.fill_buf()?.starts_with(&[0x1f, 0x8b]);
    if gz {
        load_reader(BufReader::new(MultiGzDecoder::new(reader)), filter)
    } else {
        load_reader(reader, filter)
    }
}

/// Streams statements line by line; memory per line is bounded by the
/// longest line.
pub fn load_reader<R: BufRead>(
    mut reader: R,
    filter: &PreprocessFilter,
) -> Result<(KnowledgeBase, LoadReport), KbError> {
    let mut builder = KbBuilder::default();
    let mut report = LoadReport::default();
    let mut buf = Vec::new();
    let mut triples_added = 0usize;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        report.lines += 1;
        let line_no = report.lines;
        let parsed = std::str::from_utf8(&buf)
            .map_err(|e| e.to_string())
            .and_then(parse_line);
        let stmt = match parsed {
            Ok(Some(stmt)) => stmt,
            Ok(None) => continue,
            Err(message) if filter.strict => return Err(KbError::MalformedLine { line: line_no, message }),
            Err(_) => {
                report.malformed += 1;
                continue;
            }
        };
        report.statements += 1;

        let head = match &stmt.subject {
            Term::Iri(s) => filter.strip(s).to_string(),
            Term::Blank(s) => s.clone(),
            Term::Literal(_) => unreachable!("parser rejects literal subjects"),
        };
        let Term::Iri(pred) = &stmt.predicate else {
            unreachable!("parser rejects non-IRI predicates")
        };
        let rel = filter.strip(pred);

        let is_name = filter.name_relation.as_deref() == Some(rel);
        let is_alias = filter.alias_relations.iter().any(|a| a == rel);
        if is_name || is_alias {
            if let Term::Literal(lit) = &stmt.object {
                if filter.accepts_language(lit) && !lit.text.trim().is_empty() {
                    if is_name {
                        builder.name(&head, &lit.text);
                        report.names += 1;
                    } else {
                        builder.alias(&head, &lit.text);
                        report.aliases += 1;
                    }
                }
            }
            continue;
        }

        let tail = match stmt.object {
            Term::Iri(s) => KbObject::entity(filter.strip(&s)),
            Term::Blank(s) => KbObject::entity(s),
            Term::Literal(lit) => {
                if filter.object_properties_only || lit.text.trim().is_empty() {
                    report.filtered += 1;
                    continue;
                }
                KbObject::Literal(lit)
            }
        };
        if !filter.keeps_relation(rel) {
            report.filtered += 1;
            continue;
        }
        builder.triple(Triple::new(&head, rel, tail));
        triples_added += 1;
    }
    let kb = builder.build();
    report.duplicates = triples_added - kb.len();
    Ok((kb, report))
}
