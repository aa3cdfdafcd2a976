//! Fixtures and brute-force oracles shared by the integration tests.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::{HashMap, HashSet};
use std::path::PathBuf;
use xkbqa_core::kb::{load_ntriples, CvtPolicy, Literal, PreprocessFilter};
use xkbqa_core::{KbId, KbObject, KnowledgeBase, Question, Triple};

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn toy_kb() -> KnowledgeBase {
    let (kb, _) = load_ntriples(data("toy_kb.nt"), &PreprocessFilter::freebase()).expect("toy kb loads");
    kb.mark_cvt(&CvtPolicy::default())
}

pub fn toy_questions() -> Vec<Question> {
    std::fs::read_to_string(data("toy_questions.jsonl"))
        .expect("toy questions")
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).expect("question line"))
        .collect()
}

/// A random directed multigraph with some CVT-marked nodes.
#[derive(Debug, Clone)]
pub struct RandomGraph {
    pub triples: Vec<Triple>,
    pub cvt: HashSet<KbId>,
    pub nodes: Vec<KbId>,
}

impl RandomGraph {
    pub fn generate<R: Rng>(rng: &mut R, max_nodes: usize, max_edges: usize) -> Self {
        let n = rng.gen_range(2..=max_nodes);
        let ids: Vec<KbId> = (0..n).map(|i| KbId::new(format!("n{i}"))).collect();
        let relations = ["r.a", "r.b", "r.c", "r.d"];
        let edges = rng.gen_range(1..=max_edges);
        let mut seen = HashSet::new();
        let mut triples = Vec::new();
        for i in 0..edges {
            let head = ids.choose(rng).unwrap();
            let rel = relations.choose(rng).unwrap();
            let tail = if rng.gen_bool(0.1) {
                KbObject::Literal(Literal::plain(format!("lit{i}")))
            } else {
                KbObject::entity(ids.choose(rng).unwrap().as_str())
            };
            let t = Triple::new(head.as_str(), rel, tail);
            if seen.insert(t.clone()) {
                triples.push(t);
            }
        }
        let cvt = ids.iter().filter(|_| rng.gen_bool(0.25)).cloned().collect();
        let mut nodes: Vec<KbId> = triples
            .iter()
            .flat_map(|t| std::iter::once(t.head.clone()).chain(t.tail.as_entity().cloned()))
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        nodes.sort_by(|a, b| a.as_str().cmp(b.as_str()));
        RandomGraph { triples, cvt, nodes }
    }

    pub fn kb(&self) -> KnowledgeBase {
        let mut b = KnowledgeBase::builder();
        for t in &self.triples {
            b.triple(t.clone());
        }
        for id in &self.cvt {
            b.cvt(id.as_str());
        }
        b.build()
    }

    pub fn topics<R: Rng>(&self, rng: &mut R) -> Vec<KbId> {
        let k = rng.gen_range(1..=3.min(self.nodes.len()));
        self.nodes.choose_multiple(rng, k).cloned().collect()
    }
}

fn lower(dist: &mut HashMap<KbId, usize>, id: &KbId, d: usize) -> bool {
    match dist.get(id) {
        Some(&old) if old <= d => false,
        _ => {
            dist.insert(id.clone(), d);
            true
        }
    }
}

/// The triple set the extractor should return without a cap, computed by
/// relaxing distances over a plain edge list until nothing changes.
///
/// A pivot is a CVT-marked node that heads a triple and is not a topic.
/// Regular nodes at distance `< hops` are expanded: every incident triple is
/// taken, and every pivot adjacent over such a triple contributes all of its
/// outgoing triples.
pub fn subgraph_oracle(triples: &[Triple], cvt: &HashSet<KbId>, topics: &[KbId], hops: usize) -> HashSet<Triple> {
    let heads: HashSet<&KbId> = triples.iter().map(|t| &t.head).collect();
    let pivot = |id: &KbId| cvt.contains(id) && heads.contains(id) && !topics.contains(id);
    let mut dist: HashMap<KbId, usize> = topics.iter().map(|t| (t.clone(), 0)).collect();
    let ends = |t: &Triple| -> Vec<(KbId, Option<KbId>)> {
        let mut v = vec![(t.head.clone(), t.tail.as_entity().cloned())];
        if let Some(tail) = t.tail.as_entity() {
            v.push((tail.clone(), Some(t.head.clone())));
        }
        v
    };
    loop {
        let mut changed = false;
        for t in triples {
            for (x, y) in ends(t) {
                let Some(&dx) = dist.get(&x) else { continue };
                if pivot(&x) || dx >= hops {
                    continue;
                }
                let Some(y) = y else { continue };
                changed |= lower(&mut dist, &y, dx + 1);
                if pivot(&y) {
                    for f in triples.iter().filter(|f| f.head == y && *f != t) {
                        if let Some(z) = f.tail.as_entity() {
                            if !pivot(z) {
                                changed |= lower(&mut dist, z, dx + 2);
                            }
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let expanded = |x: &KbId| !pivot(x) && dist.get(x).is_some_and(|&d| d < hops);
    let mut out = HashSet::new();
    for t in triples {
        for (x, y) in ends(t) {
            if !expanded(&x) {
                continue;
            }
            out.insert(t.clone());
            if let Some(y) = y.filter(|y| pivot(y)) {
                out.extend(triples.iter().filter(|f| f.head == y).cloned());
            }
        }
    }
    out
}

/// All-substrings search for the best-scoring window, with windows of
/// `ceil(0.7 n)..=floor(1.3 n)` chars. Ties: earliest start, then shortest.
pub fn fuzzy_oracle(needle: &str, haystack: &str) -> Option<(usize, usize, f64)> {
    let fold = |s: &str| -> Vec<char> { s.chars().map(|c| c.to_lowercase().next().unwrap()).collect() };
    let needle = fold(needle);
    let hay = fold(haystack);
    let n = needle.len();
    let lo = (7 * n).div_ceil(10).max(1);
    let hi = 13 * n / 10;
    let mut best: Option<(usize, usize, f64)> = None;
    for start in 0..hay.len() {
        for len in lo..=hi {
            if start + len > hay.len() {
                break;
            }
            let d = strsim::generic_levenshtein(&needle, &hay[start..start + len].to_vec());
            let score = 100.0 * (1.0 - d as f64 / n.max(len) as f64);
            if best.is_none_or(|(_, _, b)| score > b) {
                best = Some((start, start + len, score));
            }
        }
    }
    best
}

/// Counts correct questions one by one: a question is right when its
/// prediction's top object equals a gold id, or, when either side lacks an
/// id, the surfaces agree.
pub fn recount_hits(predictions: &[(String, KbObject, String)], gold: &[Question]) -> f64 {
    let mut correct = 0;
    for q in gold {
        let Some((_, top, surface)) = predictions.iter().find(|p| p.0 == q.id) else {
            continue;
        };
        let hit = q.answers.iter().any(|a| match (top.as_entity(), &a.id) {
            (Some(p), Some(g)) => p == g,
            _ => !surface.is_empty() && surface.to_lowercase() == a.name.to_lowercase(),
        });
        if hit {
            correct += 1;
        }
    }
    correct as f64 / gold.len() as f64
}
