mod common;

use common::{toy_kb, toy_questions};
use proptest::prelude::*;
use std::collections::HashSet;
use xkbqa_core::passage::similarity::SimilarityBackend;
use xkbqa_core::passage::{assemble, build, PassageError, PassageOptions};
use xkbqa_core::reader::read_lexical;
use xkbqa_core::subgraph::extract;
use xkbqa_core::text::{word_count, Stopwords};
use xkbqa_core::verbalizer::{ObjectMention, VerbalizedUnit, Verbalizer};
use xkbqa_core::{KbObject, Question, Triple};

fn unit(text: &str, objects: &[(&str, &str)]) -> VerbalizedUnit {
    VerbalizedUnit {
        text: text.into(),
        sources: vec![Triple::new("m.h", "r.r", KbObject::entity("m.t"))],
        objects: objects
            .iter()
            .map(|(id, s)| ObjectMention {
                object: KbObject::entity(id),
                surface: s.to_string(),
            })
            .collect(),
    }
}

fn char_offset(haystack: &str, needle: &str) -> usize {
    haystack[..haystack.find(needle).unwrap()].chars().count()
}

#[test]
fn ford_spans_match_substring_search() {
    let q = Question::new("ford", "Who was the vice president of Gerald Ford?", "en");
    let units = vec![
        unit(
            "David Gergen was appointed as the White House Communications Director by President Gerald Ford .",
            &[("m.gergen", "David Gergen")],
        ),
        unit(
            "The vice president of Gerald Ford was Nelson Rockefeller .",
            &[("m.rockefeller", "Nelson Rockefeller")],
        ),
    ];
    let p = build(&q, &units, &PassageOptions::default(), &SimilarityBackend::Lexical).unwrap();
    assert_eq!(p.spans.len(), 2);
    for (id, surface) in [("m.gergen", "David Gergen"), ("m.rockefeller", "Nelson Rockefeller")] {
        let span = p.spans.iter().find(|s| s.object == KbObject::entity(id)).unwrap();
        let start = char_offset(&p.text, surface);
        assert_eq!((span.start, span.end), (start, start + surface.chars().count()));
        assert_eq!(span.match_score, 100.0);
    }
    // The Rockefeller sentence shares more trigrams with the question.
    assert!(p.text.starts_with("The vice president"));
    assert_eq!(
        read_lexical(&q, &p, &Stopwords::default()).unwrap().top,
        KbObject::entity("m.rockefeller")
    );
}

#[test]
fn budget_drops_lowest_similarity_sentences() {
    let q = Question::new("q", "alpha beta", "en");
    let filler = |w: &str, n: usize| vec![w; n].join(" ");
    let units = vec![
        unit(&format!("alpha beta {} .", filler("x", 397)), &[("m.a", "alpha")]),
        unit(&format!("gamma {} .", filler("y", 398)), &[("m.g", "gamma")]),
    ];
    assert_eq!(units.iter().map(|u| word_count(&u.text)).sum::<usize>(), 800);
    let p = build(&q, &units, &PassageOptions::default(), &SimilarityBackend::Lexical).unwrap();
    assert_eq!(p.sentences.len(), 1);
    assert_eq!(p.word_count, 400);
    assert_eq!(p.diagnostics.sentences_dropped, 1);
}

#[test]
fn single_unit_passage_is_the_sentence() {
    let q = Question::new("q", "where is Omaha", "en");
    let units = vec![unit("Gerald Ford was born in Omaha .", &[("m.omaha", "Omaha")])];
    let p = build(&q, &units, &PassageOptions::default(), &SimilarityBackend::Lexical).unwrap();
    assert_eq!(p.text, units[0].text);
    assert_eq!((p.spans[0].start, p.spans[0].end), (24, 29));
}

#[test]
fn no_grounded_object_is_no_candidates() {
    let q = Question::new("q", "anything", "en");
    let units = vec![unit("Nothing here .", &[("m.x", "Rockefeller")])];
    assert!(matches!(
        build(&q, &units, &PassageOptions::default(), &SimilarityBackend::Lexical),
        Err(PassageError::NoCandidates)
    ));
}

#[test]
fn duplicate_sentences_are_removed() {
    let q = Question::new("q", "Omaha", "en");
    let u = unit("Born in Omaha .", &[("m.omaha", "Omaha")]);
    let p = build(
        &q,
        &[u.clone(), u],
        &PassageOptions::default(),
        &SimilarityBackend::Lexical,
    )
    .unwrap();
    assert_eq!(p.sentences.len(), 1);
    assert_eq!(p.diagnostics.duplicates_removed, 1);
}

#[test]
fn template_objects_ground_at_100() {
    let kb = toy_kb();
    for q in toy_questions() {
        let sg = extract(&kb, &q.topic_ids(), 2, 2000).unwrap();
        let (units, _) = Verbalizer::Template.verbalize_subgraph(&sg, &kb).unwrap();
        let pairs = units.into_iter().map(|u| (u, 0.0)).collect();
        let p = assemble(&q.id, pairs, 100.0);
        assert_eq!(p.diagnostics.ungrounded_objects, 0, "{}", q.id);
        assert!(p.spans.iter().all(|s| s.match_score == 100.0));
        for s in &p.spans {
            assert_eq!(p.span_text(s), s.surface);
        }
    }
}

const WORDS: [&str; 10] = [
    "river", "city", "born", "film", "store", "north", "south", "capital", "Omaha", "Nashvile",
];

fn arb_units() -> impl Strategy<Value = Vec<VerbalizedUnit>> {
    proptest::collection::vec(
        (
            proptest::collection::vec(0usize..WORDS.len(), 2..12),
            0usize..12,
            any::<bool>(),
        ),
        1..15,
    )
    .prop_map(|specs| {
        specs
            .into_iter()
            .enumerate()
            .map(|(i, (words, at, typo))| {
                let mut text: Vec<&str> = words.iter().map(|&w| WORDS[w]).collect();
                let surface = text[at % text.len()].to_string();
                let surface = if typo { surface.replace('i', "y") } else { surface };
                let tag = format!("u{i}");
                text.push(&tag);
                unit(&text.join(" "), &[(&format!("m.{i}"), &surface)])
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn sentences_sorted_and_stable(units in arb_units(), question in "[a-z ]{1,30}") {
        let q = Question::new("q", &format!("{question}?"), "en");
        let options = PassageOptions { budget_words: usize::MAX, threshold: 0.0 };
        let p = build(&q, &units, &options, &SimilarityBackend::Lexical).unwrap();
        let index = |text: &str| units.iter().position(|u| u.text == text).unwrap();
        for w in p.sentences.windows(2) {
            prop_assert!(w[0].similarity >= w[1].similarity);
            if w[0].similarity == w[1].similarity {
                prop_assert!(index(&w[0].unit.text) < index(&w[1].unit.text));
            }
        }
    }

    #[test]
    fn unrelated_question_keeps_input_order(units in arb_units()) {
        let q = Question::new("q", "zzzz qqqq", "en");
        let options = PassageOptions { budget_words: usize::MAX, threshold: 0.0 };
        let p = build(&q, &units, &options, &SimilarityBackend::Lexical).unwrap();
        let got: Vec<&str> = p.sentences.iter().map(|s| s.unit.text.as_str()).collect();
        let want: Vec<&str> = units.iter().map(|u| u.text.as_str()).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn raising_threshold_never_adds_spans(units in arb_units(), lo in 0.0f64..100.0, step in 0.0f64..50.0) {
        let pairs: Vec<(VerbalizedUnit, f64)> = units.into_iter().map(|u| (u, 0.0)).collect();
        let key = |p: &xkbqa_core::Passage| -> HashSet<(usize, usize, String)> {
            p.spans.iter().map(|s| (s.start, s.end, s.object.key())).collect()
        };
        let loose = assemble("q", pairs.clone(), lo);
        let strict = assemble("q", pairs, (lo + step).min(100.0));
        prop_assert!(key(&strict).is_subset(&key(&loose)));
    }

    #[test]
    fn budget_respected(units in arb_units(), budget in 1usize..60) {
        let q = Question::new("q", "river city", "en");
        let options = PassageOptions { budget_words: budget, threshold: 0.0 };
        match build(&q, &units, &options, &SimilarityBackend::Lexical) {
            Ok(p) => {
                prop_assert!(p.word_count <= budget);
                for s in &p.spans {
                    prop_assert_eq!(p.span_text(s), s.surface.as_str());
                }
            }
            Err(e) => prop_assert_eq!(e, PassageError::NoCandidates),
        }
    }
}
