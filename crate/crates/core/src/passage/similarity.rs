//! Question/sentence similarity used to order passage sentences.

use crate::num::Real;
use crate::remote::{ModelClient, RemoteError};
use crate::text::fold_char;
use std::collections::HashMap;

/// Character 3-gram counts of the case-folded text. Texts shorter than three
/// chars contribute themselves as a single gram.
pub fn char_trigrams(text: &str) -> HashMap<Vec<char>, usize> {
    let chars: Vec<char> = text.chars().map(fold_char).collect();
    let mut grams = HashMap::new();
    if chars.len() < 3 {
        if !chars.is_empty() {
            grams.insert(chars, 1);
        }
        return grams;
    }
    for w in chars.windows(3) {
        *grams.entry(w.to_vec()).or_insert(0) += 1;
    }
    grams
}

/// Cosine similarity of two sparse count vectors; zero if either is empty.
pub fn sparse_cosine<S: Real>(a: &HashMap<Vec<char>, usize>, b: &HashMap<Vec<char>, usize>) -> S {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let dot: usize = small.iter().filter_map(|(g, &x)| large.get(g).map(|&y| x * y)).sum();
    if dot == 0 {
        return S::zero();
    }
    let norm =
        |v: &HashMap<Vec<char>, usize>| -> S { S::from_usize_lossy(v.values().map(|&x| x * x).sum::<usize>()).sqrt() };
    let cos = S::from_usize_lossy(dot) / (norm(a) * norm(b));
    cos.min(S::one())
}

pub fn dense_cosine<S: Real>(a: &[S], b: &[S]) -> S {
    let dot: S = a.iter().zip(b).map(|(&x, &y)| x * y).sum();
    let na: S = a.iter().map(|&x| x * x).sum::<S>().sqrt();
    let nb: S = b.iter().map(|&x| x * x).sum::<S>().sqrt();
    if na == S::zero() || nb == S::zero() {
        S::zero()
    } else {
        dot / (na * nb)
    }
}

/// Lexical similarity in `[0, 1]`: cosine over character 3-gram counts.
pub fn lexical_similarity<S: Real>(a: &str, b: &str) -> S {
    sparse_cosine(&char_trigrams(a), &char_trigrams(b))
}

#[derive(Debug, Clone)]
pub enum SimilarityBackend {
    Lexical,
    Remote(ModelClient),
}

impl SimilarityBackend {
    /// Scores every sentence against the question. The remote backend embeds
    /// the question and all sentences in one request.
    pub fn score_all(&self, question: &str, sentences: &[&str]) -> Result<Vec<crate::Score>, RemoteError> {
        match self {
            SimilarityBackend::Lexical => {
                let q = char_trigrams(question);
                Ok(sentences.iter().map(|s| sparse_cosine(&q, &char_trigrams(s))).collect())
            }
            SimilarityBackend::Remote(client) => {
                let mut texts = Vec::with_capacity(sentences.len() + 1);
                texts.push(question.to_string());
                texts.extend(sentences.iter().map(|s| s.to_string()));
                let vectors = client.embed(&texts)?;
                let (q, rest) = vectors
                    .split_first()
                    .ok_or_else(|| RemoteError::Protocol("empty embedding response".into()))?;
                Ok(rest.iter().map(|v| dense_cosine(q, v)).collect())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_strings_score_one() {
        let s = "Who was the vice president of Gerald Ford?";
        assert!((lexical_similarity::<f64>(s, s) - 1.0).abs() < 1e-12);
        assert_eq!(lexical_similarity::<f64>("ab", "AB"), 1.0);
    }

    #[test]
    fn disjoint_trigrams_score_zero() {
        assert_eq!(lexical_similarity::<f64>("abcdef", "uvwxyz"), 0.0);
        assert_eq!(lexical_similarity::<f32>("沃尔玛经营", "Walmart"), 0.0);
    }

    #[test]
    fn ford_question_prefers_ford_sentence() {
        let q = "Who was the vice president of Gerald Ford?";
        let ford = "The vice president of Gerald Ford was Nelson Rockefeller .";
        let walmart = "The industry of Walmart is Retail-Store, Variety Stores and Department Stores.";
        let a: f64 = lexical_similarity(q, ford);
        let b: f64 = lexical_similarity(q, walmart);
        // Frozen from an independent Python count of folded 3-grams.
        assert!((a - FORD_EXPECTED).abs() < 1e-9, "{a}");
        assert!((b - WALMART_EXPECTED).abs() < 1e-9, "{b}");
        assert!(a > b);
    }

    const FORD_EXPECTED: f64 = 0.7183811165192391;
    const WALMART_EXPECTED: f64 = 0.14230249470757708;

    #[test]
    fn dense_cosine_basics() {
        assert_eq!(dense_cosine(&[1.0f64, 0.0], &[0.0, 2.0]), 0.0);
        assert!((dense_cosine(&[1.0f64, 2.0], &[2.0, 4.0]) - 1.0).abs() < 1e-12);
        assert_eq!(dense_cosine(&[0.0f64, 0.0], &[1.0, 1.0]), 0.0);
    }
}
