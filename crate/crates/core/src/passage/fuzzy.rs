//! Approximate substring search with a normalized Levenshtein partial ratio.
//!
//! For a needle of `n` chars every case-folded haystack window whose length
//! lies in `[ceil(0.7 n), floor(1.3 n)]` is scored as
//! `100 * (1 - lev(needle, window) / max(n, window_len))`. The best window
//! wins; ties go to the earliest start, then the shorter window.

use crate::num::Real;
use crate::text::fold_char;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuzzyMatch<S = crate::Score> {
    /// Char offsets into the haystack.
    pub start: usize,
    pub end: usize,
    pub score: S,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("empty needle")]
pub struct EmptyNeedle;

/// Inclusive window length bounds for a needle of `n` chars.
pub fn window_bounds(n: usize) -> (usize, usize) {
    let lo = (7 * n).div_ceil(10).max(1);
    let hi = 13 * n / 10;
    (lo, hi)
}

/// The match score for an edit distance against a window of `window_len`
/// chars.
pub fn ratio_score<S: Real>(distance: usize, needle_len: usize, window_len: usize) -> S {
    let denom = needle_len.max(window_len);
    S::hundred() * (S::one() - crate::num::ratio::<S>(distance, denom))
}

pub fn fuzzy_find(needle: &str, haystack: &str, threshold: crate::Score) -> Result<Option<FuzzyMatch>, EmptyNeedle> {
    fuzzy_find_as(needle, haystack, threshold)
}

/// [`fuzzy_find`] in any scalar type.
pub fn fuzzy_find_as<S: Real>(
    needle: &str,
    haystack: &str,
    threshold: S,
) -> Result<Option<FuzzyMatch<S>>, EmptyNeedle> {
    let needle: Vec<char> = needle.chars().map(fold_char).collect();
    if needle.is_empty() {
        return Err(EmptyNeedle);
    }
    let hay: Vec<char> = haystack.chars().map(fold_char).collect();
    let n = needle.len();
    let (lo, hi) = window_bounds(n);
    if hay.len() < lo {
        return Ok(None);
    }

    let mut best: Option<FuzzyMatch<S>> = None;
    let mut prev = vec![0usize; n + 1];
    let mut cur = vec![0usize; n + 1];
    'starts: for start in 0..=hay.len() - lo {
        let max_len = hi.min(hay.len() - start);
        // prev[j] = lev(needle[..j], window[..k]) for the current k.
        for (j, p) in prev.iter_mut().enumerate() {
            *p = j;
        }
        for k in 1..=max_len {
            let c = hay[start + k - 1];
            cur[0] = k;
            for j in 1..=n {
                let subst = prev[j - 1] + usize::from(needle[j - 1] != c);
                cur[j] = subst.min(prev[j] + 1).min(cur[j - 1] + 1);
            }
            std::mem::swap(&mut prev, &mut cur);
            if k < lo {
                continue;
            }
            let score: S = ratio_score(prev[n], n, k);
            if best.is_none_or(|b| score > b.score) {
                best = Some(FuzzyMatch {
                    start,
                    end: start + k,
                    score,
                });
                if score >= S::hundred() {
                    break 'starts;
                }
            }
        }
    }
    Ok(best.filter(|b| b.score >= threshold))
}
