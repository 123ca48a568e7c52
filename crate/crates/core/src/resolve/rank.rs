use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normalize::{jaccard, tokenize_filtered};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no candidates to rank")]
pub struct NoCandidates;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredTitle {
    pub title: String,
    pub score: f64,
    /// Position in the input list.
    #[serde(skip)]
    pub index: usize,
}

pub fn title_score(query_text: &str, title: &str) -> f64 {
    jaccard(&tokenize_filtered(query_text), &tokenize_filtered(title))
}

fn substring_match(query: &str, title: &str) -> bool {
    let (q, t) = (query.to_lowercase(), title.to_lowercase());
    t.contains(&q) || q.contains(&t)
}

/// Scores by filtered-token Jaccard and sorts descending. Equal scores put
/// substring matches first, then keep input order. A single candidate is
/// passed through.
pub fn rank_candidates<S: AsRef<str>>(
    query_text: &str,
    candidates: &[S],
) -> Result<Vec<ScoredTitle>, NoCandidates> {
    if candidates.is_empty() {
        return Err(NoCandidates);
    }
    let mut scored: Vec<(ScoredTitle, bool)> = candidates
        .iter()
        .enumerate()
        .map(|(index, title)| {
            let title = title.as_ref();
            let entry = ScoredTitle {
                title: title.to_string(),
                score: title_score(query_text, title),
                index,
            };
            (entry, substring_match(query_text, title))
        })
        .collect();
    if scored.len() > 1 {
        scored.sort_by(|(a, a_sub), (b, b_sub)| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| match (a_sub, b_sub) {
                    (true, false) => Ordering::Less,
                    (false, true) => Ordering::Greater,
                    _ => Ordering::Equal,
                })
                .then(a.index.cmp(&b.index))
        });
    }
    Ok(scored.into_iter().map(|(s, _)| s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_title_first() {
        let ranked = rank_candidates(
            "Attention Is All You Need",
            &["Attention in graphs", "Attention is all you need"],
        )
        .unwrap();
        assert_eq!(ranked[0].title, "Attention is all you need");
        assert_eq!(ranked[0].score, 1.0);
    }

    #[test]
    fn substring_breaks_ties() {
        // both share the same token set with the query; the second also
        // contains the query verbatim
        let ranked = rank_candidates(
            "deep residual learning",
            &["Learning, deep residual", "Deep Residual Learning"],
        )
        .unwrap();
        assert_eq!(ranked[0].score, ranked[1].score);
        assert_eq!(ranked[0].index, 1);
    }

    #[test]
    fn single_and_empty() {
        let ranked = rank_candidates("q", &["unrelated"]).unwrap();
        assert_eq!(ranked.len(), 1);
        assert_eq!(ranked[0].score, 0.0);
        assert_eq!(rank_candidates::<&str>("q", &[]), Err(NoCandidates));
    }
}
