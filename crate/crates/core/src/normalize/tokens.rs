use std::collections::BTreeSet;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use super::fold_diacritics;

static STOPWORDS: LazyLock<BTreeSet<&'static str>> = LazyLock::new(|| {
    include_str!("../../data/stopwords.txt")
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
});

/// The frozen stopword list.
pub fn stopwords() -> &'static BTreeSet<&'static str> {
    &STOPWORDS
}

/// Lowercase `[a-z0-9]+` tokens, at least two characters, no stopwords.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSet(BTreeSet<String>);

impl TokenSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn intersection_len(&self, other: &TokenSet) -> usize {
        self.0.intersection(&other.0).count()
    }
}

impl<'a> FromIterator<&'a str> for TokenSet {
    /// Applies the same filtering as [`tokenize_filtered`] to each item.
    fn from_iter<I: IntoIterator<Item = &'a str>>(iter: I) -> Self {
        let mut set = BTreeSet::new();
        for item in iter {
            set.extend(tokenize_filtered(item).0);
        }
        TokenSet(set)
    }
}

pub fn tokenize_filtered(text: &str) -> TokenSet {
    let folded = fold_diacritics(text).to_ascii_lowercase();
    TokenSet(
        folded
            .split(|c: char| !c.is_ascii_alphanumeric())
            .filter(|t| t.len() > 1 && !STOPWORDS.contains(t))
            .map(str::to_string)
            .collect(),
    )
}

/// `|a ∩ b| / |a ∪ b|`; two empty sets score 1.0.
pub fn jaccard(a: &TokenSet, b: &TokenSet) -> f64 {
    let inter = a.intersection_len(b);
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}
