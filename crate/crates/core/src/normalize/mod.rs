//! Per-field normalization and token similarity.
//!
//! Every normalizer here is idempotent on its successful outputs.

mod tokens;
mod venue;

use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

pub use tokens::{jaccard, stopwords, tokenize_filtered, TokenSet};
pub use venue::{normalize_venue, VenueSynonymTable, VenueTableError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormalizeError {
    #[error("author field is empty")]
    EmptyAuthor,
    #[error("malformed pages `{0}`")]
    MalformedPages(String),
    #[error("malformed year `{0}`")]
    MalformedYear(String),
}

/// Folds to ASCII: NFD decomposition, combining marks dropped, and any
/// remaining non-ASCII character removed.
pub fn fold_diacritics(text: &str) -> String {
    text.nfd()
        .filter(|c| !is_combining_mark(*c))
        .filter(char::is_ascii)
        .collect()
}

/// Removes LaTeX control sequences. Accent macros drop out and leave their
/// argument; letter macros for special characters (`\o`, `\ss`, ...) become
/// their ASCII spelling; escaped specials (`\&`, `\%`) keep the character.
pub fn strip_latex(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.peek().copied() {
            Some(n) if n.is_ascii_alphabetic() => {
                let mut name = String::new();
                while let Some(&n) = chars.peek() {
                    if !n.is_ascii_alphabetic() {
                        break;
                    }
                    name.push(n);
                    chars.next();
                }
                if let Some(repl) = letter_macro(&name) {
                    out.push_str(repl);
                }
            }
            Some(n @ ('&' | '%' | '$' | '_' | '#')) => {
                out.push(n);
                chars.next();
            }
            Some(_) => {
                chars.next();
            }
            None => {}
        }
    }
    out
}

fn letter_macro(name: &str) -> Option<&'static str> {
    Some(match name {
        "i" => "i",
        "j" => "j",
        "o" => "o",
        "O" => "O",
        "l" => "l",
        "L" => "L",
        "ae" => "ae",
        "AE" => "AE",
        "oe" => "oe",
        "OE" => "OE",
        "aa" => "a",
        "AA" => "A",
        "ss" => "ss",
        _ => return None,
    })
}

fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Lowercase, LaTeX commands and braces removed, whitespace collapsed.
pub fn normalize_title(value: &str) -> String {
    let stripped: String = strip_latex(value)
        .chars()
        .filter(|c| !matches!(c, '{' | '}'))
        .collect();
    collapse_whitespace(&stripped.to_lowercase())
}

static DOI_PREFIX: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^(?:https?://)?(?:dx\.)?doi\.org/|^doi:\s*").expect("valid regex")
});

/// Bare lowercase DOI with resolver URLs and `doi:` prefixes stripped.
pub fn normalize_doi(value: &str) -> String {
    let mut current = value.trim().to_string();
    loop {
        let before = current.len();
        if let Some(m) = DOI_PREFIX.find(&current) {
            current = current[m.end()..].trim().to_string();
        }
        if let Some(idx) = current.find("://") {
            current = current[idx + 3..].trim().to_string();
        }
        if current.len() == before {
            break;
        }
    }
    current.to_lowercase()
}

/// Registrant prefix (`10.1038`) and suffix of a normalized DOI.
pub fn split_doi(doi: &str) -> Option<(&str, &str)> {
    let (prefix, suffix) = doi.split_once('/')?;
    (prefix.starts_with("10.") && !suffix.is_empty()).then_some((prefix, suffix))
}

static PAGE_TOKEN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[A-Za-z0-9]+(?:[.:][A-Za-z0-9]+)*$").expect("valid regex"));

fn is_dash(c: char) -> bool {
    matches!(
        c,
        '-' | '\u{2010}' | '\u{2011}' | '\u{2012}' | '\u{2013}' | '\u{2014}' | '\u{2212}'
    )
}

/// Canonical `start--end`, or a single page unchanged.
pub fn normalize_pages(value: &str) -> Result<String, NormalizeError> {
    let malformed = || NormalizeError::MalformedPages(value.to_string());
    let trimmed = value.trim();
    if trimmed.is_empty() {
        return Err(malformed());
    }
    let Some(first_dash) = trimmed.find(is_dash) else {
        if trimmed.contains(char::is_whitespace) {
            return Err(malformed());
        }
        return Ok(trimmed.to_string());
    };
    let start = trimmed[..first_dash].trim();
    let rest = trimmed[first_dash..].trim_start_matches(is_dash);
    let end = rest.trim();
    if end.contains(is_dash) || !PAGE_TOKEN.is_match(start) || !PAGE_TOKEN.is_match(end) {
        return Err(malformed());
    }
    Ok(format!("{start}--{end}"))
}

/// Exactly four ASCII digits after trimming.
pub fn normalize_year(value: &str) -> Result<String, NormalizeError> {
    let trimmed = value.trim();
    if trimmed.len() == 4 && trimmed.bytes().all(|b| b.is_ascii_digit()) {
        Ok(trimmed.to_string())
    } else {
        Err(NormalizeError::MalformedYear(value.to_string()))
    }
}

/// Last name of the first author, lowercase ASCII.
pub fn normalize_author(value: &str) -> Result<String, NormalizeError> {
    author_lastname_list(value)?
        .into_iter()
        .next()
        .ok_or(NormalizeError::EmptyAuthor)
}

static ET_AL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)[\s,]*\bet\.?\s+al\b\.?\s*$").expect("valid regex"));

/// Lowercase ASCII last names in author order. Splits on top-level `and`;
/// a trailing `et al.` or `others` is ignored. Comma-separated
/// `First Last, First Last` lists (no `and`) are recognised when every
/// segment has at least two words.
pub fn author_lastname_list(value: &str) -> Result<Vec<String>, NormalizeError> {
    let trimmed = ET_AL.replace(value.trim(), "");
    let mut authors = split_top_level_and(&trimmed);
    if authors.len() == 1 {
        let segments = split_top_level(&authors[0], ',');
        if segments.len() > 1 && segments.iter().all(|s| top_level_words(s).len() >= 2) {
            authors = segments;
        }
    }
    let names: Vec<String> = authors
        .iter()
        .map(|a| a.trim())
        .filter(|a| !a.is_empty() && !a.eq_ignore_ascii_case("others"))
        .map(last_name_key)
        .filter(|k| !k.is_empty())
        .collect();
    if names.is_empty() {
        return Err(NormalizeError::EmptyAuthor);
    }
    Ok(names)
}

fn last_name_key(author: &str) -> String {
    let segments = split_top_level(author, ',');
    let raw = if segments.len() > 1 {
        segments[0].clone()
    } else {
        let words = top_level_words(author);
        match words.len() {
            0 => String::new(),
            1 => words[0].clone(),
            n => {
                // BibTeX "von" particles: lowercase words directly before the last name.
                let mut first = n - 1;
                while first > 1 && starts_lowercase(&words[first - 1]) {
                    first -= 1;
                }
                words[first..].join(" ")
            }
        }
    };
    fold_diacritics(&strip_latex(&raw))
        .chars()
        .filter(char::is_ascii_alphanumeric)
        .collect::<String>()
        .to_ascii_lowercase()
}

fn starts_lowercase(word: &str) -> bool {
    word.trim_start_matches('{')
        .chars()
        .next()
        .is_some_and(char::is_lowercase)
}

/// Splits on `sep` at brace depth zero.
fn split_top_level(text: &str, sep: char) -> Vec<String> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut current = String::new();
    for c in text.chars() {
        match c {
            '{' => depth += 1,
            '}' => depth = depth.saturating_sub(1),
            _ => {}
        }
        if c == sep && depth == 0 {
            parts.push(current.trim().to_string());
            current.clear();
        } else {
            current.push(c);
        }
    }
    parts.push(current.trim().to_string());
    parts
}

/// Whitespace-separated words at brace depth zero (brace groups stay whole).
fn top_level_words(text: &str) -> Vec<String> {
    split_top_level(&text.replace(char::is_whitespace, " "), ' ')
        .into_iter()
        .filter(|w| !w.is_empty())
        .collect()
}

fn split_top_level_and(text: &str) -> Vec<String> {
    let words = top_level_words(text);
    let mut authors = Vec::new();
    let mut current: Vec<String> = Vec::new();
    for word in words {
        if word.eq_ignore_ascii_case("and") {
            authors.push(current.join(" "));
            current.clear();
        } else {
            current.push(word);
        }
    }
    authors.push(current.join(" "));
    authors
}
