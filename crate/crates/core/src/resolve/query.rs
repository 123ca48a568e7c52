use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

use crate::normalize::normalize_doi;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    Doi,
    ArxivId,
    Isbn,
    Pmid,
    Url,
    Title,
}

impl QueryKind {
    /// Identifier queries resolve to exactly one record or nothing.
    pub fn is_identifier(self) -> bool {
        matches!(
            self,
            QueryKind::Doi | QueryKind::ArxivId | QueryKind::Isbn | QueryKind::Pmid
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QueryKind::Doi => "doi",
            QueryKind::ArxivId => "arxiv_id",
            QueryKind::Isbn => "isbn",
            QueryKind::Pmid => "pmid",
            QueryKind::Url => "url",
            QueryKind::Title => "title",
        }
    }
}

impl fmt::Display for QueryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub kind: QueryKind,
    pub value: String,
    pub original: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("query is empty")]
    EmptyQuery,
    #[error("malformed URL: {0}")]
    MalformedUrl(String),
}

static DOI: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^(?:doi:\s*)?(10\.\d{4,9}/\S+)$").unwrap());
static DOI_IN_PATH: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(10\.\d{4,9}/\S+)$").unwrap());
static ARXIV_NEW: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^(?:arxiv:\s*)?(\d{4}\.\d{4,5}(?:v\d+)?)$").unwrap());
static ARXIV_OLD: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^(?:arxiv:\s*)?([a-z][a-z\-]*(?:\.[a-z]{2})?/\d{7}(?:v\d+)?)$").unwrap()
});
static ARXIV_ID_ONLY: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(\d{4}\.\d{4,5}(?:v\d+)?|[a-z][a-z\-]*(?:\.[A-Z]{2})?/\d{7}(?:v\d+)?)$").unwrap()
});
static PMID: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^(?:pmid:\s*)?(\d{1,8})$").unwrap());
static ISBN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^(?:isbn(?:-1[03])?:?\s*)?([\dX\- ]{10,17})$").unwrap());

/// Precedence: DOI > arXiv ID > PMID > ISBN > URL > title. URLs that carry
/// a DOI are rerouted as DOI queries.
pub fn classify_query(input: &str) -> Result<Query, QueryError> {
    let trimmed = input.trim();
    if trimmed.is_empty() {
        return Err(QueryError::EmptyQuery);
    }
    let query = |kind, value: String| Query {
        kind,
        value,
        original: input.to_string(),
    };

    if let Some(c) = DOI.captures(trimmed) {
        return Ok(query(QueryKind::Doi, normalize_doi(&c[1])));
    }
    if let Some(c) = ARXIV_NEW
        .captures(trimmed)
        .or_else(|| ARXIV_OLD.captures(trimmed))
    {
        return Ok(query(QueryKind::ArxivId, c[1].to_string()));
    }
    if let Some(c) = PMID.captures(trimmed) {
        return Ok(query(QueryKind::Pmid, c[1].to_string()));
    }
    if let Some(isbn) = ISBN.captures(trimmed).and_then(|c| valid_isbn(&c[1])) {
        return Ok(query(QueryKind::Isbn, isbn));
    }
    if trimmed.contains("://") {
        if let Ok(url) = Url::parse(trimmed) {
            if let Some(doi) = doi_from_url(&url) {
                return Ok(query(QueryKind::Doi, doi));
            }
            if let Ok(normalized) = normalize_url(trimmed) {
                return Ok(query(QueryKind::Url, normalized));
            }
        }
    }
    Ok(query(
        QueryKind::Title,
        trimmed.split_whitespace().collect::<Vec<_>>().join(" "),
    ))
}

fn doi_from_url(url: &Url) -> Option<String> {
    let host = url.host_str()?.to_ascii_lowercase();
    let path = percent_decode(url.path());
    let is_doi_host = matches!(host.as_str(), "doi.org" | "dx.doi.org" | "www.doi.org");
    if is_doi_host {
        let doi = path.trim_start_matches('/');
        return DOI.is_match(doi).then(|| normalize_doi(doi));
    }
    let (_, rest) = path.split_once("/doi/")?;
    // publisher paths such as /doi/abs/10.x/y or /doi/full/10.x/y
    let rest = ["abs/", "full/", "pdf/", "epdf/"]
        .iter()
        .find_map(|p| rest.strip_prefix(p))
        .unwrap_or(rest);
    DOI_IN_PATH
        .captures(rest)
        .filter(|_| rest.starts_with("10."))
        .map(|c| normalize_doi(&c[1]))
}

fn percent_decode(path: &str) -> String {
    path.replace("%2F", "/").replace("%2f", "/")
}

fn valid_isbn(raw: &str) -> Option<String> {
    let digits: String = raw
        .chars()
        .filter(|c| !matches!(c, '-' | ' '))
        .collect::<String>()
        .to_ascii_uppercase();
    let ok = match digits.len() {
        10 => {
            let mut sum = 0u32;
            for (i, c) in digits.chars().enumerate() {
                let v = match c {
                    'X' if i == 9 => 10,
                    c => c.to_digit(10)?,
                };
                sum += v * (10 - i as u32);
            }
            sum % 11 == 0
        }
        13 => {
            let mut sum = 0u32;
            for (i, c) in digits.chars().enumerate() {
                sum += c.to_digit(10)? * if i % 2 == 0 { 1 } else { 3 };
            }
            sum % 10 == 0
        }
        _ => false,
    };
    ok.then_some(digits)
}

/// Rewrites arXiv PDF/HTML links, alphaxiv links and HuggingFace paper pages
/// to `https://arxiv.org/abs/<id>`. Anything else is returned unchanged.
pub fn normalize_url(raw: &str) -> Result<String, QueryError> {
    let trimmed = raw.trim();
    let url =
        Url::parse(trimmed).map_err(|e| QueryError::MalformedUrl(format!("{trimmed}: {e}")))?;
    if !matches!(url.scheme(), "http" | "https") || url.host_str().is_none() {
        return Err(QueryError::MalformedUrl(trimmed.to_string()));
    }
    let host = url.host_str().unwrap_or_default().to_ascii_lowercase();
    let host = host.strip_prefix("www.").unwrap_or(&host);
    let segments: Vec<&str> = url
        .path_segments()
        .map(|s| s.filter(|p| !p.is_empty()).collect())
        .unwrap_or_default();

    let id = match (host, segments.as_slice()) {
        ("arxiv.org" | "export.arxiv.org" | "alphaxiv.org", [kind, rest @ ..])
            if matches!(*kind, "abs" | "pdf" | "html" | "overview") && !rest.is_empty() =>
        {
            Some(rest.join("/"))
        }
        ("huggingface.co", ["papers", id]) => Some(id.to_string()),
        _ => None,
    };
    let id = id
        .map(|id| id.trim_end_matches(".pdf").to_string())
        .filter(|id| ARXIV_ID_ONLY.is_match(id));
    Ok(match id {
        Some(id) => format!("https://arxiv.org/abs/{id}"),
        None => trimmed.to_string(),
    })
}
