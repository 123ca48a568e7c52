//! Deterministic query resolution through a translation server with a
//! CrossRef fallback.

mod crossref;
mod limiter;
mod query;
mod rank;
mod transport;

use std::sync::Arc;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::bib::{parse_bibliography, sanitize_citation_key, BibEntry};

pub use crossref::{parse_works, CrossrefCandidate, CROSSREF_MAX_ROWS};
pub use limiter::{RateLimiter, BUCKET_CAPACITY, REQUESTS_PER_SECOND};
pub use query::{classify_query, normalize_url, Query, QueryError, QueryKind};
pub use rank::{rank_candidates, title_score, NoCandidates, ScoredTitle};
pub use transport::{
    Exchange, FixtureFile, HttpRequest, HttpResponse, LiveTransport, RecordingTransport,
    ReplayTransport, Transport, TransportError, FIXTURE_FORMAT_VERSION,
};

/// Minimum title similarity for accepting the winner of a title query.
pub const TITLE_VALIDATION_THRESHOLD: f64 = 0.85;

pub const DEFAULT_SERVER_URL: &str = "http://127.0.0.1:1969";
pub const DEFAULT_CROSSREF_URL: &str = "https://api.crossref.org";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolutionStatus {
    Found,
    NotFound,
    TitleMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolutionSource {
    SearchEndpoint,
    WebEndpoint,
    CrossrefFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionResult {
    pub status: ResolutionStatus,
    pub candidates: Vec<ScoredTitle>,
    #[serde(with = "bibtex_text")]
    pub bibtex: Option<BibEntry>,
    pub source: ResolutionSource,
}

impl ResolutionResult {
    fn not_found(source: ResolutionSource) -> Self {
        Self {
            status: ResolutionStatus::NotFound,
            candidates: Vec::new(),
            bibtex: None,
            source,
        }
    }
}

mod bibtex_text {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::bib::{parse_entry, serialize_entry, BibEntry};

    pub fn serialize<S: Serializer>(entry: &Option<BibEntry>, s: S) -> Result<S::Ok, S::Error> {
        match entry {
            Some(e) => s.serialize_some(&serialize_entry(e)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BibEntry>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|text| parse_entry(&text).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[derive(Debug, Error)]
pub enum ResolveError {
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("upstream unavailable at {url}: {reason}")]
    UpstreamUnavailable { url: String, reason: String },
    #[error("could not parse exported BibTeX: {reason}")]
    ExportFailure { raw: String, reason: String },
}

/// Anything that turns a query into a resolution result.
pub trait Lookup: Send + Sync {
    fn lookup(&self, query: &Query) -> Result<ResolutionResult, ResolveError>;
}

#[derive(Debug, Clone)]
pub struct ResolverConfig {
    pub server_url: String,
    pub crossref_url: String,
    /// Contact identity sent to CrossRef in the user agent.
    pub contact: Option<String>,
    pub retry_delay: Duration,
    pub max_retries: u32,
    pub timeout: Duration,
}

impl Default for ResolverConfig {
    fn default() -> Self {
        Self {
            server_url: DEFAULT_SERVER_URL.into(),
            crossref_url: DEFAULT_CROSSREF_URL.into(),
            contact: None,
            retry_delay: Duration::from_secs(1),
            max_retries: 1,
            timeout: Duration::from_secs(30),
        }
    }
}

impl ResolverConfig {
    pub fn user_agent(&self) -> String {
        let base = concat!("citegate/", env!("CARGO_PKG_VERSION"));
        match &self.contact {
            Some(contact) => format!("{base} (mailto:{contact})"),
            None => base.to_string(),
        }
    }
}

/// A record picked from an upstream response, before export.
#[derive(Debug, Clone)]
enum Record {
    Item(Value),
    WebChoice {
        session: Value,
        key: String,
        title: String,
    },
    Crossref(CrossrefCandidate),
}

#[derive(Debug, Clone)]
struct Candidate {
    title: String,
    record: Record,
}

pub struct Resolver {
    config: ResolverConfig,
    transport: Arc<dyn Transport>,
    limiter: Option<Arc<RateLimiter>>,
}

impl Resolver {
    /// Live transports get the default shared rate limiter.
    pub fn new(config: ResolverConfig, transport: Arc<dyn Transport>) -> Self {
        let limiter = transport
            .is_live()
            .then(|| Arc::new(RateLimiter::default()));
        Self {
            config,
            transport,
            limiter,
        }
    }

    pub fn live(config: ResolverConfig) -> Result<Self, ResolveError> {
        let transport = LiveTransport::new(&config.user_agent(), config.timeout).map_err(|e| {
            ResolveError::UpstreamUnavailable {
                url: config.server_url.clone(),
                reason: e.to_string(),
            }
        })?;
        Ok(Self::new(config, Arc::new(transport)))
    }

    pub fn with_rate_limiter(mut self, limiter: Option<Arc<RateLimiter>>) -> Self {
        self.limiter = limiter;
        self
    }

    pub fn config(&self) -> &ResolverConfig {
        &self.config
    }

    pub fn resolve(&self, input: &str) -> Result<ResolutionResult, ResolveError> {
        self.resolve_query(&classify_query(input)?)
    }

    pub fn resolve_query(&self, q: &Query) -> Result<ResolutionResult, ResolveError> {
        let (candidates, source) = if q.kind == QueryKind::Url {
            (self.web(&q.value)?, ResolutionSource::WebEndpoint)
        } else {
            match self.search(&q.value)? {
                Some(found) => (found, ResolutionSource::SearchEndpoint),
                None => {
                    let hits = self.crossref_fallback(&q.original)?;
                    let hits = hits.into_iter().map(|c| Candidate {
                        title: c.title.clone(),
                        record: Record::Crossref(c),
                    });
                    (hits.collect(), ResolutionSource::CrossrefFallback)
                }
            }
        };
        self.select(q, candidates, source)
    }

    fn select(
        &self,
        q: &Query,
        mut candidates: Vec<Candidate>,
        source: ResolutionSource,
    ) -> Result<ResolutionResult, ResolveError> {
        if q.kind.is_identifier() {
            if source == ResolutionSource::CrossrefFallback && q.kind == QueryKind::Doi {
                candidates.retain(|c| matches!(&c.record, Record::Crossref(x) if x.doi.as_deref() == Some(q.value.as_str())));
            }
            if candidates.len() != 1 {
                return Ok(ResolutionResult::not_found(source));
            }
            let chosen = candidates.remove(0);
            let scored = ScoredTitle {
                score: title_score(&q.value, &chosen.title),
                title: chosen.title.clone(),
                index: 0,
            };
            let bibtex = self.export(chosen.record)?;
            return Ok(ResolutionResult {
                status: ResolutionStatus::Found,
                candidates: vec![scored],
                bibtex: Some(bibtex),
                source,
            });
        }

        let titles: Vec<&str> = candidates.iter().map(|c| c.title.as_str()).collect();
        let Ok(ranked) = rank_candidates(&q.value, &titles) else {
            return Ok(ResolutionResult::not_found(source));
        };
        let winner = &ranked[0];
        if q.kind == QueryKind::Title && winner.score < TITLE_VALIDATION_THRESHOLD {
            return Ok(ResolutionResult {
                status: ResolutionStatus::TitleMismatch,
                candidates: ranked,
                bibtex: None,
                source,
            });
        }
        let chosen = candidates.swap_remove(winner.index);
        let bibtex = self.export(chosen.record)?;
        Ok(ResolutionResult {
            status: ResolutionStatus::Found,
            candidates: ranked,
            bibtex: Some(bibtex),
            source,
        })
    }

    /// Sends with rate limiting and one bounded retry on transient failure.
    fn send(&self, request: &HttpRequest) -> Result<HttpResponse, ResolveError> {
        let unavailable = |reason: String| ResolveError::UpstreamUnavailable {
            url: request.url.clone(),
            reason,
        };
        let mut attempt = 0;
        loop {
            if let Some(limiter) = &self.limiter {
                limiter.acquire();
            }
            let reason = match self.transport.send(request) {
                Ok(resp) if !resp.is_transient_failure() => return Ok(resp),
                Ok(resp) => format!("status {}", resp.status),
                Err(TransportError::Network(e)) => e,
                Err(other) => return Err(unavailable(other.to_string())),
            };
            if attempt >= self.config.max_retries {
                return Err(unavailable(reason));
            }
            attempt += 1;
            thread::sleep(self.config.retry_delay);
        }
    }

    fn server(&self, path: &str) -> String {
        format!("{}{}", self.config.server_url.trim_end_matches('/'), path)
    }

    /// `None` when the server has nothing for the query.
    fn search(&self, value: &str) -> Result<Option<Vec<Candidate>>, ResolveError> {
        let url = self.server("/search");
        let resp = self.send(&HttpRequest::post(&url, "text/plain", value))?;
        let candidates = match resp.status {
            200 => items_from_array(&resp.body),
            300 => choices(&resp.body),
            400 | 404 | 501 => return Ok(None),
            status => {
                return Err(ResolveError::UpstreamUnavailable {
                    url,
                    reason: format!("status {status}"),
                })
            }
        };
        let candidates =
            candidates.map_err(|reason| ResolveError::UpstreamUnavailable { url, reason })?;
        Ok((!candidates.is_empty()).then_some(candidates))
    }

    fn web(&self, target: &str) -> Result<Vec<Candidate>, ResolveError> {
        let url = self.server("/web");
        let resp = self.send(&HttpRequest::post(&url, "text/plain", target))?;
        let parsed = match resp.status {
            200 => items_from_array(&resp.body),
            300 => choices(&resp.body),
            400 | 404 | 501 => return Ok(Vec::new()),
            status => Err(format!("status {status}")),
        };
        parsed.map_err(|reason| ResolveError::UpstreamUnavailable { url, reason })
    }

    /// Up to ten candidates from the CrossRef works search, in API order.
    pub fn crossref_fallback(&self, text: &str) -> Result<Vec<CrossrefCandidate>, ResolveError> {
        let base = format!("{}/works", self.config.crossref_url.trim_end_matches('/'));
        let rows = CROSSREF_MAX_ROWS.to_string();
        let url = url::Url::parse_with_params(
            &base,
            [
                ("query.bibliographic", text.trim()),
                ("rows", rows.as_str()),
            ],
        )
        .map_err(|e| ResolveError::UpstreamUnavailable {
            url: base.clone(),
            reason: e.to_string(),
        })?;
        let request = HttpRequest::get(url.as_str())
            .header("accept", "application/json")
            .header("user-agent", &self.config.user_agent());
        let resp = self.send(&request)?;
        let unavailable = |reason: String| ResolveError::UpstreamUnavailable {
            url: url.to_string(),
            reason,
        };
        match resp.status {
            200 => parse_works(&resp.body).map_err(unavailable),
            404 => Ok(Vec::new()),
            status => Err(unavailable(format!("status {status}"))),
        }
    }

    fn export(&self, record: Record) -> Result<BibEntry, ResolveError> {
        let text = match record {
            Record::Item(item) => self.export_item(&item)?,
            Record::WebChoice {
                session,
                key,
                title,
            } => {
                let url = self.server("/web");
                let mut body = session;
                body["items"] = serde_json::json!({ key: title });
                let resp = self.send(&HttpRequest::post(
                    &url,
                    "application/json",
                    &body.to_string(),
                ))?;
                let item = (resp.status == 200)
                    .then(|| serde_json::from_str::<Vec<Value>>(&resp.body).ok())
                    .flatten()
                    .and_then(|items| items.into_iter().next())
                    .ok_or_else(|| ResolveError::UpstreamUnavailable {
                        url,
                        reason: format!("selection failed with status {}", resp.status),
                    })?;
                self.export_item(&item)?
            }
            Record::Crossref(c) => {
                let doi = c.doi.ok_or_else(|| ResolveError::ExportFailure {
                    raw: String::new(),
                    reason: "fallback record has no DOI".into(),
                })?;
                let url = format!(
                    "{}/works/{}/transform/application/x-bibtex",
                    self.config.crossref_url.trim_end_matches('/'),
                    doi
                );
                let request = HttpRequest::get(&url)
                    .header("accept", "application/x-bibtex")
                    .header("user-agent", &self.config.user_agent());
                let resp = self.send(&request)?;
                if resp.status != 200 {
                    return Err(ResolveError::ExportFailure {
                        raw: resp.body,
                        reason: format!("status {}", resp.status),
                    });
                }
                resp.body
            }
        };
        parse_export(&text)
    }

    fn export_item(&self, item: &Value) -> Result<String, ResolveError> {
        let url = self.server("/export?format=bibtex");
        let body = Value::Array(vec![item.clone()]).to_string();
        let resp = self.send(&HttpRequest::post(&url, "application/json", &body))?;
        if resp.status != 200 {
            return Err(ResolveError::ExportFailure {
                raw: resp.body,
                reason: format!("status {}", resp.status),
            });
        }
        Ok(resp.body)
    }
}

impl Lookup for Resolver {
    fn lookup(&self, query: &Query) -> Result<ResolutionResult, ResolveError> {
        self.resolve_query(query)
    }
}

/// Parses exported BibTeX, keeping the raw text on failure, and sanitizes the key.
pub fn parse_export(text: &str) -> Result<BibEntry, ResolveError> {
    let failure = |reason: String| ResolveError::ExportFailure {
        raw: text.to_string(),
        reason,
    };
    let mut entries = parse_bibliography(text).map_err(|e| failure(e.to_string()))?;
    if entries.is_empty() {
        return Err(failure("no entry in export".into()));
    }
    let mut entry = entries.swap_remove(0);
    let key = sanitize_citation_key(entry.citation_key());
    entry
        .set_citation_key(&key)
        .map_err(|e| failure(e.to_string()))?;
    Ok(entry)
}

fn item_title(item: &Value) -> String {
    match item {
        Value::String(s) => s.clone(),
        other => other
            .get("title")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string(),
    }
}

fn items_from_array(body: &str) -> Result<Vec<Candidate>, String> {
    let items: Vec<Value> =
        serde_json::from_str(body).map_err(|e| format!("bad item list: {e}"))?;
    Ok(items
        .into_iter()
        .map(|item| Candidate {
            title: item_title(&item),
            record: Record::Item(item),
        })
        .collect())
}

/// Multiple-choice bodies: either a web selection object
/// (`{"items": {key: title}, ...session fields}`) or a map of key to item.
fn choices(body: &str) -> Result<Vec<Candidate>, String> {
    let value: Value = serde_json::from_str(body).map_err(|e| format!("bad choice list: {e}"))?;
    match value {
        Value::Array(_) => items_from_array(body),
        Value::Object(mut map) => match map.remove("items") {
            Some(Value::Object(items)) => {
                let session = Value::Object(map);
                Ok(items
                    .into_iter()
                    .map(|(key, v)| {
                        let title = item_title(&v);
                        Candidate {
                            title: title.clone(),
                            record: Record::WebChoice {
                                session: session.clone(),
                                key,
                                title,
                            },
                        }
                    })
                    .collect())
            }
            Some(other) => {
                map.insert("items".into(), other);
                Ok(items_from_map(map))
            }
            None => Ok(items_from_map(map)),
        },
        _ => Err("multiple-choice body is neither a list nor an object".into()),
    }
}

fn items_from_map(map: serde_json::Map<String, Value>) -> Vec<Candidate> {
    map.into_iter()
        .map(|(_, item)| Candidate {
            title: item_title(&item),
            record: Record::Item(item),
        })
        .collect()
}
