//! HTTP seam: a live client, and a record/replay pair for offline tests.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FIXTURE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpRequest {
    pub method: String,
    pub url: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub headers: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<String>,
}

impl HttpRequest {
    pub fn get(url: &str) -> Self {
        Self {
            method: "GET".into(),
            url: url.into(),
            headers: Vec::new(),
            body: None,
        }
    }

    pub fn post(url: &str, content_type: &str, body: &str) -> Self {
        Self {
            method: "POST".into(),
            url: url.into(),
            headers: vec![("content-type".into(), content_type.into())],
            body: Some(body.into()),
        }
    }

    pub fn header(mut self, name: &str, value: &str) -> Self {
        self.headers.push((name.to_ascii_lowercase(), value.into()));
        self
    }

    fn matches(&self, other: &HttpRequest) -> bool {
        self.method == other.method && self.url == other.url && self.body == other.body
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpResponse {
    pub status: u16,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub headers: Vec<(String, String)>,
    pub body: String,
}

impl HttpResponse {
    pub fn new(status: u16, body: &str) -> Self {
        Self {
            status,
            headers: Vec::new(),
            body: body.into(),
        }
    }

    /// Server errors and throttling, except 501, which will not change on retry.
    pub fn is_transient_failure(&self) -> bool {
        (self.status >= 500 && self.status != 501) || self.status == 429
    }
}

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("network error: {0}")]
    Network(String),
    #[error("no recorded exchange for {method} {url}")]
    NoFixture { method: String, url: String },
    #[error("fixture file {path}: {reason}")]
    Fixture { path: PathBuf, reason: String },
}

pub trait Transport: Send + Sync {
    fn send(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError>;

    /// Whether requests reach a real network (and so need rate limiting).
    fn is_live(&self) -> bool {
        false
    }
}

/// Headers kept in fixtures; anything else (user agents, dates) is dropped.
const RECORDED_HEADERS: [&str; 2] = ["content-type", "accept"];

pub struct LiveTransport {
    client: reqwest::blocking::Client,
    user_agent: String,
}

impl LiveTransport {
    pub fn new(user_agent: &str, timeout: Duration) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .user_agent(user_agent)
            .build()
            .map_err(|e| TransportError::Network(e.to_string()))?;
        Ok(Self {
            client,
            user_agent: user_agent.into(),
        })
    }

    pub fn user_agent(&self) -> &str {
        &self.user_agent
    }
}

impl Transport for LiveTransport {
    fn send(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        let method = reqwest::Method::from_bytes(request.method.as_bytes())
            .map_err(|e| TransportError::Network(e.to_string()))?;
        let mut builder = self.client.request(method, &request.url);
        for (name, value) in &request.headers {
            builder = builder.header(name, value);
        }
        if let Some(body) = &request.body {
            builder = builder.body(body.clone());
        }
        let response = builder
            .send()
            .map_err(|e| TransportError::Network(e.to_string()))?;
        let status = response.status().as_u16();
        let headers = response
            .headers()
            .iter()
            .filter(|(name, _)| RECORDED_HEADERS.contains(&name.as_str()))
            .filter_map(|(name, value)| Some((name.to_string(), value.to_str().ok()?.to_string())))
            .collect();
        let body = response
            .text()
            .map_err(|e| TransportError::Network(e.to_string()))?;
        Ok(HttpResponse {
            status,
            headers,
            body,
        })
    }

    fn is_live(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub request: HttpRequest,
    pub response: HttpResponse,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixtureFile {
    pub format_version: u32,
    pub exchanges: Vec<Exchange>,
}

impl FixtureFile {
    pub fn new(exchanges: Vec<Exchange>) -> Self {
        Self {
            format_version: FIXTURE_FORMAT_VERSION,
            exchanges,
        }
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let file: FixtureFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if file.format_version != FIXTURE_FORMAT_VERSION {
            return Err(format!(
                "unsupported fixture version {}",
                file.format_version
            ));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, TransportError> {
        let fixture_err = |reason: String| TransportError::Fixture {
            path: path.to_path_buf(),
            reason,
        };
        let text = fs::read_to_string(path).map_err(|e| fixture_err(e.to_string()))?;
        Self::parse(&text).map_err(fixture_err)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("fixture serializes");
        text.push('\n');
        text
    }
}

/// Serves recorded exchanges matched on method, URL and body. Repeated
/// identical requests are answered in recording order, the last one
/// repeating once exhausted.
pub struct ReplayTransport {
    exchanges: Vec<Exchange>,
    cursor: Mutex<Vec<usize>>,
}

impl ReplayTransport {
    pub fn new(exchanges: Vec<Exchange>) -> Self {
        let n = exchanges.len();
        Self {
            exchanges,
            cursor: Mutex::new(vec![0; n]),
        }
    }

    pub fn from_fixture(file: FixtureFile) -> Self {
        Self::new(file.exchanges)
    }

    /// Loads every `*.json` fixture in a directory, in file-name order.
    pub fn from_dir(dir: &Path) -> Result<Self, TransportError> {
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| TransportError::Fixture {
                path: dir.to_path_buf(),
                reason: e.to_string(),
            })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut exchanges = Vec::new();
        for path in paths {
            exchanges.extend(FixtureFile::load(&path)?.exchanges);
        }
        Ok(Self::new(exchanges))
    }
}

impl Transport for ReplayTransport {
    fn send(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        let matching: Vec<usize> = (0..self.exchanges.len())
            .filter(|&i| self.exchanges[i].request.matches(request))
            .collect();
        let Some(&last) = matching.last() else {
            return Err(TransportError::NoFixture {
                method: request.method.clone(),
                url: request.url.clone(),
            });
        };
        let mut used = self.cursor.lock().unwrap_or_else(|e| e.into_inner());
        let pick = matching
            .iter()
            .copied()
            .find(|&i| used[i] == 0)
            .unwrap_or(last);
        used[pick] += 1;
        Ok(self.exchanges[pick].response.clone())
    }
}

/// Wraps another transport and keeps every exchange for saving as a fixture.
pub struct RecordingTransport<T> {
    inner: T,
    log: Mutex<Vec<Exchange>>,
}

impl<T: Transport> RecordingTransport<T> {
    pub fn new(inner: T) -> Self {
        Self {
            inner,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn fixture(&self) -> FixtureFile {
        FixtureFile::new(self.log.lock().unwrap_or_else(|e| e.into_inner()).clone())
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        fs::write(path, self.fixture().to_json())
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn send(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        let response = self.inner.send(request)?;
        let mut recorded = request.clone();
        recorded
            .headers
            .retain(|(name, _)| RECORDED_HEADERS.contains(&name.as_str()));
        self.log
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push(Exchange {
                request: recorded,
                response: response.clone(),
            });
        Ok(response)
    }

    fn is_live(&self) -> bool {
        self.inner.is_live()
    }
}
