#![allow(dead_code)]

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Instant;

use citegate_core::bib::{BibEntry, FieldLabel, FieldSlot};
use citegate_core::harness::{load_corpus, PaperRecord};
use citegate_core::resolve::{ResolutionSource, ResolveError};
use citegate_core::{Lookup, Query, ResolutionResult, ResolutionStatus};

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

pub fn read_fixture(rel: &str) -> String {
    std::fs::read_to_string(fixture(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn golden_corpus() -> Vec<PaperRecord> {
    load_corpus(&fixture("golden/corpus.jsonl"), false)
        .expect("golden corpus loads")
        .records
}

/// Parses a compact label string such as `CXCCCCXXFX`; nine characters are
/// read as the evaluable slots, ten as every slot.
pub fn labels_from_str(s: &str) -> BTreeMap<FieldSlot, FieldLabel> {
    let slots: &[FieldSlot] = if s.len() == 9 {
        &FieldSlot::EVALUABLE
    } else {
        &FieldSlot::ALL
    };
    assert_eq!(s.len(), slots.len(), "bad label string {s}");
    slots
        .iter()
        .zip(s.chars())
        .map(|(slot, c)| {
            let label = match c {
                'C' => FieldLabel::C,
                'M' => FieldLabel::M,
                'F' => FieldLabel::F,
                'P' => FieldLabel::P,
                'S' => FieldLabel::S,
                'X' => FieldLabel::X,
                other => panic!("bad label {other}"),
            };
            (*slot, label)
        })
        .collect()
}

/// Answers every query with a fixed outcome and records the queries it saw.
pub struct FixedLookup {
    pub status: ResolutionStatus,
    pub bibtex: Option<BibEntry>,
    pub seen: Mutex<Vec<Query>>,
}

impl FixedLookup {
    pub fn new(status: ResolutionStatus, bibtex: Option<BibEntry>) -> Self {
        Self {
            status,
            bibtex,
            seen: Mutex::new(Vec::new()),
        }
    }
}

impl Lookup for FixedLookup {
    fn lookup(&self, query: &Query) -> Result<ResolutionResult, ResolveError> {
        self.seen.lock().unwrap().push(query.clone());
        Ok(ResolutionResult {
            status: self.status,
            candidates: Vec::new(),
            bibtex: self.bibtex.clone(),
            source: ResolutionSource::SearchEndpoint,
        })
    }
}

/// Looks entries up by DOI in a fixed table.
pub struct TableLookup(pub BTreeMap<String, BibEntry>);

impl Lookup for TableLookup {
    fn lookup(&self, query: &Query) -> Result<ResolutionResult, ResolveError> {
        let hit = self.0.get(&query.value).cloned();
        Ok(ResolutionResult {
            status: if hit.is_some() {
                ResolutionStatus::Found
            } else {
                ResolutionStatus::NotFound
            },
            candidates: Vec::new(),
            bibtex: hit,
            source: ResolutionSource::SearchEndpoint,
        })
    }
}

/// Minimal HTTP/1.1 server: `/search` answers 404, everything else an empty
/// CrossRef works list. Arrival times of each request are kept.
pub struct StubServer {
    pub base: String,
    pub arrivals: Arc<Mutex<Vec<Instant>>>,
}

impl StubServer {
    pub fn start() -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind stub");
        let base = format!("http://{}", listener.local_addr().unwrap());
        let arrivals = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&arrivals);
        thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                let log = Arc::clone(&log);
                thread::spawn(move || serve(stream, &log));
            }
        });
        Self { base, arrivals }
    }
}

fn serve(stream: TcpStream, log: &Mutex<Vec<Instant>>) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut request_line = String::new();
    if reader.read_line(&mut request_line).unwrap_or(0) == 0 {
        return;
    }
    log.lock().unwrap().push(Instant::now());
    let mut length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 || line.trim().is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            if name.eq_ignore_ascii_case("content-length") {
                length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; length];
    let _ = reader.read_exact(&mut body);
    let (status, payload) = if request_line.contains("/search") {
        ("404 Not Found", String::new())
    } else {
        (
            "200 OK",
            r#"{"status":"ok","message":{"items":[]}}"#.to_string(),
        )
    };
    let response = format!(
        "HTTP/1.1 {status}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{payload}",
        payload.len()
    );
    let mut stream = stream;
    let _ = stream.write_all(response.as_bytes());
}
