use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bib::{BibEntry, FieldSlot};
use crate::reconcile::PaperMeta;
use crate::verify::GroundTruth;

use super::location::Location;

pub const CORPUS_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Popular,
    LowCitation,
    Recent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Ai,
    Medicine,
    MaterialsScience,
    QuantumComputing,
}

fn tag_name<T: Serialize>(value: &T) -> String {
    serde_json::to_value(value)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&tag_name(self))
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&tag_name(self))
    }
}

/// An externally produced entry under evaluation, tagged by its producer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateEntry {
    pub tag: String,
    #[serde(with = "bibtex_string")]
    pub bibtex: BibEntry,
}

mod bibtex_string {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::bib::{parse_entry, serialize_entry, BibEntry};

    pub fn serialize<S: Serializer>(entry: &BibEntry, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&serialize_entry(entry))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BibEntry, D::Error> {
        let text = String::deserialize(d)?;
        parse_entry(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub paper_id: String,
    pub domain: Domain,
    pub tier: Tier,
    pub description: String,
    #[serde(default)]
    pub locations: Vec<Location>,
    pub ground_truth: GroundTruth,
    #[serde(default)]
    pub candidates: Vec<CandidateEntry>,
    /// Lookup metadata for reconciliation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<PaperMeta>,
}

impl PaperRecord {
    /// Explicit metadata, or DOI and title taken from the first ground-truth
    /// version that has them.
    pub fn lookup_meta(&self) -> PaperMeta {
        if let Some(meta) = &self.meta {
            return meta.clone();
        }
        let first = |slot| {
            self.ground_truth
                .versions()
                .iter()
                .find_map(|v| v.value(slot))
                .map(str::to_string)
        };
        PaperMeta {
            url: None,
            doi: first(FieldSlot::Doi),
            title: first(FieldSlot::Title),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("corpus line {line}: {reason}")]
pub struct CorpusParseError {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Parse(#[from] CorpusParseError),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub records: Vec<PaperRecord>,
    /// Records dropped in permissive mode.
    pub skipped: Vec<CorpusParseError>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    kind: String,
}

fn parse_record(line: &str) -> Result<PaperRecord, String> {
    let mut record: PaperRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if record.paper_id.trim().is_empty() {
        return Err("paper_id is empty".into());
    }
    if record.description.trim().is_empty() {
        return Err("description is empty".into());
    }
    let id = record.paper_id.clone();
    record.ground_truth.set_paper_id(&id);
    Ok(record)
}

/// Streams records from line-delimited JSON after a header line. Malformed
/// records abort unless `permissive`, in which case they are skipped and
/// reported.
pub fn read_corpus<R: BufRead>(reader: R, permissive: bool) -> Result<Corpus, CorpusError> {
    let mut corpus = Corpus::default();
    let mut seen = BTreeSet::new();
    let mut header_seen = false;
    for (idx, line) in reader.lines().enumerate() {
        let number = idx + 1;
        let line = line.map_err(|e| CorpusParseError {
            line: number,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            let header: Header = serde_json::from_str(&line).map_err(|e| CorpusParseError {
                line: number,
                reason: format!("bad header: {e}"),
            })?;
            if header.format_version != CORPUS_FORMAT_VERSION {
                return Err(CorpusParseError {
                    line: number,
                    reason: format!("unsupported format_version {}", header.format_version),
                }
                .into());
            }
            header_seen = true;
            continue;
        }
        let parsed = parse_record(&line).and_then(|r| {
            if seen.contains(&r.paper_id) {
                Err(format!("duplicate paper_id `{}`", r.paper_id))
            } else {
                Ok(r)
            }
        });
        match parsed {
            Ok(record) => {
                seen.insert(record.paper_id.clone());
                corpus.records.push(record);
            }
            Err(reason) => {
                let err = CorpusParseError {
                    line: number,
                    reason,
                };
                if !permissive {
                    return Err(err.into());
                }
                corpus.skipped.push(err);
            }
        }
    }
    Ok(corpus)
}

pub fn load_corpus(path: &Path, permissive: bool) -> Result<Corpus, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_corpus(BufReader::new(file), permissive)
}

/// Header line followed by one record per line.
pub fn write_corpus(records: &[PaperRecord]) -> String {
    let header = Header {
        format_version: CORPUS_FORMAT_VERSION,
        kind: "corpus".into(),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = r#"{"format_version":1,"kind":"corpus"}"#;

    fn record(id: &str, description: &str) -> String {
        format!(
            r#"{{"paper_id":"{id}","domain":"ai","tier":"popular","description":"{description}","ground_truth":{{"versions":[{{"version_type":"arxiv","fields":{{"title":"T"}}}}]}},"candidates":[{{"tag":"m","bibtex":"@misc{{k, title={{T}}}}"}}]}}"#
        )
    }

    #[test]
    fn reads_records() {
        let text = format!(
            "{HEADER}\n{}\n{}\n{}\n",
            record("a", "x"),
            record("b", "y"),
            record("c", "z")
        );
        let corpus = read_corpus(text.as_bytes(), false).unwrap();
        assert_eq!(corpus.records.len(), 3);
        assert_eq!(corpus.records[1].ground_truth.paper_id(), "b");
        assert_eq!(
            corpus.records[0].candidates[0].bibtex.get("title"),
            Some("T")
        );
        let round = write_corpus(&corpus.records);
        assert_eq!(read_corpus(round.as_bytes(), false).unwrap(), corpus);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = format!("{HEADER}\n{}\n{}\n", record("a", "x"), record("b", ""));
        let err = read_corpus(text.as_bytes(), false).unwrap_err();
        assert!(matches!(
            err,
            CorpusError::Parse(CorpusParseError { line: 3, .. })
        ));
        let lenient = read_corpus(text.as_bytes(), true).unwrap();
        assert_eq!(lenient.records.len(), 1);
        assert_eq!(lenient.skipped[0].line, 3);

        let dup = format!("{HEADER}\n{}\n{}\n", record("a", "x"), record("a", "y"));
        let err = read_corpus(dup.as_bytes(), false).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }
}
