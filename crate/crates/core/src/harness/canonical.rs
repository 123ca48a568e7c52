use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bib::FieldSlot;
use crate::normalize::normalize_year;
use crate::verify::{CanonicalValue, ResolutionRule, SourceTag, VersionType};

/// Field values reported by one metadata source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRecord {
    pub source: SourceTag,
    /// Version the record describes, when it describes a specific one.
    #[serde(default)]
    pub version_type: Option<VersionType>,
    pub fields: BTreeMap<FieldSlot, String>,
}

impl SourceRecord {
    fn value(&self, slot: FieldSlot) -> Option<&str> {
        self.fields
            .get(&slot)
            .map(String::as_str)
            .filter(|v| !v.trim().is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CanonicalError {
    #[error("no source carries any field")]
    NoResolvableFields,
}

/// Fallback source order: domain databases, translation server, arXiv, OpenAlex.
fn source_rank(source: SourceTag) -> u8 {
    match source {
        SourceTag::Dblp | SourceTag::PubMed => 0,
        SourceTag::TranslationServer => 1,
        SourceTag::Arxiv => 2,
        SourceTag::OpenAlex => 3,
    }
}

fn preferred_first(slot: FieldSlot, source: SourceTag) -> bool {
    match slot {
        FieldSlot::Doi => source == SourceTag::OpenAlex,
        FieldSlot::Title => source == SourceTag::TranslationServer,
        _ => false,
    }
}

fn version_rank(v: Option<VersionType>) -> u8 {
    match v {
        Some(VersionType::Journal) => 0,
        Some(VersionType::Proceedings) => 1,
        Some(VersionType::Arxiv) => 2,
        None => 3,
    }
}

fn pick(
    slot: FieldSlot,
    sources: &[SourceRecord],
    key: impl Fn(&SourceRecord) -> (u8, u8),
) -> Option<(&SourceRecord, &str)> {
    sources
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.value(slot).map(|v| (i, s, v)))
        .min_by_key(|(i, s, _)| (key(s), *i))
        .map(|(_, s, v)| (s, v))
}

fn majority_year(sources: &[SourceRecord]) -> Option<CanonicalValue> {
    let votes: Vec<(&SourceRecord, String)> = sources
        .iter()
        .filter_map(|s| {
            let v = s.value(FieldSlot::Year)?;
            Some((
                s,
                normalize_year(v).unwrap_or_else(|_| v.trim().to_string()),
            ))
        })
        .collect();
    let mut tally: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, v) in &votes {
        *tally.entry(v.as_str()).or_default() += 1;
    }
    let top = *tally.values().max()?;
    let leaders: Vec<&str> = tally
        .iter()
        .filter(|(_, n)| **n == top)
        .map(|(v, _)| *v)
        .collect();
    let (winner, rule) = if leaders.len() == 1 {
        (leaders[0], ResolutionRule::Majority)
    } else {
        let best = votes
            .iter()
            .enumerate()
            .filter(|(_, (_, v))| leaders.contains(&v.as_str()))
            .min_by_key(|(i, (s, _))| (source_rank(s.source), *i))
            .map(|(_, (_, v))| v.as_str())?;
        (best, ResolutionRule::MajorityTieBreak)
    };
    let source = votes
        .iter()
        .enumerate()
        .filter(|(_, (_, v))| v == winner)
        .min_by_key(|(i, (s, _))| (source_rank(s.source), *i))
        .map(|(_, (s, _))| s.source)?;
    Some(CanonicalValue {
        value: winner.to_string(),
        source,
        rule,
    })
}

/// Per-slot canonical value with its winning source. DOI prefers OpenAlex,
/// title the translation server; author and venue prefer domain databases;
/// year is a majority vote; entry type, volume, number and pages come from
/// the published version (journal over proceedings over arXiv).
pub fn resolve_canonical(
    sources: &[SourceRecord],
) -> Result<BTreeMap<FieldSlot, CanonicalValue>, CanonicalError> {
    let mut out = BTreeMap::new();
    for slot in FieldSlot::EVALUABLE {
        let chosen = match slot {
            FieldSlot::Year => majority_year(sources),
            FieldSlot::EntryType | FieldSlot::Volume | FieldSlot::Number | FieldSlot::Pages => {
                pick(slot, sources, |s| {
                    (version_rank(s.version_type), source_rank(s.source))
                })
                .map(|(s, v)| CanonicalValue {
                    value: v.to_string(),
                    source: s.source,
                    rule: ResolutionRule::Priority,
                })
            }
            _ => pick(slot, sources, |s| {
                (
                    u8::from(!preferred_first(slot, s.source)),
                    source_rank(s.source),
                )
            })
            .map(|(s, v)| CanonicalValue {
                value: v.to_string(),
                source: s.source,
                rule: ResolutionRule::Priority,
            }),
        };
        if let Some(value) = chosen {
            out.insert(slot, value);
        }
    }
    if out.is_empty() {
        return Err(CanonicalError::NoResolvableFields);
    }
    Ok(out)
}
