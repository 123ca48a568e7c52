//! Deterministic rule-based labelling (C, M, X or pending).

use serde::{Deserialize, Serialize};

use crate::bib::{slot_of, BibEntry, FieldLabel, FieldSlot};
use crate::normalize::{
    normalize_author, normalize_doi, normalize_pages, normalize_title, normalize_venue,
    normalize_year, VenueSynonymTable,
};

use super::truth::{GroundTruth, VersionType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage1Outcome {
    Label(FieldLabel),
    Pending,
}

impl Stage1Outcome {
    pub fn label(self) -> Option<FieldLabel> {
        match self {
            Stage1Outcome::Label(l) => Some(l),
            Stage1Outcome::Pending => None,
        }
    }
}

/// Slots that entry types normally do not carry.
pub fn is_inapplicable(entry_type: &str, slot: FieldSlot) -> bool {
    match entry_type {
        "inproceedings" | "conference" => matches!(slot, FieldSlot::Volume | FieldSlot::Number),
        "misc" => matches!(
            slot,
            FieldSlot::Volume | FieldSlot::Number | FieldSlot::Pages
        ),
        _ => false,
    }
}

/// The version kind an entry type cites.
pub fn cited_version_kind(entry_type: &str) -> Option<VersionType> {
    match entry_type {
        "misc" | "unpublished" | "techreport" => Some(VersionType::Arxiv),
        "inproceedings" | "conference" | "incollection" => Some(VersionType::Proceedings),
        "article" => Some(VersionType::Journal),
        _ => None,
    }
}

/// Comparison form of a slot value, or `None` when it cannot be normalized.
pub fn normalize_slot(slot: FieldSlot, value: &str, venues: &VenueSynonymTable) -> Option<String> {
    let normalized = match slot {
        FieldSlot::EntryType => value.trim().to_ascii_lowercase(),
        FieldSlot::EntryKey => return None,
        FieldSlot::Author => normalize_author(value).ok()?,
        FieldSlot::Title => normalize_title(value),
        FieldSlot::Year => normalize_year(value).ok()?,
        FieldSlot::Venue => normalize_venue(value, venues),
        FieldSlot::Volume | FieldSlot::Number => value
            .chars()
            .filter(|c| !matches!(c, '{' | '}'))
            .collect::<String>()
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
            .to_lowercase(),
        FieldSlot::Pages => {
            let pages = normalize_pages(value).ok()?;
            match pages.split_once("--") {
                Some((start, end)) if start == end => start.to_string(),
                _ => pages,
            }
        }
        FieldSlot::Doi => normalize_doi(value),
    };
    (!normalized.is_empty()).then_some(normalized)
}

pub(crate) fn entry_value(entry: &BibEntry, slot: FieldSlot) -> Option<&str> {
    slot_of(entry, slot).filter(|v| !v.trim().is_empty())
}

/// Rule order: entry_key → X; inapplicable and absent from the versions the
/// entry type cites → X; absent from every version → X; absent from the
/// entry → M; normalized match with any version → C; otherwise pending.
pub fn classify_stage1(
    entry: &BibEntry,
    slot: FieldSlot,
    gt: &GroundTruth,
    venues: &VenueSynonymTable,
) -> Stage1Outcome {
    use Stage1Outcome::{Label, Pending};

    if slot == FieldSlot::EntryKey {
        return Label(FieldLabel::X);
    }
    let value = entry_value(entry, slot);
    let entry_type = entry.entry_type();

    if value.is_none() && is_inapplicable(entry_type, slot) {
        let kind = cited_version_kind(entry_type).filter(|k| gt.version(*k).is_some());
        let absent = gt
            .versions()
            .iter()
            .filter(|v| kind.is_none_or(|k| v.version_type == k))
            .all(|v| v.value(slot).is_none());
        if absent {
            return Label(FieldLabel::X);
        }
    }
    if !gt.has_slot(slot) {
        return Label(FieldLabel::X);
    }
    let Some(value) = value else {
        return Label(FieldLabel::M);
    };
    let Some(normalized) = normalize_slot(slot, value, venues) else {
        return Pending;
    };
    let matched = gt
        .values(slot)
        .any(|truth| normalize_slot(slot, truth, venues).as_deref() == Some(normalized.as_str()));
    if matched {
        Label(FieldLabel::C)
    } else {
        Pending
    }
}
