//! Line-delimited label files: a header line, then one JSON record per
//! (paper, entry, slot).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bib::{FieldLabel, FieldSlot};

use super::stats::TaggedLabels;

pub const LABELS_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Stage1,
    Stage2,
}

/// Field order is fixed by declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub paper_id: String,
    pub entry_tag: String,
    pub slot: FieldSlot,
    pub label: FieldLabel,
    pub stage: Stage,
    pub tier: String,
    pub domain: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    kind: String,
}

#[derive(Debug, Error)]
pub enum LabelFileError {
    #[error("label file is empty")]
    Empty,
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("unsupported label file version {0}")]
    Version(u32),
}

pub fn write_labels(records: &[LabelRecord]) -> String {
    let header = Header {
        format_version: LABELS_FORMAT_VERSION,
        kind: "labels".to_string(),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("label record serializes"));
        out.push('\n');
    }
    out
}

pub fn read_labels(text: &str) -> Result<Vec<LabelRecord>, LabelFileError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (idx, first) = lines.next().ok_or(LabelFileError::Empty)?;
    let header: Header = serde_json::from_str(first).map_err(|e| LabelFileError::Parse {
        line: idx + 1,
        reason: format!("bad header: {e}"),
    })?;
    if header.format_version != LABELS_FORMAT_VERSION {
        return Err(LabelFileError::Version(header.format_version));
    }
    lines
        .map(|(idx, line)| {
            serde_json::from_str(line).map_err(|e| LabelFileError::Parse {
                line: idx + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

/// Regroups flat label records into per-entry label maps, ordered by
/// (paper_id, entry_tag).
pub fn group_labels(records: &[LabelRecord]) -> Vec<TaggedLabels> {
    let mut grouped: BTreeMap<(String, String), TaggedLabels> = BTreeMap::new();
    for r in records {
        grouped
            .entry((r.paper_id.clone(), r.entry_tag.clone()))
            .or_insert_with(|| TaggedLabels {
                paper_id: r.paper_id.clone(),
                model: r.entry_tag.clone(),
                tier: r.tier.clone(),
                domain: r.domain.clone(),
                labels: BTreeMap::new(),
            })
            .labels
            .insert(r.slot, r.label);
    }
    grouped.into_values().collect()
}
