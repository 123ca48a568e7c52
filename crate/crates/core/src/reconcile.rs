//! Title-gated, field-by-field reconciliation of a baseline entry against an
//! authoritative record.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bib::{slot_of, BibEntry, FieldSlot};
use crate::normalize::{jaccard, tokenize_filtered};
use crate::resolve::{classify_query, Lookup, QueryKind, ResolutionStatus, ResolveError};

/// Minimum title similarity (inclusive) for accepting an authoritative record.
pub const RECONCILE_GATE_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperMeta {
    #[serde(default)]
    pub url: Option<String>,
    #[serde(default)]
    pub doi: Option<String>,
    #[serde(default)]
    pub title: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReconcileAction {
    Merged,
    KeptBaselineNoQuery,
    KeptBaselineNotFound,
    KeptBaselineTitleMismatch,
}

impl ReconcileAction {
    pub fn as_str(self) -> &'static str {
        match self {
            ReconcileAction::Merged => "merged",
            ReconcileAction::KeptBaselineNoQuery => "kept_baseline_no_query",
            ReconcileAction::KeptBaselineNotFound => "kept_baseline_not_found",
            ReconcileAction::KeptBaselineTitleMismatch => "kept_baseline_title_mismatch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconcileOutcome {
    pub result: BibEntry,
    pub action: ReconcileAction,
    pub gate_score: Option<f64>,
    pub replaced_slots: BTreeSet<FieldSlot>,
}

impl ReconcileOutcome {
    fn kept(baseline: &BibEntry, action: ReconcileAction, gate_score: Option<f64>) -> Self {
        Self {
            result: baseline.clone(),
            action,
            gate_score,
            replaced_slots: BTreeSet::new(),
        }
    }
}

fn non_empty(value: &Option<String>) -> Option<&str> {
    value.as_deref().map(str::trim).filter(|v| !v.is_empty())
}

/// First non-empty of url, doi, title.
pub fn build_query(paper: &PaperMeta) -> Option<String> {
    non_empty(&paper.url)
        .or_else(|| non_empty(&paper.doi))
        .or_else(|| non_empty(&paper.title))
        .map(str::to_string)
}

/// Passes when the filtered-token Jaccard reaches the threshold.
pub fn title_gate(query_or_title: &str, authoritative_title: &str) -> (bool, f64) {
    let score = jaccard(
        &tokenize_filtered(query_or_title),
        &tokenize_filtered(authoritative_title),
    );
    (score >= RECONCILE_GATE_THRESHOLD, score)
}

fn present(entry: &BibEntry, slot: FieldSlot) -> Option<&str> {
    slot_of(entry, slot).filter(|v| !v.trim().is_empty())
}

/// Takes every standard slot the authoritative record carries, keeps the
/// baseline value otherwise. Entry type follows the authoritative record;
/// the citation key and non-standard fields stay as in the baseline.
pub fn merge_fields(
    baseline: &BibEntry,
    authoritative: &BibEntry,
) -> (BibEntry, BTreeSet<FieldSlot>) {
    let mut merged = baseline.clone();
    let mut replaced = BTreeSet::new();
    const VALID: &str = "values from a parsed entry are valid";

    if !authoritative.entry_type().is_empty() {
        merged
            .set_entry_type(authoritative.entry_type())
            .expect(VALID);
        replaced.insert(FieldSlot::EntryType);
    }
    for slot in FieldSlot::STANDARD {
        if present(authoritative, slot).is_none() {
            continue;
        }
        replaced.insert(slot);
        let names = slot.backing_fields();
        if names.len() == 1 {
            merged
                .set_field(names[0], present(authoritative, slot).unwrap_or_default())
                .expect(VALID);
            continue;
        }
        // venue: swap the baseline's journal/booktitle for the authoritative ones
        let at = names.iter().filter_map(|n| merged.position(n)).min();
        for name in names {
            merged.remove_field(name);
        }
        let mut at = at.unwrap_or(merged.len());
        for name in names {
            if let Some(value) = authoritative.get(name).filter(|v| !v.trim().is_empty()) {
                merged.insert_field(at, name, value).expect(VALID);
                at += 1;
            }
        }
    }
    (merged, replaced)
}

/// Looks up the paper, gates on title similarity and merges. Every path
/// except `merged` returns the baseline untouched.
pub fn reconcile(
    paper: &PaperMeta,
    baseline: &BibEntry,
    lookup: &dyn Lookup,
) -> Result<ReconcileOutcome, ResolveError> {
    let Some(text) = build_query(paper) else {
        return Ok(ReconcileOutcome::kept(
            baseline,
            ReconcileAction::KeptBaselineNoQuery,
            None,
        ));
    };
    let query = classify_query(&text)?;
    let resolution = lookup.lookup(&query)?;
    let authoritative = match (resolution.status, resolution.bibtex) {
        (ResolutionStatus::Found, Some(entry)) => entry,
        (ResolutionStatus::TitleMismatch, _) => {
            return Ok(ReconcileOutcome::kept(
                baseline,
                ReconcileAction::KeptBaselineTitleMismatch,
                None,
            ))
        }
        _ => {
            return Ok(ReconcileOutcome::kept(
                baseline,
                ReconcileAction::KeptBaselineNotFound,
                None,
            ))
        }
    };

    let gate_text = match query.kind {
        QueryKind::Title => Some(query.value.as_str()),
        _ => non_empty(&paper.title),
    };
    let gate_score = match gate_text {
        Some(text) => {
            let (pass, score) = title_gate(text, authoritative.get("title").unwrap_or_default());
            if !pass {
                return Ok(ReconcileOutcome::kept(
                    baseline,
                    ReconcileAction::KeptBaselineTitleMismatch,
                    Some(score),
                ));
            }
            Some(score)
        }
        None => None,
    };
    let (result, replaced_slots) = merge_fields(baseline, &authoritative);
    Ok(ReconcileOutcome {
        result,
        action: ReconcileAction::Merged,
        gate_score,
        replaced_slots,
    })
}

pub const META_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetaFileError {
    #[error("metadata file must start with `format_version\\t{META_FORMAT_VERSION}`")]
    MissingHeader,
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

/// Parses the reconcile sidecar: a `format_version\t1` line, then
/// `paper_id\turl\tdoi\ttitle` rows (empty cells allowed, `#` comments
/// skipped). An optional column-name row starting with `paper_id` is ignored.
pub fn parse_meta_tsv(text: &str) -> Result<Vec<(String, PaperMeta)>, MetaFileError> {
    let mut lines = text.lines().enumerate();
    let header = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    match header {
        Some((_, l)) if l.trim_end() == format!("format_version\t{META_FORMAT_VERSION}") => {}
        _ => return Err(MetaFileError::MissingHeader),
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() || line.starts_with('#') || line.starts_with("paper_id\t") {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() > 4 || cells[0].trim().is_empty() {
            return Err(MetaFileError::Malformed {
                line: idx + 1,
                reason: "expected paper_id, url, doi, title".into(),
            });
        }
        let cell = |i: usize| {
            cells
                .get(i)
                .map(|c| c.trim())
                .filter(|c| !c.is_empty())
                .map(str::to_string)
        };
        out.push((
            cells[0].trim().to_string(),
            PaperMeta {
                url: cell(1),
                doi: cell(2),
                title: cell(3),
            },
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bib::parse_entry;

    #[test]
    fn query_priority() {
        let meta = |u: &str, d: &str, t: &str| PaperMeta {
            url: Some(u.into()),
            doi: Some(d.into()),
            title: Some(t.into()),
        };
        assert_eq!(build_query(&meta("U", "D", "T")).as_deref(), Some("U"));
        assert_eq!(build_query(&meta(" ", "D", "T")).as_deref(), Some("D"));
        assert_eq!(build_query(&PaperMeta::default()), None);
    }

    #[test]
    fn gate_boundary() {
        // 3 shared of 10 distinct tokens
        let (pass, score) = title_gate(
            "alpha beta gamma delta epsilon zeta",
            "alpha beta gamma eta theta iota kappa",
        );
        assert_eq!(score, 0.3);
        assert!(pass);
        assert_eq!(title_gate("graph neural", "protein folding"), (false, 0.0));
    }

    #[test]
    fn merge_rules() {
        let baseline = parse_entry(
            "@inproceedings{mcauley2012, author={J. McAuley and J. Leskovec}, title={Learning to Discover Social Circles in Ego Networks}, booktitle={NeurIPS}, pages={539--547}, doi={10.5555/x}, note={keep}}",
        )
        .unwrap();
        let auth = parse_entry(
            "@inproceedings{McAuley_2012, author={Julian McAuley and Jure Leskovec}, title={Learning to Discover Social Circles in Ego Networks}, booktitle={Advances in Neural Information Processing Systems 25}, year={2012}, pages={548--556}}",
        )
        .unwrap();
        let (merged, replaced) = merge_fields(&baseline, &auth);
        assert_eq!(merged.citation_key(), "mcauley2012");
        assert_eq!(merged.get("pages"), Some("548--556"));
        assert_eq!(merged.get("doi"), Some("10.5555/x"));
        assert_eq!(merged.get("note"), Some("keep"));
        assert_eq!(
            merged.get("booktitle"),
            Some("Advances in Neural Information Processing Systems 25")
        );
        assert!(!replaced.contains(&FieldSlot::Doi));
        assert!(replaced.contains(&FieldSlot::Year));
        let (again, _) = merge_fields(&merged, &auth);
        assert_eq!(again, merged);
    }

    #[test]
    fn meta_tsv() {
        let text = "format_version\t1\npaper_id\turl\tdoi\ttitle\np1\t\t10.1/x\tSome Title\np2\n";
        let rows = parse_meta_tsv(text).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].1.doi.as_deref(), Some("10.1/x"));
        assert_eq!(rows[1].1, PaperMeta::default());
        assert_eq!(parse_meta_tsv("p1\tu\n"), Err(MetaFileError::MissingHeader));
    }
}
