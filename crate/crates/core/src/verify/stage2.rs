//! Fuzzy labelling of fields Stage 1 left pending.
//!
//! Two criteria are evaluated per field: does the value partially match any
//! ground-truth version, and does it come from a different paper. The
//! heuristic below is deterministic; an external [`Judge`] may replace it.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::bib::{FieldLabel, FieldSlot};
use crate::normalize::{
    author_lastname_list, jaccard, normalize_doi, normalize_pages, normalize_title,
    normalize_venue, normalize_year, split_doi, tokenize_filtered, VenueSynonymTable,
};

use super::stage1::{normalize_slot, Stage1Outcome};
use super::truth::{GroundTruth, VersionType};

/// Minimum filtered-token Jaccard for title, venue, and author overlap.
pub const TOKEN_OVERLAP_THRESHOLD: f64 = 0.5;
/// Minimum last-name overlap coefficient for author lists.
pub const AUTHOR_OVERLAP_THRESHOLD: f64 = 0.5;
/// Maximum year difference still counted as a partial match.
pub const YEAR_TOLERANCE: i64 = 1;
/// Minimum normalized edit similarity between DOI suffixes sharing a registrant.
pub const DOI_SUFFIX_SIMILARITY: f64 = 0.8;
/// Identity slots that must disagree before a value is called a substitution.
pub const MIN_IDENTITY_MISMATCHES: usize = 2;

pub const IDENTITY_SLOTS: [FieldSlot; 4] = [
    FieldSlot::Author,
    FieldSlot::Title,
    FieldSlot::Venue,
    FieldSlot::Year,
];

const RELATED_ENTRY_TYPES: [&str; 4] = ["article", "inproceedings", "misc", "incollection"];

const ARXIV_DOI_PREFIX: &str = "10.48550";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Met,
    Unmet,
    CannotAssess,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionVerdict {
    pub partial_match: Criterion,
    pub different_paper: Criterion,
}

impl CriterionVerdict {
    pub fn new(partial_match: Criterion, different_paper: Criterion) -> Self {
        Self {
            partial_match,
            different_paper,
        }
    }
}

/// Pluggable replacement for the built-in heuristic (e.g. a model-backed judge).
pub trait Judge: Send + Sync {
    /// `None` defers to the heuristic.
    fn judge(
        &self,
        entry_value: &str,
        slot: FieldSlot,
        gt: &GroundTruth,
        context: &BTreeMap<FieldSlot, Stage1Outcome>,
    ) -> Option<CriterionVerdict>;
}

/// Maps the two criteria to a label: partial match wins, then substitution,
/// otherwise fabrication.
pub fn verdict_from_criteria(cv: CriterionVerdict) -> FieldLabel {
    use Criterion::*;
    match (cv.partial_match, cv.different_paper) {
        (Met, _) => FieldLabel::P,
        (Unmet, Met) => FieldLabel::S,
        (Unmet, Unmet) => FieldLabel::F,
        (Unmet, CannotAssess) => FieldLabel::F,
        (CannotAssess, Met) => FieldLabel::S,
        (CannotAssess, Unmet) => FieldLabel::F,
        (CannotAssess, CannotAssess) => FieldLabel::F,
    }
}

pub fn classify_stage2(
    entry_value: &str,
    slot: FieldSlot,
    gt: &GroundTruth,
    context: &BTreeMap<FieldSlot, Stage1Outcome>,
    venues: &VenueSynonymTable,
) -> CriterionVerdict {
    let partial_match = partial_match(entry_value, slot, gt, context, venues);
    let different_paper = if partial_match == Criterion::Met {
        Criterion::Unmet
    } else if different_paper(entry_value, slot, gt, context) {
        Criterion::Met
    } else {
        Criterion::Unmet
    };
    CriterionVerdict {
        partial_match,
        different_paper,
    }
}

fn identity_mismatches(slot: FieldSlot, context: &BTreeMap<FieldSlot, Stage1Outcome>) -> usize {
    let mut mismatched: BTreeSet<FieldSlot> = IDENTITY_SLOTS
        .into_iter()
        .filter(|s| {
            matches!(
                context.get(s),
                Some(Stage1Outcome::Pending | Stage1Outcome::Label(FieldLabel::F | FieldLabel::S))
            )
        })
        .collect();
    if IDENTITY_SLOTS.contains(&slot) {
        mismatched.insert(slot);
    }
    mismatched.len()
}

fn partial_match(
    value: &str,
    slot: FieldSlot,
    gt: &GroundTruth,
    context: &BTreeMap<FieldSlot, Stage1Outcome>,
    venues: &VenueSynonymTable,
) -> Criterion {
    if slot == FieldSlot::EntryType {
        let related =
            |t: &str| RELATED_ENTRY_TYPES.contains(&t.trim().to_ascii_lowercase().as_str());
        let same_paper = identity_mismatches(slot, context) < MIN_IDENTITY_MISMATCHES;
        let met = related(value) && same_paper && gt.values(slot).any(related);
        return if met {
            Criterion::Met
        } else {
            Criterion::Unmet
        };
    }
    if slot == FieldSlot::Doi && preprint_doi_matches(value, gt) {
        return Criterion::Met;
    }
    if gt
        .values(slot)
        .any(|truth| overlaps(slot, value, truth, venues))
    {
        return Criterion::Met;
    }
    let versions = gt.versions();
    let carriers: Vec<_> = versions.iter().filter_map(|v| v.value(slot)).collect();
    let some_lack = carriers.len() < versions.len();
    let distinct: BTreeSet<_> = carriers
        .iter()
        .map(|v| normalize_slot(slot, v, venues))
        .collect();
    if some_lack && distinct.len() >= 2 {
        Criterion::CannotAssess
    } else {
        Criterion::Unmet
    }
}

fn overlaps(slot: FieldSlot, value: &str, truth: &str, venues: &VenueSynonymTable) -> bool {
    match slot {
        FieldSlot::Title => {
            let a = tokenize_filtered(&normalize_title(value));
            let b = tokenize_filtered(&normalize_title(truth));
            jaccard(&a, &b) >= TOKEN_OVERLAP_THRESHOLD
        }
        FieldSlot::Venue => {
            let raw = jaccard(&tokenize_filtered(value), &tokenize_filtered(truth));
            let canon = jaccard(
                &tokenize_filtered(&normalize_venue(value, venues)),
                &tokenize_filtered(&normalize_venue(truth, venues)),
            );
            raw.max(canon) >= TOKEN_OVERLAP_THRESHOLD
        }
        FieldSlot::Author => {
            if jaccard(&tokenize_filtered(value), &tokenize_filtered(truth))
                >= TOKEN_OVERLAP_THRESHOLD
            {
                return true;
            }
            match (author_lastname_list(value), author_lastname_list(truth)) {
                (Ok(a), Ok(b)) => overlap_coefficient(&a, &b) >= AUTHOR_OVERLAP_THRESHOLD,
                _ => false,
            }
        }
        FieldSlot::Pages => match (page_range(value), page_range(truth)) {
            (Some((a0, a1)), Some((b0, b1))) => a0.max(b0) <= a1.min(b1),
            _ => false,
        },
        FieldSlot::Year => match (year_number(value), year_number(truth)) {
            (Some(a), Some(b)) => (a - b).abs() <= YEAR_TOLERANCE,
            _ => false,
        },
        FieldSlot::Doi => {
            let a = normalize_doi(value);
            let b = normalize_doi(truth);
            if a == b {
                return true;
            }
            match (split_doi(&a), split_doi(&b)) {
                (Some((pa, sa)), Some((pb, sb))) => {
                    pa == pb && strsim::normalized_levenshtein(sa, sb) >= DOI_SUFFIX_SIMILARITY
                }
                _ => false,
            }
        }
        FieldSlot::Volume | FieldSlot::Number => value.trim() == truth.trim(),
        FieldSlot::EntryType | FieldSlot::EntryKey => false,
    }
}

fn overlap_coefficient(a: &[String], b: &[String]) -> f64 {
    let a: BTreeSet<_> = a.iter().collect();
    let b: BTreeSet<_> = b.iter().collect();
    let smaller = a.len().min(b.len());
    if smaller == 0 {
        return 0.0;
    }
    a.intersection(&b).count() as f64 / smaller as f64
}

fn page_range(value: &str) -> Option<(u64, u64)> {
    let pages = normalize_pages(value).ok()?;
    let (start, end) = pages.split_once("--").unwrap_or((&pages, &pages));
    let start: u64 = start.parse().ok()?;
    let end: u64 = end.parse().ok()?;
    Some((start.min(end), start.max(end)))
}

fn year_number(value: &str) -> Option<i64> {
    normalize_year(value).ok()?.parse().ok()
}

static ARXIV_ID: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(\d{4}\.\d{4,5})(?:v\d+)?$|([a-z\-]+(?:\.[a-z]{2})?/\d{7})(?:v\d+)?$")
        .expect("valid regex")
});

fn arxiv_id_of(text: &str) -> Option<String> {
    let caps = ARXIV_ID.captures(text)?;
    caps.get(1)
        .or_else(|| caps.get(2))
        .map(|m| m.as_str().to_string())
}

/// An arXiv DOI (`10.48550/arXiv.<id>`) for the same arXiv id as a
/// ground-truth arXiv version.
fn preprint_doi_matches(value: &str, gt: &GroundTruth) -> bool {
    let doi = normalize_doi(value);
    let Some((prefix, suffix)) = split_doi(&doi) else {
        return false;
    };
    if prefix != ARXIV_DOI_PREFIX {
        return false;
    }
    let Some(id) = arxiv_id_of(suffix) else {
        return false;
    };
    let from_field = gt.arxiv_id().and_then(|a| arxiv_id_of(&a.to_lowercase()));
    let from_version = gt
        .version(VersionType::Arxiv)
        .and_then(|v| v.value(FieldSlot::Doi))
        .and_then(|d| arxiv_id_of(&normalize_doi(d)));
    from_field.as_deref() == Some(id.as_str()) || from_version.as_deref() == Some(id.as_str())
}

fn different_paper(
    value: &str,
    slot: FieldSlot,
    gt: &GroundTruth,
    context: &BTreeMap<FieldSlot, Stage1Outcome>,
) -> bool {
    if slot == FieldSlot::Doi {
        let doi = normalize_doi(value);
        return gt
            .known_aliases()
            .iter()
            .any(|alias| normalize_doi(alias) == doi);
    }
    IDENTITY_SLOTS.contains(&slot) && identity_mismatches(slot, context) >= MIN_IDENTITY_MISMATCHES
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::truth::GroundTruthVersion;
    use Criterion::*;

    #[test]
    fn verdict_table() {
        assert_eq!(
            verdict_from_criteria(CriterionVerdict::new(Met, Met)),
            FieldLabel::P
        );
        assert_eq!(
            verdict_from_criteria(CriterionVerdict::new(Met, CannotAssess)),
            FieldLabel::P
        );
        assert_eq!(
            verdict_from_criteria(CriterionVerdict::new(Unmet, Met)),
            FieldLabel::S
        );
        assert_eq!(
            verdict_from_criteria(CriterionVerdict::new(CannotAssess, CannotAssess)),
            FieldLabel::F
        );
    }

    fn gt() -> GroundTruth {
        GroundTruth::new(
            "p",
            vec![
                GroundTruthVersion::new(VersionType::Arxiv)
                    .with(FieldSlot::Doi, "10.48550/arXiv.2510.16227")
                    .with(FieldSlot::Year, "2025"),
                GroundTruthVersion::new(VersionType::Journal)
                    .with(FieldSlot::Doi, "10.1162/TACL.a.611")
                    .with(FieldSlot::Year, "2026")
                    .with(FieldSlot::Pages, "100--120"),
            ],
        )
        .unwrap()
    }

    #[test]
    fn slot_specific_overlap() {
        let table = VenueSynonymTable::bundled();
        let ctx = BTreeMap::new();
        let g = gt();
        assert_eq!(
            classify_stage2("115-130", FieldSlot::Pages, &g, &ctx, table).partial_match,
            Met
        );
        assert_eq!(
            classify_stage2("121-130", FieldSlot::Pages, &g, &ctx, table).partial_match,
            Unmet
        );
        assert_eq!(
            classify_stage2("2027", FieldSlot::Year, &g, &ctx, table).partial_match,
            Met
        );
        assert_eq!(
            classify_stage2("2028", FieldSlot::Year, &g, &ctx, table).partial_match,
            Unmet
        );
        assert_eq!(
            classify_stage2("10.1162/tacl.a.612", FieldSlot::Doi, &g, &ctx, table).partial_match,
            Met
        );
        assert_eq!(
            classify_stage2("10.1162/zzzz", FieldSlot::Doi, &g, &ctx, table).partial_match,
            Unmet
        );
    }

    #[test]
    fn preprint_doi_is_partial_when_ids_agree() {
        let g = GroundTruth::new(
            "p",
            vec![GroundTruthVersion::new(VersionType::Journal)
                .with(FieldSlot::Doi, "10.1162/TACL.a.611")],
        )
        .unwrap()
        .with_arxiv_id("2510.16227");
        let table = VenueSynonymTable::bundled();
        let ctx = BTreeMap::new();
        let cv = classify_stage2("10.48550/arXiv.2510.16227", FieldSlot::Doi, &g, &ctx, table);
        assert_eq!(cv, CriterionVerdict::new(Met, Unmet));
        let cv = classify_stage2("10.48550/arXiv.2510.99999", FieldSlot::Doi, &g, &ctx, table);
        assert_eq!(cv.partial_match, Unmet);
    }

    #[test]
    fn cannot_assess_when_versions_disagree_and_one_lacks_slot() {
        let g = GroundTruth::new(
            "p",
            vec![
                GroundTruthVersion::new(VersionType::Arxiv).with(FieldSlot::Title, "T"),
                GroundTruthVersion::new(VersionType::Proceedings).with(FieldSlot::Volume, "3"),
                GroundTruthVersion::new(VersionType::Journal).with(FieldSlot::Volume, "12"),
            ],
        )
        .unwrap();
        let cv = classify_stage2(
            "99",
            FieldSlot::Volume,
            &g,
            &BTreeMap::new(),
            VenueSynonymTable::bundled(),
        );
        assert_eq!(cv, CriterionVerdict::new(CannotAssess, Unmet));
        assert_eq!(verdict_from_criteria(cv), FieldLabel::F);
    }

    #[test]
    fn entry_type_related_types_partial_only_for_same_paper() {
        let g = GroundTruth::new(
            "p",
            vec![
                GroundTruthVersion::new(VersionType::Journal).with(FieldSlot::EntryType, "article")
            ],
        )
        .unwrap();
        let table = VenueSynonymTable::bundled();
        let mut ctx = BTreeMap::new();
        assert_eq!(
            classify_stage2("misc", FieldSlot::EntryType, &g, &ctx, table).partial_match,
            Met
        );
        assert_eq!(
            classify_stage2("book", FieldSlot::EntryType, &g, &ctx, table).partial_match,
            Unmet
        );
        ctx.insert(FieldSlot::Title, Stage1Outcome::Pending);
        ctx.insert(FieldSlot::Author, Stage1Outcome::Pending);
        assert_eq!(
            classify_stage2("misc", FieldSlot::EntryType, &g, &ctx, table).partial_match,
            Unmet
        );
    }
}
