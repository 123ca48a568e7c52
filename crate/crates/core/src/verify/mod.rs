//! Field-level verification of candidate entries against version-aware
//! ground truth.

mod labels;
mod stage1;
mod stage2;
mod stats;
mod truth;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, LazyLock};

use serde::{Deserialize, Serialize};

use crate::bib::{BibEntry, FieldLabel, FieldSlot};
use crate::normalize::VenueSynonymTable;

pub use labels::{group_labels, read_labels, write_labels, LabelFileError, LabelRecord, Stage};
pub use stage1::{
    cited_version_kind, classify_stage1, is_inapplicable, normalize_slot, Stage1Outcome,
};
pub use stage2::{
    classify_stage2, verdict_from_criteria, Criterion, CriterionVerdict, Judge,
    AUTHOR_OVERLAP_THRESHOLD, DOI_SUFFIX_SIMILARITY, IDENTITY_SLOTS, MIN_IDENTITY_MISMATCHES,
    TOKEN_OVERLAP_THRESHOLD, YEAR_TOLERANCE,
};
pub use stats::{
    aggregate_stats, co_error_matrix, Accuracy, AggregateReport, Breakdown, CoErrorMatrix,
    TaggedLabels,
};
pub use truth::{
    CanonicalValue, GroundTruth, GroundTruthError, GroundTruthVersion, ResolutionRule, SourceTag,
    VersionType,
};

/// Number of substituted fields that marks a wholesale substitution.
pub const WHOLESALE_MIN_SUBSTITUTIONS: usize = 3;
/// Largest error count still considered an isolated error.
pub const ISOLATED_MAX_ERRORS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMode {
    None,
    Isolated,
    Wholesale,
    Mixed,
}

/// Labels for one candidate entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryVerdict {
    pub labels: BTreeMap<FieldSlot, FieldLabel>,
    pub fully_correct: bool,
    pub error_mode: ErrorMode,
    pub stage2_slots: BTreeSet<FieldSlot>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub criteria: BTreeMap<FieldSlot, CriterionVerdict>,
}

impl EntryVerdict {
    pub fn label(&self, slot: FieldSlot) -> FieldLabel {
        self.labels.get(&slot).copied().unwrap_or(FieldLabel::X)
    }

    pub fn stage(&self, slot: FieldSlot) -> Stage {
        if self.stage2_slots.contains(&slot) {
            Stage::Stage2
        } else {
            Stage::Stage1
        }
    }
}

/// `none` without errors; `wholesale` at ≥3 substitutions; `isolated` with
/// one or two error fields; otherwise `mixed`.
pub fn classify_error_mode(labels: &BTreeMap<FieldSlot, FieldLabel>) -> ErrorMode {
    let errors = labels.values().filter(|l| l.is_error()).count();
    let substitutions = labels.values().filter(|l| **l == FieldLabel::S).count();
    if errors == 0 {
        ErrorMode::None
    } else if substitutions >= WHOLESALE_MIN_SUBSTITUTIONS {
        ErrorMode::Wholesale
    } else if errors <= ISOLATED_MAX_ERRORS {
        ErrorMode::Isolated
    } else {
        ErrorMode::Mixed
    }
}

/// Every evaluable (non-X) slot is correct.
pub fn is_fully_correct(labels: &BTreeMap<FieldSlot, FieldLabel>) -> bool {
    labels
        .values()
        .all(|l| matches!(l, FieldLabel::C | FieldLabel::X))
}

/// Two-stage labeller. Holds the venue synonym table and an optional
/// external judge for Stage 2.
#[derive(Clone)]
pub struct Verifier {
    venues: Arc<VenueSynonymTable>,
    judge: Option<Arc<dyn Judge>>,
}

static DEFAULT_VERIFIER: LazyLock<Verifier> = LazyLock::new(Verifier::default);

impl Default for Verifier {
    fn default() -> Self {
        Self {
            venues: Arc::new(VenueSynonymTable::bundled().clone()),
            judge: None,
        }
    }
}

impl Verifier {
    pub fn new(venues: VenueSynonymTable) -> Self {
        Self {
            venues: Arc::new(venues),
            judge: None,
        }
    }

    pub fn with_judge(mut self, judge: Arc<dyn Judge>) -> Self {
        self.judge = Some(judge);
        self
    }

    pub fn venues(&self) -> &VenueSynonymTable {
        &self.venues
    }

    pub fn stage1(&self, entry: &BibEntry, slot: FieldSlot, gt: &GroundTruth) -> Stage1Outcome {
        classify_stage1(entry, slot, gt, &self.venues)
    }

    pub fn stage2(
        &self,
        entry_value: &str,
        slot: FieldSlot,
        gt: &GroundTruth,
        context: &BTreeMap<FieldSlot, Stage1Outcome>,
    ) -> CriterionVerdict {
        self.judge
            .as_ref()
            .and_then(|j| j.judge(entry_value, slot, gt, context))
            .unwrap_or_else(|| classify_stage2(entry_value, slot, gt, context, &self.venues))
    }

    pub fn verify_entry(&self, entry: &BibEntry, gt: &GroundTruth) -> EntryVerdict {
        let context: BTreeMap<FieldSlot, Stage1Outcome> = FieldSlot::ALL
            .into_iter()
            .map(|slot| (slot, self.stage1(entry, slot, gt)))
            .collect();

        let mut labels = BTreeMap::new();
        let mut stage2_slots = BTreeSet::new();
        let mut criteria = BTreeMap::new();
        for (&slot, outcome) in &context {
            let label = match outcome {
                Stage1Outcome::Label(label) => *label,
                Stage1Outcome::Pending => {
                    let value = stage1::entry_value(entry, slot).unwrap_or_default();
                    let cv = self.stage2(value, slot, gt, &context);
                    stage2_slots.insert(slot);
                    criteria.insert(slot, cv);
                    verdict_from_criteria(cv)
                }
            };
            labels.insert(slot, label);
        }
        let fully_correct = is_fully_correct(&labels);
        let error_mode = classify_error_mode(&labels);
        EntryVerdict {
            labels,
            fully_correct,
            error_mode,
            stage2_slots,
            criteria,
        }
    }
}

/// [`Verifier::verify_entry`] with the bundled venue table.
pub fn verify_entry(entry: &BibEntry, gt: &GroundTruth) -> EntryVerdict {
    DEFAULT_VERIFIER.verify_entry(entry, gt)
}
