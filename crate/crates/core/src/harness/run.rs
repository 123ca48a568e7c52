use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bib::{serialize_entry, FieldLabel, FieldSlot};
use crate::reconcile::{reconcile, ReconcileAction};
use crate::resolve::Lookup;
use crate::verify::{
    aggregate_stats, co_error_matrix, write_labels, AggregateReport, CoErrorMatrix, EntryVerdict,
    ErrorMode, LabelRecord, TaggedLabels, Verifier,
};

use super::corpus::PaperRecord;

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Verify,
    ReconcileThenVerify,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "verify" => Ok(Mode::Verify),
            "reconcile_then_verify" => Ok(Mode::ReconcileThenVerify),
            other => Err(format!(
                "unknown mode `{other}` (expected verify or reconcile_then_verify)"
            )),
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("reconcile mode needs a lookup capability")]
    MissingLookup,
    #[error("cannot build worker pool: {0}")]
    Pool(String),
    #[error("cannot write report bundle to {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
}

/// Per-field transitions between the baseline and reconciled labels.
/// Corrections are non-C → C and regressions C → non-C, so
/// `corrections - regressions == after_correct - before_correct` exactly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDelta {
    pub corrections: usize,
    pub regressions: usize,
    pub before_correct: usize,
    pub after_correct: usize,
    pub before_evaluable: usize,
    pub after_evaluable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntrySummary {
    pub paper_id: String,
    pub entry_tag: String,
    /// Labels in slot order as a compact string, e.g. `CXCCCCXXFX`.
    pub labels: String,
    pub error_mode: ErrorMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub before_labels: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<ReconcileAction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Incomplete {
    pub paper_id: String,
    pub entry_tag: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format_version: u32,
    pub mode: Mode,
    pub papers: usize,
    pub entries: usize,
    pub aggregate: AggregateReport,
    pub error_modes: BTreeMap<ErrorMode, usize>,
    pub co_error: CoErrorMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub before: Option<AggregateReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<BTreeMap<FieldSlot, FieldDelta>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actions: Option<BTreeMap<ReconcileAction, usize>>,
    pub incomplete: Vec<Incomplete>,
    pub per_entry: Vec<EntrySummary>,
}

/// Everything a run produces; written to disk by [`ReportBundle::write_to`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub report: Report,
    pub labels: Vec<LabelRecord>,
    pub before_labels: Option<Vec<LabelRecord>>,
    /// Reconciled entries in reconcile mode, in report order.
    pub reconciled_bib: Option<String>,
}

pub const LABELS_FILE: &str = "labels.jsonl";
pub const BEFORE_LABELS_FILE: &str = "labels_before.jsonl";
pub const REPORT_FILE: &str = "report.json";
pub const RECONCILED_FILE: &str = "reconciled.bib";

impl ReportBundle {
    /// Named files and their contents, in a fixed order.
    pub fn files(&self) -> Vec<(&'static str, String)> {
        let mut report = serde_json::to_string_pretty(&self.report).expect("report serializes");
        report.push('\n');
        let mut files = vec![
            (REPORT_FILE, report),
            (LABELS_FILE, write_labels(&self.labels)),
        ];
        if let Some(before) = &self.before_labels {
            files.push((BEFORE_LABELS_FILE, write_labels(before)));
        }
        if let Some(bib) = &self.reconciled_bib {
            files.push((RECONCILED_FILE, bib.clone()));
        }
        files
    }

    /// Each file goes to a temporary sibling first and is renamed into place.
    pub fn write_to(&self, dir: &Path) -> Result<(), BenchError> {
        let io_err = |path: &Path, source| BenchError::Write {
            path: path.display().to_string(),
            source,
        };
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        for (name, contents) in self.files() {
            let target = dir.join(name);
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(&target, e))?;
            tmp.write_all(contents.as_bytes())
                .map_err(|e| io_err(&target, e))?;
            tmp.persist(&target).map_err(|e| io_err(&target, e.error))?;
        }
        Ok(())
    }
}

pub fn label_string(labels: &BTreeMap<FieldSlot, FieldLabel>) -> String {
    FieldSlot::ALL
        .iter()
        .map(|s| labels.get(s).copied().unwrap_or(FieldLabel::X).as_char())
        .collect()
}

struct EntryResult {
    paper_id: String,
    tag: String,
    tier: String,
    domain: String,
    after: EntryVerdict,
    before: Option<EntryVerdict>,
    action: Option<ReconcileAction>,
    gate_score: Option<f64>,
    reconciled: Option<String>,
}

fn process_record(
    record: &PaperRecord,
    mode: Mode,
    lookup: Option<&dyn Lookup>,
    verifier: &Verifier,
) -> Vec<Result<EntryResult, Incomplete>> {
    let meta = record.lookup_meta();
    record
        .candidates
        .iter()
        .map(|cand| {
            let base = |after, before, action, gate_score, reconciled| EntryResult {
                paper_id: record.paper_id.clone(),
                tag: cand.tag.clone(),
                tier: record.tier.to_string(),
                domain: record.domain.to_string(),
                after,
                before,
                action,
                gate_score,
                reconciled,
            };
            let baseline = verifier.verify_entry(&cand.bibtex, &record.ground_truth);
            match (mode, lookup) {
                (Mode::Verify, _) | (_, None) => Ok(base(baseline, None, None, None, None)),
                (Mode::ReconcileThenVerify, Some(lookup)) => {
                    let outcome =
                        reconcile(&meta, &cand.bibtex, lookup).map_err(|e| Incomplete {
                            paper_id: record.paper_id.clone(),
                            entry_tag: cand.tag.clone(),
                            reason: e.to_string(),
                        })?;
                    let after = verifier.verify_entry(&outcome.result, &record.ground_truth);
                    Ok(base(
                        after,
                        Some(baseline),
                        Some(outcome.action),
                        outcome.gate_score,
                        Some(serialize_entry(&outcome.result)),
                    ))
                }
            }
        })
        .collect()
}

fn label_records<'a>(
    e: &'a EntryResult,
    verdict: &EntryVerdict,
) -> impl Iterator<Item = LabelRecord> + 'a {
    let verdict = verdict.clone();
    FieldSlot::ALL.into_iter().map(move |slot| LabelRecord {
        paper_id: e.paper_id.clone(),
        entry_tag: e.tag.clone(),
        slot,
        label: verdict.label(slot),
        stage: verdict.stage(slot),
        tier: e.tier.clone(),
        domain: e.domain.clone(),
    })
}

fn tagged(e: &EntryResult, verdict: &EntryVerdict) -> TaggedLabels {
    TaggedLabels {
        paper_id: e.paper_id.clone(),
        model: e.tag.clone(),
        tier: e.tier.clone(),
        domain: e.domain.clone(),
        labels: verdict.labels.clone(),
    }
}

/// Labels every candidate (after reconciling it, in reconcile mode) and
/// assembles the report. Records run on `workers` threads; output order is
/// by paper_id, then candidate order.
pub fn run_benchmark(
    corpus: &[PaperRecord],
    mode: Mode,
    lookup: Option<&dyn Lookup>,
    verifier: &Verifier,
    workers: usize,
) -> Result<ReportBundle, BenchError> {
    if mode == Mode::ReconcileThenVerify && lookup.is_none() {
        return Err(BenchError::MissingLookup);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| BenchError::Pool(e.to_string()))?;
    let mut order: Vec<&PaperRecord> = corpus.iter().collect();
    order.sort_by(|a, b| a.paper_id.cmp(&b.paper_id));
    let per_record: Vec<Vec<Result<EntryResult, Incomplete>>> = pool.install(|| {
        order
            .par_iter()
            .map(|r| process_record(r, mode, lookup, verifier))
            .collect()
    });

    let mut done = Vec::new();
    let mut incomplete = Vec::new();
    for result in per_record.into_iter().flatten() {
        match result {
            Ok(e) => done.push(e),
            Err(i) => incomplete.push(i),
        }
    }

    let after_tagged: Vec<TaggedLabels> = done.iter().map(|e| tagged(e, &e.after)).collect();
    let aggregate = aggregate_stats(&after_tagged);
    let co_error = co_error_matrix(after_tagged.iter().map(|t| &t.labels));
    let mut error_modes: BTreeMap<ErrorMode, usize> = [
        ErrorMode::None,
        ErrorMode::Isolated,
        ErrorMode::Wholesale,
        ErrorMode::Mixed,
    ]
    .into_iter()
    .map(|m| (m, 0))
    .collect();
    for e in &done {
        *error_modes.entry(e.after.error_mode).or_default() += 1;
    }

    let labels: Vec<LabelRecord> = done
        .iter()
        .flat_map(|e| label_records(e, &e.after))
        .collect();
    let reconcile_mode = mode == Mode::ReconcileThenVerify;
    let (before, deltas, actions, before_labels, reconciled_bib) = if reconcile_mode {
        let before_tagged: Vec<TaggedLabels> = done
            .iter()
            .filter_map(|e| e.before.as_ref().map(|b| tagged(e, b)))
            .collect();
        let before_labels: Vec<LabelRecord> = done
            .iter()
            .filter_map(|e| {
                e.before
                    .as_ref()
                    .map(|b| label_records(e, b).collect::<Vec<_>>())
            })
            .flatten()
            .collect();
        let mut deltas: BTreeMap<FieldSlot, FieldDelta> = BTreeMap::new();
        for e in &done {
            let Some(before) = &e.before else { continue };
            for slot in FieldSlot::EVALUABLE {
                let (b, a) = (before.label(slot), e.after.label(slot));
                let d = deltas.entry(slot).or_default();
                d.before_correct += usize::from(b == FieldLabel::C);
                d.after_correct += usize::from(a == FieldLabel::C);
                d.before_evaluable += usize::from(b != FieldLabel::X);
                d.after_evaluable += usize::from(a != FieldLabel::X);
                d.corrections += usize::from(b != FieldLabel::C && a == FieldLabel::C);
                d.regressions += usize::from(b == FieldLabel::C && a != FieldLabel::C);
            }
        }
        let mut actions: BTreeMap<ReconcileAction, usize> = BTreeMap::new();
        for e in &done {
            if let Some(a) = e.action {
                *actions.entry(a).or_default() += 1;
            }
        }
        let mut bib = String::new();
        for (i, e) in done
            .iter()
            .filter_map(|e| e.reconciled.as_ref())
            .enumerate()
        {
            if i > 0 {
                bib.push('\n');
            }
            let _ = writeln!(bib, "{e}");
        }
        (
            Some(aggregate_stats(&before_tagged)),
            Some(deltas),
            Some(actions),
            Some(before_labels),
            Some(bib),
        )
    } else {
        (None, None, None, None, None)
    };

    let per_entry = done
        .iter()
        .map(|e| EntrySummary {
            paper_id: e.paper_id.clone(),
            entry_tag: e.tag.clone(),
            labels: label_string(&e.after.labels),
            error_mode: e.after.error_mode,
            before_labels: e.before.as_ref().map(|b| label_string(&b.labels)),
            action: e.action,
            gate_score: e.gate_score,
        })
        .collect();

    Ok(ReportBundle {
        report: Report {
            format_version: REPORT_FORMAT_VERSION,
            mode,
            papers: corpus.len(),
            entries: done.len(),
            aggregate,
            error_modes,
            co_error,
            before,
            deltas,
            actions,
            incomplete,
            per_entry,
        },
        labels,
        before_labels,
        reconciled_bib,
    })
}

fn pct(p: Option<f64>) -> String {
    p.map(|v| format!("{v:.1}")).unwrap_or_else(|| "-".into())
}

/// Plain-text accuracy tables: overall, per field, and per model/tier/domain.
pub fn render_tables(report: &AggregateReport) -> String {
    let mut out = String::new();
    let all = &report.all;
    let _ = writeln!(out, "entries\t{}", all.entries);
    let _ = writeln!(
        out,
        "overall\t{}/{}\t{}%",
        all.overall.correct,
        all.overall.total,
        pct(all.overall.percent)
    );
    let _ = writeln!(
        out,
        "fully_correct\t{}/{}\t{}%",
        all.fully_correct.correct,
        all.fully_correct.total,
        pct(all.fully_correct.percent)
    );
    out.push_str("\nfield\tcorrect\tevaluable\tpercent\n");
    for (slot, acc) in &all.per_field {
        let _ = writeln!(
            out,
            "{slot}\t{}\t{}\t{}",
            acc.correct,
            acc.total,
            pct(acc.percent)
        );
    }
    for (title, groups) in [
        ("model", &report.per_model),
        ("tier", &report.per_tier),
        ("domain", &report.per_domain),
    ] {
        let _ = write!(out, "\n{title}\tentries\toverall\tfully_correct\n");
        for (name, b) in groups {
            let _ = writeln!(
                out,
                "{name}\t{}\t{}\t{}",
                b.entries,
                pct(b.overall.percent),
                pct(b.fully_correct.percent)
            );
        }
    }
    if !report.label_distribution.is_empty() {
        out.push_str("\nlabel\tcount\tpercent\n");
        for (label, share) in &report.label_distribution {
            let _ = writeln!(
                out,
                "{}\t{}\t{}",
                label.as_char(),
                share.correct,
                pct(share.percent)
            );
        }
    }
    out
}
