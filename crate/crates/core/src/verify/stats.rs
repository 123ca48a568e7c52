use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bib::{FieldLabel, FieldSlot};

use super::is_fully_correct;

/// Conditional co-error probabilities `P(slot j wrong | slot i wrong)` over
/// the nine evaluable slots. Undefined cells (slot i never wrong) are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoErrorMatrix {
    pub slots: Vec<FieldSlot>,
    pub wrong_counts: Vec<usize>,
    pub joint_counts: Vec<Vec<usize>>,
    pub cells: Vec<Vec<Option<f64>>>,
}

impl CoErrorMatrix {
    pub fn cell(&self, given: FieldSlot, target: FieldSlot) -> Option<f64> {
        let i = self.slots.iter().position(|s| *s == given)?;
        let j = self.slots.iter().position(|s| *s == target)?;
        self.cells[i][j]
    }
}

pub fn co_error_matrix<'a, I>(verdicts: I) -> CoErrorMatrix
where
    I: IntoIterator<Item = &'a BTreeMap<FieldSlot, FieldLabel>>,
{
    let slots = FieldSlot::EVALUABLE.to_vec();
    let n = slots.len();
    let mut wrong_counts = vec![0usize; n];
    let mut joint_counts = vec![vec![0usize; n]; n];
    for labels in verdicts {
        let wrong: Vec<bool> = slots
            .iter()
            .map(|s| labels.get(s).is_some_and(|l| l.is_error()))
            .collect();
        for i in 0..n {
            if !wrong[i] {
                continue;
            }
            wrong_counts[i] += 1;
            for j in 0..n {
                if wrong[j] {
                    joint_counts[i][j] += 1;
                }
            }
        }
    }
    let cells = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    (wrong_counts[i] > 0)
                        .then(|| joint_counts[i][j] as f64 / wrong_counts[i] as f64)
                })
                .collect()
        })
        .collect();
    CoErrorMatrix {
        slots,
        wrong_counts,
        joint_counts,
        cells,
    }
}

/// Correct over evaluable count; `percent` is `None` for an empty denominator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub correct: usize,
    pub total: usize,
    pub percent: Option<f64>,
}

impl Accuracy {
    fn add(&mut self, correct: bool) {
        self.total += 1;
        if correct {
            self.correct += 1;
        }
    }

    fn finish(&mut self) {
        self.percent = (self.total > 0).then(|| 100.0 * self.correct as f64 / self.total as f64);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub entries: usize,
    pub overall: Accuracy,
    pub fully_correct: Accuracy,
    pub per_field: BTreeMap<FieldSlot, Accuracy>,
}

impl Breakdown {
    fn add(&mut self, labels: &BTreeMap<FieldSlot, FieldLabel>) {
        self.entries += 1;
        self.fully_correct.add(is_fully_correct(labels));
        for slot in FieldSlot::EVALUABLE {
            let label = labels.get(&slot).copied().unwrap_or(FieldLabel::X);
            if label == FieldLabel::X {
                continue;
            }
            let correct = label == FieldLabel::C;
            self.overall.add(correct);
            self.per_field.entry(slot).or_default().add(correct);
        }
    }

    fn finish(&mut self) {
        self.overall.finish();
        self.fully_correct.finish();
        self.per_field.values_mut().for_each(Accuracy::finish);
    }
}

/// Accuracy tables over a labelled corpus. X slots never enter a denominator.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub all: Breakdown,
    pub per_model: BTreeMap<String, Breakdown>,
    pub per_tier: BTreeMap<String, Breakdown>,
    pub per_domain: BTreeMap<String, Breakdown>,
    /// Counts and share of evaluable slots for C, M, F, P, S.
    pub label_distribution: BTreeMap<FieldLabel, Accuracy>,
}

/// Labels of one entry with its grouping tags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedLabels {
    pub paper_id: String,
    pub model: String,
    pub tier: String,
    pub domain: String,
    pub labels: BTreeMap<FieldSlot, FieldLabel>,
}

pub fn aggregate_stats<'a, I>(entries: I) -> AggregateReport
where
    I: IntoIterator<Item = &'a TaggedLabels>,
{
    let mut report = AggregateReport::default();
    let mut label_counts: BTreeMap<FieldLabel, usize> = BTreeMap::new();
    for entry in entries {
        report.all.add(&entry.labels);
        report
            .per_model
            .entry(entry.model.clone())
            .or_default()
            .add(&entry.labels);
        report
            .per_tier
            .entry(entry.tier.clone())
            .or_default()
            .add(&entry.labels);
        report
            .per_domain
            .entry(entry.domain.clone())
            .or_default()
            .add(&entry.labels);
        for slot in FieldSlot::EVALUABLE {
            if let Some(&label) = entry.labels.get(&slot) {
                if label != FieldLabel::X {
                    *label_counts.entry(label).or_default() += 1;
                }
            }
        }
    }
    report.all.finish();
    for b in report
        .per_model
        .values_mut()
        .chain(report.per_tier.values_mut())
        .chain(report.per_domain.values_mut())
    {
        b.finish();
    }
    let evaluable = report.all.overall.total;
    if evaluable > 0 {
        for label in [
            FieldLabel::C,
            FieldLabel::M,
            FieldLabel::F,
            FieldLabel::P,
            FieldLabel::S,
        ] {
            let mut share = Accuracy {
                correct: label_counts.get(&label).copied().unwrap_or(0),
                total: evaluable,
                percent: None,
            };
            share.finish();
            report.label_distribution.insert(label, share);
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use FieldLabel::*;

    fn tagged(model: &str, labels: &[(FieldSlot, FieldLabel)]) -> TaggedLabels {
        TaggedLabels {
            paper_id: "p".into(),
            model: model.into(),
            tier: "popular".into(),
            domain: "ai".into(),
            labels: labels.iter().copied().collect(),
        }
    }

    #[test]
    fn overall_percentage_excludes_x() {
        // 10 entries x 9 evaluable = 90 slots, 81 correct.
        let mut entries = Vec::new();
        for i in 0..10 {
            let mut labels: Vec<_> = FieldSlot::EVALUABLE.iter().map(|s| (*s, C)).collect();
            if i < 9 {
                labels[i % 9].1 = F;
            }
            labels.push((FieldSlot::EntryKey, X));
            entries.push(tagged("m", &labels));
        }
        // one more wrong slot in the last entry
        entries[9].labels.insert(FieldSlot::Doi, M);
        let report = aggregate_stats(&entries);
        assert_eq!(report.all.overall.total, 90);
        assert_eq!(report.all.overall.correct, 80);
        entries[9].labels.insert(FieldSlot::Doi, C);
        let report = aggregate_stats(&entries);
        assert_eq!(report.all.overall.correct, 81);
        assert_eq!(report.all.overall.percent, Some(90.0));
        assert_eq!(report.all.fully_correct.correct, 1);
    }

    #[test]
    fn empty_input() {
        let report = aggregate_stats(&[]);
        assert_eq!(report.all.entries, 0);
        assert_eq!(report.all.overall.percent, None);
        assert!(report.label_distribution.is_empty());
    }

    #[test]
    fn coupled_errors() {
        let rows = vec![
            tagged("m", &[(FieldSlot::Title, P), (FieldSlot::Author, S)]).labels,
            tagged("m", &[(FieldSlot::Title, F), (FieldSlot::Author, M)]).labels,
            tagged("m", &[(FieldSlot::Title, C), (FieldSlot::Author, C)]).labels,
        ];
        let m = co_error_matrix(&rows);
        assert_eq!(m.cell(FieldSlot::Title, FieldSlot::Author), Some(1.0));
        assert_eq!(m.cell(FieldSlot::Author, FieldSlot::Title), Some(1.0));
        assert_eq!(m.cell(FieldSlot::Pages, FieldSlot::Title), None);
    }

    #[test]
    fn single_pages_error() {
        let rows = vec![tagged("m", &[(FieldSlot::Pages, F), (FieldSlot::Title, C)]).labels];
        let m = co_error_matrix(&rows);
        assert_eq!(m.cell(FieldSlot::Pages, FieldSlot::Pages), Some(1.0));
        assert_eq!(m.cell(FieldSlot::Pages, FieldSlot::Title), Some(0.0));
        for slot in FieldSlot::EVALUABLE
            .into_iter()
            .filter(|s| *s != FieldSlot::Pages)
        {
            for target in FieldSlot::EVALUABLE {
                assert_eq!(m.cell(slot, target), None);
            }
        }
    }
}
