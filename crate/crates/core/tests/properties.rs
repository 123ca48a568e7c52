use std::collections::BTreeMap;

use proptest::prelude::*;

use citegate_core::bib::{parse_entry, serialize_entry, BibEntry, FieldLabel, FieldSlot};
use citegate_core::normalize::{
    jaccard, normalize_author, normalize_doi, normalize_pages, normalize_title, normalize_venue,
    normalize_year, tokenize_filtered, VenueSynonymTable,
};
use citegate_core::verify::{
    classify_error_mode, co_error_matrix, verdict_from_criteria, Criterion, CriterionVerdict,
};
use citegate_core::ErrorMode;

fn label() -> impl Strategy<Value = FieldLabel> {
    prop_oneof![
        Just(FieldLabel::C),
        Just(FieldLabel::M),
        Just(FieldLabel::F),
        Just(FieldLabel::P),
        Just(FieldLabel::S),
        Just(FieldLabel::X),
    ]
}

fn labels() -> impl Strategy<Value = BTreeMap<FieldSlot, FieldLabel>> {
    prop::collection::vec(label(), 9)
        .prop_map(|ls| FieldSlot::EVALUABLE.into_iter().zip(ls).collect())
}

fn criterion() -> impl Strategy<Value = Criterion> {
    prop_oneof![
        Just(Criterion::Met),
        Just(Criterion::Unmet),
        Just(Criterion::CannotAssess)
    ]
}

proptest! {
    #[test]
    fn jaccard_is_symmetric_and_bounded(a in ".{0,60}", b in ".{0,60}") {
        let (ta, tb) = (tokenize_filtered(&a), tokenize_filtered(&b));
        let s = jaccard(&ta, &tb);
        prop_assert_eq!(s, jaccard(&tb, &ta));
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s == 1.0, ta == tb);
        prop_assert_eq!(jaccard(&ta, &ta), 1.0);
    }

    #[test]
    fn normalizers_are_idempotent(x in "\\PC{0,40}") {
        let venues = VenueSynonymTable::bundled();
        let t = normalize_title(&x);
        prop_assert_eq!(normalize_title(&t), t.clone());
        let v = normalize_venue(&x, venues);
        prop_assert_eq!(normalize_venue(&v, venues), v.clone());
        let d = normalize_doi(&x);
        prop_assert_eq!(normalize_doi(&d), d.clone());
        prop_assert!(!d.contains("://"));
        for f in [normalize_author, normalize_pages, normalize_year] {
            if let Ok(once) = f(&x) {
                prop_assert_eq!(f(&once), Ok(once.clone()));
            }
        }
    }

    #[test]
    fn pages_have_canonical_shape(a in "[0-9A-Za-z]{1,5}", b in "[0-9A-Za-z]{1,5}", sep in "( ?(-|--|–|—) ?)") {
        let out = normalize_pages(&format!("{a}{sep}{b}"));
        if let Ok(out) = out {
            prop_assert!(!out.chars().any(char::is_whitespace));
            let parts: Vec<&str> = out.split("--").collect();
            prop_assert!(parts.len() <= 2 && parts.iter().all(|p| !p.is_empty() && !p.contains('-')), "{}", out);
        }
    }

    #[test]
    fn doi_wrappers_are_stripped(suffix in "[a-z0-9./_-]{1,20}", prefix in prop_oneof![
        Just(""), Just("doi:"), Just("https://doi.org/"), Just("http://dx.doi.org/"), Just("DOI: ")
    ]) {
        let bare = format!("10.1234/{suffix}");
        prop_assert_eq!(normalize_doi(&format!("{prefix}{bare}")), normalize_doi(&bare));
    }

    #[test]
    fn bib_round_trips(
        key in "[a-z][a-z0-9_:-]{0,12}",
        fields in prop::collection::btree_map("[a-z]{2,8}", "[A-Za-z0-9 .,:;'()-]{0,30}", 0..6),
    ) {
        let mut entry = BibEntry::new("article", &key).unwrap();
        for (name, value) in &fields {
            entry.push_field(name, value).unwrap();
        }
        let text = serialize_entry(&entry);
        let parsed = parse_entry(&text).unwrap();
        prop_assert_eq!(serialize_entry(&parsed), text);
        prop_assert_eq!(parsed, entry);
    }

    #[test]
    fn verdicts_only_come_from_three_labels(p in criterion(), d in criterion()) {
        let l = verdict_from_criteria(CriterionVerdict::new(p, d));
        prop_assert!(matches!(l, FieldLabel::P | FieldLabel::S | FieldLabel::F));
        prop_assert_eq!(l == FieldLabel::P, p == Criterion::Met);
    }

    #[test]
    fn error_mode_follows_counts(ls in labels()) {
        let errors = ls.values().filter(|l| l.is_error()).count();
        let subs = ls.values().filter(|l| **l == FieldLabel::S).count();
        let mode = classify_error_mode(&ls);
        let want = if errors == 0 {
            ErrorMode::None
        } else if subs >= 3 {
            ErrorMode::Wholesale
        } else if errors <= 2 {
            ErrorMode::Isolated
        } else {
            ErrorMode::Mixed
        };
        prop_assert_eq!(mode, want);
    }

    #[test]
    fn co_error_cells_are_probabilities(rows in prop::collection::vec(labels(), 0..30)) {
        let m = co_error_matrix(rows.iter());
        for (i, given) in FieldSlot::EVALUABLE.iter().enumerate() {
            let diag = m.cell(*given, *given);
            prop_assert_eq!(diag.is_some(), m.wrong_counts[i] > 0);
            if let Some(d) = diag {
                prop_assert_eq!(d, 1.0);
            }
            for target in FieldSlot::EVALUABLE {
                if let Some(p) = m.cell(*given, target) {
                    prop_assert!((0.0..=1.0).contains(&p));
                }
            }
        }
    }
}

#[test]
fn canonical_venues_normalize_to_themselves() {
    let table = VenueSynonymTable::bundled();
    assert!(!table.canonical_names().is_empty());
    for c in table.canonical_names() {
        assert_eq!(
            normalize_venue(c, table),
            normalize_venue(&normalize_venue(c, table), table)
        );
        assert_eq!(table.canonical_of(c), Some(c.as_str()), "{c}");
    }
}
