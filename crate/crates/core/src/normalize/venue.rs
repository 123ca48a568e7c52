use std::collections::BTreeMap;
use std::sync::LazyLock;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VenueTableError {
    #[error("line {line}: expected `canonical<TAB>variant|variant`")]
    Malformed { line: usize },
    #[error("line {line}: variant `{variant}` already maps to `{existing}`")]
    ConflictingVariant {
        line: usize,
        variant: String,
        existing: String,
    },
}

/// Canonical venue names and their known variants. Lookups are
/// case-insensitive after whitespace collapse.
#[derive(Debug, Clone, Default)]
pub struct VenueSynonymTable {
    // variant key -> canonical name (original casing)
    variants: BTreeMap<String, String>,
    canonicals: Vec<String>,
}

static DEFAULT_TABLE: LazyLock<VenueSynonymTable> = LazyLock::new(|| {
    VenueSynonymTable::from_tsv(include_str!("../../data/venues.tsv"))
        .expect("bundled venue table is valid")
});

fn key(text: &str) -> String {
    text.chars()
        .filter(|c| !matches!(c, '{' | '}'))
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

impl VenueSynonymTable {
    /// The bundled 40-venue table.
    pub fn bundled() -> &'static VenueSynonymTable {
        &DEFAULT_TABLE
    }

    /// Parses `canonical<TAB>variant|variant|...` lines; `#` starts a comment line.
    pub fn from_tsv(text: &str) -> Result<Self, VenueTableError> {
        let mut table = VenueSynonymTable::default();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (canonical, variants) = match line.split_once('\t') {
                Some((c, v)) => (c.trim(), v),
                None => (line.trim(), ""),
            };
            if canonical.is_empty() {
                return Err(VenueTableError::Malformed { line: line_no });
            }
            let variants = variants.split('|').map(str::trim).filter(|v| !v.is_empty());
            table.insert(
                canonical,
                std::iter::once(canonical).chain(variants),
                line_no,
            )?;
        }
        Ok(table)
    }

    fn insert<'a>(
        &mut self,
        canonical: &str,
        variants: impl Iterator<Item = &'a str>,
        line: usize,
    ) -> Result<(), VenueTableError> {
        for variant in variants {
            let k = key(variant);
            match self.variants.get(&k) {
                Some(existing) if existing != canonical => {
                    return Err(VenueTableError::ConflictingVariant {
                        line,
                        variant: variant.to_string(),
                        existing: existing.clone(),
                    })
                }
                Some(_) => {}
                None => {
                    self.variants.insert(k, canonical.to_string());
                }
            }
        }
        if !self.canonicals.iter().any(|c| c == canonical) {
            self.canonicals.push(canonical.to_string());
        }
        Ok(())
    }

    /// Total distinct variants, canonical self-variants included.
    pub fn variant_count(&self) -> usize {
        self.variants.len()
    }

    pub fn canonical_names(&self) -> &[String] {
        &self.canonicals
    }

    pub fn canonical_of(&self, venue: &str) -> Option<&str> {
        self.variants.get(&key(venue)).map(String::as_str)
    }
}

/// Canonical venue (lowercased) when the table knows the variant, otherwise
/// the lowercased, whitespace-collapsed input.
pub fn normalize_venue(value: &str, table: &VenueSynonymTable) -> String {
    match table.canonical_of(value) {
        Some(canonical) => key(canonical),
        None => key(value),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_table_size() {
        let table = VenueSynonymTable::bundled();
        assert_eq!(table.canonical_names().len(), 40);
        assert_eq!(table.variant_count(), 141);
    }

    #[test]
    fn lookups() {
        let table = VenueSynonymTable::bundled();
        assert_eq!(
            normalize_venue("Proc. NeurIPS", table),
            "advances in neural information processing systems"
        );
        assert_eq!(
            normalize_venue("proc.   neurips", table),
            "advances in neural information processing systems"
        );
        assert_eq!(
            normalize_venue("BMJ: British Medical Journal", table),
            "bmj: british medical journal"
        );
        for canonical in table.canonical_names() {
            assert_eq!(normalize_venue(canonical, table), key(canonical));
        }
    }

    #[test]
    fn conflicting_variant_rejected() {
        let err = VenueSynonymTable::from_tsv("A\tX|Y\nB\tx\n").unwrap_err();
        assert!(matches!(
            err,
            VenueTableError::ConflictingVariant { line: 2, .. }
        ));
    }
}
