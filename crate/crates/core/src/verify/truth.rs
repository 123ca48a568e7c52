use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bib::FieldSlot;
use crate::normalize::VenueSynonymTable;

use super::stage1::normalize_slot;

/// Kind of citable version a ground-truth record describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VersionType {
    Arxiv,
    Proceedings,
    Journal,
}

impl fmt::Display for VersionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VersionType::Arxiv => "arxiv",
            VersionType::Proceedings => "proceedings",
            VersionType::Journal => "journal",
        })
    }
}

/// Where a metadata value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceTag {
    OpenAlex,
    TranslationServer,
    Dblp,
    PubMed,
    Arxiv,
}

impl SourceTag {
    /// Sources outside the BibTeX versions themselves; canonical values from
    /// these need not equal any version value.
    pub fn is_external(self) -> bool {
        matches!(
            self,
            SourceTag::OpenAlex | SourceTag::Dblp | SourceTag::PubMed
        )
    }

    pub fn is_domain_database(self) -> bool {
        matches!(self, SourceTag::Dblp | SourceTag::PubMed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolutionRule {
    Priority,
    Majority,
    /// Majority vote tied; the source priority order decided.
    MajorityTieBreak,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalValue {
    pub value: String,
    pub source: SourceTag,
    #[serde(default = "default_rule")]
    pub rule: ResolutionRule,
}

fn default_rule() -> ResolutionRule {
    ResolutionRule::Priority
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthVersion {
    pub version_type: VersionType,
    pub fields: BTreeMap<FieldSlot, String>,
}

impl GroundTruthVersion {
    pub fn new(version_type: VersionType) -> Self {
        Self {
            version_type,
            fields: BTreeMap::new(),
        }
    }

    pub fn with(mut self, slot: FieldSlot, value: &str) -> Self {
        self.fields.insert(slot, value.to_string());
        self
    }

    /// Present, non-blank value for `slot`.
    pub fn value(&self, slot: FieldSlot) -> Option<&str> {
        self.fields
            .get(&slot)
            .map(String::as_str)
            .filter(|v| !v.trim().is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroundTruthError {
    #[error("ground truth for `{0}` has no versions")]
    NoVersions(String),
    #[error("ground truth for `{paper_id}` lists version type `{version_type}` twice")]
    DuplicateVersionType {
        paper_id: String,
        version_type: VersionType,
    },
    #[error("canonical {slot} for `{paper_id}` matches no version and has non-external source")]
    UnsupportedCanonical { paper_id: String, slot: FieldSlot },
    #[error("entry_key cannot carry ground truth")]
    EntryKeySlot,
}

/// Every citable version of one paper, plus canonical resolved fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GroundTruthRaw", into = "GroundTruthRaw")]
pub struct GroundTruth {
    paper_id: String,
    versions: Vec<GroundTruthVersion>,
    canonical: BTreeMap<FieldSlot, CanonicalValue>,
    known_aliases: Vec<String>,
    arxiv_id: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GroundTruthRaw {
    #[serde(default)]
    paper_id: String,
    versions: Vec<GroundTruthVersion>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    canonical: BTreeMap<FieldSlot, CanonicalValue>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    known_aliases: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    arxiv_id: Option<String>,
}

impl TryFrom<GroundTruthRaw> for GroundTruth {
    type Error = GroundTruthError;

    fn try_from(raw: GroundTruthRaw) -> Result<Self, Self::Error> {
        let mut gt = GroundTruth::new(&raw.paper_id, raw.versions)?;
        for (slot, value) in raw.canonical {
            gt = gt.with_canonical(slot, value)?;
        }
        gt.known_aliases = raw.known_aliases;
        gt.arxiv_id = raw.arxiv_id;
        Ok(gt)
    }
}

impl From<GroundTruth> for GroundTruthRaw {
    fn from(gt: GroundTruth) -> Self {
        Self {
            paper_id: gt.paper_id,
            versions: gt.versions,
            canonical: gt.canonical,
            known_aliases: gt.known_aliases,
            arxiv_id: gt.arxiv_id,
        }
    }
}

impl GroundTruth {
    pub fn new(
        paper_id: &str,
        versions: Vec<GroundTruthVersion>,
    ) -> Result<Self, GroundTruthError> {
        if versions.is_empty() {
            return Err(GroundTruthError::NoVersions(paper_id.to_string()));
        }
        let mut seen = BTreeSet::new();
        for v in &versions {
            if !seen.insert(v.version_type) {
                return Err(GroundTruthError::DuplicateVersionType {
                    paper_id: paper_id.to_string(),
                    version_type: v.version_type,
                });
            }
            if v.fields.contains_key(&FieldSlot::EntryKey) {
                return Err(GroundTruthError::EntryKeySlot);
            }
        }
        Ok(Self {
            paper_id: paper_id.to_string(),
            versions,
            canonical: BTreeMap::new(),
            known_aliases: Vec::new(),
            arxiv_id: None,
        })
    }

    /// Adds a canonical value. Values from non-external sources must match
    /// some version after normalization.
    pub fn with_canonical(
        mut self,
        slot: FieldSlot,
        value: CanonicalValue,
    ) -> Result<Self, GroundTruthError> {
        if slot == FieldSlot::EntryKey {
            return Err(GroundTruthError::EntryKeySlot);
        }
        if !value.source.is_external() {
            let table = VenueSynonymTable::bundled();
            let target = normalize_slot(slot, &value.value, table);
            let supported = target.is_some()
                && self
                    .versions
                    .iter()
                    .filter_map(|v| v.value(slot))
                    .any(|v| normalize_slot(slot, v, table) == target);
            if !supported {
                return Err(GroundTruthError::UnsupportedCanonical {
                    paper_id: self.paper_id.clone(),
                    slot,
                });
            }
        }
        self.canonical.insert(slot, value);
        Ok(self)
    }

    /// DOIs of known different works that are easily confused with this one.
    pub fn with_known_aliases<I: IntoIterator<Item = S>, S: Into<String>>(
        mut self,
        aliases: I,
    ) -> Self {
        self.known_aliases = aliases.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_arxiv_id(mut self, id: &str) -> Self {
        self.arxiv_id = Some(id.to_string());
        self
    }

    pub(crate) fn set_paper_id(&mut self, id: &str) {
        self.paper_id = id.to_string();
    }

    pub fn paper_id(&self) -> &str {
        &self.paper_id
    }

    pub fn versions(&self) -> &[GroundTruthVersion] {
        &self.versions
    }

    pub fn canonical(&self) -> &BTreeMap<FieldSlot, CanonicalValue> {
        &self.canonical
    }

    pub fn known_aliases(&self) -> &[String] {
        &self.known_aliases
    }

    pub fn arxiv_id(&self) -> Option<&str> {
        self.arxiv_id.as_deref()
    }

    pub fn version(&self, version_type: VersionType) -> Option<&GroundTruthVersion> {
        self.versions
            .iter()
            .find(|v| v.version_type == version_type)
    }

    /// All ground-truth values for a slot: each version's value, then the
    /// canonical value.
    pub fn values(&self, slot: FieldSlot) -> impl Iterator<Item = &str> {
        self.versions
            .iter()
            .filter_map(move |v| v.value(slot))
            .chain(
                self.canonical
                    .get(&slot)
                    .map(|c| c.value.as_str())
                    .filter(|v| !v.trim().is_empty()),
            )
    }

    pub fn has_slot(&self, slot: FieldSlot) -> bool {
        self.values(slot).next().is_some()
    }
}
