use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::verify::VersionType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationClass {
    Arxiv,
    Proceedings,
    Journal,
    Excluded,
}

impl LocationClass {
    pub fn version_type(self) -> Option<VersionType> {
        match self {
            LocationClass::Arxiv => Some(VersionType::Arxiv),
            LocationClass::Proceedings => Some(VersionType::Proceedings),
            LocationClass::Journal => Some(VersionType::Journal),
            LocationClass::Excluded => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    pub url: String,
    pub source_type: String,
}

const MIRROR_HOSTS: [&str; 4] = ["ncbi.nlm.nih.gov", "pubmed.gov", "europepmc.org", "pmc."];

static DOI_URL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^https?://(?:dx\.|www\.)?doi\.org/10\.\d{4,9}/|/10\.\d{4,9}/").unwrap()
});

/// arXiv URLs first, then PubMed/PMC mirrors are dropped, then the source
/// type decides (`conference` → proceedings, `journal` → journal). Anything
/// else is excluded.
pub fn classify_location(url: &str, source_type: &str) -> LocationClass {
    let url = url.to_ascii_lowercase();
    if url.contains("arxiv.org") {
        return LocationClass::Arxiv;
    }
    if MIRROR_HOSTS.iter().any(|h| url.contains(h)) {
        return LocationClass::Excluded;
    }
    match source_type.trim().to_ascii_lowercase().as_str() {
        "conference" => LocationClass::Proceedings,
        "journal" => LocationClass::Journal,
        _ => LocationClass::Excluded,
    }
}

pub fn is_doi_url(url: &str) -> bool {
    DOI_URL.is_match(url)
}

/// One location per retained class, preferring a DOI-style URL, otherwise
/// the first listed.
pub fn select_versions(locations: &[Location]) -> BTreeMap<LocationClass, Location> {
    let mut chosen: BTreeMap<LocationClass, Location> = BTreeMap::new();
    for loc in locations {
        let class = classify_location(&loc.url, &loc.source_type);
        if class == LocationClass::Excluded {
            continue;
        }
        match chosen.get(&class) {
            Some(current) if is_doi_url(&current.url) || !is_doi_url(&loc.url) => {}
            _ => {
                chosen.insert(class, loc.clone());
            }
        }
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_precedence() {
        assert_eq!(
            classify_location("https://arxiv.org/abs/2510.16227", "repository"),
            LocationClass::Arxiv
        );
        assert_eq!(
            classify_location("https://arxiv.org/abs/2510.16227", "journal"),
            LocationClass::Arxiv
        );
        assert_eq!(
            classify_location("https://www.nature.com/articles/x", "journal"),
            LocationClass::Journal
        );
        assert_eq!(
            classify_location("https://papers.nips.cc/paper/4532", "conference"),
            LocationClass::Proceedings
        );
        assert_eq!(
            classify_location(
                "https://www.ncbi.nlm.nih.gov/pmc/articles/PMC123",
                "repository"
            ),
            LocationClass::Excluded
        );
        assert_eq!(
            classify_location("https://europepmc.org/article/MED/1", "journal"),
            LocationClass::Excluded
        );
        assert_eq!(
            classify_location("https://zenodo.org/records/1", "repository"),
            LocationClass::Excluded
        );
        assert_eq!(classify_location("", ""), LocationClass::Excluded);
    }

    #[test]
    fn dedup_prefers_doi_urls() {
        let loc = |url: &str, t: &str| Location {
            url: url.into(),
            source_type: t.into(),
        };
        let chosen = select_versions(&[
            loc("https://publisher.example/article/1", "journal"),
            loc("https://doi.org/10.1200/jco.2016.34.2_suppl.426", "journal"),
            loc("https://another.example/1", "journal"),
            loc("https://arxiv.org/abs/1", "repository"),
        ]);
        assert_eq!(chosen.len(), 2);
        assert_eq!(
            chosen[&LocationClass::Journal].url,
            "https://doi.org/10.1200/jco.2016.34.2_suppl.426"
        );
    }
}
