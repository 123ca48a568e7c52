use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::normalize::normalize_doi;

/// Upper bound on fallback candidates.
pub const CROSSREF_MAX_ROWS: usize = 10;

/// Fallback hit mapped into the common candidate shape. When CrossRef lists
/// several titles the first is used.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossrefCandidate {
    pub title: String,
    pub year: Option<String>,
    pub doi: Option<String>,
    pub venue: Option<String>,
}

fn first_string(item: &Value, key: &str) -> Option<String> {
    match item.get(key)? {
        Value::Array(values) => values.iter().find_map(Value::as_str).map(str::to_string),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

fn issued_year(item: &Value) -> Option<String> {
    let part = item.get("issued")?.get("date-parts")?.get(0)?.get(0)?;
    match part {
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

/// Parses a works-search response body, keeping at most ten items in API order.
pub fn parse_works(body: &str) -> Result<Vec<CrossrefCandidate>, String> {
    let value: Value =
        serde_json::from_str(body).map_err(|e| format!("bad works response: {e}"))?;
    let items = value
        .get("message")
        .and_then(|m| m.get("items"))
        .and_then(Value::as_array)
        .ok_or("works response has no message.items")?;
    Ok(items
        .iter()
        .take(CROSSREF_MAX_ROWS)
        .map(|item| CrossrefCandidate {
            title: first_string(item, "title").unwrap_or_default(),
            year: issued_year(item),
            doi: first_string(item, "DOI").map(|d| normalize_doi(&d)),
            venue: first_string(item, "container-title"),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maps_fields_and_caps() {
        let items: Vec<String> = (0..12)
            .map(|i| {
                format!(
                    r#"{{"title":["T{i}","alt"],"DOI":"10.1/X{i}","issued":{{"date-parts":[[20{i:02},1]]}},"container-title":["J"]}}"#
                )
            })
            .collect();
        let body = format!(
            r#"{{"status":"ok","message":{{"items":[{}]}}}}"#,
            items.join(",")
        );
        let parsed = parse_works(&body).unwrap();
        assert_eq!(parsed.len(), 10);
        assert_eq!(parsed[3].title, "T3");
        assert_eq!(parsed[3].doi.as_deref(), Some("10.1/x3"));
        assert_eq!(parsed[3].year.as_deref(), Some("2003"));
        assert_eq!(parsed[3].venue.as_deref(), Some("J"));
        assert!(parse_works("{}").is_err());
    }
}
