//! BibTeX entry model: parsing, serialization, and the ten evaluated field slots.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BibError {
    #[error("unbalanced braces at byte {0}")]
    UnbalancedBraces(usize),
    #[error("duplicate field `{0}`")]
    DuplicateField(String),
    #[error("empty citation key")]
    EmptyKey,
    #[error("more than one entry in input")]
    MultipleEntries,
    #[error("string concatenation with `#` is not supported (field `{0}`)")]
    UnsupportedConcatenation(String),
    #[error("@string macros are not supported")]
    UnsupportedMacro,
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
}

/// One parsed BibTeX record.
///
/// Entry type and field names are always lowercase; fields keep their source
/// order so serialization is deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BibEntry {
    entry_type: String,
    citation_key: String,
    fields: Vec<(String, String)>,
}

impl BibEntry {
    pub fn new(entry_type: &str, citation_key: &str) -> Result<Self, BibError> {
        let entry_type = entry_type.trim().to_ascii_lowercase();
        if entry_type.is_empty() || !entry_type.chars().all(|c| c.is_ascii_alphanumeric()) {
            return Err(BibError::Syntax {
                offset: 0,
                message: format!("invalid entry type `{entry_type}`"),
            });
        }
        let citation_key = citation_key.trim();
        if citation_key.is_empty() {
            return Err(BibError::EmptyKey);
        }
        if citation_key
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, ',' | '{' | '}' | '(' | ')'))
        {
            return Err(BibError::Syntax {
                offset: 0,
                message: format!("invalid citation key `{citation_key}`"),
            });
        }
        Ok(Self {
            entry_type,
            citation_key: citation_key.to_string(),
            fields: Vec::new(),
        })
    }

    pub fn entry_type(&self) -> &str {
        &self.entry_type
    }

    pub fn citation_key(&self) -> &str {
        &self.citation_key
    }

    pub fn fields(&self) -> impl Iterator<Item = (&str, &str)> {
        self.fields.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn field_names(&self) -> impl Iterator<Item = &str> {
        self.fields.iter().map(|(k, _)| k.as_str())
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        let name = name.to_ascii_lowercase();
        self.fields
            .iter()
            .find(|(k, _)| *k == name)
            .map(|(_, v)| v.as_str())
    }

    /// Appends a new field. Fails on a duplicate name or a value whose braces
    /// do not balance (it could not be serialized brace-delimited).
    pub fn push_field(&mut self, name: &str, value: &str) -> Result<(), BibError> {
        let name = validate_field_name(name)?;
        if self.fields.iter().any(|(k, _)| *k == name) {
            return Err(BibError::DuplicateField(name));
        }
        check_value_braces(value)?;
        self.fields.push((name, value.to_string()));
        Ok(())
    }

    /// Sets a field, replacing the value in place when it already exists.
    pub fn set_field(&mut self, name: &str, value: &str) -> Result<(), BibError> {
        let name = validate_field_name(name)?;
        check_value_braces(value)?;
        match self.fields.iter_mut().find(|(k, _)| *k == name) {
            Some(slot) => slot.1 = value.to_string(),
            None => self.fields.push((name, value.to_string())),
        }
        Ok(())
    }

    /// Inserts a field at `index` (clamped to the end).
    pub fn insert_field(&mut self, index: usize, name: &str, value: &str) -> Result<(), BibError> {
        let name = validate_field_name(name)?;
        if self.fields.iter().any(|(k, _)| *k == name) {
            return Err(BibError::DuplicateField(name));
        }
        check_value_braces(value)?;
        let index = index.min(self.fields.len());
        self.fields.insert(index, (name, value.to_string()));
        Ok(())
    }

    pub fn remove_field(&mut self, name: &str) -> Option<String> {
        let name = name.to_ascii_lowercase();
        let pos = self.fields.iter().position(|(k, _)| *k == name)?;
        Some(self.fields.remove(pos).1)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        let name = name.to_ascii_lowercase();
        self.fields.iter().position(|(k, _)| *k == name)
    }

    pub fn set_entry_type(&mut self, entry_type: &str) -> Result<(), BibError> {
        let fresh = BibEntry::new(entry_type, &self.citation_key)?;
        self.entry_type = fresh.entry_type;
        Ok(())
    }

    pub fn set_citation_key(&mut self, key: &str) -> Result<(), BibError> {
        let fresh = BibEntry::new(&self.entry_type, key)?;
        self.citation_key = fresh.citation_key;
        Ok(())
    }
}

impl fmt::Display for BibEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_entry(self))
    }
}

fn validate_field_name(name: &str) -> Result<String, BibError> {
    let name = name.trim().to_ascii_lowercase();
    if name.is_empty() || !name.chars().all(is_name_char) {
        return Err(BibError::Syntax {
            offset: 0,
            message: format!("invalid field name `{name}`"),
        });
    }
    Ok(name)
}

fn check_value_braces(value: &str) -> Result<(), BibError> {
    let mut depth = 0usize;
    for (i, c) in value.char_indices() {
        match c {
            '{' => depth += 1,
            '}' => {
                if depth == 0 {
                    return Err(BibError::UnbalancedBraces(i));
                }
                depth -= 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(BibError::UnbalancedBraces(value.len()));
    }
    Ok(())
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | ':' | '.' | '+')
}

/// The ten field positions scored per entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldSlot {
    EntryType,
    EntryKey,
    Author,
    Title,
    Year,
    Venue,
    Volume,
    Number,
    Pages,
    Doi,
}

impl FieldSlot {
    pub const ALL: [FieldSlot; 10] = [
        FieldSlot::EntryType,
        FieldSlot::EntryKey,
        FieldSlot::Author,
        FieldSlot::Title,
        FieldSlot::Year,
        FieldSlot::Venue,
        FieldSlot::Volume,
        FieldSlot::Number,
        FieldSlot::Pages,
        FieldSlot::Doi,
    ];

    /// Every slot except `entry_key`, which is never evaluable.
    pub const EVALUABLE: [FieldSlot; 9] = [
        FieldSlot::EntryType,
        FieldSlot::Author,
        FieldSlot::Title,
        FieldSlot::Year,
        FieldSlot::Venue,
        FieldSlot::Volume,
        FieldSlot::Number,
        FieldSlot::Pages,
        FieldSlot::Doi,
    ];

    /// Slots replaced by an authoritative record during reconciliation.
    pub const STANDARD: [FieldSlot; 8] = [
        FieldSlot::Author,
        FieldSlot::Title,
        FieldSlot::Year,
        FieldSlot::Venue,
        FieldSlot::Volume,
        FieldSlot::Number,
        FieldSlot::Pages,
        FieldSlot::Doi,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FieldSlot::EntryType => "entry_type",
            FieldSlot::EntryKey => "entry_key",
            FieldSlot::Author => "author",
            FieldSlot::Title => "title",
            FieldSlot::Year => "year",
            FieldSlot::Venue => "venue",
            FieldSlot::Volume => "volume",
            FieldSlot::Number => "number",
            FieldSlot::Pages => "pages",
            FieldSlot::Doi => "doi",
        }
    }

    /// BibTeX field names that back this slot, in precedence order.
    pub fn backing_fields(self) -> &'static [&'static str] {
        match self {
            FieldSlot::EntryType | FieldSlot::EntryKey => &[],
            FieldSlot::Author => &["author"],
            FieldSlot::Title => &["title"],
            FieldSlot::Year => &["year"],
            FieldSlot::Venue => &["journal", "booktitle"],
            FieldSlot::Volume => &["volume"],
            FieldSlot::Number => &["number"],
            FieldSlot::Pages => &["pages"],
            FieldSlot::Doi => &["doi"],
        }
    }
}

impl fmt::Display for FieldSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FieldSlot {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FieldSlot::ALL
            .into_iter()
            .find(|slot| slot.as_str() == s)
            .ok_or_else(|| format!("unknown field slot `{s}`"))
    }
}

/// Field-level error label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FieldLabel {
    /// Correct
    C,
    /// Missing
    M,
    /// Fabricated
    F,
    /// Partially correct
    P,
    /// Substituted
    S,
    /// Not applicable
    X,
}

impl FieldLabel {
    pub const ALL: [FieldLabel; 6] = [
        FieldLabel::C,
        FieldLabel::M,
        FieldLabel::F,
        FieldLabel::P,
        FieldLabel::S,
        FieldLabel::X,
    ];

    pub fn is_error(self) -> bool {
        matches!(
            self,
            FieldLabel::M | FieldLabel::F | FieldLabel::P | FieldLabel::S
        )
    }

    pub fn as_char(self) -> char {
        match self {
            FieldLabel::C => 'C',
            FieldLabel::M => 'M',
            FieldLabel::F => 'F',
            FieldLabel::P => 'P',
            FieldLabel::S => 'S',
            FieldLabel::X => 'X',
        }
    }
}

impl fmt::Display for FieldLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for FieldLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "C" => Ok(FieldLabel::C),
            "M" => Ok(FieldLabel::M),
            "F" => Ok(FieldLabel::F),
            "P" => Ok(FieldLabel::P),
            "S" => Ok(FieldLabel::S),
            "X" => Ok(FieldLabel::X),
            _ => Err(format!("unknown field label `{s}`")),
        }
    }
}

/// Raw value backing `slot`. The venue slot reads `journal` before `booktitle`.
pub fn slot_of(entry: &BibEntry, slot: FieldSlot) -> Option<&str> {
    match slot {
        FieldSlot::EntryType => Some(entry.entry_type()),
        FieldSlot::EntryKey => Some(entry.citation_key()),
        _ => slot
            .backing_fields()
            .iter()
            .find_map(|name| entry.get(name)),
    }
}

/// Keeps only ASCII alphanumerics; an empty result becomes `"ref"`.
pub fn sanitize_citation_key(key: &str) -> String {
    let cleaned: String = key.chars().filter(char::is_ascii_alphanumeric).collect();
    if cleaned.is_empty() {
        "ref".to_string()
    } else {
        cleaned
    }
}

pub fn serialize_entry(entry: &BibEntry) -> String {
    let mut out = format!("@{}{{{},\n", entry.entry_type, entry.citation_key);
    for (name, value) in &entry.fields {
        out.push_str("  ");
        out.push_str(name);
        out.push_str(" = {");
        out.push_str(value);
        out.push_str("},\n");
    }
    out.push('}');
    out
}

/// Serializes a list of entries separated by blank lines, newline-terminated.
pub fn serialize_bibliography(entries: &[BibEntry]) -> String {
    let mut out = String::new();
    for (i, entry) in entries.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&serialize_entry(entry));
        out.push('\n');
    }
    out
}

/// Parses text holding exactly one entry, surrounded by optional whitespace.
pub fn parse_entry(text: &str) -> Result<BibEntry, BibError> {
    let mut parser = Parser::new(text);
    parser.skip_ws();
    if parser.peek() != Some('@') {
        return Err(parser.syntax("expected `@`"));
    }
    let entry = match parser.parse_block()? {
        Block::Entry(entry) => entry,
        Block::Skipped => return Err(parser.syntax("expected an entry, found a comment block")),
    };
    parser.skip_ws();
    if let Some(c) = parser.peek() {
        let rest = &text[parser.pos..];
        return Err(match c {
            '}' => BibError::UnbalancedBraces(parser.pos),
            _ if rest.contains('@') => BibError::MultipleEntries,
            _ => parser.syntax("trailing content after entry"),
        });
    }
    Ok(entry)
}

/// Parses a whole `.bib` file. Text between entries is treated as a comment;
/// `@comment` and `@preamble` blocks are skipped.
pub fn parse_bibliography(text: &str) -> Result<Vec<BibEntry>, BibError> {
    let mut parser = Parser::new(text);
    let mut entries = Vec::new();
    loop {
        while let Some(c) = parser.peek() {
            if c == '@' {
                break;
            }
            parser.bump();
        }
        if parser.peek().is_none() {
            break;
        }
        if let Block::Entry(entry) = parser.parse_block()? {
            entries.push(entry);
        }
    }
    Ok(entries)
}

enum Block {
    Entry(BibEntry),
    Skipped,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn syntax(&self, message: &str) -> BibError {
        BibError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        while self.peek().is_some_and(&pred) {
            self.bump();
        }
        &self.src[start..self.pos]
    }

    fn parse_block(&mut self) -> Result<Block, BibError> {
        debug_assert_eq!(self.peek(), Some('@'));
        self.bump();
        self.skip_ws();
        let ty = self.take_while(|c| c.is_ascii_alphanumeric());
        if ty.is_empty() {
            return Err(self.syntax("expected entry type after `@`"));
        }
        let ty = ty.to_ascii_lowercase();
        self.skip_ws();
        let close = match self.bump() {
            Some('{') => '}',
            Some('(') => ')',
            _ => return Err(self.syntax("expected `{` or `(` after entry type")),
        };
        match ty.as_str() {
            "string" => return Err(BibError::UnsupportedMacro),
            "comment" | "preamble" => {
                self.skip_balanced(close)?;
                return Ok(Block::Skipped);
            }
            _ => {}
        }

        self.skip_ws();
        let key = self
            .take_while(|c| c != ',' && c != close && !c.is_whitespace() && c != '{' && c != '}');
        if key.is_empty() {
            return Err(BibError::EmptyKey);
        }
        let mut entry = BibEntry::new(&ty, key)?;
        self.skip_ws();
        match self.bump() {
            Some(',') => {}
            Some(c) if c == close => return Ok(Block::Entry(entry)),
            None => return Err(BibError::UnbalancedBraces(self.pos)),
            _ => return Err(self.syntax("expected `,` after citation key")),
        }

        loop {
            self.skip_ws();
            match self.peek() {
                None => return Err(BibError::UnbalancedBraces(self.pos)),
                Some(c) if c == close => {
                    self.bump();
                    return Ok(Block::Entry(entry));
                }
                Some(',') => return Err(self.syntax("empty field")),
                _ => {}
            }
            let name = self.take_while(is_name_char);
            if name.is_empty() {
                return Err(self.syntax("expected field name"));
            }
            let name = name.to_ascii_lowercase();
            self.skip_ws();
            if self.bump() != Some('=') {
                return Err(self.syntax("expected `=` after field name"));
            }
            self.skip_ws();
            let value = self.parse_value(close)?;
            self.skip_ws();
            if self.peek() == Some('#') {
                return Err(BibError::UnsupportedConcatenation(name));
            }
            if entry.get(&name).is_some() {
                return Err(BibError::DuplicateField(name));
            }
            entry.fields.push((name, value));
            match self.peek() {
                Some(',') => {
                    self.bump();
                }
                Some(c) if c == close => {}
                None => return Err(BibError::UnbalancedBraces(self.pos)),
                _ => return Err(self.syntax("expected `,` or end of entry")),
            }
        }
    }

    fn parse_value(&mut self, close: char) -> Result<String, BibError> {
        match self.peek() {
            Some('{') => {
                let open = self.pos;
                self.bump();
                let start = self.pos;
                let mut depth = 1usize;
                while let Some(c) = self.bump() {
                    match c {
                        '{' => depth += 1,
                        '}' => {
                            depth -= 1;
                            if depth == 0 {
                                return Ok(self.src[start..self.pos - 1].to_string());
                            }
                        }
                        _ => {}
                    }
                }
                Err(BibError::UnbalancedBraces(open))
            }
            Some('"') => {
                let open = self.pos;
                self.bump();
                let start = self.pos;
                let mut depth = 0usize;
                while let Some(c) = self.bump() {
                    match c {
                        '{' => depth += 1,
                        '}' => {
                            if depth == 0 {
                                return Err(BibError::UnbalancedBraces(self.pos - 1));
                            }
                            depth -= 1;
                        }
                        '"' if depth == 0 => return Ok(self.src[start..self.pos - 1].to_string()),
                        _ => {}
                    }
                }
                if depth > 0 {
                    Err(BibError::UnbalancedBraces(open))
                } else {
                    Err(self.syntax("unterminated quoted value"))
                }
            }
            _ => {
                let raw = self.take_while(|c| {
                    c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | ':' | '/')
                });
                if raw.is_empty() {
                    if self.peek() == Some(close) || self.peek() == Some(',') {
                        return Err(self.syntax("missing field value"));
                    }
                    return Err(self.syntax("expected `{`, `\"`, or a bare value"));
                }
                Ok(raw.to_string())
            }
        }
    }

    fn skip_balanced(&mut self, close: char) -> Result<(), BibError> {
        let open = self.pos;
        let mut depth = 0usize;
        while let Some(c) = self.bump() {
            match c {
                '{' => depth += 1,
                '}' if depth > 0 => depth -= 1,
                c if c == close && depth == 0 => return Ok(()),
                _ => {}
            }
        }
        Err(BibError::UnbalancedBraces(open))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(ty: &str, key: &str, fields: &[(&str, &str)]) -> BibEntry {
        let mut e = BibEntry::new(ty, key).unwrap();
        for (k, v) in fields {
            e.push_field(k, v).unwrap();
        }
        e
    }

    #[test]
    fn minimal_entry() {
        let e = parse_entry("@article{k1, title={A}, year={2012}}").unwrap();
        assert_eq!(
            e,
            entry("article", "k1", &[("title", "A"), ("year", "2012")])
        );
    }

    #[test]
    fn pages_kept_verbatim() {
        let text = "@inproceedings{mcauley2012,\n  title = {Learning to Discover Social Circles in Ego Networks},\n  author = {Julian J. McAuley and Jure Leskovec},\n  pages = {539--547},\n  year = 2012,\n}\n";
        let e = parse_entry(text).unwrap();
        assert_eq!(e.get("pages"), Some("539--547"));
        assert_eq!(e.get("year"), Some("2012"));
    }

    #[test]
    fn empty_field_is_syntax_error() {
        let err = parse_entry("@article{k,, title={A}}").unwrap_err();
        assert!(matches!(err, BibError::Syntax { .. }), "{err:?}");
    }

    #[test]
    fn error_codes() {
        assert_eq!(
            parse_entry("@article{k, title={A}, TITLE={B}}"),
            Err(BibError::DuplicateField("title".into()))
        );
        assert_eq!(
            parse_entry("@article{, title={A}}"),
            Err(BibError::EmptyKey)
        );
        assert_eq!(
            parse_entry("@article{a, title={A}}\n@misc{b, title={B}}"),
            Err(BibError::MultipleEntries)
        );
        assert_eq!(
            parse_entry("@article{a, title = \"A\" # \"B\"}"),
            Err(BibError::UnsupportedConcatenation("title".into()))
        );
        assert!(matches!(
            parse_entry("@article{a, title={A}"),
            Err(BibError::UnbalancedBraces(_))
        ));
        assert!(matches!(
            parse_entry("@article{a, title={A}}}"),
            Err(BibError::UnbalancedBraces(_))
        ));
        assert_eq!(
            parse_entry("@string{foo = {bar}}"),
            Err(BibError::UnsupportedMacro)
        );
    }

    #[test]
    fn field_names_lowercased_and_quotes_accepted() {
        let e = parse_entry("  @ARTICLE{k, TITLE = \"A {B} C\", Year = {2001},\n}\n\n").unwrap();
        assert_eq!(e.entry_type(), "article");
        assert_eq!(e.get("title"), Some("A {B} C"));
        assert_eq!(e.field_names().collect::<Vec<_>>(), ["title", "year"]);
    }

    #[test]
    fn serialize_single_field() {
        let e = entry("article", "k1", &[("title", "A")]);
        assert_eq!(serialize_entry(&e), "@article{k1,\n  title = {A},\n}");
    }

    #[test]
    fn unicode_preserved() {
        let e = entry("article", "k", &[("author", "Sánchez, María")]);
        let text = serialize_entry(&e);
        assert!(text.contains("Sánchez, María"));
        assert_eq!(parse_entry(&text).unwrap(), e);
    }

    #[test]
    fn sanitize_keys() {
        assert_eq!(sanitize_citation_key("mcauley:2012"), "mcauley2012");
        assert_eq!(sanitize_citation_key("ref-1_a"), "ref1a");
        assert_eq!(sanitize_citation_key("!!!"), "ref");
    }

    #[test]
    fn venue_slot() {
        let a = entry("article", "a", &[("journal", "NeurIPS")]);
        assert_eq!(slot_of(&a, FieldSlot::Venue), Some("NeurIPS"));
        let b = entry("inproceedings", "b", &[("booktitle", "ICML")]);
        assert_eq!(slot_of(&b, FieldSlot::Venue), Some("ICML"));
        let c = entry(
            "article",
            "c",
            &[("booktitle", "ICML"), ("journal", "JMLR")],
        );
        assert_eq!(slot_of(&c, FieldSlot::Venue), Some("JMLR"));
        assert_eq!(slot_of(&c, FieldSlot::Doi), None);
        assert_eq!(slot_of(&c, FieldSlot::EntryKey), Some("c"));
    }

    #[test]
    fn bibliography_skips_comments() {
        let text =
            "% header\n@comment{ignored {stuff}}\n@article{a, title={A}}\nfree text\n@misc{b,\n}\n";
        let entries = parse_bibliography(text).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[1].citation_key(), "b");
        assert_eq!(
            parse_bibliography(&serialize_bibliography(&entries)).unwrap(),
            entries
        );
    }

    #[test]
    fn builder_rejects_unbalanced_values() {
        let mut e = BibEntry::new("misc", "k").unwrap();
        assert!(matches!(
            e.push_field("title", "a}b{"),
            Err(BibError::UnbalancedBraces(_))
        ));
        assert!(e.push_field("title", "ok").is_ok());
        assert_eq!(
            e.push_field("TITLE", "dup"),
            Err(BibError::DuplicateField("title".into()))
        );
    }
}
