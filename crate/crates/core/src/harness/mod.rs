//! Corpus ingestion, version classification, canonical field resolution and
//! benchmark runs.

mod canonical;
mod corpus;
mod location;
mod run;

pub use canonical::{resolve_canonical, CanonicalError, SourceRecord};
pub use corpus::{
    load_corpus, read_corpus, write_corpus, CandidateEntry, Corpus, CorpusError, CorpusParseError,
    Domain, PaperRecord, Tier, CORPUS_FORMAT_VERSION,
};
pub use location::{classify_location, is_doi_url, select_versions, Location, LocationClass};
pub use run::{
    label_string, render_tables, run_benchmark, BenchError, EntrySummary, FieldDelta, Incomplete,
    Mode, Report, ReportBundle, BEFORE_LABELS_FILE, LABELS_FILE, RECONCILED_FILE, REPORT_FILE,
    REPORT_FORMAT_VERSION,
};
