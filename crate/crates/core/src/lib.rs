//! Deterministic BibTeX resolution, field-level verification against
//! version-aware ground truth, and title-gated reconciliation.

pub mod bib;
pub mod harness;
pub mod normalize;
pub mod reconcile;
pub mod resolve;
pub mod verify;

pub use bib::{BibEntry, BibError, FieldLabel, FieldSlot};
pub use harness::{Mode, PaperRecord, ReportBundle};
pub use reconcile::{PaperMeta, ReconcileAction, ReconcileOutcome};
pub use resolve::{
    Lookup, Query, QueryKind, ResolutionResult, ResolutionStatus, Resolver, ResolverConfig,
};
pub use verify::{EntryVerdict, ErrorMode, GroundTruth, GroundTruthVersion, Verifier, VersionType};
