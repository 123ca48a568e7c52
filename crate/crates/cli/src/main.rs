use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use citegate_core::bib::{parse_bibliography, serialize_bibliography, serialize_entry};
use citegate_core::harness::{load_corpus, render_tables, run_benchmark, Corpus, Mode};
use citegate_core::reconcile::{parse_meta_tsv, reconcile};
use citegate_core::resolve::{
    ReplayTransport, ResolutionStatus, ResolveError, Resolver, ResolverConfig,
};
use citegate_core::verify::{aggregate_stats, group_labels, read_labels};
use citegate_core::{PaperMeta, Verifier};

#[derive(Debug, Parser)]
#[command(
    name = "citegate",
    version,
    about = "Resolve, verify and reconcile BibTeX entries"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct UpstreamArgs {
    /// Translation server base address.
    #[arg(long, env = "CITEGATE_SERVER_URL", default_value = citegate_core::resolve::DEFAULT_SERVER_URL)]
    server_url: String,
    /// Contact identity sent to CrossRef.
    #[arg(long, env = "CITEGATE_CONTACT")]
    contact: Option<String>,
    /// Directory of recorded HTTP fixtures; replaces live requests.
    #[arg(long, env = "CITEGATE_FIXTURES")]
    fixtures: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Resolve a DOI, arXiv ID, ISBN, PMID, URL or title to BibTeX.
    Lookup {
        query: String,
        /// Print the full resolution result as JSON.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        upstream: UpstreamArgs,
    },
    /// Label every candidate entry in a corpus.
    Verify {
        #[arg(long)]
        corpus: PathBuf,
        /// Write the report bundle here instead of printing tables.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip malformed corpus records instead of failing.
        #[arg(long)]
        permissive: bool,
        #[arg(long, env = "CITEGATE_WORKERS", default_value_t = 1)]
        workers: usize,
    },
    /// Reconcile baseline entries against authoritative lookups.
    Reconcile {
        #[arg(long)]
        bib: PathBuf,
        /// Tab-separated metadata: paper_id, url, doi, title.
        #[arg(long)]
        meta: PathBuf,
        /// Revised .bib output (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-entry action log as JSON lines (stderr when absent).
        #[arg(long)]
        log: Option<PathBuf>,
        #[command(flatten)]
        upstream: UpstreamArgs,
    },
    /// Run a benchmark over a corpus and write a report bundle.
    Bench {
        #[arg(long)]
        corpus: PathBuf,
        /// verify or reconcile_then_verify
        #[arg(long)]
        mode: Mode,
        #[arg(long, env = "CITEGATE_WORKERS", default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        permissive: bool,
        #[command(flatten)]
        upstream: UpstreamArgs,
    },
    /// Print accuracy tables from a label file.
    Report {
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Input(String),
    Upstream(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Input(_) => 2,
            Failure::Upstream(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Input(m) | Failure::Upstream(m) => m,
        }
    }
}

impl From<ResolveError> for Failure {
    fn from(e: ResolveError) -> Self {
        match e {
            ResolveError::Query(q) => Failure::Usage(q.to_string()),
            other => Failure::Upstream(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn resolver(args: &UpstreamArgs) -> Result<Resolver, Failure> {
    let config = ResolverConfig {
        server_url: args.server_url.clone(),
        contact: args.contact.clone(),
        ..ResolverConfig::default()
    };
    match &args.fixtures {
        Some(dir) => {
            let replay =
                ReplayTransport::from_dir(dir).map_err(|e| Failure::Input(e.to_string()))?;
            Ok(Resolver::new(config, Arc::new(replay)))
        }
        None => Ok(Resolver::live(config)?),
    }
}

fn corpus(path: &Path, permissive: bool) -> Result<Corpus, Failure> {
    let corpus = load_corpus(path, permissive).map_err(|e| Failure::Input(e.to_string()))?;
    for skipped in &corpus.skipped {
        eprintln!("skipped: {skipped}");
    }
    Ok(corpus)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Lookup {
            query,
            json,
            upstream,
        } => {
            let result = resolver(&upstream)?.resolve(&query)?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&result).expect("result serializes")
                );
                return Ok(());
            }
            match (result.status, &result.bibtex) {
                (ResolutionStatus::Found, Some(entry)) => println!("{}", serialize_entry(entry)),
                (ResolutionStatus::TitleMismatch, _) => println!("title_mismatch"),
                _ => println!("not_found"),
            }
        }
        Command::Verify {
            corpus: path,
            out,
            permissive,
            workers,
        } => {
            let corpus = corpus(&path, permissive)?;
            let bundle = run_benchmark(
                &corpus.records,
                Mode::Verify,
                None,
                &Verifier::default(),
                workers,
            )
            .map_err(|e| Failure::Input(e.to_string()))?;
            match out {
                Some(dir) => bundle
                    .write_to(&dir)
                    .map_err(|e| Failure::Input(e.to_string()))?,
                None => print!("{}", render_tables(&bundle.report.aggregate)),
            }
        }
        Command::Reconcile {
            bib,
            meta,
            out,
            log,
            upstream,
        } => {
            let entries = parse_bibliography(&read(&bib)?)
                .map_err(|e| Failure::Input(format!("{}: {e}", bib.display())))?;
            let metas: BTreeMap<String, PaperMeta> = parse_meta_tsv(&read(&meta)?)
                .map_err(|e| Failure::Input(format!("{}: {e}", meta.display())))?
                .into_iter()
                .collect();
            let resolver = resolver(&upstream)?;
            let mut revised = Vec::with_capacity(entries.len());
            let mut actions = String::new();
            for entry in &entries {
                let paper_meta = metas.get(entry.citation_key()).cloned().unwrap_or_default();
                let outcome = reconcile(&paper_meta, entry, &resolver)?;
                let line = serde_json::json!({
                    "citation_key": entry.citation_key(),
                    "action": outcome.action.as_str(),
                    "gate_score": outcome.gate_score,
                    "replaced_slots": outcome.replaced_slots,
                });
                let _ = writeln!(actions, "{line}");
                revised.push(outcome.result);
            }
            let text = serialize_bibliography(&revised);
            match out {
                Some(path) => write(&path, &text)?,
                None => print!("{text}"),
            }
            match log {
                Some(path) => write(&path, &actions)?,
                None => eprint!("{actions}"),
            }
        }
        Command::Bench {
            corpus: path,
            mode,
            workers,
            out,
            permissive,
            upstream,
        } => {
            let corpus = corpus(&path, permissive)?;
            let resolver = match mode {
                Mode::ReconcileThenVerify => Some(resolver(&upstream)?),
                Mode::Verify => None,
            };
            let lookup = resolver.as_ref().map(|r| r as &dyn citegate_core::Lookup);
            let bundle =
                run_benchmark(&corpus.records, mode, lookup, &Verifier::default(), workers)
                    .map_err(|e| Failure::Input(e.to_string()))?;
            match out {
                Some(dir) => bundle
                    .write_to(&dir)
                    .map_err(|e| Failure::Input(e.to_string()))?,
                None => print!("{}", render_tables(&bundle.report.aggregate)),
            }
            for inc in &bundle.report.incomplete {
                eprintln!(
                    "incomplete: {} {}: {}",
                    inc.paper_id, inc.entry_tag, inc.reason
                );
            }
        }
        Command::Report { labels, json } => {
            let records = read_labels(&read(&labels)?)
                .map_err(|e| Failure::Input(format!("{}: {e}", labels.display())))?;
            let grouped = group_labels(&records);
            let report = aggregate_stats(&grouped);
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report).expect("report serializes")
                );
            } else {
                print!("{}", render_tables(&report));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}
