//! `gbi`: validate knowledge bases, run consultations against a session
//! file, ask for explanations, and launch the HTTP service.
//!
//! Exit codes: 0 ok, 1 parse or I/O, 2 validation, 3 evidence,
//! 4 explanation, 64 usage.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use gbi_core::archive::{self, ArchiveError};
use gbi_core::net::CONSISTENCY_TOL;
use gbi_core::{
    Detail, EvidenceSpec, ExplainError, ExplanationQuery, Filter, KbDocument, NetError, Scope, Session, UpdateError,
    When,
};
use gbi_service::views::{explain_response, HistoryView, NetSummary, UpdateSummary};
use gbi_service::{api::session_from_kb, ServeConfig, SessionStore};
use serde::Serialize;

const EXIT_PARSE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_EVIDENCE: u8 = 3;
const EXIT_EXPLANATION: u8 = 4;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "gbi", version, about = "Explain belief changes in LEG networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a knowledge base: structure, tables and shared-marginal consistency.
    Validate {
        kb: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Start a session file from a knowledge base.
    New { kb: PathBuf, session: PathBuf },
    /// Enter evidence (one update, constraints applied together).
    Assert {
        session: PathBuf,
        #[arg(long)]
        leg: String,
        /// NAME=P with P in [0, 1]; repeat for simultaneous observations.
        #[arg(long = "event", value_name = "NAME=P", required = true, value_parser = parse_constraint)]
        events: Vec<(String, f64)>,
        #[arg(long)]
        json: bool,
    },
    /// Explain why an event's probability changed.
    Explain {
        session: PathBuf,
        #[arg(long)]
        event: String,
        #[arg(long)]
        leg: String,
        #[arg(long, value_enum, default_value = "local")]
        scope: ScopeArg,
        #[arg(long, value_enum, default_value = "none")]
        filter: FilterArg,
        #[arg(long, value_enum, default_value = "user")]
        detail: DetailArg,
        /// Update number, `current` or `all`.
        #[arg(long, default_value = "current")]
        when: When,
        #[arg(long)]
        json: bool,
    },
    /// List the updates entered so far.
    History {
        session: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Return the session to the knowledge base's priors.
    Init { session: PathBuf },
    /// Run the HTTP service.
    Serve {
        /// Knowledge base to open a session for at startup.
        #[arg(long)]
        kb: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Directory of static UI assets.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    Local,
    Global,
}

#[derive(Clone, Copy, ValueEnum)]
enum FilterArg {
    None,
    Causal,
    Diagnostic,
}

#[derive(Clone, Copy, ValueEnum)]
enum DetailArg {
    User,
    Ke,
}

fn parse_constraint(s: &str) -> Result<(String, f64), String> {
    let (name, p) = s.split_once('=').ok_or("expected NAME=P")?;
    let p: f64 = p.parse().map_err(|_| format!("'{p}' is not a number"))?;
    if !(0.0..=1.0).contains(&p) {
        return Err(format!("probability {p} is outside [0, 1]"));
    }
    if name.is_empty() {
        return Err("event name is empty".into());
    }
    Ok((name.to_owned(), p))
}

/// A failure with its exit code and stderr text.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<NetError> for Failure {
    fn from(e: NetError) -> Self {
        let code = if matches!(e, NetError::Parse(_)) { EXIT_PARSE } else { EXIT_VALIDATION };
        Failure::new(code, format!("{}: {e}", e.code()))
    }
}

impl From<UpdateError> for Failure {
    fn from(e: UpdateError) -> Self {
        Failure::new(EXIT_EVIDENCE, format!("{}: {e}", e.code()))
    }
}

impl From<ExplainError> for Failure {
    fn from(e: ExplainError) -> Self {
        Failure::new(EXIT_EXPLANATION, format!("{}: {e}", e.code()))
    }
}

impl From<ArchiveError> for Failure {
    fn from(e: ArchiveError) -> Self {
        let code = match &e {
            ArchiveError::Parse(_) | ArchiveError::UnsupportedVersion(_) => EXIT_PARSE,
            ArchiveError::Net(NetError::Parse(_)) => EXIT_PARSE,
            ArchiveError::Net(_) | ArchiveError::Explain(_) => EXIT_VALIDATION,
            ArchiveError::Replay { .. } => EXIT_EVIDENCE,
        };
        Failure::new(code, format!("{}: {e}", e.code()))
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn load_session(path: &Path) -> Result<Session, Failure> {
    Ok(archive::load(&read(path)?)?)
}

fn save_session(path: &Path, session: &Session) -> Result<(), Failure> {
    write(path, &(archive::save(session) + "\n"))
}

fn print_json(value: &impl Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("views serialize"));
}

fn validate(kb: &Path, json: bool) -> Result<(), Failure> {
    let text = read(kb)?;
    let doc = KbDocument::parse(&text)?;
    let report = doc.consistency_report(CONSISTENCY_TOL)?;
    if json {
        print_json(&report);
    }
    if !report.is_consistent() {
        for p in report.violations() {
            eprintln!(
                "inconsistent: {} and {} disagree on [{}] by {:.3e}",
                p.leg_a,
                p.leg_b,
                p.shared.iter().map(|e| e.as_str()).collect::<Vec<_>>().join(", "),
                p.discrepancy
            );
        }
        return Err(Failure::new(EXIT_VALIDATION, "InconsistentMarginals: knowledge base is not consistent"));
    }
    let links = doc.causal_links.len();
    let loaded = doc.into_loaded()?;
    Session::with_links(loaded.net.clone(), loaded.causal_links)?;
    if !json {
        println!(
            "valid: {} LEGs, {} events, {} causal links, max shared-marginal discrepancy {:.3e}",
            loaded.net.legs().len(),
            loaded.net.events().len(),
            links,
            report.max_discrepancy()
        );
    }
    Ok(())
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Validate { kb, json } => validate(&kb, json),
        Command::New { kb, session } => {
            let s = session_from_kb(&read(&kb)?).map_err(|e| {
                let code = if e.body.code == "ParseError" { EXIT_PARSE } else { EXIT_VALIDATION };
                Failure::new(code, format!("{}: {}", e.body.code, e.body.message))
            })?;
            save_session(&session, &s)?;
            println!("session written to {}", session.display());
            Ok(())
        }
        Command::Assert {
            session,
            leg,
            events,
            json,
        } => {
            let mut s = load_session(&session)?;
            let spec = events
                .into_iter()
                .fold(EvidenceSpec::new(leg), |spec, (e, p)| spec.with(e, p));
            let summary = UpdateSummary::of(s.apply_evidence(&spec)?);
            save_session(&session, &s)?;
            if json {
                print_json(&summary);
            } else {
                println!("{}", summary.line());
            }
            Ok(())
        }
        Command::Explain {
            session,
            event,
            leg,
            scope,
            filter,
            detail,
            when,
            json,
        } => {
            let s = load_session(&session)?;
            let query = ExplanationQuery::new(event, leg)
                .scope(match scope {
                    ScopeArg::Local => Scope::Local,
                    ScopeArg::Global => Scope::Global,
                })
                .filter(match filter {
                    FilterArg::None => Filter::None,
                    FilterArg::Causal => Filter::Causal,
                    FilterArg::Diagnostic => Filter::Diagnostic,
                })
                .detail(match detail {
                    DetailArg::User => Detail::User,
                    DetailArg::Ke => Detail::KnowledgeEngineer,
                })
                .when(when);
            let response = explain_response(&s, &query)?;
            if json {
                print_json(&response);
            } else {
                println!("{}", response.rendered_text);
            }
            Ok(())
        }
        Command::History { session, json } => {
            let s = load_session(&session)?;
            let view = HistoryView::of(&s);
            if json {
                print_json(&view);
            } else {
                for u in &view.updates {
                    println!("{}", u.line());
                }
            }
            Ok(())
        }
        Command::Init { session } => {
            let mut s = load_session(&session)?;
            s.initialize();
            save_session(&session, &s)?;
            println!("session reset to priors");
            Ok(())
        }
        Command::Serve { kb, host, port, ui_dir } => serve(kb, host, port, ui_dir),
    }
}

fn serve(kb: Option<PathBuf>, host: String, port: u16, ui_dir: Option<PathBuf>) -> Result<(), Failure> {
    let store = Arc::new(SessionStore::new());
    if let Some(kb) = kb {
        let s = session_from_kb(&read(&kb)?)
            .map_err(|e| Failure::new(EXIT_VALIDATION, format!("{}: {}", e.body.code, e.body.message)))?;
        let id = store.insert(s);
        let summary = NetSummary::of(&store.get(&id).expect("just inserted").lock().expect("fresh session"));
        println!("session {id} ({} LEGs)", summary.legs.len());
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::new(EXIT_PARSE, e.to_string()))?;
    runtime
        .block_on(gbi_service::serve(ServeConfig { host, port, ui_dir }, store, |addr| {
            eprintln!("listening on http://{addr}");
        }))
        .map_err(|e| Failure::new(EXIT_PARSE, format!("serve: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
