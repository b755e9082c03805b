//! The `reqpath` command line.
//!
//! `cli_dispatch` never touches the process's stdout/stderr; it returns
//! the text and exit code so the binary and the tests share one path.
//! Exit codes: 0 success, 1 domain error, 2 usage error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use chrono::Utc;
use clap::{Args, Parser, Subcommand, ValueEnum};
use reqpath_core::kb::{load_kb, query_activity, validate_kb, KbDocument, Severity};
use reqpath_core::selection::{
    classify_scenario, minimize_distinct, recommend_path, MinimizeMode, Scenario, SelectionRequest, TieBreak,
};
use reqpath_core::workflow::{
    Command, Journal, NeedRecord, QualityAttribute, RequirementKind, VerificationStatus, WorkflowSession,
};
use reqpath_core::KnowledgeBase;
use serde::Serialize;

use crate::config::{load_kb_from, ServiceConfig, DATA_DIR_ENV, DEFAULT_DATA_DIR, DEFAULT_LISTEN, KB_ENV};
use crate::error::{ApiError, ErrorKind};
use crate::http::{select_path, PathResponse};
use crate::persistence::{load_session, save_session};
use crate::report::build_report;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    Json,
    #[default]
    Table,
}

#[derive(Debug, Parser)]
#[command(name = "reqpath", version, about = "Method selection and workflow tracking for requirements generation")]
struct Cli {
    /// Knowledge base file (default: built-in seed catalog).
    #[arg(long, global = true, env = KB_ENV)]
    kb: Option<PathBuf>,
    /// Directory holding persisted sessions.
    #[arg(long, global = true, env = DATA_DIR_ENV)]
    data_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Inspect and validate the knowledge base.
    #[command(subcommand)]
    Kb(KbCmd),
    /// Classify how an activity's criterion groups overlap.
    Scenario { activity: String },
    /// Recommend methods.
    #[command(subcommand)]
    Select(SelectCmd),
    /// Create and drive workflow sessions.
    #[command(subcommand)]
    Session(SessionCmd),
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = DEFAULT_LISTEN)]
        listen: String,
        #[arg(long)]
        read_only: bool,
    },
}

#[derive(Debug, Subcommand)]
enum KbCmd {
    /// Validate a catalog file (default: the --kb file or the seed).
    Validate { path: Option<PathBuf> },
    /// List activities in phase order.
    List,
    /// Show one activity with its methods and criterion groups.
    Show { activity: String },
}

#[derive(Debug, Subcommand)]
enum SelectCmd {
    /// One method per activity under a criteria priority.
    Path(PathArgs),
    /// Fewest distinct methods covering the activities under one criterion.
    Minimize {
        #[arg(long)]
        criterion: String,
        #[arg(long, value_delimiter = ',', required = true)]
        activities: Vec<String>,
        #[arg(long, default_value = "auto")]
        mode: MinimizeMode,
    },
}

#[derive(Debug, Args)]
struct PathArgs {
    /// Criteria, highest priority first.
    #[arg(long, value_delimiter = ',')]
    criteria: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    activities: Vec<String>,
    /// Force a method for an activity: `activity=method`.
    #[arg(long = "pin", value_parser = parse_pair)]
    pins: Vec<(String, String)>,
    #[arg(long, value_enum, default_value_t = TieBreakArg::CoverageBreadth)]
    tie_break: TieBreakArg,
}

impl PathArgs {
    fn request(&self) -> SelectionRequest {
        SelectionRequest {
            activities: self.activities.clone(),
            priority: self.criteria.clone(),
            pinned: self.pins.iter().cloned().collect::<BTreeMap<_, _>>(),
            tie_break: match self.tie_break {
                TieBreakArg::CoverageBreadth => TieBreak::CoverageBreadth,
                TieBreakArg::DeclarationOrder => TieBreak::DeclarationOrder,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TieBreakArg {
    CoverageBreadth,
    DeclarationOrder,
}

#[derive(Debug, Subcommand)]
enum SessionCmd {
    /// Start a session from a needs document.
    New {
        /// Session id (default: generated).
        #[arg(long)]
        id: Option<String>,
        /// A need as `id=statement`; repeatable.
        #[arg(long = "need", value_parser = parse_pair, required = true)]
        needs: Vec<(String, String)>,
    },
    /// Print the session's current state.
    Show { id: String },
    /// Move to the next iteration, phase or business activity.
    Advance { id: String },
    /// Evaluate the local-analysis exit checklist.
    Checklist { id: String },
    /// Record a requirement in an increment.
    Record {
        id: String,
        #[arg(long)]
        increment: String,
        #[arg(long)]
        text: String,
        #[arg(long, default_value = "functional")]
        kind: RequirementKind,
        #[arg(long)]
        parent: Option<String>,
    },
    /// Link a requirement to needs with a rationale.
    Link {
        id: String,
        requirement: String,
        #[arg(long = "need", required = true)]
        needs: Vec<String>,
        #[arg(long, default_value = "")]
        rationale: String,
    },
    /// Set a quality-attribute verification mark.
    Verify {
        id: String,
        requirement: String,
        #[arg(long)]
        attribute: QualityAttribute,
        #[arg(long)]
        status: VerificationStatus,
        #[arg(long, default_value = "")]
        note: String,
    },
    /// Raise a conflict between requirements.
    Conflict {
        id: String,
        #[arg(long, value_delimiter = ',', required = true)]
        requirements: Vec<String>,
        #[arg(long)]
        description: String,
        #[arg(long)]
        external_note: Option<String>,
    },
    /// Resolve an open conflict.
    Resolve {
        id: String,
        conflict: String,
        #[arg(long)]
        resolution: String,
    },
    /// Record (or withdraw, with --withdraw) stakeholder agreement.
    Attest {
        id: String,
        #[arg(long)]
        withdraw: bool,
        #[arg(long, default_value = "")]
        note: String,
    },
    /// Record the method used for an activity.
    Assign {
        id: String,
        activity: String,
        method: String,
    },
    /// Render the session report, optionally with a method path.
    Report {
        id: String,
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        activities: Vec<String>,
    },
}

fn parse_pair(raw: &str) -> Result<(String, String), String> {
    match raw.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_owned(), v.trim().to_owned())),
        _ => Err(format!("expected `key=value`, got `{raw}`")),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CliOutput {
    fn ok(stdout: String) -> Self {
        CliOutput {
            code: 0,
            stdout,
            stderr: String::new(),
        }
    }

    fn fail(code: i32, stdout: String, stderr: String) -> Self {
        CliOutput { code, stdout, stderr }
    }
}

/// Parses `argv` (program name first) and runs the command.
pub fn cli_dispatch<I, T>(argv: I) -> CliOutput
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CliOutput::fail(2, String::new(), text)
            } else {
                CliOutput::ok(text)
            };
        }
    };
    let ctx = Ctx {
        format: cli.format,
        data_dir: cli.data_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_DATA_DIR)),
        kb_path: cli.kb.clone(),
    };
    match run(&ctx, cli.command) {
        Ok(out) => out,
        Err(e) => {
            let code = if e.kind == ErrorKind::Usage { 2 } else { 1 };
            let stderr = match ctx.format {
                Format::Json => serde_json::to_string_pretty(&e).expect("errors serialize") + "\n",
                Format::Table => format!("error: {}\n", e.message),
            };
            CliOutput::fail(code, String::new(), stderr)
        }
    }
}

struct Ctx {
    format: Format,
    data_dir: PathBuf,
    kb_path: Option<PathBuf>,
}

impl Ctx {
    fn kb(&self) -> Result<KnowledgeBase, ApiError> {
        Ok(load_kb_from(self.kb_path.as_deref())?)
    }

    fn emit<T: Serialize>(&self, value: &T, table: impl FnOnce() -> String) -> Result<CliOutput, ApiError> {
        Ok(CliOutput::ok(match self.format {
            Format::Json => serde_json::to_string_pretty(value).expect("outputs serialize") + "\n",
            Format::Table => table(),
        }))
    }

    /// Loads a session, applies one command and persists the result.
    fn mutate(&self, id: &str, command: Command) -> Result<CliOutput, ApiError> {
        let kb = self.kb()?;
        let mut journal = load_session(&kb, id, &self.data_dir)?;
        let applied = journal.execute(&kb, command, None)?;
        save_session(&journal, &self.data_dir)?;
        let session = journal.session();
        self.emit(&serde_json::json!({ "applied": applied, "session": session }), || {
            session_table(&kb, session)
        })
    }
}

fn run(ctx: &Ctx, command: Cmd) -> Result<CliOutput, ApiError> {
    match command {
        Cmd::Kb(cmd) => run_kb(ctx, cmd),
        Cmd::Scenario { activity } => {
            let kb = ctx.kb()?;
            let class = classify_scenario(&kb, &activity)?;
            ctx.emit(&class, || {
                let mut out = format!("{activity}: {}\n", scenario_label(class.value));
                for w in &class.warnings {
                    let _ = writeln!(out, "  warning: {w}");
                }
                out
            })
        }
        Cmd::Select(SelectCmd::Path(args)) => {
            let kb = ctx.kb()?;
            let response = select_path(&kb, &args.request())?;
            ctx.emit(&response, || path_table(&kb, &response))
        }
        Cmd::Select(SelectCmd::Minimize {
            criterion,
            activities,
            mode,
        }) => {
            let kb = ctx.kb()?;
            let result = minimize_distinct(&kb, &activities, &criterion, mode)?;
            ctx.emit(&result, || {
                let rows = result
                    .assignment
                    .iter()
                    .map(|(a, m)| vec![a.clone(), method_name(&kb, m)])
                    .collect();
                let mut out = table(&["ACTIVITY", "METHOD"], rows);
                let _ = writeln!(
                    out,
                    "\n{} distinct method(s) ({})",
                    result.distinct_methods.len(),
                    if result.optimal { "optimal" } else { "greedy" }
                );
                out
            })
        }
        Cmd::Session(cmd) => run_session(ctx, cmd),
        Cmd::Serve { listen, read_only } => {
            let config = ServiceConfig {
                listen,
                kb_path: ctx.kb_path.clone(),
                data_dir: ctx.data_dir.clone(),
                read_only,
            };
            serve_blocking(&config)
        }
    }
}

fn serve_blocking(config: &ServiceConfig) -> Result<CliOutput, ApiError> {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| ApiError::internal(e.to_string()))?;
    runtime.block_on(async {
        let handle = crate::http::serve(config)
            .await
            .map_err(|e| ApiError::new(ErrorKind::Domain, "startup_failed", e.to_string()))?;
        eprintln!("reqpath listening on http://{}", handle.local_addr());
        let _ = tokio::signal::ctrl_c().await;
        handle.shutdown().await.map_err(|e| ApiError::internal(e.to_string()))?;
        Ok(CliOutput::ok(String::new()))
    })
}

fn run_kb(ctx: &Ctx, cmd: KbCmd) -> Result<CliOutput, ApiError> {
    match cmd {
        KbCmd::Validate { path } => {
            let path = path.or_else(|| ctx.kb_path.clone());
            let text = match &path {
                Some(p) => std::fs::read_to_string(p).map_err(|e| {
                    ApiError::new(ErrorKind::Domain, "kb_unreadable", format!("cannot read {}: {e}", p.display()))
                })?,
                None => reqpath_core::kb::SEED_DOCUMENT.to_owned(),
            };
            let doc: KbDocument = match serde_json::from_str(&text) {
                Ok(doc) => doc,
                // let load_kb produce the positioned parse error
                Err(_) => return Err(load_kb(&text).expect_err("parse failed above").into()),
            };
            let report = validate_kb(&doc);
            let mut out = match ctx.format {
                Format::Json => serde_json::to_string_pretty(&report).expect("reports serialize") + "\n",
                Format::Table => {
                    let mut out = String::new();
                    for f in &report.findings {
                        let sev = match f.severity {
                            Severity::Error => "error",
                            Severity::Warning => "warning",
                        };
                        let _ = writeln!(out, "{sev:<7} {:<28} {:<24} {}", f.code.as_str(), f.subject, f.message);
                    }
                    let _ = writeln!(
                        out,
                        "{} errors, {} warnings",
                        report.error_count(),
                        report.warning_count()
                    );
                    out
                }
            };
            if report.has_errors() {
                if ctx.format == Format::Table {
                    out.push_str("knowledge base is invalid\n");
                }
                Ok(CliOutput::fail(1, out, String::new()))
            } else {
                Ok(CliOutput::ok(out))
            }
        }
        KbCmd::List => {
            let kb = ctx.kb()?;
            let mut acts: Vec<_> = kb.activities().iter().collect();
            acts.sort_by_key(|a| (a.phase.phase, a.phase.rank));
            ctx.emit(&acts, || {
                let rows = acts
                    .iter()
                    .map(|a| {
                        vec![
                            a.id.clone(),
                            a.phase.phase.as_str().to_owned(),
                            a.phase.rank.to_string(),
                            a.applicable_methods.len().to_string(),
                            a.name.clone(),
                        ]
                    })
                    .collect();
                table(&["ID", "PHASE", "RANK", "METHODS", "NAME"], rows)
            })
        }
        KbCmd::Show { activity } => {
            let kb = ctx.kb()?;
            let view = query_activity(&kb, &activity)?;
            ctx.emit(&view, || {
                let mut out = format!(
                    "{} ({}, rank {})\n{}\n\nMethods:\n",
                    view.activity.name,
                    view.activity.phase.phase.as_str(),
                    view.activity.phase.rank,
                    view.activity.objective
                );
                if view.methods.is_empty() {
                    out.push_str("  (none catalogued)\n");
                }
                for m in &view.methods {
                    let _ = writeln!(out, "  {:<28} {}", m.id, m.name);
                }
                if !view.groups.is_empty() {
                    out.push_str("\nCriterion groups:\n");
                    for g in &view.groups {
                        let _ = writeln!(out, "  {:<14} {}", g.criterion, g.members.join(", "));
                    }
                }
                out
            })
        }
    }
}

fn run_session(ctx: &Ctx, cmd: SessionCmd) -> Result<CliOutput, ApiError> {
    match cmd {
        SessionCmd::New { id, needs } => {
            let kb = ctx.kb()?;
            let id = id.unwrap_or_else(|| format!("s-{}", uuid::Uuid::new_v4().simple()));
            if crate::persistence::session_exists(&ctx.data_dir, &id) {
                return Err(ApiError::new(
                    ErrorKind::Conflict,
                    "session_exists",
                    format!("session `{id}` already exists"),
                ));
            }
            let needs = needs.into_iter().map(|(k, v)| NeedRecord::new(k, v)).collect();
            let journal = Journal::create(&kb, id, needs, None)?;
            save_session(&journal, &ctx.data_dir)?;
            ctx.emit(journal.session(), || format!("{}\n", journal.session().id()))
        }
        SessionCmd::Show { id } => {
            let kb = ctx.kb()?;
            let journal = load_session(&kb, &id, &ctx.data_dir)?;
            ctx.emit(journal.session(), || session_table(&kb, journal.session()))
        }
        SessionCmd::Checklist { id } => {
            let kb = ctx.kb()?;
            let journal = load_session(&kb, &id, &ctx.data_dir)?;
            let session = journal.session();
            let checklist = match session.last_checklist() {
                Some(c) if session.phase() != reqpath_core::workflow::SessionPhase::LocalAnalysis => c.clone(),
                _ => session.evaluate_checklist()?,
            };
            ctx.emit(&checklist, || {
                let mut out = String::new();
                for (name, item) in checklist.items() {
                    let _ = writeln!(
                        out,
                        "[{}] {name}: {}",
                        if item.passed { "x" } else { " " },
                        item.evidence
                    );
                }
                let _ = writeln!(out, "{}", if checklist.pass { "PASS" } else { "FAIL" });
                out
            })
        }
        SessionCmd::Advance { id } => ctx.mutate(&id, Command::Advance),
        SessionCmd::Record {
            id,
            increment,
            text,
            kind,
            parent,
        } => ctx.mutate(
            &id,
            Command::RecordRequirement {
                increment,
                text,
                kind,
                parent,
            },
        ),
        SessionCmd::Link {
            id,
            requirement,
            needs,
            rationale,
        } => ctx.mutate(
            &id,
            Command::AttachRationale {
                requirement,
                rationale,
                need_ids: needs,
            },
        ),
        SessionCmd::Verify {
            id,
            requirement,
            attribute,
            status,
            note,
        } => ctx.mutate(
            &id,
            Command::MarkVerification {
                requirement,
                attribute,
                status,
                note,
            },
        ),
        SessionCmd::Conflict {
            id,
            requirements,
            description,
            external_note,
        } => ctx.mutate(
            &id,
            Command::RaiseConflict {
                requirement_ids: requirements,
                description,
                external_note,
            },
        ),
        SessionCmd::Resolve {
            id,
            conflict,
            resolution,
        } => ctx.mutate(&id, Command::ResolveConflict { conflict, resolution }),
        SessionCmd::Attest { id, withdraw, note } => ctx.mutate(
            &id,
            Command::SetAttestation {
                agreed: !withdraw,
                note,
            },
        ),
        SessionCmd::Assign { id, activity, method } => ctx.mutate(
            &id,
            Command::AssignMethod {
                activity,
                method,
                at: Utc::now(),
            },
        ),
        SessionCmd::Report {
            id,
            criteria,
            activities,
        } => {
            let kb = ctx.kb()?;
            let journal = load_session(&kb, &id, &ctx.data_dir)?;
            let path = if activities.is_empty() {
                None
            } else {
                Some(recommend_path(
                    &kb,
                    &SelectionRequest {
                        activities,
                        priority: criteria,
                        ..Default::default()
                    },
                )?)
            };
            let report = build_report(&kb, Some(journal.session()), path.as_ref(), Utc::now())?;
            ctx.emit(&report, || report.render())
        }
    }
}

fn scenario_label(s: Scenario) -> &'static str {
    match s {
        Scenario::Ideal => "ideal",
        Scenario::Normal => "normal",
        Scenario::Worst => "worst",
    }
}

fn method_name(kb: &KnowledgeBase, id: &str) -> String {
    kb.method(id).map_or_else(|| id.to_owned(), |m| m.name.clone())
}

fn path_table(kb: &KnowledgeBase, response: &PathResponse) -> String {
    let rows = response
        .result
        .choices
        .iter()
        .map(|c| {
            vec![
                c.activity.clone(),
                method_name(kb, &c.method),
                c.coverage.satisfied.to_string(),
                c.tied_alternatives
                    .iter()
                    .map(|m| method_name(kb, m))
                    .collect::<Vec<_>>()
                    .join(", "),
            ]
        })
        .collect();
    let mut out = table(&["ACTIVITY", "METHOD", "SATISFIES", "TIED WITH"], rows);
    let _ = writeln!(out, "\n{} distinct method(s)", response.result.distinct_method_count);
    out
}

fn session_table(kb: &KnowledgeBase, s: &WorkflowSession) -> String {
    let state = s.phase_state();
    let mut out = format!(
        "session {} (version {})\nphase: {}  iteration: {}",
        s.id(),
        s.version(),
        state.phase,
        state.local_iteration
    );
    if let Some(c) = &state.business_cursor {
        let name = kb.activity(c).map_or(c.as_str(), |a| a.name.as_str());
        let _ = write!(out, "  activity: {name}");
    }
    out.push('\n');
    let (unlinked, untraced) = s.trace_gaps();
    let _ = writeln!(
        out,
        "needs: {}  requirements: {}  open conflicts: {}  untraced: {}",
        s.needs().len(),
        s.requirements().len(),
        s.open_conflicts().count(),
        unlinked.len() + untraced.len()
    );
    if !s.requirements().is_empty() {
        out.push('\n');
        let rows = s
            .requirements()
            .iter()
            .map(|r| {
                vec![
                    r.id.clone(),
                    format!("{:?}", r.kind).to_lowercase(),
                    r.need_links.join(","),
                    r.text.clone(),
                ]
            })
            .collect();
        out.push_str(&table(&["ID", "KIND", "NEEDS", "TEXT"], rows));
    }
    out
}

/// Left-aligned plain-text table.
fn table(headers: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let last = cells.len() - 1;
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i == last {
                out.push_str(cell);
            } else {
                let _ = write!(out, "{cell:<w$}  ");
            }
        }
        out.push('\n');
    };
    line(headers.to_vec());
    for row in &rows {
        line(row.iter().map(String::as_str).collect());
    }
    out
}
