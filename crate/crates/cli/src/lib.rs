//! The `tapestry` command line: ingest sources into the event store, enrich
//! identities, export reports and serve the HTTP API.
//!
//! Exit codes: 0 success, 1 partial (records skipped or a source failed at
//! run time), 2 configuration or usage error.

pub mod config;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, NaiveDate, Utc};
use clap::{Parser, Subcommand, ValueEnum};
use tapestry_api::{parse_request, ApiConfig, Server, StoreSource, REGISTRY_FILE};
use tapestry_core::ingest::source::git;
use tapestry_core::ingest::{fetch_source, IngestError, SourceConfig};
use tapestry_core::report::{self, Report};
use tapestry_core::{Dataset, EventStore, SourceKind};

use crate::config::CliConfig;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn partial(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Parser)]
#[command(name = "tapestry", version, about = "Contributor diversity and turnover analytics")]
pub struct Cli {
    /// Project file.
    #[arg(long, global = true, default_value = "tapestry.toml")]
    pub config: PathBuf,
    /// Overrides the store directory from the config.
    #[arg(long, global = true)]
    pub store: Option<PathBuf>,
    /// Overrides the gender probability threshold from the config.
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fetch new activity from the configured sources into the store.
    Ingest {
        /// Only keep events after this date or RFC 3339 instant. Defaults to
        /// the newest stored event of each GitHub or git source.
        #[arg(long)]
        since: Option<String>,
        /// Restrict to sources of this kind or with this locator. Repeatable.
        #[arg(long = "source")]
        sources: Vec<String>,
        /// Keep polling at the shortest poll_interval of the selected sources.
        #[arg(long)]
        watch: bool,
    },
    /// Merge identities, flag bots, assign affiliation and gender; writes
    /// registry.json beside the store.
    Enrich,
    /// Write one report as JSON or CSV.
    Export {
        /// Report name; run with an unknown name to list them.
        metric: String,
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        to: Option<String>,
        /// gender, affiliation or none.
        #[arg(long)]
        lens: Option<String>,
        #[arg(long)]
        group: Option<String>,
        /// Reference instant for turnover and drill-down.
        #[arg(long)]
        as_of: Option<String>,
        /// Contribution kind: pr, issue, qa_question or qa_answer.
        #[arg(long)]
        kind: Option<String>,
        /// count or proportion.
        #[arg(long)]
        measure: Option<String>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the /v1 HTTP API until interrupted.
    Serve {
        #[arg(long)]
        bind: Option<IpAddr>,
        /// 0 picks a free port; the bound address is printed.
        #[arg(long)]
        port: Option<u16>,
        /// Bearer token required on every route but /v1/health.
        #[arg(long, env = "TAPESTRY_API_TOKEN", hide_env_values = true)]
        token: Option<String>,
        /// Allowed browser origin. Repeatable; `*` allows any.
        #[arg(long = "cors")]
        cors: Vec<String>,
        /// Seconds between store change checks; 0 disables polling.
        #[arg(long)]
        poll_secs: Option<u64>,
    },
    /// Print the version.
    Version,
}

/// Runs a parsed command, writing normal output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    if let Command::Version = cli.command {
        writeln!(out, "tapestry {}", env!("CARGO_PKG_VERSION")).map_err(io_err)?;
        return Ok(());
    }
    let mut config = CliConfig::load(&cli.config)?;
    if let Some(store) = cli.store {
        config.store = store;
    }
    if let Some(t) = cli.threshold {
        config.threshold = t;
        config.settings()?;
    }
    match cli.command {
        Command::Ingest { since, sources, watch } => ingest(&config, since.as_deref(), &sources, watch, out),
        Command::Enrich => enrich(&config, out),
        Command::Export {
            metric,
            from,
            to,
            lens,
            group,
            as_of,
            kind,
            measure,
            format,
            out: path,
        } => {
            let params: Vec<(String, String)> = [
                ("from", from),
                ("to", to),
                ("lens", lens),
                ("group", group),
                ("as_of", as_of),
                ("kind", kind),
                ("measure", measure),
            ]
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
            .collect();
            export(&config, &metric, &params, format, path.as_deref(), out)
        }
        Command::Serve {
            bind,
            port,
            token,
            cors,
            poll_secs,
        } => serve(&config, bind, port, token, cors, poll_secs, out),
        Command::Version => unreachable!(),
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::partial(format!("write failed: {e}"))
}

fn parse_since(raw: &str) -> Result<DateTime<Utc>, CliError> {
    if let Ok(t) = DateTime::parse_from_rfc3339(raw) {
        return Ok(t.with_timezone(&Utc));
    }
    NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight exists").and_utc())
        .map_err(|_| CliError::usage(format!("--since {raw:?} is not a date or RFC 3339 instant")))
}

fn label(source: &SourceConfig) -> String {
    format!("{} {}", source.source_kind, source.locator)
}

fn open_store(config: &CliConfig) -> Result<EventStore, CliError> {
    EventStore::open(&config.store).map_err(|e| CliError::usage(e.to_string()))
}

/// Newest stored event from the same GitHub repository or git clone.
fn stored_since(store: &EventStore, source: &SourceConfig) -> Result<Option<DateTime<Utc>>, CliError> {
    let repo = match source.source_kind {
        SourceKind::Github => source.locator.trim().trim_matches('/').to_string(),
        SourceKind::Git => git::repo_id(Path::new(&source.locator)),
        _ => return Ok(None),
    };
    store
        .latest_timestamp(|e| e.source_kind == source.source_kind && e.repo_id == repo)
        .map_err(|e| CliError::usage(e.to_string()))
}

fn ingest_once(
    config: &CliConfig,
    selected: &[&SourceConfig],
    since: Option<DateTime<Utc>>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let store = EventStore::init(&config.store).map_err(|e| CliError::usage(e.to_string()))?;
    let mut total = 0;
    let mut worst: Option<CliError> = None;
    for source in selected {
        let name = label(source);
        let since = match since {
            Some(t) => Some(t),
            None => stored_since(&store, source)?,
        };
        let outcome = match fetch_source(source, since) {
            Ok(outcome) => outcome,
            Err(err) => {
                let failure = match err {
                    IngestError::Auth(_) | IngestError::Config(_) | IngestError::Storage(_) => CliError::usage(format!("{name}: {err}")),
                    IngestError::SourceUnavailable(_) => CliError::partial(format!("{name}: {err}")),
                };
                writeln!(out, "{name}: failed: {err}").map_err(io_err)?;
                if worst.as_ref().is_none_or(|w| w.code < failure.code) {
                    worst = Some(failure);
                }
                continue;
            }
        };
        let appended = store
            .append_events(&outcome.events)
            .map_err(|e| CliError::usage(format!("{name}: {e}")))?;
        total += appended;
        writeln!(
            out,
            "{name}: fetched {}, appended {appended}, skipped {}",
            outcome.events.len(),
            outcome.schema_errors.len()
        )
        .map_err(io_err)?;
        for err in &outcome.schema_errors {
            eprintln!("  skipped {err}");
        }
        if !outcome.schema_errors.is_empty() && worst.is_none() {
            worst = Some(CliError::partial(format!(
                "{name}: {} malformed records skipped",
                outcome.schema_errors.len()
            )));
        }
    }
    writeln!(out, "appended {total}").map_err(io_err)?;
    match worst {
        Some(err) => Err(err),
        None => Ok(()),
    }
}

fn ingest(
    config: &CliConfig,
    since: Option<&str>,
    filters: &[String],
    watch: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let since = since.map(parse_since).transpose()?;
    let selected: Vec<&SourceConfig> = config
        .sources
        .iter()
        .filter(|s| {
            filters.is_empty()
                || filters
                    .iter()
                    .any(|f| f == s.source_kind.as_str() || *f == s.locator || s.locator.ends_with(f.as_str()))
        })
        .collect();
    if selected.is_empty() {
        return Err(CliError::usage(if filters.is_empty() {
            "no sources configured".to_string()
        } else {
            format!("no configured source matches {filters:?}")
        }));
    }
    if !watch {
        return ingest_once(config, &selected, since, out);
    }
    let every = selected
        .iter()
        .map(|s| s.poll_interval)
        .min()
        .unwrap_or(tapestry_core::ingest::DEFAULT_POLL_INTERVAL);
    loop {
        match ingest_once(config, &selected, since, out) {
            Err(err) if err.code == 2 => return Err(err),
            Err(err) => eprintln!("warning: {err}"),
            Ok(()) => {}
        }
        out.flush().map_err(io_err)?;
        std::thread::sleep(every);
    }
}

fn enrich(config: &CliConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let store = open_store(config)?;
    let snapshot = store.load_snapshot(None).map_err(|e| CliError::usage(e.to_string()))?;
    let enrichment = config.enrichment()?;
    let classifier = config.classifier()?;
    let registry = enrichment
        .run(&snapshot, &classifier)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let path = config.store.join(REGISTRY_FILE);
    std::fs::write(&path, report::json_bytes(&registry))
        .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;

    let bots = registry.iter().filter(|i| i.is_bot).count();
    writeln!(
        out,
        "{} identities ({bots} bot{})",
        registry.len(),
        if bots == 1 { "" } else { "s" }
    )
    .map_err(io_err)?;
    let mut orgs: BTreeMap<String, usize> = BTreeMap::new();
    let mut genders: BTreeMap<String, usize> = BTreeMap::new();
    for identity in registry.iter().filter(|i| !i.is_bot) {
        *orgs.entry(identity.affiliation.org_name.label().to_string()).or_default() += 1;
        *genders.entry(identity.gender.gender.as_str().to_string()).or_default() += 1;
    }
    let join = |m: &BTreeMap<String, usize>| m.iter().map(|(k, v)| format!("{k} {v}")).collect::<Vec<_>>().join(", ");
    if !orgs.is_empty() {
        writeln!(out, "affiliations: {}", join(&orgs)).map_err(io_err)?;
        writeln!(out, "genders: {}", join(&genders)).map_err(io_err)?;
    }
    writeln!(out, "wrote {}", path.display()).map_err(io_err)?;
    Ok(())
}

/// Store plus the registry written by `enrich`.
fn load_dataset(config: &CliConfig) -> Result<Dataset, CliError> {
    use tapestry_api::DatasetSource;
    let source = StoreSource::open(&config.store).map_err(|e| CliError::usage(e.to_string()))?;
    source.load().map_err(|e| CliError::usage(e.to_string()))
}

fn export(
    config: &CliConfig,
    metric: &str,
    params: &[(String, String)],
    format: Format,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let report: Report = metric.parse().map_err(|_| {
        CliError::usage(format!(
            "unknown metric {metric:?}; valid names: {}",
            Report::names().join(", ")
        ))
    })?;
    let req = parse_request(params, report.extra_params())
        .map_err(|e| CliError::usage(format!("{} for {}: {}", e.code, report.name(), e.message)))?;
    let ds = load_dataset(config)?;
    let output = report::run(&ds, report, &req);
    let bytes = match format {
        Format::Json => output.to_json(),
        Format::Csv => output.to_csv(),
    };
    match path {
        Some(path) => std::fs::write(path, &bytes)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display()))),
        None => out.write_all(&bytes).map_err(io_err),
    }
}

fn serve(
    config: &CliConfig,
    bind: Option<IpAddr>,
    port: Option<u16>,
    token: Option<String>,
    cors: Vec<String>,
    poll_secs: Option<u64>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let enrichment = config.enrichment()?;
    let classifier = config.classifier()?;
    let source = StoreSource::open(&config.store)
        .map_err(|e| CliError::usage(e.to_string()))?
        .with_enricher(move |snapshot| enrichment.run(snapshot, &classifier).map_err(|e| e.to_string()));
    let defaults = ApiConfig::default();
    let addr = SocketAddr::new(
        bind.or(config.serve.bind).unwrap_or(defaults.bind.ip()),
        port.or(config.serve.port).unwrap_or(defaults.bind.port()),
    );
    let api = ApiConfig {
        bind: addr,
        auth_token: token.filter(|t| !t.is_empty()),
        cors_origins: if cors.is_empty() { config.serve.cors_origins.clone() } else { cors },
        poll_interval: match poll_secs {
            Some(0) => None,
            Some(s) => Some(Duration::from_secs(s)),
            None => config.serve.poll_interval.or(defaults.poll_interval),
        },
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::usage(e.to_string()))?;
    runtime.block_on(async {
        let server = Server::bind(api, Arc::new(source))
            .await
            .map_err(|e| CliError::usage(e.to_string()))?;
        let local = server.local_addr().map_err(|e| CliError::usage(e.to_string()))?;
        writeln!(out, "listening on http://{local}").map_err(io_err)?;
        out.flush().map_err(io_err)?;
        server
            .run(shutdown_signal())
            .await
            .map_err(|e| CliError::partial(e.to_string()))
    })
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}
