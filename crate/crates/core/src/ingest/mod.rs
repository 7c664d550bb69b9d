//! Activity ingestion: source connectors and the event store.

mod event;
pub mod source;
mod store;

use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use event::{sort_events, ActivityEvent, EventKind, EventSnapshot, RawProfile, SourceKind};
pub use store::{EventStore, StorageError, StoreFingerprint};

pub const DEFAULT_POLL_INTERVAL: Duration = Duration::from_secs(24 * 60 * 60);
pub const DEFAULT_GITHUB_API: &str = "https://api.github.com";

/// Where to pull activity from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    #[serde(rename = "kind")]
    pub source_kind: SourceKind,
    /// `owner/name` for GitHub, a repository path for git, a file path for
    /// Q&A exports and fixtures.
    pub locator: String,
    /// Name of the environment variable holding an access token.
    #[serde(default, alias = "credentials_env")]
    pub credentials_ref: Option<String>,
    #[serde(default = "default_poll", with = "humantime_serde")]
    pub poll_interval: Duration,
    /// GitHub API root; defaults to the public API.
    #[serde(default)]
    pub api_base: Option<String>,
}

fn default_poll() -> Duration {
    DEFAULT_POLL_INTERVAL
}

impl SourceConfig {
    pub fn new(source_kind: SourceKind, locator: impl Into<String>) -> Self {
        Self {
            source_kind,
            locator: locator.into(),
            credentials_ref: None,
            poll_interval: DEFAULT_POLL_INTERVAL,
            api_base: None,
        }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.locator.trim().is_empty() {
            return Err(IngestError::Config("source locator is empty".into()));
        }
        if self.poll_interval.is_zero() {
            return Err(IngestError::Config(format!(
                "source {}: poll_interval must be positive",
                self.locator
            )));
        }
        Ok(())
    }

    /// Reads the token named by `credentials_ref`. No reference means
    /// anonymous access; a reference to an unset variable is an error.
    pub fn resolve_token(&self) -> Result<Option<String>, IngestError> {
        match &self.credentials_ref {
            None => Ok(None),
            Some(var) => match std::env::var(var) {
                Ok(token) if !token.trim().is_empty() => Ok(Some(token.trim().to_string())),
                _ => Err(IngestError::Auth(format!(
                    "environment variable {var} is not set"
                ))),
            },
        }
    }
}

/// An upstream record that could not be normalized. Reported, never fatal.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{record}: {message}")]
pub struct SchemaError {
    /// Where the record came from (file position, API path or event id).
    pub record: String,
    pub message: String,
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("source unavailable: {0}")]
    SourceUnavailable(String),
    #[error("invalid source configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Storage(#[from] StorageError),
}

/// Events from one fetch plus the records that were skipped.
#[derive(Debug, Default, Clone)]
pub struct FetchOutcome {
    pub events: Vec<ActivityEvent>,
    pub schema_errors: Vec<SchemaError>,
}

impl FetchOutcome {
    pub(crate) fn push(&mut self, result: Result<ActivityEvent, SchemaError>) {
        match result {
            Ok(event) => self.events.push(event),
            Err(err) => self.schema_errors.push(err),
        }
    }
}

/// Fetches and normalizes events from one source.
///
/// Only events strictly newer than `since` are returned, in timestamp order.
/// Malformed upstream records are skipped and listed in
/// [`FetchOutcome::schema_errors`].
pub fn fetch_source(
    config: &SourceConfig,
    since: Option<DateTime<Utc>>,
) -> Result<FetchOutcome, IngestError> {
    config.validate()?;
    let raw = match config.source_kind {
        SourceKind::Fixture => source::fixture::fetch(config)?,
        SourceKind::Git => source::git::fetch(config, since)?,
        SourceKind::QaForum => source::qa::fetch(config)?,
        SourceKind::Github => source::github::GithubClient::from_config(config)?.fetch(since)?,
    };

    let mut outcome = FetchOutcome {
        events: Vec::with_capacity(raw.events.len()),
        schema_errors: raw.schema_errors,
    };
    for mut event in raw.events {
        event.actor = event.actor.normalized();
        if let Err(message) = event.validate() {
            outcome.schema_errors.push(SchemaError {
                record: event.event_id.clone(),
                message,
            });
            continue;
        }
        if since.is_none_or(|t| event.timestamp > t) {
            outcome.events.push(event);
        }
    }
    sort_events(&mut outcome.events);
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(SourceConfig::new(SourceKind::Fixture, "").validate().is_err());
        let mut cfg = SourceConfig::new(SourceKind::Fixture, "events.json");
        assert!(cfg.validate().is_ok());
        cfg.poll_interval = Duration::ZERO;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn missing_token_variable_is_auth_error() {
        let mut cfg = SourceConfig::new(SourceKind::Github, "o/r");
        cfg.credentials_ref = Some("TAPESTRY_TEST_SURELY_UNSET_TOKEN".into());
        assert!(matches!(cfg.resolve_token(), Err(IngestError::Auth(_))));
        cfg.credentials_ref = None;
        assert_eq!(cfg.resolve_token().unwrap(), None);
    }

    #[test]
    fn config_parses_durations() {
        let cfg: SourceConfig =
            serde_json::from_str(r#"{"kind":"github","locator":"o/r","poll_interval":"6h"}"#)
                .unwrap();
        assert_eq!(cfg.poll_interval, Duration::from_secs(6 * 3600));
        let cfg: SourceConfig =
            serde_json::from_str(r#"{"kind":"git","locator":"."}"#).unwrap();
        assert_eq!(cfg.poll_interval, DEFAULT_POLL_INTERVAL);
    }
}
