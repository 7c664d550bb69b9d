//! Local git history via `git log`.

use std::path::Path;
use std::process::Command;

use chrono::{DateTime, Utc};

use crate::ingest::{
    ActivityEvent, EventKind, FetchOutcome, IngestError, RawProfile, SchemaError, SourceConfig,
    SourceKind,
};

const FIELD_SEP: char = '\u{1f}';
const RECORD_SEP: char = '\u{1e}';

pub fn fetch(config: &SourceConfig, since: Option<DateTime<Utc>>) -> Result<FetchOutcome, IngestError> {
    let path = Path::new(&config.locator);
    let mut cmd = Command::new("git");
    cmd.arg("-C")
        .arg(path)
        .arg("log")
        .arg("--format=%H%x1f%an%x1f%ae%x1f%aI%x1e");
    if let Some(t) = since {
        // Committer-date prefilter; the exact author-date filter happens later.
        cmd.arg(format!("--since={}", t.to_rfc3339()));
    }
    let output = cmd
        .output()
        .map_err(|e| IngestError::SourceUnavailable(format!("cannot run git: {e}")))?;
    if !output.status.success() {
        let stderr = String::from_utf8_lossy(&output.stderr);
        // An empty repository has no HEAD yet.
        if stderr.contains("does not have any commits") {
            return Ok(FetchOutcome::default());
        }
        return Err(IngestError::SourceUnavailable(format!(
            "git log in {} failed: {}",
            path.display(),
            stderr.trim()
        )));
    }
    let text = String::from_utf8_lossy(&output.stdout);
    Ok(parse_log(&text, &repo_id(path)))
}

/// Repository id for a local clone: its directory name.
pub fn repo_id(path: &Path) -> String {
    let canonical = path.canonicalize().unwrap_or_else(|_| path.to_path_buf());
    canonical
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| canonical.display().to_string())
}

pub fn parse_log(text: &str, repo_id: &str) -> FetchOutcome {
    let mut outcome = FetchOutcome::default();
    for record in text.split(RECORD_SEP) {
        let record = record.trim_matches(|c: char| c == '\n' || c == '\r');
        if record.is_empty() {
            continue;
        }
        outcome.push(parse_record(record, repo_id));
    }
    outcome
}

fn parse_record(record: &str, repo_id: &str) -> Result<ActivityEvent, SchemaError> {
    let fields: Vec<&str> = record.split(FIELD_SEP).collect();
    let bad = |message: String| SchemaError {
        record: format!("git:{repo_id}:{}", fields.first().copied().unwrap_or("?")),
        message,
    };
    let [sha, name, email, date] = fields[..] else {
        return Err(bad(format!("expected 4 fields, got {}", fields.len())));
    };
    let timestamp = DateTime::parse_from_rfc3339(date)
        .map_err(|e| bad(format!("bad author date {date:?}: {e}")))?
        .with_timezone(&Utc);
    let mut actor = RawProfile::new(SourceKind::Git)
        .with_email(email)
        .with_full_name(name);
    if let Some(login) = noreply_login(email) {
        actor = actor.with_username(login);
    }
    Ok(ActivityEvent {
        event_id: ActivityEvent::make_id(SourceKind::Git, repo_id, EventKind::Commit, sha),
        source_kind: SourceKind::Git,
        kind: EventKind::Commit,
        actor,
        timestamp,
        repo_id: repo_id.to_string(),
        artifact_id: sha.to_string(),
        artifact_url: None,
        reactions: None,
    })
}

/// GitHub's private commit addresses carry the login:
/// `12345+alice@users.noreply.github.com` or `alice@users.noreply.github.com`.
pub fn noreply_login(email: &str) -> Option<&str> {
    let local = email
        .strip_suffix("@users.noreply.github.com")
        .filter(|l| !l.is_empty())?;
    Some(local.split_once('+').map_or(local, |(_, login)| login))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_records_and_reports_bad_dates() {
        let text = "abc\u{1f}Alice Liddell\u{1f}alice@corp.com\u{1f}2023-03-01T10:00:00+01:00\u{1e}\n\
                    def\u{1f}Bob\u{1f}bob@x.org\u{1f}yesterday\u{1e}\n";
        let outcome = parse_log(text, "demo");
        assert_eq!(outcome.events.len(), 1);
        assert_eq!(outcome.schema_errors.len(), 1);
        let e = &outcome.events[0];
        assert_eq!(e.event_id, "git:demo:commit:abc");
        assert_eq!(e.timestamp.to_rfc3339(), "2023-03-01T09:00:00+00:00");
        assert_eq!(e.actor.full_name.as_deref(), Some("Alice Liddell"));
        assert_eq!(e.actor.username, None);
    }

    #[test]
    fn noreply_addresses_yield_logins() {
        assert_eq!(noreply_login("123+alice@users.noreply.github.com"), Some("alice"));
        assert_eq!(noreply_login("bob@users.noreply.github.com"), Some("bob"));
        assert_eq!(noreply_login("bob@example.com"), None);
    }
}
