//! GitHub REST connector.
//!
//! Reads issues (which include pull requests), issue and PR conversation
//! comments, review comments and commits, then fills in display names from
//! each author's public profile. Every list endpoint is paginated through its
//! `Link` header and narrowed with `since` when one is given.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde_json::Value;

use crate::http::{next_link, HttpClient, HttpError};
use crate::ingest::{
    ActivityEvent, EventKind, FetchOutcome, IngestError, RawProfile, SchemaError, SourceConfig,
    SourceKind, DEFAULT_GITHUB_API,
};

const PER_PAGE: u32 = 100;

pub struct GithubClient {
    http: HttpClient,
    api_base: String,
    repo: String,
}

impl GithubClient {
    pub fn from_config(config: &SourceConfig) -> Result<Self, IngestError> {
        let repo = config.locator.trim().trim_matches('/').to_string();
        if repo.split('/').count() != 2 {
            return Err(IngestError::Config(format!(
                "github locator must be owner/name, got {:?}",
                config.locator
            )));
        }
        let mut headers = vec![
            ("Accept".to_string(), "application/vnd.github+json".to_string()),
            ("X-GitHub-Api-Version".to_string(), "2022-11-28".to_string()),
        ];
        if let Some(token) = config.resolve_token()? {
            headers.push(("Authorization".to_string(), format!("Bearer {token}")));
        }
        let api_base = config
            .api_base
            .clone()
            .unwrap_or_else(|| DEFAULT_GITHUB_API.to_string())
            .trim_end_matches('/')
            .to_string();
        Ok(Self {
            http: HttpClient::new(headers),
            api_base,
            repo,
        })
    }

    /// Overrides the retry schedule; tests use a zero backoff.
    pub fn with_retry(mut self, max_attempts: u32, backoff: std::time::Duration) -> Self {
        self.http.max_attempts = max_attempts.max(1);
        self.http.backoff = backoff;
        self
    }

    pub fn fetch(&self, since: Option<DateTime<Utc>>) -> Result<FetchOutcome, IngestError> {
        let mut outcome = FetchOutcome::default();
        let since_param = since
            .map(|t| format!("&since={}", t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)))
            .unwrap_or_default();
        let repo = &self.repo;

        for item in self.list(&format!("/repos/{repo}/issues?state=all&per_page={PER_PAGE}{since_param}"))? {
            match self.issue_events(&item) {
                Ok(events) => outcome.events.extend(events),
                Err(err) => outcome.schema_errors.push(err),
            }
        }
        for item in self.list(&format!("/repos/{repo}/issues/comments?per_page={PER_PAGE}{since_param}"))? {
            outcome.push(self.comment_event(&item, CommentSource::Conversation));
        }
        for item in self.list(&format!("/repos/{repo}/pulls/comments?per_page={PER_PAGE}{since_param}"))? {
            outcome.push(self.comment_event(&item, CommentSource::Review));
        }
        for item in self.list(&format!("/repos/{repo}/commits?per_page={PER_PAGE}{since_param}"))? {
            outcome.push(self.commit_event(&item));
        }

        self.fill_profiles(&mut outcome.events)?;
        Ok(outcome)
    }

    fn list(&self, path: &str) -> Result<Vec<Value>, IngestError> {
        let mut url = format!("{}{path}", self.api_base);
        let mut items = Vec::new();
        loop {
            let page = self.http.get_json(&url).map_err(|e| map_http(e, &url))?;
            match page.body {
                Value::Array(batch) => items.extend(batch),
                other => {
                    return Err(IngestError::SourceUnavailable(format!(
                        "{url}: expected a JSON array, got {}",
                        kind_of(&other)
                    )))
                }
            }
            match page.link.as_deref().and_then(next_link) {
                Some(next) => url = next,
                None => break,
            }
        }
        Ok(items)
    }

    fn issue_events(&self, item: &Value) -> Result<Vec<ActivityEvent>, SchemaError> {
        let number = item.get("number").and_then(Value::as_u64);
        let bad = |message: &str| SchemaError {
            record: format!(
                "github:{}:issue:{}",
                self.repo,
                number.map_or("?".to_string(), |n| n.to_string())
            ),
            message: message.to_string(),
        };
        let number = number.ok_or_else(|| bad("missing number"))?.to_string();
        let created = timestamp(item, "created_at").ok_or_else(|| bad("missing or invalid created_at"))?;
        let actor = user_profile(item.get("user")).ok_or_else(|| bad("missing user.login"))?;
        let url = item.get("html_url").and_then(Value::as_str).map(str::to_string);
        let reactions = item
            .pointer("/reactions/total_count")
            .and_then(Value::as_u64);

        let pull = item.get("pull_request").filter(|v| !v.is_null());
        let (opened, merged_kind, closed_kind) = if pull.is_some() {
            (EventKind::PrOpened, Some(EventKind::PrMerged), EventKind::PrClosed)
        } else {
            (EventKind::IssueOpened, None, EventKind::IssueClosed)
        };

        let event = |kind: EventKind, at: DateTime<Utc>, reactions: Option<u64>| ActivityEvent {
            event_id: ActivityEvent::make_id(SourceKind::Github, &self.repo, kind, &number),
            source_kind: SourceKind::Github,
            kind,
            // List endpoints do not name whoever merged or closed; the
            // author stands in for those events.
            actor: actor.clone(),
            timestamp: at,
            repo_id: self.repo.clone(),
            artifact_id: number.clone(),
            artifact_url: url.clone(),
            reactions,
        };

        let mut events = vec![event(opened, created, reactions)];
        let merged_at = pull.and_then(|p| timestamp(p, "merged_at"));
        match (merged_kind, merged_at) {
            (Some(kind), Some(at)) => events.push(event(kind, at, None)),
            _ => {
                if let Some(at) = timestamp(item, "closed_at") {
                    events.push(event(closed_kind, at, None));
                }
            }
        }
        Ok(events)
    }

    fn comment_event(&self, item: &Value, source: CommentSource) -> Result<ActivityEvent, SchemaError> {
        let id = item.get("id").and_then(Value::as_u64);
        let bad = |message: &str| SchemaError {
            record: format!(
                "github:{}:comment:{}",
                self.repo,
                id.map_or("?".to_string(), |n| n.to_string())
            ),
            message: message.to_string(),
        };
        let id = id.ok_or_else(|| bad("missing id"))?;
        let at = timestamp(item, "created_at").ok_or_else(|| bad("missing or invalid created_at"))?;
        let actor = user_profile(item.get("user")).ok_or_else(|| bad("missing user.login"))?;
        let html_url = item.get("html_url").and_then(Value::as_str);
        let (parent_key, kind) = match source {
            CommentSource::Review => ("pull_request_url", EventKind::PrReview),
            CommentSource::Conversation => {
                let on_pr = html_url.is_some_and(|u| u.contains("/pull/"));
                ("issue_url", if on_pr { EventKind::PrComment } else { EventKind::IssueComment })
            }
        };
        let parent = item
            .get(parent_key)
            .and_then(Value::as_str)
            .and_then(|u| u.rsplit('/').next())
            .filter(|n| n.chars().all(|c| c.is_ascii_digit()) && !n.is_empty())
            .ok_or_else(|| bad("cannot determine parent issue or PR number"))?;
        Ok(ActivityEvent {
            event_id: ActivityEvent::make_id(SourceKind::Github, &self.repo, kind, &id.to_string()),
            source_kind: SourceKind::Github,
            kind,
            actor,
            timestamp: at,
            repo_id: self.repo.clone(),
            artifact_id: parent.to_string(),
            artifact_url: html_url.map(str::to_string),
            reactions: item.pointer("/reactions/total_count").and_then(Value::as_u64),
        })
    }

    fn commit_event(&self, item: &Value) -> Result<ActivityEvent, SchemaError> {
        let sha = item.get("sha").and_then(Value::as_str);
        let bad = |message: &str| SchemaError {
            record: format!("github:{}:commit:{}", self.repo, sha.unwrap_or("?")),
            message: message.to_string(),
        };
        let sha = sha.ok_or_else(|| bad("missing sha"))?;
        let commit_author = item.pointer("/commit/author").ok_or_else(|| bad("missing commit.author"))?;
        let at = timestamp(commit_author, "date").ok_or_else(|| bad("missing or invalid commit date"))?;
        let mut actor = user_profile(item.get("author")).unwrap_or_else(|| RawProfile::new(SourceKind::Github));
        if let Some(email) = commit_author.get("email").and_then(Value::as_str) {
            actor.email = Some(email.to_string());
        }
        if let Some(name) = commit_author.get("name").and_then(Value::as_str) {
            actor.full_name = Some(name.to_string());
        }
        Ok(ActivityEvent {
            event_id: ActivityEvent::make_id(SourceKind::Github, &self.repo, EventKind::Commit, sha),
            source_kind: SourceKind::Github,
            kind: EventKind::Commit,
            actor,
            timestamp: at,
            repo_id: self.repo.clone(),
            artifact_id: sha.to_string(),
            artifact_url: item.get("html_url").and_then(Value::as_str).map(str::to_string),
            reactions: None,
        })
    }

    /// Copies public name and email from `/users/{login}` onto every event by
    /// that login. Lookups that fail with anything but an auth error are
    /// skipped.
    fn fill_profiles(&self, events: &mut [ActivityEvent]) -> Result<(), IngestError> {
        let logins: BTreeSet<String> = events
            .iter()
            .filter_map(|e| e.actor.username.clone())
            .collect();
        let mut found: BTreeMap<String, (Option<String>, Option<String>)> = BTreeMap::new();
        for login in logins {
            let url = format!("{}/users/{login}", self.api_base);
            match self.http.get_json(&url) {
                Ok(page) => {
                    let field = |k: &str| {
                        page.body
                            .get(k)
                            .and_then(Value::as_str)
                            .filter(|s| !s.is_empty())
                            .map(str::to_string)
                    };
                    found.insert(login, (field("name"), field("email")));
                }
                Err(e) => match map_http(e, &url) {
                    err @ IngestError::Auth(_) => return Err(err),
                    _ => continue,
                },
            }
        }
        for event in events {
            let Some((name, email)) = event.actor.username.as_ref().and_then(|u| found.get(u)) else {
                continue;
            };
            if event.actor.full_name.is_none() {
                event.actor.full_name = name.clone();
            }
            if event.actor.email.is_none() {
                event.actor.email = email.clone();
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum CommentSource {
    Conversation,
    Review,
}

fn user_profile(user: Option<&Value>) -> Option<RawProfile> {
    let user = user?;
    let login = user.get("login").and_then(Value::as_str)?;
    let mut profile = RawProfile::new(SourceKind::Github).with_username(login);
    if let Some(url) = user.get("html_url").and_then(Value::as_str) {
        profile = profile.with_profile_url(url);
    }
    Some(profile)
}

fn timestamp(record: &Value, key: &str) -> Option<DateTime<Utc>> {
    let raw = record.get(key)?.as_str()?;
    DateTime::parse_from_rfc3339(raw)
        .ok()
        .map(|t| t.with_timezone(&Utc))
}

fn kind_of(value: &Value) -> &'static str {
    match value {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

fn map_http(err: HttpError, url: &str) -> IngestError {
    match err {
        HttpError::Status { status: 401, body } => IngestError::Auth(format!("{url}: {body}")),
        HttpError::Status { status: 403, body } if !body.to_lowercase().contains("rate limit") => {
            IngestError::Auth(format!("{url}: {body}"))
        }
        other => IngestError::SourceUnavailable(format!("{url}: {other}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn client() -> GithubClient {
        GithubClient::from_config(&SourceConfig::new(SourceKind::Github, "apache/demo")).unwrap()
    }

    #[test]
    fn merged_pr_yields_open_and_merge() {
        let item = json!({
            "number": 7, "created_at": "2023-01-01T00:00:00Z", "closed_at": "2023-01-03T00:00:00Z",
            "html_url": "https://github.com/apache/demo/pull/7",
            "user": {"login": "alice"},
            "reactions": {"total_count": 4},
            "pull_request": {"merged_at": "2023-01-03T00:00:00Z"}
        });
        let events = client().issue_events(&item).unwrap();
        let kinds: Vec<_> = events.iter().map(|e| e.kind).collect();
        assert_eq!(kinds, [EventKind::PrOpened, EventKind::PrMerged]);
        assert_eq!(events[0].reactions, Some(4));
        assert_eq!(events[0].event_id, "github:apache/demo:pr_opened:7");
    }

    #[test]
    fn closed_issue() {
        let item = json!({
            "number": 8, "created_at": "2023-01-01T00:00:00Z", "closed_at": "2023-01-02T00:00:00Z",
            "user": {"login": "bob"}
        });
        let kinds: Vec<_> = client().issue_events(&item).unwrap().iter().map(|e| e.kind).collect();
        assert_eq!(kinds, [EventKind::IssueOpened, EventKind::IssueClosed]);
    }

    #[test]
    fn comment_kind_follows_html_url() {
        let item = json!({
            "id": 99, "created_at": "2023-01-02T00:00:00Z", "user": {"login": "carol"},
            "html_url": "https://github.com/apache/demo/pull/7#issuecomment-99",
            "issue_url": "https://api.github.com/repos/apache/demo/issues/7"
        });
        let event = client().comment_event(&item, CommentSource::Conversation).unwrap();
        assert_eq!(event.kind, EventKind::PrComment);
        assert_eq!(event.artifact_id, "7");
    }

    #[test]
    fn malformed_issue_is_schema_error() {
        let item = json!({"number": 3, "user": {"login": "x"}});
        let err = client().issue_events(&item).unwrap_err();
        assert_eq!(err.record, "github:apache/demo:issue:3");
    }

    #[test]
    fn locator_must_be_owner_and_name() {
        let cfg = SourceConfig::new(SourceKind::Github, "justaname");
        assert!(matches!(GithubClient::from_config(&cfg), Err(IngestError::Config(_))));
    }
}
