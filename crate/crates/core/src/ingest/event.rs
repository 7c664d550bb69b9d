use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Github,
    Git,
    QaForum,
    Fixture,
}

impl SourceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::Github => "github",
            SourceKind::Git => "git",
            SourceKind::QaForum => "qa_forum",
            SourceKind::Fixture => "fixture",
        }
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    PrOpened,
    PrMerged,
    PrClosed,
    PrComment,
    PrReview,
    IssueOpened,
    IssueComment,
    IssueClosed,
    Commit,
    QaQuestion,
    QaAnswer,
}

impl EventKind {
    pub const ALL: [EventKind; 11] = [
        EventKind::PrOpened,
        EventKind::PrMerged,
        EventKind::PrClosed,
        EventKind::PrComment,
        EventKind::PrReview,
        EventKind::IssueOpened,
        EventKind::IssueComment,
        EventKind::IssueClosed,
        EventKind::Commit,
        EventKind::QaQuestion,
        EventKind::QaAnswer,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::PrOpened => "pr_opened",
            EventKind::PrMerged => "pr_merged",
            EventKind::PrClosed => "pr_closed",
            EventKind::PrComment => "pr_comment",
            EventKind::PrReview => "pr_review",
            EventKind::IssueOpened => "issue_opened",
            EventKind::IssueComment => "issue_comment",
            EventKind::IssueClosed => "issue_closed",
            EventKind::Commit => "commit",
            EventKind::QaQuestion => "qa_question",
            EventKind::QaAnswer => "qa_answer",
        }
    }

    pub fn is_pull_request(self) -> bool {
        matches!(
            self,
            EventKind::PrOpened
                | EventKind::PrMerged
                | EventKind::PrClosed
                | EventKind::PrComment
                | EventKind::PrReview
        )
    }

    pub fn is_issue(self) -> bool {
        matches!(
            self,
            EventKind::IssueOpened | EventKind::IssueComment | EventKind::IssueClosed
        )
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Profile attributes of the account that produced an event, as reported by
/// its source.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RawProfile {
    pub source_kind: SourceKind,
    pub username: Option<String>,
    pub email: Option<String>,
    pub full_name: Option<String>,
    pub profile_url: Option<String>,
}

impl RawProfile {
    pub fn new(source_kind: SourceKind) -> Self {
        Self {
            source_kind,
            username: None,
            email: None,
            full_name: None,
            profile_url: None,
        }
    }

    pub fn with_username(mut self, username: impl Into<String>) -> Self {
        self.username = Some(username.into());
        self
    }

    pub fn with_email(mut self, email: impl Into<String>) -> Self {
        self.email = Some(email.into());
        self
    }

    pub fn with_full_name(mut self, name: impl Into<String>) -> Self {
        self.full_name = Some(name.into());
        self
    }

    pub fn with_profile_url(mut self, url: impl Into<String>) -> Self {
        self.profile_url = Some(url.into());
        self
    }

    /// Empty strings are treated as absent.
    pub fn normalized(mut self) -> Self {
        for field in [
            &mut self.username,
            &mut self.email,
            &mut self.full_name,
            &mut self.profile_url,
        ] {
            if let Some(value) = field.take() {
                let trimmed = value.trim();
                if !trimmed.is_empty() {
                    *field = Some(trimmed.to_string());
                }
            }
        }
        self
    }

    pub fn is_valid(&self) -> bool {
        self.username.as_deref().is_some_and(|u| !u.trim().is_empty())
            || self.email.as_deref().is_some_and(|e| !e.trim().is_empty())
    }
}

/// One normalized contribution or interaction.
///
/// Serialized as a single JSON object with snake_case keys; this is also the
/// line format of the event log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityEvent {
    pub event_id: String,
    pub source_kind: SourceKind,
    pub kind: EventKind,
    pub actor: RawProfile,
    pub timestamp: DateTime<Utc>,
    pub repo_id: String,
    pub artifact_id: String,
    pub artifact_url: Option<String>,
    pub reactions: Option<u64>,
}

impl ActivityEvent {
    /// Conventional id: `source:repo:kind:native_id`.
    pub fn make_id(source: SourceKind, repo_id: &str, kind: EventKind, native_id: &str) -> String {
        format!("{source}:{repo_id}:{kind}:{native_id}")
    }

    /// Ordering used everywhere events are listed: timestamp, then id.
    pub fn sort_key(&self) -> (DateTime<Utc>, &str) {
        (self.timestamp, self.event_id.as_str())
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.event_id.trim().is_empty() {
            return Err("empty event_id".into());
        }
        if !self.actor.is_valid() {
            return Err(format!(
                "event {}: actor has neither username nor email",
                self.event_id
            ));
        }
        if self.repo_id.trim().is_empty() || self.artifact_id.trim().is_empty() {
            return Err(format!("event {}: empty repo_id or artifact_id", self.event_id));
        }
        Ok(())
    }
}

pub fn sort_events(events: &mut [ActivityEvent]) {
    events.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

/// Events visible at one point in time, ordered by timestamp then event id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSnapshot {
    events: Vec<ActivityEvent>,
    as_of: DateTime<Utc>,
}

impl EventSnapshot {
    /// Builds a snapshot, sorting `events` and dropping those after `as_of`.
    /// Without `as_of` the latest event timestamp is used, or the Unix epoch
    /// for an empty set.
    pub fn new(mut events: Vec<ActivityEvent>, as_of: Option<DateTime<Utc>>) -> Self {
        if let Some(cutoff) = as_of {
            events.retain(|e| e.timestamp <= cutoff);
        }
        sort_events(&mut events);
        events.dedup_by(|a, b| a.event_id == b.event_id);
        let as_of = as_of
            .or_else(|| events.last().map(|e| e.timestamp))
            .unwrap_or(DateTime::UNIX_EPOCH);
        Self { events, as_of }
    }

    pub fn events(&self) -> &[ActivityEvent] {
        &self.events
    }

    pub fn as_of(&self) -> DateTime<Utc> {
        self.as_of
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}
