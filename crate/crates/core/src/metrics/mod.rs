//! Community metrics over an enriched snapshot.
//!
//! Every metric is a pure function of a [`Dataset`] (events plus resolved
//! identities) and a [`FilterSpec`]. Bots never count. Contributors whose
//! gender or affiliation is unknown form their own `unknown` / `Unknown`
//! group rather than being dropped.

mod filter;
mod profile;
mod pulls;
mod series;
mod turnover;

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::identity::{Identity, IdentityId, IdentityRegistry, ProfileKey};
use crate::ingest::{ActivityEvent, EventKind, EventSnapshot};

pub use filter::{FilterSpec, Lens, TimeRange};
pub use profile::{contributor_profile, ContributorProfile};
pub use pulls::{
    contributor_totals, pr_overview, prs_needing_attention, time_to_first_attention, time_to_merge,
    AttentionRow, ContributorShare, FirstAttention, GroupDuration, PrOverview,
};
pub use series::{
    contribution_series, newcomers_by_month, retention_trend, ContributionKind, Measure,
    MetricSeries, SeriesBucket,
};
pub use turnover::{
    activity_state, departures, turnover, ActivityState, ContributorRow, Departures, DrillDown,
    TurnoverCounts, TurnoverMonth, TurnoverSnapshot, TurnoverTotals, LEFT_AFTER_MONTHS,
    MIGHT_BE_LEAVING_AFTER_MONTHS,
};

/// Label used for every contributor when no lens is applied.
pub const ALL_GROUP: &str = "all";

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("invalid filter: {0}")]
    InvalidFilter(String),
    #[error("event {event_id} by {profile} has no identity; re-run enrichment")]
    UnresolvedActor { event_id: String, profile: ProfileKey },
}

/// Label of `identity` under `lens`.
pub fn group_of(identity: &Identity, lens: Lens) -> String {
    match lens {
        Lens::Gender => identity.gender.gender.as_str().to_string(),
        Lens::Affiliation => identity.affiliation.org_name.label().to_string(),
        Lens::None => ALL_GROUP.to_string(),
    }
}

/// Fractional days from `from` to `to`.
pub fn days_between(from: DateTime<Utc>, to: DateTime<Utc>) -> f64 {
    (to - from).num_milliseconds() as f64 / 86_400_000.0
}

/// A pull request or issue reassembled from its events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub repo_id: String,
    pub artifact_id: String,
    pub url: Option<String>,
    pub author: Option<IdentityId>,
    pub opened_at: Option<DateTime<Utc>>,
    pub merged_at: Option<DateTime<Utc>>,
    pub closed_at: Option<DateTime<Utc>>,
    pub reactions: u64,
    /// Comments and reviews in timestamp order.
    pub interactions: Vec<Interaction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub identity: IdentityId,
    pub kind: EventKind,
    pub at: DateTime<Utc>,
}

impl Artifact {
    fn new(event: &ActivityEvent) -> Self {
        Self {
            repo_id: event.repo_id.clone(),
            artifact_id: event.artifact_id.clone(),
            url: None,
            author: None,
            opened_at: None,
            merged_at: None,
            closed_at: None,
            reactions: 0,
            interactions: Vec::new(),
        }
    }

    /// Closed without being merged.
    pub fn is_abandoned(&self) -> bool {
        self.closed_at.is_some() && self.merged_at.is_none()
    }
}

/// Events and identities bundled for metric evaluation, with per-identity
/// timelines and reassembled PRs and issues.
#[derive(Debug, Clone)]
pub struct Dataset {
    snapshot: EventSnapshot,
    registry: IdentityRegistry,
    actors: Vec<IdentityId>,
    timelines: BTreeMap<IdentityId, Vec<DateTime<Utc>>>,
    pulls: Vec<Artifact>,
    issues: Vec<Artifact>,
}

impl Dataset {
    /// Fails if some event's actor is missing from `registry`.
    pub fn new(snapshot: EventSnapshot, registry: IdentityRegistry) -> Result<Self, MetricsError> {
        let mut actors = Vec::with_capacity(snapshot.len());
        let mut timelines: BTreeMap<IdentityId, Vec<DateTime<Utc>>> = BTreeMap::new();
        for event in snapshot.events() {
            let key = ProfileKey::of(&event.actor);
            let id = registry
                .id_for_key(&key)
                .cloned()
                .ok_or_else(|| MetricsError::UnresolvedActor {
                    event_id: event.event_id.clone(),
                    profile: key,
                })?;
            timelines.entry(id.clone()).or_default().push(event.timestamp);
            actors.push(id);
        }

        let mut pulls: BTreeMap<(String, String), Artifact> = BTreeMap::new();
        let mut issues: BTreeMap<(String, String), Artifact> = BTreeMap::new();
        for (event, actor) in snapshot.events().iter().zip(&actors) {
            let table = if event.kind.is_pull_request() {
                &mut pulls
            } else if event.kind.is_issue() {
                &mut issues
            } else {
                continue;
            };
            let artifact = table
                .entry((event.repo_id.clone(), event.artifact_id.clone()))
                .or_insert_with(|| Artifact::new(event));
            if artifact.url.is_none() || matches!(event.kind, EventKind::PrOpened | EventKind::IssueOpened) {
                if let Some(url) = &event.artifact_url {
                    artifact.url = Some(url.clone());
                }
            }
            match event.kind {
                EventKind::PrOpened | EventKind::IssueOpened => {
                    // Events are sorted, so the earliest open event wins.
                    if artifact.opened_at.is_none() {
                        artifact.opened_at = Some(event.timestamp);
                        artifact.author = Some(actor.clone());
                        artifact.reactions = event.reactions.unwrap_or(0);
                    }
                }
                EventKind::PrMerged => {
                    artifact.merged_at.get_or_insert(event.timestamp);
                }
                EventKind::PrClosed | EventKind::IssueClosed => {
                    artifact.closed_at.get_or_insert(event.timestamp);
                }
                EventKind::PrComment | EventKind::PrReview | EventKind::IssueComment => {
                    artifact.interactions.push(Interaction {
                        identity: actor.clone(),
                        kind: event.kind,
                        at: event.timestamp,
                    });
                }
                _ => {}
            }
        }

        Ok(Self {
            snapshot,
            registry,
            actors,
            timelines,
            pulls: pulls.into_values().collect(),
            issues: issues.into_values().collect(),
        })
    }

    pub fn snapshot(&self) -> &EventSnapshot {
        &self.snapshot
    }

    pub fn registry(&self) -> &IdentityRegistry {
        &self.registry
    }

    pub fn as_of(&self) -> DateTime<Utc> {
        self.snapshot.as_of()
    }

    /// Events paired with the identity of their actor.
    pub fn events(&self) -> impl Iterator<Item = (&ActivityEvent, &Identity)> {
        self.snapshot.events().iter().zip(&self.actors).map(|(e, id)| {
            (e, self.registry.get(id).expect("actors resolved at construction"))
        })
    }

    pub fn identity(&self, id: &IdentityId) -> Option<&Identity> {
        self.registry.get(id)
    }

    /// Non-bot identities with their sorted event timestamps.
    pub(crate) fn human_timelines(&self) -> impl Iterator<Item = (&Identity, &[DateTime<Utc>])> {
        self.timelines.iter().filter_map(|(id, times)| {
            let identity = self.registry.get(id)?;
            (!identity.is_bot).then_some((identity, times.as_slice()))
        })
    }

    pub fn pull_requests(&self) -> &[Artifact] {
        &self.pulls
    }

    pub fn issues(&self) -> &[Artifact] {
        &self.issues
    }

    pub(crate) fn is_human(&self, id: &IdentityId) -> bool {
        self.registry.get(id).is_some_and(|i| !i.is_bot)
    }

    /// A comment or review by someone other than the author who is not a bot.
    pub fn is_qualifying(&self, artifact: &Artifact, interaction: &Interaction) -> bool {
        artifact.author.as_ref() != Some(&interaction.identity) && self.is_human(&interaction.identity)
    }

    /// Human-authored artifacts opened inside the filter window whose author
    /// passes the group filter.
    pub(crate) fn authored_in<'a>(
        &'a self,
        artifacts: &'a [Artifact],
        filter: &'a FilterSpec,
    ) -> impl Iterator<Item = (&'a Artifact, &'a Identity, String)> + 'a {
        artifacts.iter().filter_map(move |a| {
            let opened = a.opened_at?;
            let author = self.registry.get(a.author.as_ref()?)?;
            if author.is_bot || !filter.in_window(opened) {
                return None;
            }
            let group = group_of(author, filter.lens);
            filter.accepts_group(&group).then_some((a, author, group))
        })
    }
}
