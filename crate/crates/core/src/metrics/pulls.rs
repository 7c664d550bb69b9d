use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{days_between, group_of, Dataset, FilterSpec};
use crate::demography::Gender;
use crate::identity::IdentityId;
use crate::ingest::EventKind;

/// Average and median waiting time of one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDuration {
    pub group: String,
    pub avg_days: f64,
    pub median_days: f64,
    pub count: u64,
}

fn summarize(samples: BTreeMap<String, Vec<f64>>) -> Vec<GroupDuration> {
    let mut rows: Vec<GroupDuration> = samples
        .into_iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(group, mut v)| {
            v.sort_by(f64::total_cmp);
            let n = v.len();
            let median = if n % 2 == 1 {
                v[n / 2]
            } else {
                (v[n / 2 - 1] + v[n / 2]) / 2.0
            };
            GroupDuration {
                group,
                avg_days: v.iter().sum::<f64>() / n as f64,
                median_days: median,
                count: n as u64,
            }
        })
        .collect();
    rows.sort_by(|a, b| b.avg_days.total_cmp(&a.avg_days).then_with(|| a.group.cmp(&b.group)));
    rows
}

/// Mean days from opening to merge per group over merged PRs opened in the
/// window, slowest group first.
pub fn time_to_merge(ds: &Dataset, filter: &FilterSpec) -> Vec<GroupDuration> {
    let mut samples: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (pr, _, group) in ds.authored_in(ds.pull_requests(), filter) {
        if let (Some(opened), Some(merged)) = (pr.opened_at, pr.merged_at) {
            samples.entry(group).or_default().push(days_between(opened, merged));
        }
    }
    summarize(samples)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FirstAttention {
    pub groups: Vec<GroupDuration>,
    /// Issues that never received a qualifying comment, per group.
    pub never_attended: BTreeMap<String, u64>,
}

/// Mean days from an issue being opened to its first comment by someone
/// other than the author who is not a bot.
pub fn time_to_first_attention(ds: &Dataset, filter: &FilterSpec) -> FirstAttention {
    let mut samples: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut never: BTreeMap<String, u64> = BTreeMap::new();
    for (issue, _, group) in ds.authored_in(ds.issues(), filter) {
        let opened = issue.opened_at.expect("authored_in yields opened artifacts");
        let first = issue
            .interactions
            .iter()
            .find(|i| i.kind == EventKind::IssueComment && ds.is_qualifying(issue, i));
        match first {
            Some(i) => samples.entry(group).or_default().push(days_between(opened, i.at)),
            None => *never.entry(group).or_default() += 1,
        }
    }
    FirstAttention {
        groups: summarize(samples),
        never_attended: never,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionRow {
    pub repo_id: String,
    pub artifact_id: String,
    pub artifact_url: Option<String>,
    pub created_at: DateTime<Utc>,
    pub author_id: IdentityId,
    pub author_name: String,
    pub author_affiliation: String,
    pub author_gender: Gender,
    pub group: String,
    pub age_days: f64,
}

/// Open or merged PRs opened in the window without any comment or review
/// from another human, oldest first.
pub fn prs_needing_attention(ds: &Dataset, filter: &FilterSpec) -> Vec<AttentionRow> {
    let mut rows: Vec<AttentionRow> = ds
        .authored_in(ds.pull_requests(), filter)
        .filter(|(pr, _, _)| {
            !pr.is_abandoned() && !pr.interactions.iter().any(|i| ds.is_qualifying(pr, i))
        })
        .map(|(pr, author, group)| {
            let created_at = pr.opened_at.expect("authored_in yields opened artifacts");
            AttentionRow {
                repo_id: pr.repo_id.clone(),
                artifact_id: pr.artifact_id.clone(),
                artifact_url: pr.url.clone(),
                created_at,
                author_id: author.identity_id.clone(),
                author_name: author.display_name.clone(),
                author_affiliation: author.affiliation.org_name.label().to_string(),
                author_gender: author.gender.gender.clone(),
                group,
                age_days: days_between(created_at, ds.as_of()).max(0.0),
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        b.age_days
            .total_cmp(&a.age_days)
            .then_with(|| a.repo_id.cmp(&b.repo_id))
            .then_with(|| a.artifact_id.cmp(&b.artifact_id))
    });
    rows
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrOverview {
    pub pr_count: u64,
    /// Human comments and reviews on those PRs.
    pub comment_count: u64,
    pub reaction_count: u64,
}

/// PR, comment and reaction totals per author group for PRs opened in the
/// window.
pub fn pr_overview(ds: &Dataset, filter: &FilterSpec) -> BTreeMap<String, PrOverview> {
    let mut out: BTreeMap<String, PrOverview> = BTreeMap::new();
    for (pr, _, group) in ds.authored_in(ds.pull_requests(), filter) {
        let entry = out.entry(group).or_default();
        entry.pr_count += 1;
        entry.comment_count += pr.interactions.iter().filter(|i| ds.is_human(&i.identity)).count() as u64;
        entry.reaction_count += pr.reactions;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributorShare {
    pub count: u64,
    pub percentage: f64,
}

/// Distinct contributors active in the window per group, with their share.
pub fn contributor_totals(ds: &Dataset, filter: &FilterSpec) -> BTreeMap<String, ContributorShare> {
    let mut seen: BTreeSet<&IdentityId> = BTreeSet::new();
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for (event, who) in ds.events() {
        if who.is_bot || !filter.in_window(event.timestamp) || !seen.insert(&who.identity_id) {
            continue;
        }
        let group = group_of(who, filter.lens);
        if filter.accepts_group(&group) {
            *counts.entry(group).or_default() += 1;
        }
    }
    let total: u64 = counts.values().sum();
    counts
        .into_iter()
        .map(|(g, count)| {
            let percentage = 100.0 * count as f64 / total as f64;
            (g, ContributorShare { count, percentage })
        })
        .collect()
}
