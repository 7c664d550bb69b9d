use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{activity_state, group_of, ActivityState, Dataset, FilterSpec, Lens};
use crate::identity::{Identity, IdentityId};

/// One contributor's record and activity, as shown when drilling into a
/// single identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributorProfile {
    pub as_of: DateTime<Utc>,
    pub identity: Identity,
    pub gender_group: String,
    pub affiliation_group: String,
    /// Events inside the window and not after `as_of`.
    pub contribution_count: u64,
    pub by_kind: BTreeMap<String, u64>,
    pub first_contribution: Option<DateTime<Utc>>,
    pub last_contribution: Option<DateTime<Utc>>,
    /// Absent for bots and for identities with no counted events.
    pub state: Option<ActivityState>,
}

/// `None` when the id is unknown. `as_of` defaults like turnover: window end,
/// then snapshot as-of. Lens and group filter are ignored.
pub fn contributor_profile(
    ds: &Dataset,
    id: &IdentityId,
    as_of: Option<DateTime<Utc>>,
    filter: &FilterSpec,
) -> Option<ContributorProfile> {
    let identity = ds.identity(id)?;
    let as_of = as_of.or(filter.end()).unwrap_or_else(|| ds.as_of());
    let mut by_kind: BTreeMap<String, u64> = BTreeMap::new();
    let mut first = None;
    let mut last = None;
    let mut count = 0;
    for (event, who) in ds.events() {
        if who.identity_id != *id || event.timestamp > as_of || !filter.in_window(event.timestamp) {
            continue;
        }
        count += 1;
        *by_kind.entry(event.kind.to_string()).or_default() += 1;
        first.get_or_insert(event.timestamp);
        last = Some(event.timestamp);
    }
    let state = match last {
        Some(t) if !identity.is_bot => Some(activity_state(t, as_of)),
        _ => None,
    };
    Some(ContributorProfile {
        as_of,
        identity: identity.clone(),
        gender_group: group_of(identity, Lens::Gender),
        affiliation_group: group_of(identity, Lens::Affiliation),
        contribution_count: count,
        by_kind,
        first_contribution: first,
        last_contribution: last,
        state,
    })
}
