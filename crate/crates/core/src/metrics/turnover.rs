use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use super::{group_of, Dataset, FilterSpec, Lens};
use crate::demography::Gender;
use crate::identity::{Identity, IdentityId};
use crate::month::{months_before, Month};

/// Inactive for at least this many months at `as_of`: left.
pub const LEFT_AFTER_MONTHS: u32 = 6;
/// Inactive for at least this many months, but not yet left.
pub const MIGHT_BE_LEAVING_AFTER_MONTHS: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivityState {
    Active,
    MightBeLeaving,
    Left,
}

/// State of a contributor last seen at `last`, judged at `as_of`.
pub fn activity_state(last: DateTime<Utc>, as_of: DateTime<Utc>) -> ActivityState {
    if last <= months_before(as_of, LEFT_AFTER_MONTHS) {
        ActivityState::Left
    } else if last <= months_before(as_of, MIGHT_BE_LEAVING_AFTER_MONTHS) {
        ActivityState::MightBeLeaving
    } else {
        ActivityState::Active
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributorRow {
    pub identity_id: IdentityId,
    pub display_name: String,
    pub group: String,
    pub contribution_count: u64,
    pub affiliation: String,
    pub gender: Gender,
    pub last_contribution: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Departures {
    pub as_of: DateTime<Utc>,
    pub left: Vec<ContributorRow>,
    pub might_be_leaving: Vec<ContributorRow>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TurnoverCounts {
    pub newcomers: u64,
    pub left: u64,
    pub might_be_leaving: u64,
    /// Share of this month's newcomers seen again in a later month; absent
    /// when the month had no newcomers.
    pub retention_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnoverMonth {
    pub month: Month,
    pub groups: BTreeMap<String, TurnoverCounts>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TurnoverTotals {
    pub newcomers: u64,
    pub active: u64,
    pub might_be_leaving: u64,
    pub left: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DrillDown {
    pub newcomers: Vec<ContributorRow>,
    pub might_be_leaving: Vec<ContributorRow>,
    pub left: Vec<ContributorRow>,
}

/// Monthly newcomer, leaving and left figures per group. States in month
/// `m` are judged at the end of `m` (or at `as_of` for the last month), so
/// the final month's counts match the drill-down lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnoverSnapshot {
    pub as_of: DateTime<Utc>,
    pub lens: Lens,
    pub months: Vec<TurnoverMonth>,
    pub totals: BTreeMap<String, TurnoverTotals>,
    pub drill_down: DrillDown,
}

/// A contributor's activity as seen from one evaluation instant.
struct Standing<'a> {
    identity: &'a Identity,
    group: String,
    count: u64,
    last: DateTime<Utc>,
}

/// Contributors in the group filter with at least one event inside the
/// window and not after `at`.
fn standings<'a>(ds: &'a Dataset, filter: &FilterSpec, at: DateTime<Utc>) -> Vec<Standing<'a>> {
    ds.human_timelines()
        .filter_map(|(identity, times)| {
            let upto = times.partition_point(|t| *t <= at);
            let seen = &times[..upto];
            let count = seen.iter().filter(|t| filter.in_window(**t)).count() as u64;
            if count == 0 {
                return None;
            }
            let group = group_of(identity, filter.lens);
            filter.accepts_group(&group).then(|| Standing {
                identity,
                group,
                count,
                last: seen[upto - 1],
            })
        })
        .collect()
}

fn row(s: &Standing) -> ContributorRow {
    ContributorRow {
        identity_id: s.identity.identity_id.clone(),
        display_name: s.identity.display_name.clone(),
        group: s.group.clone(),
        contribution_count: s.count,
        affiliation: s.identity.affiliation.org_name.label().to_string(),
        gender: s.identity.gender.gender.clone(),
        last_contribution: s.last,
    }
}

fn sort_rows(rows: &mut [ContributorRow]) {
    rows.sort_by(|a, b| {
        b.contribution_count
            .cmp(&a.contribution_count)
            .then_with(|| a.display_name.cmp(&b.display_name))
            .then_with(|| a.identity_id.cmp(&b.identity_id))
    });
}

/// Contributors who left or might be leaving at `as_of`, most active first.
pub fn departures(ds: &Dataset, as_of: DateTime<Utc>, filter: &FilterSpec) -> Departures {
    let mut left = Vec::new();
    let mut leaving = Vec::new();
    for s in standings(ds, filter, as_of) {
        match activity_state(s.last, as_of) {
            ActivityState::Left => left.push(row(&s)),
            ActivityState::MightBeLeaving => leaving.push(row(&s)),
            ActivityState::Active => {}
        }
    }
    sort_rows(&mut left);
    sort_rows(&mut leaving);
    Departures {
        as_of,
        left,
        might_be_leaving: leaving,
    }
}

/// Full turnover view. `as_of` defaults to the end of the filter window,
/// then to the snapshot's as-of instant.
pub fn turnover(ds: &Dataset, as_of: Option<DateTime<Utc>>, filter: &FilterSpec) -> TurnoverSnapshot {
    let as_of = as_of.or(filter.end()).unwrap_or_else(|| ds.as_of());

    // Newcomers and their cohort retention.
    let mut newcomer_rows = Vec::new();
    let mut cohorts: BTreeMap<(Month, String), (u64, u64)> = BTreeMap::new();
    for (identity, times) in ds.human_timelines() {
        let first = times[0];
        if first > as_of || !filter.in_window(first) {
            continue;
        }
        let group = group_of(identity, filter.lens);
        if !filter.accepts_group(&group) {
            continue;
        }
        let cohort = Month::of(first);
        let returned = times.iter().any(|t| Month::of(*t) > cohort);
        let entry = cohorts.entry((cohort, group.clone())).or_default();
        entry.0 += 1;
        entry.1 += u64::from(returned);
        let upto = times.partition_point(|t| *t <= as_of);
        newcomer_rows.push(row(&Standing {
            identity,
            count: times[..upto].iter().filter(|t| filter.in_window(**t)).count() as u64,
            last: times[upto - 1],
            group,
        }));
    }
    sort_rows(&mut newcomer_rows);

    let first_in_window = ds
        .human_timelines()
        .flat_map(|(_, times)| times.iter().copied())
        .filter(|t| filter.in_window(*t) && *t <= as_of)
        .min();

    let mut months = Vec::new();
    if let Some(first) = first_in_window {
        for month in Month::of(first).through(Month::of(as_of)) {
            let at = (month.end() - Duration::nanoseconds(1)).min(as_of);
            let mut groups: BTreeMap<String, TurnoverCounts> = BTreeMap::new();
            for s in standings(ds, filter, at) {
                let counts = groups.entry(s.group).or_default();
                match activity_state(s.last, at) {
                    ActivityState::Left => counts.left += 1,
                    ActivityState::MightBeLeaving => counts.might_be_leaving += 1,
                    ActivityState::Active => {}
                }
            }
            for ((_, group), (size, kept)) in cohorts
                .range((month, String::new())..)
                .take_while(|((m, _), _)| *m == month)
            {
                let counts = groups.entry(group.clone()).or_default();
                counts.newcomers = *size;
                counts.retention_rate = Some(*kept as f64 / *size as f64);
            }
            months.push(TurnoverMonth { month, groups });
        }
    }
    // Every month lists the same groups.
    let all_groups: BTreeSet<String> = months.iter().flat_map(|m| m.groups.keys().cloned()).collect();
    for m in &mut months {
        for g in &all_groups {
            m.groups.entry(g.clone()).or_default();
        }
    }

    let gone = departures(ds, as_of, filter);
    let mut totals: BTreeMap<String, TurnoverTotals> = BTreeMap::new();
    for s in standings(ds, filter, as_of) {
        let t = totals.entry(s.group).or_default();
        match activity_state(s.last, as_of) {
            ActivityState::Left => t.left += 1,
            ActivityState::MightBeLeaving => t.might_be_leaving += 1,
            ActivityState::Active => t.active += 1,
        }
    }
    for r in &newcomer_rows {
        totals.entry(r.group.clone()).or_default().newcomers += 1;
    }

    TurnoverSnapshot {
        as_of,
        lens: filter.lens,
        months,
        totals,
        drill_down: DrillDown {
            newcomers: newcomer_rows,
            might_be_leaving: gone.might_be_leaving,
            left: gone.left,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::EventKind;
    use crate::metrics::testkit::*;

    #[test]
    fn state_boundaries() {
        let as_of = at(2023, 12, 15);
        assert_eq!(activity_state(at(2023, 5, 15), as_of), ActivityState::Left);
        assert_eq!(activity_state(at(2023, 6, 15), as_of), ActivityState::Left);
        assert_eq!(activity_state(at(2023, 6, 16), as_of), ActivityState::MightBeLeaving);
        assert_eq!(activity_state(at(2023, 8, 15), as_of), ActivityState::MightBeLeaving);
        assert_eq!(activity_state(at(2023, 9, 15), as_of), ActivityState::MightBeLeaving);
        assert_eq!(activity_state(at(2023, 9, 16), as_of), ActivityState::Active);
        assert_eq!(activity_state(at(2023, 12, 14), as_of), ActivityState::Active);
    }

    fn sample() -> crate::metrics::Dataset {
        Builder::new()
            .event("seven", EventKind::Commit, "1", at(2023, 1, 1))
            .event("seven", EventKind::Commit, "2", at(2023, 5, 10))
            .event("four", EventKind::Commit, "3", at(2023, 8, 10))
            .event("fresh", EventKind::Commit, "4", at(2023, 12, 14))
            .event("dependabot[bot]", EventKind::Commit, "5", at(2022, 1, 1))
            .build()
    }

    #[test]
    fn departures_classify_and_sort() {
        let d = departures(&sample(), at(2023, 12, 15), &FilterSpec::default());
        assert_eq!(d.left.len(), 1);
        assert_eq!(d.left[0].display_name, "seven");
        assert_eq!(d.left[0].contribution_count, 2);
        assert_eq!(d.might_be_leaving.len(), 1);
        assert_eq!(d.might_be_leaving[0].display_name, "four");
    }

    #[test]
    fn final_month_matches_drill_down() {
        let t = turnover(&sample(), Some(at(2023, 12, 15)), &FilterSpec::default());
        let last = t.months.last().unwrap();
        assert_eq!(last.month, Month::of(at(2023, 12, 15)));
        let c = &last.groups["all"];
        assert_eq!(c.left as usize, t.drill_down.left.len());
        assert_eq!(c.might_be_leaving as usize, t.drill_down.might_be_leaving.len());
        assert_eq!(t.totals["all"].active, 1);
        assert_eq!(t.totals["all"].newcomers, 3);
        assert_eq!(t.months.first().unwrap().month, Month::of(at(2023, 1, 1)));
        assert_eq!(t.months.len(), 12);
    }

    #[test]
    fn empty_dataset() {
        let t = turnover(&Builder::new().build(), None, &FilterSpec::default());
        assert!(t.months.is_empty());
        assert!(t.totals.is_empty());
    }

    #[test]
    fn monthly_states_move_over_time() {
        let t = turnover(&sample(), Some(at(2023, 12, 15)), &FilterSpec::default());
        // "seven" was last seen in May: might be leaving by end of August,
        // left by end of November.
        let by_month: BTreeMap<Month, &TurnoverCounts> =
            t.months.iter().map(|m| (m.month, &m.groups["all"])).collect();
        let m = |mo| Month::new(2023, mo).unwrap();
        assert_eq!(by_month[&m(7)].might_be_leaving, 0);
        assert_eq!(by_month[&m(8)].might_be_leaving, 1);
        assert_eq!(by_month[&m(11)].left, 1);
    }
}
