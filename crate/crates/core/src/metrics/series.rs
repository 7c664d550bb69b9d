use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{group_of, Dataset, FilterSpec, Lens, MetricsError};
use crate::ingest::EventKind;
use crate::month::Month;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Count,
    /// Share of the bucket total; each bucket sums to 1 or is empty.
    Proportion,
    AvgDays,
    /// A ratio that does not sum across groups (retention).
    Rate,
}

impl std::str::FromStr for Measure {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "count" => Ok(Measure::Count),
            "proportion" => Ok(Measure::Proportion),
            other => Err(MetricsError::InvalidFilter(format!(
                "unknown measure {other:?}, expected count or proportion"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesBucket {
    pub month: Month,
    pub values: BTreeMap<String, f64>,
}

/// Monthly values per group. Months are contiguous over the covered range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub lens: Lens,
    pub measure: Measure,
    pub buckets: Vec<SeriesBucket>,
}

impl MetricSeries {
    pub fn empty(lens: Lens, measure: Measure) -> Self {
        Self {
            lens,
            measure,
            buckets: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    pub fn value(&self, month: Month, group: &str) -> Option<f64> {
        self.buckets
            .iter()
            .find(|b| b.month == month)
            .and_then(|b| b.values.get(group).copied())
    }

    /// Sum over all groups and months.
    pub fn total(&self) -> f64 {
        self.buckets.iter().flat_map(|b| b.values.values()).sum()
    }
}

/// Months spanned by `times`, if any.
fn span(times: impl Iterator<Item = DateTime<Utc>>) -> Option<(Month, Month)> {
    times.fold(None, |acc, t| {
        let m = Month::of(t);
        Some(match acc {
            None => (m, m),
            Some((lo, hi)) => (lo.min(m), hi.max(m)),
        })
    })
}

/// Zero-filled count series over `range`.
fn count_series(
    lens: Lens,
    range: Option<(Month, Month)>,
    counts: BTreeMap<(Month, String), f64>,
) -> MetricSeries {
    let Some((lo, hi)) = range else {
        return MetricSeries::empty(lens, Measure::Count);
    };
    let groups: BTreeSet<&String> = counts.keys().map(|(_, g)| g).collect();
    let buckets = lo
        .through(hi)
        .map(|month| SeriesBucket {
            month,
            values: groups
                .iter()
                .map(|g| {
                    let v = counts.get(&(month, (*g).clone())).copied().unwrap_or(0.0);
                    ((*g).clone(), v)
                })
                .collect(),
        })
        .collect();
    MetricSeries {
        lens,
        measure: Measure::Count,
        buckets,
    }
}

fn into_proportions(mut series: MetricSeries) -> MetricSeries {
    series.measure = Measure::Proportion;
    for bucket in &mut series.buckets {
        let total: f64 = bucket.values.values().sum();
        if total == 0.0 {
            bucket.values.clear();
        } else {
            for v in bucket.values.values_mut() {
                *v /= total;
            }
        }
    }
    series
}

/// Months covered by human activity inside the filter window.
fn activity_span(ds: &Dataset, filter: &FilterSpec) -> Option<(Month, Month)> {
    span(
        ds.human_timelines()
            .flat_map(|(_, times)| times.iter().copied())
            .filter(|t| filter.in_window(*t)),
    )
}

/// Contributors whose first event falls in each month.
pub fn newcomers_by_month(ds: &Dataset, filter: &FilterSpec) -> MetricSeries {
    let mut counts: BTreeMap<(Month, String), f64> = BTreeMap::new();
    for (identity, times) in ds.human_timelines() {
        let first = times[0];
        if !filter.in_window(first) {
            continue;
        }
        let group = group_of(identity, filter.lens);
        if filter.accepts_group(&group) {
            *counts.entry((Month::of(first), group)).or_default() += 1.0;
        }
    }
    count_series(filter.lens, activity_span(ds, filter), counts)
}

/// For each cohort month, the fraction of that month's newcomers who were
/// active again in a later calendar month. Groups with no newcomers in a
/// month have no value there.
pub fn retention_trend(ds: &Dataset, filter: &FilterSpec) -> MetricSeries {
    let mut cohorts: BTreeMap<(Month, String), (u64, u64)> = BTreeMap::new();
    for (identity, times) in ds.human_timelines() {
        let first = times[0];
        if !filter.in_window(first) {
            continue;
        }
        let group = group_of(identity, filter.lens);
        if !filter.accepts_group(&group) {
            continue;
        }
        let cohort = Month::of(first);
        let returned = times.iter().any(|t| Month::of(*t) > cohort);
        let entry = cohorts.entry((cohort, group)).or_default();
        entry.0 += 1;
        entry.1 += u64::from(returned);
    }
    let Some((lo, hi)) = activity_span(ds, filter) else {
        return MetricSeries::empty(filter.lens, Measure::Rate);
    };
    let buckets = lo
        .through(hi)
        .map(|month| SeriesBucket {
            month,
            values: cohorts
                .range((month, String::new())..)
                .take_while(|((m, _), _)| *m == month)
                .map(|((_, g), (size, kept))| (g.clone(), *kept as f64 / *size as f64))
                .collect(),
        })
        .collect();
    MetricSeries {
        lens: filter.lens,
        measure: Measure::Rate,
        buckets,
    }
}

/// Kinds of opened artifact counted by [`contribution_series`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContributionKind {
    Pr,
    Issue,
    QaQuestion,
    QaAnswer,
}

impl ContributionKind {
    pub fn event_kind(self) -> EventKind {
        match self {
            ContributionKind::Pr => EventKind::PrOpened,
            ContributionKind::Issue => EventKind::IssueOpened,
            ContributionKind::QaQuestion => EventKind::QaQuestion,
            ContributionKind::QaAnswer => EventKind::QaAnswer,
        }
    }
}

impl std::str::FromStr for ContributionKind {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pr" => Ok(ContributionKind::Pr),
            "issue" => Ok(ContributionKind::Issue),
            "qa_question" => Ok(ContributionKind::QaQuestion),
            "qa_answer" => Ok(ContributionKind::QaAnswer),
            other => Err(MetricsError::InvalidFilter(format!(
                "unknown kind {other:?}, expected pr, issue, qa_question or qa_answer"
            ))),
        }
    }
}

/// Opened PRs, issues, questions or answers per month and group.
pub fn contribution_series(
    ds: &Dataset,
    kind: ContributionKind,
    measure: Measure,
    filter: &FilterSpec,
) -> MetricSeries {
    let wanted = kind.event_kind();
    let relevant: Vec<_> = ds
        .events()
        .filter(|(e, who)| e.kind == wanted && !who.is_bot && filter.in_window(e.timestamp))
        .collect();
    let range = span(relevant.iter().map(|(e, _)| e.timestamp));
    let mut counts: BTreeMap<(Month, String), f64> = BTreeMap::new();
    for (event, who) in relevant {
        let group = group_of(who, filter.lens);
        if filter.accepts_group(&group) {
            *counts.entry((Month::of(event.timestamp), group)).or_default() += 1.0;
        }
    }
    let series = count_series(filter.lens, range, counts);
    match measure {
        Measure::Proportion => into_proportions(series),
        _ => series,
    }
}
