use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::MetricsError;

/// Demographic dimension used to split a metric into groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lens {
    Gender,
    Affiliation,
    #[default]
    None,
}

impl Lens {
    pub fn as_str(self) -> &'static str {
        match self {
            Lens::Gender => "gender",
            Lens::Affiliation => "affiliation",
            Lens::None => "none",
        }
    }
}

impl fmt::Display for Lens {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Lens {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "gender" => Ok(Lens::Gender),
            "affiliation" => Ok(Lens::Affiliation),
            "none" | "" => Ok(Lens::None),
            other => Err(MetricsError::InvalidFilter(format!(
                "unknown lens {other:?}, expected gender, affiliation or none"
            ))),
        }
    }
}

/// Inclusive time window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeRange {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl TimeRange {
    pub fn contains(&self, ts: DateTime<Utc>) -> bool {
        self.start <= ts && ts <= self.end
    }
}

/// Time window, lens and optional single-group selection shared by every
/// metric.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FilterSpec {
    pub time_range: Option<TimeRange>,
    pub lens: Lens,
    pub group_filter: Option<String>,
}

impl FilterSpec {
    pub fn new(
        start: Option<DateTime<Utc>>,
        end: Option<DateTime<Utc>>,
        lens: Lens,
        group_filter: Option<String>,
    ) -> Result<Self, MetricsError> {
        let time_range = match (start, end) {
            (None, None) => None,
            (start, end) => {
                let range = TimeRange {
                    start: start.unwrap_or(DateTime::<Utc>::MIN_UTC),
                    end: end.unwrap_or(DateTime::<Utc>::MAX_UTC),
                };
                if range.start > range.end {
                    return Err(MetricsError::InvalidFilter(format!(
                        "from ({}) is after to ({})",
                        range.start.to_rfc3339(),
                        range.end.to_rfc3339()
                    )));
                }
                Some(range)
            }
        };
        let group_filter = group_filter.map(|g| g.trim().to_string()).filter(|g| !g.is_empty());
        if group_filter.is_some() && lens == Lens::None {
            return Err(MetricsError::InvalidFilter(
                "a group filter needs lens=gender or lens=affiliation".into(),
            ));
        }
        Ok(Self {
            time_range,
            lens,
            group_filter,
        })
    }

    pub fn with_lens(lens: Lens) -> Self {
        Self {
            lens,
            ..Self::default()
        }
    }

    pub fn in_window(&self, ts: DateTime<Utc>) -> bool {
        self.time_range.is_none_or(|r| r.contains(ts))
    }

    /// Group labels compare case-insensitively.
    pub fn accepts_group(&self, group: &str) -> bool {
        self.group_filter
            .as_deref()
            .is_none_or(|g| g.eq_ignore_ascii_case(group))
    }

    pub fn start(&self) -> Option<DateTime<Utc>> {
        self.time_range.map(|r| r.start)
    }

    pub fn end(&self) -> Option<DateTime<Utc>> {
        self.time_range.map(|r| r.end)
    }
}
