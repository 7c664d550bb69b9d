use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, Months, NaiveDate, TimeZone, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A calendar month in UTC, rendered as `YYYY-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Month {
    year: i32,
    month: u32,
}

impl Month {
    pub fn new(year: i32, month: u32) -> Option<Self> {
        (1..=12).contains(&month).then_some(Self { year, month })
    }

    pub fn of(ts: DateTime<Utc>) -> Self {
        Self {
            year: ts.year(),
            month: ts.month(),
        }
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u32 {
        self.month
    }

    pub fn succ(self) -> Self {
        if self.month == 12 {
            Self {
                year: self.year + 1,
                month: 1,
            }
        } else {
            Self {
                year: self.year,
                month: self.month + 1,
            }
        }
    }

    /// First instant of the month.
    pub fn start(self) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(self.year, self.month, 1, 0, 0, 0)
            .single()
            .expect("first of month is always a valid UTC instant")
    }

    /// First instant of the following month (exclusive end).
    pub fn end(self) -> DateTime<Utc> {
        self.succ().start()
    }

    /// Every month from `self` to `last`, both inclusive.
    pub fn through(self, last: Month) -> impl Iterator<Item = Month> {
        std::iter::successors(Some(self), move |m| {
            let next = m.succ();
            (next <= last).then_some(next)
        })
        .take_while(move |m| *m <= last)
    }
}

/// `ts` moved back by whole calendar months, clamping the day to the end of
/// shorter months (Aug 31 minus 6 months is Feb 28/29).
pub fn months_before(ts: DateTime<Utc>, months: u32) -> DateTime<Utc> {
    ts.checked_sub_months(Months::new(months))
        .expect("date arithmetic stays within chrono's range")
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("invalid month {0:?}, expected YYYY-MM")]
pub struct ParseMonthError(String);

impl FromStr for Month {
    type Err = ParseMonthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let date = NaiveDate::parse_from_str(&format!("{s}-01"), "%Y-%m-%d")
            .map_err(|_| ParseMonthError(s.to_string()))?;
        Ok(Self {
            year: date.year(),
            month: date.month(),
        })
    }
}

impl Serialize for Month {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Month {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn year_rollover() {
        let dec = Month::new(2022, 12).unwrap();
        assert_eq!(dec.succ(), Month::new(2023, 1).unwrap());
        assert_eq!(dec.end(), Utc.with_ymd_and_hms(2023, 1, 1, 0, 0, 0).unwrap());
    }

    #[test]
    fn through_is_inclusive() {
        let a = Month::new(2022, 11).unwrap();
        let b = Month::new(2023, 2).unwrap();
        let all: Vec<String> = a.through(b).map(|m| m.to_string()).collect();
        assert_eq!(all, ["2022-11", "2022-12", "2023-01", "2023-02"]);
        assert_eq!(b.through(a).count(), 0);
    }

    #[test]
    fn clamps_short_months() {
        let ts = Utc.with_ymd_and_hms(2023, 8, 31, 12, 0, 0).unwrap();
        assert_eq!(
            months_before(ts, 6),
            Utc.with_ymd_and_hms(2023, 2, 28, 12, 0, 0).unwrap()
        );
    }

    #[test]
    fn parse_round_trip() {
        let m: Month = "2023-07".parse().unwrap();
        assert_eq!(m.to_string(), "2023-07");
        assert!("2023-13".parse::<Month>().is_err());
    }
}
