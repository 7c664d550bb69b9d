//! Query-string parsing shared by the HTTP handlers and the CLI exporter.
//!
//! Dates are `YYYY-MM-DD` or RFC 3339. A bare date used as `to` or `as_of`
//! means the end of that day, so `from=2023-01-01&to=2023-06-30` covers
//! both days in full.

use std::collections::BTreeSet;

use chrono::{DateTime, Duration, NaiveDate, NaiveTime, Utc};
use tapestry_core::metrics::{ContributionKind, Measure};
use tapestry_core::report::ReportRequest;
use tapestry_core::{FilterSpec, Lens};

use crate::error::ApiError;

/// Parameters every filtered endpoint accepts.
pub const FILTER_PARAMS: [&str; 4] = ["from", "to", "lens", "group"];

#[derive(Clone, Copy)]
enum DayEdge {
    Start,
    End,
}

fn parse_instant(name: &str, raw: &str, edge: DayEdge) -> Result<DateTime<Utc>, ApiError> {
    let raw = raw.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(raw) {
        return Ok(t.with_timezone(&Utc));
    }
    match NaiveDate::parse_from_str(raw, "%Y-%m-%d") {
        Ok(day) => {
            let start = day.and_time(NaiveTime::MIN).and_utc();
            Ok(match edge {
                DayEdge::Start => start,
                DayEdge::End => start + Duration::days(1) - Duration::nanoseconds(1),
            })
        }
        Err(_) => Err(ApiError::bad_request(
            "invalid_date",
            format!("{name}={raw:?} is not a YYYY-MM-DD date or RFC 3339 timestamp"),
        )),
    }
}

/// Rejects unknown and repeated parameters.
fn check_names(params: &[(String, String)], allowed: &[&str]) -> Result<(), ApiError> {
    let mut seen = BTreeSet::new();
    for (name, _) in params {
        if !allowed.contains(&name.as_str()) {
            let mut expected = allowed.to_vec();
            expected.sort_unstable();
            return Err(ApiError::bad_request(
                "unknown_parameter",
                format!("unknown parameter {name:?}; expected one of: {}", expected.join(", ")),
            ));
        }
        if !seen.insert(name.as_str()) {
            return Err(ApiError::bad_request(
                "duplicate_parameter",
                format!("parameter {name:?} given more than once"),
            ));
        }
    }
    Ok(())
}

fn get<'a>(params: &'a [(String, String)], name: &str) -> Option<&'a str> {
    params.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
}

/// Builds a filter from `from`, `to`, `lens` and `group` without checking
/// for other parameters.
fn filter_from(params: &[(String, String)]) -> Result<FilterSpec, ApiError> {
    let from = get(params, "from").map(|v| parse_instant("from", v, DayEdge::Start)).transpose()?;
    let to = get(params, "to").map(|v| parse_instant("to", v, DayEdge::End)).transpose()?;
    let lens: Lens = match get(params, "lens") {
        Some(raw) => raw
            .parse()
            .map_err(|e: tapestry_core::metrics::MetricsError| ApiError::bad_request("invalid_lens", e.to_string()))?,
        None => Lens::None,
    };
    let group = get(params, "group").map(str::to_string);
    FilterSpec::new(from, to, lens, group).map_err(|e| ApiError::bad_request("invalid_filter", e.to_string()))
}

/// Parses a filter-only query string. Anything besides `from`, `to`, `lens`
/// and `group` is rejected.
pub fn parse_filter(params: &[(String, String)]) -> Result<FilterSpec, ApiError> {
    check_names(params, &FILTER_PARAMS)?;
    filter_from(params)
}

/// Parses the filter plus the report options named in `extra`
/// (`as_of`, `kind`, `measure`).
pub fn parse_request(params: &[(String, String)], extra: &[&str]) -> Result<ReportRequest, ApiError> {
    let allowed: Vec<&str> = FILTER_PARAMS.iter().chain(extra).copied().collect();
    check_names(params, &allowed)?;
    let mut req = ReportRequest {
        filter: filter_from(params)?,
        ..ReportRequest::default()
    };
    if let Some(raw) = get(params, "as_of") {
        req.as_of = Some(parse_instant("as_of", raw, DayEdge::End)?);
    }
    if let Some(raw) = get(params, "kind") {
        req.kind = raw.parse::<ContributionKind>().map_err(|_| {
            ApiError::bad_request(
                "invalid_kind",
                format!("kind={raw:?}; expected pr, issue, qa_question or qa_answer"),
            )
        })?;
    }
    if let Some(raw) = get(params, "measure") {
        req.measure = raw.parse::<Measure>().map_err(|_| {
            ApiError::bad_request("invalid_measure", format!("measure={raw:?}; expected count or proportion"))
        })?;
    }
    Ok(req)
}
