//! Recorded event replays: a JSON array of events, or one event per line.

use std::path::Path;

use serde_json::Value;

use super::read_file;
use crate::ingest::{ActivityEvent, FetchOutcome, IngestError, SchemaError, SourceConfig};

pub fn fetch(config: &SourceConfig) -> Result<FetchOutcome, IngestError> {
    let path = Path::new(&config.locator);
    let text = read_file(path)?;
    Ok(parse(&text, &config.locator))
}

pub fn parse(text: &str, origin: &str) -> FetchOutcome {
    let mut outcome = FetchOutcome::default();
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        match serde_json::from_str::<Vec<Value>>(trimmed) {
            Ok(records) => {
                for (i, record) in records.into_iter().enumerate() {
                    outcome.push(decode(record, origin, i + 1));
                }
            }
            Err(e) => outcome.schema_errors.push(SchemaError {
                record: origin.to_string(),
                message: format!("not a JSON array of events: {e}"),
            }),
        }
        return outcome;
    }
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str::<Value>(line).map_err(|e| SchemaError {
            record: format!("{origin}#{}", i + 1),
            message: e.to_string(),
        });
        outcome.push(record.and_then(|r| decode(r, origin, i + 1)));
    }
    outcome
}

fn decode(record: Value, origin: &str, position: usize) -> Result<ActivityEvent, SchemaError> {
    serde_json::from_value(record).map_err(|e| SchemaError {
        record: format!("{origin}#{position}"),
        message: e.to_string(),
    })
}
