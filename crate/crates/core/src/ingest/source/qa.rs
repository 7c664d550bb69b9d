//! Q&A forum exports in the Stack Exchange API shape:
//!
//! ```json
//! {"repo_id": "stackoverflow:myproject",
//!  "items": [{"question_id": 1, "creation_date": 1672531200, "link": "...",
//!             "owner": {"user_id": 7, "display_name": "alice", "link": "..."},
//!             "answers": [{"answer_id": 2, "creation_date": 1672617600,
//!                          "owner": {"display_name": "bob"}}]}]}
//! ```
//!
//! `creation_date` may be epoch seconds or an RFC 3339 string.

use std::path::Path;

use chrono::{DateTime, Utc};
use serde_json::Value;

use super::read_file;
use crate::ingest::{
    ActivityEvent, EventKind, FetchOutcome, IngestError, RawProfile, SchemaError, SourceConfig,
    SourceKind,
};

pub fn fetch(config: &SourceConfig) -> Result<FetchOutcome, IngestError> {
    let path = Path::new(&config.locator);
    let text = read_file(path)?;
    let fallback_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| config.locator.clone());
    parse_export(&text, &fallback_id)
}

pub fn parse_export(text: &str, fallback_repo_id: &str) -> Result<FetchOutcome, IngestError> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| IngestError::SourceUnavailable(format!("Q&A export is not JSON: {e}")))?;
    let repo_id = root
        .get("repo_id")
        .and_then(Value::as_str)
        .unwrap_or(fallback_repo_id)
        .to_string();
    let items = root
        .get("items")
        .and_then(Value::as_array)
        .ok_or_else(|| IngestError::SourceUnavailable("Q&A export has no \"items\" array".into()))?;

    let mut outcome = FetchOutcome::default();
    for (i, question) in items.iter().enumerate() {
        let position = format!("{repo_id}#items[{i}]");
        let qid = match native_id(question, "question_id") {
            Some(id) => id,
            None => {
                outcome.schema_errors.push(SchemaError {
                    record: position,
                    message: "missing question_id".into(),
                });
                continue;
            }
        };
        let url = question.get("link").and_then(Value::as_str).map(str::to_string);
        outcome.push(post(question, &repo_id, EventKind::QaQuestion, &qid, &qid, url.clone(), &position));

        for (j, answer) in question
            .get("answers")
            .and_then(Value::as_array)
            .into_iter()
            .flatten()
            .enumerate()
        {
            let position = format!("{position}.answers[{j}]");
            match native_id(answer, "answer_id") {
                Some(aid) => {
                    outcome.push(post(answer, &repo_id, EventKind::QaAnswer, &aid, &qid, url.clone(), &position))
                }
                None => outcome.schema_errors.push(SchemaError {
                    record: position,
                    message: "missing answer_id".into(),
                }),
            }
        }
    }
    Ok(outcome)
}

fn native_id(record: &Value, key: &str) -> Option<String> {
    match record.get(key)? {
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) if !s.is_empty() => Some(s.clone()),
        _ => None,
    }
}

fn post(
    record: &Value,
    repo_id: &str,
    kind: EventKind,
    native: &str,
    question_id: &str,
    url: Option<String>,
    position: &str,
) -> Result<ActivityEvent, SchemaError> {
    let bad = |message: &str| SchemaError {
        record: position.to_string(),
        message: message.to_string(),
    };
    let timestamp = match record.get("creation_date") {
        Some(Value::Number(n)) => n
            .as_i64()
            .and_then(|secs| DateTime::from_timestamp(secs, 0))
            .ok_or_else(|| bad("creation_date out of range"))?,
        Some(Value::String(s)) => DateTime::parse_from_rfc3339(s)
            .map_err(|_| bad("creation_date is not RFC 3339"))?
            .with_timezone(&Utc),
        _ => return Err(bad("missing creation_date")),
    };
    let owner = record.get("owner").ok_or_else(|| bad("missing owner"))?;
    let display = owner
        .get("display_name")
        .and_then(Value::as_str)
        .ok_or_else(|| bad("owner without display_name"))?;
    let mut actor = RawProfile::new(SourceKind::QaForum).with_username(display);
    if let Some(link) = owner.get("link").and_then(Value::as_str) {
        actor = actor.with_profile_url(link);
    }
    Ok(ActivityEvent {
        event_id: ActivityEvent::make_id(SourceKind::QaForum, repo_id, kind, native),
        source_kind: SourceKind::QaForum,
        kind,
        actor,
        timestamp,
        repo_id: repo_id.to_string(),
        artifact_id: question_id.to_string(),
        artifact_url: url,
        reactions: record.get("score").and_then(Value::as_i64).map(|s| s.max(0) as u64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn questions_and_answers() {
        let text = r#"{"items":[
            {"question_id":1,"creation_date":1672531200,"link":"https://q/1",
             "owner":{"display_name":"alice"},
             "answers":[{"answer_id":2,"creation_date":"2023-01-02T00:00:00Z","owner":{"display_name":"bob"}},
                        {"answer_id":3,"owner":{"display_name":"carol"}}]},
            {"creation_date":1}
        ]}"#;
        let outcome = parse_export(text, "so").unwrap();
        assert_eq!(outcome.events.len(), 2);
        assert_eq!(outcome.schema_errors.len(), 2);
        let answer = &outcome.events[1];
        assert_eq!(answer.kind, EventKind::QaAnswer);
        assert_eq!(answer.artifact_id, "1");
        assert_eq!(answer.event_id, "qa_forum:so:qa_answer:2");
    }

    #[test]
    fn non_json_export_is_unavailable() {
        assert!(matches!(
            parse_export("<html>", "so"),
            Err(IngestError::SourceUnavailable(_))
        ));
    }
}
