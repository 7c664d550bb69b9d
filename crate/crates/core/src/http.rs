//! Blocking JSON-over-HTTP with bounded retry, shared by the GitHub and
//! remote name-classifier clients.

use std::thread;
use std::time::Duration;

use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub(crate) enum HttpError {
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("{0}")]
    Transport(String),
    #[error("invalid JSON response: {0}")]
    Decode(String),
}

impl HttpError {
    fn is_retryable(&self) -> bool {
        match self {
            HttpError::Status { status, .. } => *status == 429 || *status >= 500,
            HttpError::Transport(_) => true,
            HttpError::Decode(_) => false,
        }
    }
}

pub(crate) struct JsonResponse {
    pub body: Value,
    pub link: Option<String>,
}

#[derive(Debug, Clone)]
pub(crate) struct HttpClient {
    agent: ureq::Agent,
    headers: Vec<(String, String)>,
    pub max_attempts: u32,
    pub backoff: Duration,
}

impl HttpClient {
    pub fn new(headers: Vec<(String, String)>) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(60)))
            .user_agent("tapestry")
            .build()
            .new_agent();
        Self {
            agent,
            headers,
            max_attempts: 3,
            backoff: Duration::from_millis(500),
        }
    }

    /// GET `url`, retrying transport errors, 429 and 5xx with doubling
    /// backoff up to `max_attempts` tries.
    pub fn get_json(&self, url: &str) -> Result<JsonResponse, HttpError> {
        let mut delay = self.backoff;
        let mut attempt = 1;
        loop {
            match self.get_once(url) {
                Err(err) if err.is_retryable() && attempt < self.max_attempts => {
                    thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    fn get_once(&self, url: &str) -> Result<JsonResponse, HttpError> {
        let mut request = self.agent.get(url);
        for (k, v) in &self.headers {
            request = request.header(k.as_str(), v.as_str());
        }
        let mut response = request
            .call()
            .map_err(|e| HttpError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let link = response
            .headers()
            .get("link")
            .and_then(|v| v.to_str().ok())
            .map(str::to_string);
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| HttpError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(HttpError::Status { status, body: text });
        }
        let body = serde_json::from_str(&text).map_err(|e| HttpError::Decode(e.to_string()))?;
        Ok(JsonResponse { body, link })
    }
}

/// The `rel="next"` target of an RFC 8288 `Link` header.
pub(crate) fn next_link(header: &str) -> Option<String> {
    header.split(',').find_map(|part| {
        let (target, params) = part.split_once(';')?;
        params
            .split(';')
            .any(|p| p.trim() == "rel=\"next\"")
            .then(|| target.trim().trim_start_matches('<').trim_end_matches('>').to_string())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_next_link() {
        let header = r#"<https://api.github.com/x?page=2>; rel="next", <https://api.github.com/x?page=5>; rel="last""#;
        assert_eq!(next_link(header).as_deref(), Some("https://api.github.com/x?page=2"));
        assert_eq!(next_link(r#"<https://a/x?page=1>; rel="prev""#), None);
    }
}
