//! Namsor-compatible HTTP backend.
//!
//! Origin comes from `GET {base}/api2/json/origin/{first}/{last}`
//! (`countryOrigin`, `probabilityCalibrated`); gender from
//! `GET {base}/api2/json/genderGeo/{first}/{last}/{origin}`, or
//! `.../gender/{first}/{last}` without an origin. The signed `genderScale`
//! (−1 man … +1 woman) is mapped to a class by sign and a confidence by
//! magnitude.

use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use percent_encoding::{utf8_percent_encode, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ClassifierError, Gender, GenderGuess, NameClassifier, OriginGuess};
use crate::http::HttpClient;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    pub base_url: String,
    /// Environment variable holding the API key.
    pub key_env: String,
    /// Minimum spacing between requests.
    #[serde(default = "default_interval", with = "humantime_serde")]
    pub min_interval: Duration,
}

fn default_interval() -> Duration {
    Duration::from_millis(100)
}

pub struct RemoteClassifier {
    http: HttpClient,
    base_url: String,
    min_interval: Duration,
    last_call: Mutex<Option<Instant>>,
}

impl RemoteClassifier {
    pub fn new(config: &RemoteConfig) -> Result<Self, ClassifierError> {
        let key = std::env::var(&config.key_env).map_err(|_| {
            ClassifierError::Unavailable(format!("environment variable {} is not set", config.key_env))
        })?;
        let mut http = HttpClient::new(vec![("X-API-KEY".to_string(), key)]);
        http.backoff = Duration::from_millis(200);
        Ok(Self {
            http,
            base_url: config.base_url.trim_end_matches('/').to_string(),
            min_interval: config.min_interval,
            last_call: Mutex::new(None),
        })
    }

    fn throttle(&self) {
        let mut last = self.last_call.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(prev) = *last {
            let elapsed = prev.elapsed();
            if elapsed < self.min_interval {
                thread::sleep(self.min_interval - elapsed);
            }
        }
        *last = Some(Instant::now());
    }

    fn get(&self, segments: &[&str]) -> Result<Value, ClassifierError> {
        self.throttle();
        let path: Vec<String> = segments
            .iter()
            .map(|s| utf8_percent_encode(s, NON_ALPHANUMERIC).to_string())
            .collect();
        let url = format!("{}/api2/json/{}", self.base_url, path.join("/"));
        self.http
            .get_json(&url)
            .map(|r| r.body)
            .map_err(|e| ClassifierError::Unavailable(e.to_string()))
    }
}

fn split_name(full_name: &str) -> Result<(String, String), ClassifierError> {
    let mut parts = full_name.split_whitespace();
    let first = parts.next().ok_or(ClassifierError::EmptyName)?.to_string();
    let rest: Vec<&str> = parts.collect();
    Ok((first, rest.join(" ")))
}

/// Class and confidence from a signed `[-1, +1]` score.
pub fn from_signed_scale(scale: f64) -> GenderGuess {
    let gender = if scale > 0.0 {
        Gender::Woman
    } else if scale < 0.0 {
        Gender::Man
    } else {
        Gender::Unknown
    };
    GenderGuess {
        gender,
        probability: scale.abs().min(1.0),
    }
}

impl NameClassifier for RemoteClassifier {
    fn classify_origin(&self, full_name: &str) -> Result<OriginGuess, ClassifierError> {
        let (first, last) = split_name(full_name)?;
        let body = self.get(&["origin", &first, &last])?;
        let origin = body.get("countryOrigin").and_then(Value::as_str).unwrap_or("");
        let probability = body
            .get("probabilityCalibrated")
            .and_then(Value::as_f64)
            .unwrap_or(0.0)
            .clamp(0.0, 1.0);
        Ok(OriginGuess {
            origin: origin.to_uppercase(),
            probability: if origin.is_empty() { 0.0 } else { probability },
        })
    }

    fn classify_gender(&self, full_name: &str, origin: &str) -> Result<GenderGuess, ClassifierError> {
        let (first, last) = split_name(full_name)?;
        let body = if origin.is_empty() {
            self.get(&["gender", &first, &last])?
        } else {
            self.get(&["genderGeo", &first, &last, origin])?
        };
        let scale = body
            .get("genderScale")
            .and_then(Value::as_f64)
            .ok_or_else(|| ClassifierError::Unavailable("response without genderScale".into()))?;
        Ok(from_signed_scale(scale))
    }
}
