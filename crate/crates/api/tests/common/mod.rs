//! Standard fixture loaded into a temporary store with its enriched
//! registry, plus an in-process request helper.

#![allow(dead_code)]

#[path = "../../../core/tests/support/mod.rs"]
pub mod support;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use tapestry_api::{route_of, AppState, StoreSource, REGISTRY_FILE};
use tapestry_core::identity::ProfileKey;
use tapestry_core::report::{json_bytes, Report};
use tapestry_core::{EventStore, RawProfile, SourceKind};
use tower::ServiceExt;

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub state: AppState,
}

impl Fixture {
    pub fn store_dir(&self) -> std::path::PathBuf {
        self.dir.path().join("store")
    }
}

pub fn fixture_store(dir: &std::path::Path) {
    let s = support::load_standard();
    let store = EventStore::init(dir).unwrap();
    store.append_events(s.snapshot.events()).unwrap();
    let registry = s.enrichment.run(&s.snapshot, &s.dictionary).unwrap();
    std::fs::write(dir.join(REGISTRY_FILE), json_bytes(&registry)).unwrap();
}

pub fn fixture(token: Option<&str>) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    fixture_store(&store);
    let source = Arc::new(StoreSource::open(&store).unwrap());
    let state = AppState::new(source, token.map(str::to_string)).unwrap();
    Fixture { dir, state }
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: axum::http::HeaderMap,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body).unwrap()
    }
}

pub async fn send(app: &Router, request: Request<Body>) -> Reply {
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let headers = response.headers().clone();
    let body = axum::body::to_bytes(response.into_body(), usize::MAX).await.unwrap().to_vec();
    Reply { status, headers, body }
}

pub async fn get(app: &Router, uri: &str) -> Reply {
    send(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../api/tests/golden")
}

/// (golden file stem, request URI). The identity URI is filled in at run
/// time because ids are content hashes.
pub fn cases(identity: &str) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = vec![
        ("health".into(), "/v1/health".into()),
        ("turnover".into(), format!("{}?lens=gender", route_of(Report::Turnover))),
        ("turnover_as_of".into(), format!("{}?as_of=2023-06-30", route_of(Report::Turnover))),
        ("drill_down".into(), format!("{}?lens=affiliation&as_of=2023-06-30", route_of(Report::DrillDown))),
        ("newcomers".into(), format!("{}?lens=gender", route_of(Report::Newcomers))),
        ("retention".into(), format!("{}?lens=affiliation", route_of(Report::Retention))),
        (
            "contributions_pr".into(),
            format!("{}?kind=pr&measure=proportion&lens=gender", route_of(Report::Contributions)),
        ),
        (
            "contributions_qa_answer".into(),
            format!("{}?kind=qa_answer&from=2022-07-01&to=2023-06-30", route_of(Report::Contributions)),
        ),
        ("time_to_merge".into(), format!("{}?lens=affiliation", route_of(Report::TimeToMerge))),
        ("first_attention".into(), format!("{}?lens=gender", route_of(Report::FirstAttention))),
        ("pr_overview".into(), format!("{}?lens=affiliation", route_of(Report::PrOverview))),
        ("contributors".into(), format!("{}?lens=gender", route_of(Report::Contributors))),
        ("attention".into(), route_of(Report::Attention).to_string()),
        (
            "network".into(),
            format!("{}?from=2023-01-01&to=2023-06-30&lens=affiliation", route_of(Report::Network)),
        ),
        ("identity".into(), format!("/v1/identities/{identity}?as_of=2023-06-30")),
    ];
    out.sort();
    out
}

pub fn silva_id(ds: &tapestry_core::Dataset) -> String {
    let key = ProfileKey::of(&RawProfile::new(SourceKind::Github).with_username("jamessil"));
    ds.registry().id_for_key(&key).unwrap().to_string()
}
